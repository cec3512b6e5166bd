"""Structured sparse regression by smoothing proximal gradient."""
from .kernels import BACKEND
from .model import (FusionGraph, GroupStructure, MultiTaskProblem, RegressionProblem,
                    SolveResult, SolverConfig, eval_objective, eval_objective_mt,
                    validate_multitask, validate_problem)
from .penalty import (PenaltyLinearMap, build_fusion_map, build_group_map,
                      build_linear_l1_map, exact_penalty, project_dual, smoothed_eval,
                      spectral_norm)
from .solver import loss_lipschitz, mu_from_epsilon, soft_threshold, solve_path, spg_solve
from .multitask import MultiTaskMapInfo, smoothed_eval_mt, spg_solve_mt
from .baselines import BaselineConfig, fobos_solve, penalty_subgradient, subgradient_solve

__version__ = "0.1.0"
