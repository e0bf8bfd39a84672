"""Search over the genotype box: particle swarm, Bayesian optimization, Pareto tools."""

from .bo import BoResult, MoBoResult, bo_run, bo_run_multi
from .gp import GaussianSurrogate, expected_improvement, gp_fit, gp_posterior
from .objectives import Directive, ObjectiveSpec, parse_objective, scalarize, scalarize_targeted
from .pareto import (
    ParetoArchive,
    dominated_boxes,
    dominates,
    ehvi_mc,
    hypervolume,
    hypervolume_2d,
    hypervolume_improvement,
    nondominated_mask,
    pareto_filter,
    simplex_weights,
)
from .pso import PsoResult, SwarmState, pso_run

__all__ = [
    "BoResult", "Directive", "GaussianSurrogate", "MoBoResult", "ObjectiveSpec", "ParetoArchive",
    "PsoResult", "SwarmState", "bo_run", "bo_run_multi", "dominated_boxes", "dominates", "ehvi_mc",
    "expected_improvement", "gp_fit", "gp_posterior", "hypervolume", "hypervolume_2d",
    "hypervolume_improvement", "nondominated_mask", "parse_objective", "pareto_filter", "pso_run",
    "scalarize", "scalarize_targeted", "simplex_weights",
]
