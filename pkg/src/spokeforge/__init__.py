"""Non-pneumatic tire spoke design: profile generation, a geometric performance
proxy, surrogate models and single/multi-objective optimizers."""

from .errors import (
    ConfigError,
    DatasetError,
    DomainError,
    InfeasibleDesignError,
    NonConvergenceError,
    NumericalError,
    SpokeForgeError,
)
from .evaluator import OUTPUTS, PerformanceRecord, proxy_evaluate
from .geometry import DesignGenotype, SpokeProfile, base_profile, extract_features, generate_profile

__version__ = "0.1.0"

__all__ = [
    "OUTPUTS", "ConfigError", "DatasetError", "DesignGenotype", "DomainError", "InfeasibleDesignError",
    "NonConvergenceError", "NumericalError", "PerformanceRecord", "SpokeForgeError", "SpokeProfile",
    "base_profile", "extract_features", "generate_profile", "proxy_evaluate",
]
