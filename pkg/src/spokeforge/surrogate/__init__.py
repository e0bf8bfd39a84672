"""Performance surrogates: kernel ridge for stiffness, boosted trees for the rest."""

from .cv import CvReport, expand_grid, grid_search_cv, kfold_indices
from .gbt import BoostedTreeModel, RegressionTree, fit_tree, gbt_fit
from .krr import KernelRidgeModel, krr_fit, poly_kernel
from .model import (
    DEFAULT_MODEL_SPECS,
    SurrogateModel,
    fit_surrogate,
    load_model,
    predict,
    r2_score,
    save_model,
)
from .scaling import Scaler, scaler_apply, scaler_fit

__all__ = [
    "BoostedTreeModel", "CvReport", "DEFAULT_MODEL_SPECS", "KernelRidgeModel", "RegressionTree",
    "Scaler", "SurrogateModel", "expand_grid", "fit_surrogate", "fit_tree", "gbt_fit",
    "grid_search_cv", "kfold_indices", "krr_fit", "load_model", "poly_kernel", "predict",
    "r2_score", "save_model", "scaler_apply", "scaler_fit",
]
