"""Binary classification from mixed scalar, compositional and functional predictors."""

from .fpca import FpcaBasis, FunctionalSample, fit_fpca, project, reconstruct_curve
from .glm import DesignMatrix, LogisticFit, fit_logistic, predict_proba
from .mixmodel import MixedDataset, MixedFit, classify, fit, predict
from .simplex import aitchison_distance, closure, contrast_matrix, ilr, ilr_inv

__version__ = "0.1.0"

__all__ = [
    "DesignMatrix",
    "FpcaBasis",
    "FunctionalSample",
    "LogisticFit",
    "MixedDataset",
    "MixedFit",
    "aitchison_distance",
    "classify",
    "closure",
    "contrast_matrix",
    "fit",
    "fit_fpca",
    "fit_logistic",
    "ilr",
    "ilr_inv",
    "predict",
    "predict_proba",
    "project",
    "reconstruct_curve",
]
