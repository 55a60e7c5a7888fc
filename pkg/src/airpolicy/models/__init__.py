"""Nine regression learners behind one fit/predict contract.

Importing this package registers every kind: knn, dtr, rfr, linreg, ridge,
lasso, mgbr, madab, dnn.
"""

from .base import (
    HYPER_DEFAULTS,
    KINDS,
    ModelSpec,
    TrainedModel,
    fit,
    fit_arrays,
    load_model,
    model_from_json,
    model_to_json,
    predict,
    save_model,
)
from . import boost, forest, knn, linear, nnet, tree  # noqa: F401  (registration)
from .nnet import gradient_check

__all__ = [
    "HYPER_DEFAULTS",
    "KINDS",
    "ModelSpec",
    "TrainedModel",
    "fit",
    "fit_arrays",
    "gradient_check",
    "load_model",
    "model_from_json",
    "model_to_json",
    "predict",
    "save_model",
]
