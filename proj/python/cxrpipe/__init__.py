"""Python bindings for the chest X-ray pipeline library."""

from ._cxrpipe import (
    ArgumentError,
    DataError,
    DimensionError,
    Error,
    ForestModel,
    FormatError,
    NumericalError,
    SvmModel,
    enhance,
    fit_resample,
    hog,
    lime,
    load_model,
    metrics_report,
    overlay,
    save_model,
    train_forest,
    train_svm,
)

__all__ = [
    "ArgumentError",
    "DataError",
    "DimensionError",
    "Error",
    "ForestModel",
    "FormatError",
    "NumericalError",
    "SvmModel",
    "enhance",
    "fit_resample",
    "hog",
    "lime",
    "load_model",
    "metrics_report",
    "overlay",
    "save_model",
    "train_forest",
    "train_svm",
]


def predict(model, X):
    """Class indices with the highest score per row."""
    return model.predict_proba(X).argmax(axis=1)
