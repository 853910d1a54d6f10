"""Prediction-error indicators: MAE, maximum absolute error, RMSE."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, EmptyInput


def _errors(actual, predicted) -> np.ndarray:
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise DimensionMismatch(f"shapes {actual.shape} and {predicted.shape} must be equal 1-D vectors")
    if actual.size == 0:
        raise EmptyInput("metrics need at least one prediction")
    return np.abs(actual - predicted)


def mae(actual, predicted) -> float:
    """Mean absolute error."""
    return float(np.mean(_errors(actual, predicted)))


def me(actual, predicted) -> float:
    """Maximum absolute error."""
    return float(np.max(_errors(actual, predicted)))


def rmse(actual, predicted) -> float:
    """Root mean square error."""
    return float(np.sqrt(np.mean(_errors(actual, predicted) ** 2)))
