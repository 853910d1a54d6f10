"""The three named capacity models and their persistence format.

* ``SEGM``   -- isotropic squared-exponential GP on standardized features.
* ``ModelA`` -- per-dimension (relevance-determining) SE GP on standardized
  features.
* ``ModelB`` -- product kernel on physical units: SE over the capacity
  window, an Arrhenius-shaped factor over temperature, and a polynomial
  factor over DOD, each owning its slice of the feature columns.

A trained model serializes to a single JSON document carrying the kernel
spec, fitted parameters, and training data; loading rebuilds the Cholesky
factor and weight vector and cross-checks the stored objective value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ParseError, ValidationError
from .forecasting import DEFAULT_LAGS, CapacityForecaster, build_training_set
from .gp import DEFAULT_NOISE_BOUNDS, ExactGPRegressor
from .kernels import (
    ArdSquaredExponential,
    ArrheniusKernel,
    Kernel,
    PolynomialKernel,
    SquaredExponential,
    kernel_from_dict,
)

SEGM = "SEGM"
MODEL_A = "ModelA"
MODEL_B = "ModelB"
MODEL_LABELS = (SEGM, MODEL_A, MODEL_B)

# Loaded models must reproduce their stored objective to this tolerance.
NLL_CHECK_TOL = 1e-8


def make_kernel(label: str, lags: int = DEFAULT_LAGS) -> Kernel:
    """Kernel for one of the named model variants over lags + 2 columns."""
    if label == SEGM:
        return SquaredExponential()
    if label == MODEL_A:
        return ArdSquaredExponential(lengthscales=np.ones(lags + 2))
    if label == MODEL_B:
        # The three factors partition the feature columns; the window factor
        # carries the only free amplitude, so the temperature scale and the
        # polynomial slope stay fixed at 1.
        capacity = ArdSquaredExponential(lengthscales=np.ones(lags), columns=range(lags))
        temperature = ArrheniusKernel(column=lags, fixed=("scale",))
        dod = PolynomialKernel(column=lags + 1, fixed=("slope",))
        return capacity * temperature * dod
    raise ValidationError(f"unknown model label '{label}' (choose from {MODEL_LABELS})")


def standardizes(label: str) -> bool:
    """Whether the variant expects standardized features (SEGM and ModelA do;
    ModelB encodes physical structure and sees raw units)."""
    if label not in MODEL_LABELS:
        raise ValidationError(f"unknown model label '{label}'")
    return label in (SEGM, MODEL_A)


def make_regressor(
    label: str,
    lags: int = DEFAULT_LAGS,
    seed: int = 0,
    n_restarts: int = 8,
    max_iters: int = 200,
    noise_bounds: tuple[float, float] = DEFAULT_NOISE_BOUNDS,
) -> ExactGPRegressor:
    return ExactGPRegressor(
        kernel=make_kernel(label, lags),
        noise_bounds=noise_bounds,
        n_restarts=n_restarts,
        max_iters=max_iters,
        random_state=seed,
        standardize_features=standardizes(label),
    )


@dataclass(frozen=True)
class CapacityModel:
    """A fitted variant bundled with the lag count it was built for."""

    label: str
    lags: int
    gp: ExactGPRegressor

    def forecaster(self) -> CapacityForecaster:
        return CapacityForecaster(self.gp, self.lags)

    def save(self, path) -> None:
        gp = self.gp
        document = {
            "label": self.label,
            "lags": self.lags,
            "kernel": gp.kernel_.to_dict(),
            "noise": gp.noise_,
            "nll": gp.nll_,
            "standardize_features": bool(gp.standardize_features),
            "y_mean": gp.y_mean_,
            "training_inputs": gp.X_train_.tolist(),
            "training_targets": (gp.y_train_ + gp.y_mean_).tolist(),
        }
        Path(path).write_text(json.dumps(document, indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CapacityModel":
        path = Path(path)
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from None
        try:
            kernel = kernel_from_dict(document["kernel"])
            gp = ExactGPRegressor(
                kernel=kernel,
                noise=document["noise"],
                optimizer=None,
                standardize_features=document["standardize_features"],
            )
            gp.fit(document["training_inputs"], document["training_targets"])
            stored_nll = float(document["nll"])
            label = document["label"]
            lags = int(document["lags"])
        except KeyError as exc:
            raise ParseError(f"{path}: missing field {exc}") from None
        if abs(gp.nll_ - stored_nll) > NLL_CHECK_TOL:
            raise ValidationError(
                f"{path}: recomputed objective {gp.nll_!r} deviates from stored {stored_nll!r}"
            )
        return cls(label=label, lags=lags, gp=gp)


def fit_capacity_model(
    cases,
    label: str,
    lags: int = DEFAULT_LAGS,
    seed: int = 0,
    n_restarts: int = 8,
    max_iters: int = 200,
    noise_bounds: tuple[float, float] = DEFAULT_NOISE_BOUNDS,
) -> CapacityModel:
    """Fit one variant on the pooled windows of the given training cases."""
    X, y = build_training_set(cases, lags)
    gp = make_regressor(label, lags, seed, n_restarts, max_iters, noise_bounds)
    gp.fit(X, y)
    return CapacityModel(label=label, lags=lags, gp=gp)
