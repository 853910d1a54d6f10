"""Lagged-window construction and recursive capacity forecasting.

Each training pair maps a window of consecutive capacities plus the case's
constant temperature (Kelvin) and DOD (fraction) to the next capacity.
Multi-step forecasts feed each predicted mean back into the window; the
prediction uncertainty is propagated to first order by tracking the full
covariance of the lag window and mapping it through the gradient of the
predictive mean, so the reported variance accumulates as the horizon grows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import CyclicCase, to_kelvin
from .exceptions import DimensionMismatch, TooShort, ValidationError
from .gp import ExactGPRegressor

DEFAULT_LAGS = 2

# Two-sided 95 % normal quantile used for all confidence bounds.
Z95 = 1.96


@dataclass(frozen=True)
class ForecastPoint:
    """Predicted capacity at forecast step k (1-based)."""

    step: int
    mean_ah: float
    variance_ah2: float
    lower95: float
    upper95: float


def _make_point(step: int, mean: float, variance: float) -> ForecastPoint:
    half = Z95 * float(np.sqrt(variance))
    return ForecastPoint(step, mean, variance, mean - half, mean + half)


def feature_row(window, temperature_k: float, dod_fraction: float) -> np.ndarray:
    """Assemble and validate one model input: [lags..., T_K, dod]."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 1 or window.size < 1:
        raise DimensionMismatch("capacity window must be a non-empty 1-D sequence")
    if np.any(window <= 0.0):
        raise ValidationError("capacity lags must be positive")
    if temperature_k <= 0.0:
        raise ValidationError("temperature must be positive Kelvin")
    if not 0.0 < dod_fraction <= 1.0:
        raise ValidationError(f"DOD fraction must be in (0, 1], got {dod_fraction}")
    return np.concatenate([window, [temperature_k, dod_fraction]])


def build_pairs(case: CyclicCase, lags: int = DEFAULT_LAGS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sliding-window input/target pairs for one case.

    Returns (X, y, target_cycles): X has one row per window, oldest lag
    first; y is the capacity right after each window.  A case with p points
    yields p - lags pairs.
    """
    if lags < 1:
        raise ValidationError("lags must be >= 1")
    capacities = case.capacities
    if len(capacities) <= lags:
        raise TooShort(f"case {case.case_id}: {len(capacities)} points cannot support {lags} lags")
    t_k = case.temperature_k
    dod = case.dod_fraction
    rows = []
    targets = []
    for end in range(lags, len(capacities)):
        rows.append(feature_row(capacities[end - lags : end], t_k, dod))
        targets.append(capacities[end])
    return np.array(rows), np.array(targets), case.cycles[lags:]


def build_training_set(cases, lags: int = DEFAULT_LAGS) -> tuple[np.ndarray, np.ndarray]:
    """Pooled pairs over several cases; windows never span case boundaries."""
    xs, ys = [], []
    for case in cases:
        X, y, _ = build_pairs(case, lags)
        xs.append(X)
        ys.append(y)
    return np.concatenate(xs), np.concatenate(ys)


class CapacityForecaster:
    """One-step and recursive multi-step prediction on a fitted GP.

    The wrapped regressor must have been fit on ``lags + 2`` feature columns
    laid out as [capacity lags..., temperature K, DOD fraction].  Instances
    hold no mutable state; forecasts may run concurrently.
    """

    def __init__(self, gp: ExactGPRegressor, lags: int = DEFAULT_LAGS):
        if lags < 1:
            raise ValidationError("lags must be >= 1")
        self.gp = gp
        self.lags = lags

    def mean_gradient(self, features) -> np.ndarray:
        """d(predictive mean)/d(capacity lags) at one input row, in 1/Ah."""
        features = np.asarray(features, dtype=float)
        return self.gp.mean_input_gradient(features)[: self.lags]

    def one_step(self, window, temperature_c: float, dod_pct: float, include_noise: bool = False) -> ForecastPoint:
        """Predict the capacity one step after the given measured window."""
        return self.multi_step(window, temperature_c, dod_pct, steps=1, include_noise=include_noise)[0]

    def multi_step(
        self,
        window,
        temperature_c: float,
        dod_pct: float,
        steps: int,
        include_noise: bool = False,
        propagate: bool = True,
    ) -> list[ForecastPoint]:
        """Recursive k-step forecast with first-order uncertainty propagation.

        Each step predicts from the current window, then shifts the predicted
        mean into the window.  The lag-window covariance (seeded at zero for
        the measured window) is updated alongside: the newest entry gets the
        step's latent variance plus the propagated term g' Sigma g, and its
        covariance with the surviving lags is the linearized Sigma g.  With
        ``propagate=False`` only the raw GP variance at the mean input is
        reported (diagnostic mode).
        """
        if steps < 1:
            raise ValidationError("steps must be >= 1")
        window = np.asarray(window, dtype=float)
        if window.shape != (self.lags,):
            raise DimensionMismatch(f"window must have length {self.lags}, got {window.shape}")
        t_k = to_kelvin(temperature_c)
        dod = dod_pct / 100.0
        noise_var = self.gp.noise_**2 if include_noise else 0.0

        sigma = np.zeros((self.lags, self.lags))
        points = []
        for step in range(1, steps + 1):
            row = feature_row(window, t_k, dod)
            mean, std = self.gp.predict(row[None, :], return_std=True)
            mean = float(mean[0])
            latent_var = float(std[0]) ** 2
            if propagate:
                grad = self.mean_gradient(row)
                coupling = sigma @ grad
                propagated = max(float(grad @ coupling), 0.0)
            else:
                coupling = np.zeros(self.lags)
                propagated = 0.0
            total_var = latent_var + propagated
            points.append(_make_point(step, mean, total_var + noise_var))

            window = np.concatenate([window[1:], [mean]])
            shifted = np.zeros_like(sigma)
            shifted[:-1, :-1] = sigma[1:, 1:]
            shifted[:-1, -1] = coupling[1:]
            shifted[-1, :-1] = coupling[1:]
            shifted[-1, -1] = total_var
            sigma = shifted
        return points


def write_forecast_csv(path, points, cycle_indices) -> None:
    """Write forecast rows: step, cycle_index, mean, variance, 95 % bounds."""
    points = list(points)
    cycle_indices = list(cycle_indices)
    if len(points) != len(cycle_indices):
        raise DimensionMismatch(f"{len(points)} forecast points but {len(cycle_indices)} cycle indices")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "cycle_index", "mean_ah", "variance_ah2", "lower95", "upper95"])
        for point, cycle in zip(points, cycle_indices):
            writer.writerow(
                [point.step, cycle, repr(point.mean_ah), repr(point.variance_ah2), repr(point.lower95), repr(point.upper95)]
            )
