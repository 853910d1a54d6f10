"""Evaluation harness: reports, cross-validation, model comparison, lag sweep.

Reports carry the three error indicators per case plus an aggregate over
the pooled prediction set, for one model variant and one phase (training
fit, one-step prediction, or recursive multi-step prediction).  They
serialize losslessly to JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, split
from .exceptions import ParseError, TooFewPairs, ValidationError
from .forecasting import DEFAULT_LAGS, build_pairs
from .gp import DEFAULT_NOISE_BOUNDS, ExactGPRegressor
from .metrics import mae, me, rmse
from .models import MODEL_B, MODEL_LABELS, CapacityModel, fit_capacity_model, make_kernel, standardizes

PHASES = ("train", "one_step", "multi_step")


@dataclass(frozen=True)
class MetricSummary:
    me_ah: float
    mae_ah: float
    rmse_ah: float

    @classmethod
    def of(cls, actual, predicted) -> "MetricSummary":
        return cls(me_ah=me(actual, predicted), mae_ah=mae(actual, predicted), rmse_ah=rmse(actual, predicted))

    def to_dict(self) -> dict:
        return {"me_ah": self.me_ah, "mae_ah": self.mae_ah, "rmse_ah": self.rmse_ah}

    @classmethod
    def from_dict(cls, raw: dict) -> "MetricSummary":
        return cls(me_ah=raw["me_ah"], mae_ah=raw["mae_ah"], rmse_ah=raw["rmse_ah"])


@dataclass
class EvalReport:
    """Per-case and pooled error indicators for one model and phase."""

    model_label: str
    phase: str
    per_case: dict[str, MetricSummary]
    aggregate: MetricSummary
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model_label": self.model_label,
            "phase": self.phase,
            "per_case": {cid: s.to_dict() for cid, s in self.per_case.items()},
            "aggregate": self.aggregate.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EvalReport":
        return cls(
            model_label=raw["model_label"],
            phase=raw["phase"],
            per_case={cid: MetricSummary.from_dict(s) for cid, s in raw["per_case"].items()},
            aggregate=MetricSummary.from_dict(raw["aggregate"]),
            meta=raw.get("meta", {}),
        )


def save_reports(path, reports) -> None:
    document = {"reports": [r.to_dict() for r in reports]}
    Path(path).write_text(json.dumps(document, indent=2), encoding="utf-8")


def load_reports(path):
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    return [EvalReport.from_dict(raw) for raw in document["reports"]]


def one_step_report(model: CapacityModel, cases, phase: str = "one_step", include_noise: bool = False) -> EvalReport:
    """One-step (measured-window) predictions per case, pooled aggregate."""
    per_case = {}
    all_actual, all_predicted = [], []
    for case in cases:
        X, y, _ = build_pairs(case, model.lags)
        predicted = model.gp.predict(X)
        per_case[case.case_id] = MetricSummary.of(y, predicted)
        all_actual.append(y)
        all_predicted.append(predicted)
    aggregate = MetricSummary.of(np.concatenate(all_actual), np.concatenate(all_predicted))
    return EvalReport(model.label, phase, per_case, aggregate)


def multi_step_report(model: CapacityModel, cases, horizons: dict[str, int]) -> EvalReport:
    """Recursive forecasts seeded with each case's first ``lags`` capacities.

    ``horizons`` maps case id to the number of steps; every forecast step
    must have a measured capacity to compare against.
    """
    forecaster = model.forecaster()
    per_case = {}
    all_actual, all_predicted = [], []
    for case in cases:
        if case.case_id not in horizons:
            raise ValidationError(f"no horizon given for case '{case.case_id}'")
        steps = int(horizons[case.case_id])
        available = len(case) - model.lags
        if steps < 1 or steps > available:
            raise ValidationError(
                f"case {case.case_id}: horizon {steps} outside 1..{available} "
                f"({len(case)} points, {model.lags} lags)"
            )
        seed_window = case.capacities[: model.lags]
        points = forecaster.multi_step(seed_window, case.temperature_c, case.dod_pct, steps)
        predicted = np.array([p.mean_ah for p in points])
        actual = case.capacities[model.lags : model.lags + steps]
        per_case[case.case_id] = MetricSummary.of(actual, predicted)
        all_actual.append(actual)
        all_predicted.append(predicted)
    aggregate = MetricSummary.of(np.concatenate(all_actual), np.concatenate(all_predicted))
    return EvalReport(model.label, "multi_step", per_case, aggregate)


def full_horizons(cases, lags: int) -> dict[str, int]:
    """Largest horizon with ground truth at every step, per case."""
    return {case.case_id: len(case) - lags for case in cases}


def kfold_cv(X, y, label: str, k: int = 5, seed: int = 0, n_restarts: int = 8, max_iters: int = 200):
    """Shuffled k-fold cross-validation of one variant on prepared pairs.

    Returns one report per fold with the held-out one-step errors.  Fold
    assignment and fitting are deterministic per seed.  This is a training
    diagnostic; it does not feed back into model selection.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if k < 2:
        raise ValidationError("k must be >= 2")
    if len(y) < k:
        raise TooFewPairs(f"{len(y)} pairs cannot fill {k} folds")
    lags = X.shape[1] - 2
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    folds = np.array_split(order, k)
    reports = []
    for index, fold in enumerate(folds):
        rest = np.setdiff1d(order, fold)
        gp = ExactGPRegressor(
            kernel=make_kernel(label, lags),
            n_restarts=n_restarts,
            max_iters=max_iters,
            random_state=seed,
            standardize_features=standardizes(label),
        )
        gp.fit(X[rest], y[rest])
        summary = MetricSummary.of(y[fold], gp.predict(X[fold]))
        fold_name = f"fold_{index}"
        reports.append(
            EvalReport(label, "one_step", {fold_name: summary}, summary, meta={"fold": index, "size": int(len(fold))})
        )
    return reports


def compare(
    dataset: Dataset,
    train_ids,
    test_ids,
    horizons: dict[str, int],
    seed: int = 0,
    lags: int = DEFAULT_LAGS,
    n_restarts: int = 8,
    max_iters: int = 200,
    noise_bounds: tuple[float, float] = DEFAULT_NOISE_BOUNDS,
):
    """Train/one-step/multi-step comparison of all three variants.

    Each variant is fit once on the pooled training cases; the result is a
    list of nine reports (three variants x three phases) in a fixed order.
    """
    train_ds, test_ds = split(dataset, train_ids, test_ids)
    missing = [cid for cid in test_ds.ids if cid not in horizons]
    if missing:
        raise ValidationError(f"horizons missing for test case(s) {missing}")
    reports = []
    for label in MODEL_LABELS:
        model = fit_capacity_model(
            train_ds.cases, label, lags, seed, n_restarts, max_iters, noise_bounds
        )
        reports.append(one_step_report(model, train_ds.cases, phase="train"))
        reports.append(one_step_report(model, test_ds.cases, phase="one_step"))
        reports.append(multi_step_report(model, test_ds.cases, horizons))
    return reports


def lag_sweep(
    dataset: Dataset,
    lags_list,
    seed: int = 0,
    train_ids=None,
    test_ids=None,
    n_restarts: int = 8,
    max_iters: int = 200,
):
    """Multi-step reports for the composite-kernel variant at each lag count.

    Defaults to the convention that the last two case ids (sorted) are the
    test cases.  Horizons cover each test case's full remaining trajectory,
    so they shrink as the lag count grows.
    """
    ids = sorted(dataset.ids)
    if train_ids is None and test_ids is None:
        if len(ids) < 3:
            raise ValidationError("need at least three cases to infer a train/test split")
        train_ids, test_ids = ids[:-2], ids[-2:]
    elif train_ids is None or test_ids is None:
        raise ValidationError("give both train_ids and test_ids, or neither")
    train_ds, test_ds = split(dataset, train_ids, test_ids)
    reports = []
    for lags in lags_list:
        model = fit_capacity_model(train_ds.cases, MODEL_B, int(lags), seed, n_restarts, max_iters)
        report = multi_step_report(model, test_ds.cases, full_horizons(test_ds.cases, int(lags)))
        report.meta["lags"] = int(lags)
        reports.append(report)
    return reports
