"""Command-line surface: synth, train, predict, evaluate, compare, lag-sweep.

Exit codes: 0 success, 2 validation error (bad inputs, bad files),
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import functools
import sys

import click
import numpy as np

from . import data as data_mod
from . import evaluation
from .exceptions import NumericalError, ValidationError
from .forecasting import build_pairs, write_forecast_csv
from .models import MODEL_A, MODEL_B, SEGM, CapacityModel, fit_capacity_model

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_LABEL_BY_FLAG = {"segm": SEGM, "a": MODEL_A, "b": MODEL_B}


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(EXIT_IO)

    return wrapper


def _parse_ids(text: str) -> list[str]:
    ids = [part.strip() for part in text.split(",") if part.strip()]
    if not ids:
        raise ValidationError(f"no case ids in {text!r}")
    return ids


def _parse_horizons(text: str) -> dict[str, int]:
    horizons = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValidationError(f"horizon entry {part!r} is not of the form id=k")
        case_id, _, steps = part.partition("=")
        try:
            horizons[case_id.strip()] = int(steps)
        except ValueError:
            raise ValidationError(f"horizon entry {part!r}: {steps!r} is not an integer") from None
    if not horizons:
        raise ValidationError(f"no horizons in {text!r}")
    return horizons


def _parse_lags_range(text: str) -> list[int]:
    text = text.strip()
    try:
        if ".." in text:
            start, _, stop = text.partition("..")
            values = list(range(int(start), int(stop) + 1))
        else:
            values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse lag range {text!r} (use e.g. '1..5' or '1,2,3')") from None
    if not values or min(values) < 1:
        raise ValidationError(f"lag range {text!r} must contain positive integers")
    return values


@click.group()
def main():
    """GP-based battery cyclic-capacity forecasting."""


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="SynthConfig JSON; defaults apply if omitted.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_guarded
def synth(config_path, out_path):
    """Generate the six-case synthetic cyclic-ageing matrix as CSV."""
    cfg = data_mod.SynthConfig.from_json(config_path) if config_path else data_mod.SynthConfig()
    dataset = data_mod.synth_matrix(cfg)
    data_mod.write_csv(out_path, dataset)
    click.echo(f"wrote {sum(len(c) for c in dataset.cases)} points across {len(dataset.cases)} cases to {out_path}")


@main.command()
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--model", "model_flag", type=click.Choice(sorted(_LABEL_BY_FLAG)), required=True)
@click.option("--train-cases", required=True, help="Comma-separated case ids.")
@click.option("--lags", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_guarded
def train(data_path, model_flag, train_cases, lags, seed, out_path):
    """Fit one model variant on the pooled training cases."""
    dataset = data_mod.load_csv(data_path)
    cases = [dataset.case(cid) for cid in _parse_ids(train_cases)]
    model = fit_capacity_model(cases, _LABEL_BY_FLAG[model_flag], lags=lags, seed=seed)
    model.save(out_path)
    click.echo(f"trained {model.label} (lags={lags}, nll={model.gp.nll_:.4f}) -> {out_path}")


@main.command()
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--case", "case_id", required=True)
@click.option("--mode", type=click.Choice(["one-step", "multi-step"]), required=True)
@click.option("--steps", type=int, default=None, help="Multi-step horizon; defaults to the case's full remainder.")
@click.option("--observation-noise", is_flag=True, help="Add fitted measurement noise to the reported variance.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_guarded
def predict(model_path, data_path, case_id, mode, steps, observation_noise, out_path):
    """Forecast one case and write step/cycle/mean/variance/bounds CSV."""
    model = CapacityModel.load(model_path)
    dataset = data_mod.load_csv(data_path)
    case = dataset.case(case_id)
    forecaster = model.forecaster()
    if mode == "one-step":
        X, _, cycles = build_pairs(case, model.lags)
        points = [
            forecaster.one_step(row[: model.lags], case.temperature_c, case.dod_pct, include_noise=observation_noise)
            for row in X
        ]
        points = [type(p)(i + 1, p.mean_ah, p.variance_ah2, p.lower95, p.upper95) for i, p in enumerate(points)]
    else:
        available = len(case) - model.lags
        steps = available if steps is None else steps
        if steps < 1:
            raise ValidationError("steps must be >= 1")
        window = case.capacities[: model.lags]
        points = forecaster.multi_step(window, case.temperature_c, case.dod_pct, steps, include_noise=observation_noise)
        cycles = list(case.cycles[model.lags :])
        if len(cycles) < steps:  # extrapolate the cycle axis past the data
            spacing = int(np.median(np.diff(case.cycles))) if len(case) > 1 else 1
            last = cycles[-1] if cycles else int(case.cycles[-1])
            cycles.extend(last + spacing * (i + 1) for i in range(steps - len(cycles)))
        cycles = cycles[:steps]
    write_forecast_csv(out_path, points, cycles)
    click.echo(f"wrote {len(points)} {mode} forecast rows for case {case_id} to {out_path}")


@main.command()
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--cases", required=True, help="Comma-separated case ids.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_guarded
def evaluate(model_path, data_path, cases, out_path):
    """One-step error indicators of a trained model on the given cases."""
    model = CapacityModel.load(model_path)
    dataset = data_mod.load_csv(data_path)
    case_list = [dataset.case(cid) for cid in _parse_ids(cases)]
    report = evaluation.one_step_report(model, case_list)
    evaluation.save_reports(out_path, [report])
    click.echo(
        f"{model.label} one-step aggregate: me={report.aggregate.me_ah:.4f} "
        f"mae={report.aggregate.mae_ah:.4f} rmse={report.aggregate.rmse_ah:.4f} -> {out_path}"
    )


@main.command()
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--train-cases", required=True)
@click.option("--test-cases", required=True)
@click.option("--horizons", required=True, help="Comma-separated id=k entries, e.g. '5=14,6=9'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_guarded
def compare(data_path, train_cases, test_cases, horizons, seed, out_path):
    """Train and compare all three variants; writes nine reports."""
    dataset = data_mod.load_csv(data_path)
    reports = evaluation.compare(
        dataset,
        _parse_ids(train_cases),
        _parse_ids(test_cases),
        _parse_horizons(horizons),
        seed=seed,
    )
    evaluation.save_reports(out_path, reports)
    for report in reports:
        click.echo(
            f"{report.model_label:6s} {report.phase:10s} rmse={report.aggregate.rmse_ah:.4f} "
            f"mae={report.aggregate.mae_ah:.4f} me={report.aggregate.me_ah:.4f}"
        )
    click.echo(f"wrote {len(reports)} reports to {out_path}")


@main.command(name="lag-sweep")
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--lags", "lags_range", required=True, help="Range like '1..5' or list '1,2,3'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_guarded
def lag_sweep(data_path, lags_range, seed, out_path):
    """Sweep the lag count for the composite-kernel variant (multi-step)."""
    dataset = data_mod.load_csv(data_path)
    reports = evaluation.lag_sweep(dataset, _parse_lags_range(lags_range), seed=seed)
    evaluation.save_reports(out_path, reports)
    for report in reports:
        click.echo(f"lags={report.meta['lags']}: multi-step rmse={report.aggregate.rmse_ah:.4f}")
    click.echo(f"wrote {len(reports)} reports to {out_path}")


if __name__ == "__main__":
    main()
