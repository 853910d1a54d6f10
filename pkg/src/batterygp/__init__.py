"""Gaussian-process capacity-fade models for cyclically aged batteries.

Exact GP regression with a small compositional kernel algebra, recursive
multi-step forecasting with first-order uncertainty propagation, a
synthetic cyclic-ageing data generator, and an evaluation harness
comparing an isotropic baseline against relevance-weighted and
physics-structured kernels.
"""

from .data import (
    CapacityPoint,
    CyclicCase,
    Dataset,
    SynthConfig,
    load_csv,
    split,
    synth_case,
    synth_matrix,
    to_kelvin,
    write_csv,
)
from .evaluation import EvalReport, MetricSummary, compare, kfold_cv, lag_sweep, load_reports, save_reports
from .exceptions import (
    AllStartsFailed,
    BatteryGPError,
    DimensionMismatch,
    NotPositiveDefinite,
    NumericalError,
    ParseError,
    TooShort,
    ValidationError,
)
from .forecasting import CapacityForecaster, ForecastPoint, build_pairs, build_training_set
from .gp import ExactGPRegressor
from .kernels import (
    ArdSquaredExponential,
    ArrheniusKernel,
    Kernel,
    PolynomialKernel,
    ProductKernel,
    SquaredExponential,
    SumKernel,
    kernel_from_dict,
)
from .metrics import mae, me, rmse
from .models import MODEL_A, MODEL_B, MODEL_LABELS, SEGM, CapacityModel, fit_capacity_model, make_kernel

__version__ = "0.1.0"

__all__ = [
    "ArdSquaredExponential",
    "ArrheniusKernel",
    "AllStartsFailed",
    "BatteryGPError",
    "CapacityForecaster",
    "CapacityModel",
    "CapacityPoint",
    "CyclicCase",
    "Dataset",
    "DimensionMismatch",
    "EvalReport",
    "ExactGPRegressor",
    "ForecastPoint",
    "Kernel",
    "MetricSummary",
    "MODEL_A",
    "MODEL_B",
    "MODEL_LABELS",
    "NotPositiveDefinite",
    "NumericalError",
    "ParseError",
    "PolynomialKernel",
    "ProductKernel",
    "SEGM",
    "SquaredExponential",
    "SumKernel",
    "SynthConfig",
    "TooShort",
    "ValidationError",
    "build_pairs",
    "build_training_set",
    "compare",
    "fit_capacity_model",
    "kernel_from_dict",
    "kfold_cv",
    "lag_sweep",
    "load_csv",
    "load_reports",
    "mae",
    "make_kernel",
    "me",
    "rmse",
    "save_reports",
    "split",
    "synth_case",
    "synth_matrix",
    "to_kelvin",
    "write_csv",
]
