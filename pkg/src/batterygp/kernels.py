"""Covariance functions for capacity-fade GP models.

Feature rows are laid out as ``[capacity lags ..., temperature, DOD]``.
Every kernel can restrict itself to a subset of columns, so composite
(product/sum) kernels let each factor own its slice of the features:
a smooth similarity over the capacity window, an Arrhenius-shaped
similarity over temperature, and a polynomial similarity over depth of
discharge.

All kernels expose the same surface:

* ``k(X, X2)``         -- Gram matrix (n1 x n2); ``k(X)`` is symmetric
* ``k.diag(X)``        -- diagonal of ``k(X, X)`` without the full matrix
* ``k.gradients(X)``   -- one Gram-sized matrix per free hyperparameter,
                          differentiated in log-parameter coordinates
* ``k.input_gradient(X, x)`` -- d k(X_i, x) / d x, shape (n, d)
* ``theta`` / ``theta_bounds`` -- log-space optimization coordinates
* ``to_dict`` / ``kernel_from_dict`` -- lossless JSON round-trip

Kernel evaluation is pure; instances are only mutated through ``theta`` or
``set_param`` and are otherwise safe to share between threads.
"""

from __future__ import annotations

import copy
from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from .exceptions import (
    DimensionMismatch,
    NonPositiveBase,
    NonPositiveTemperature,
    ValidationError,
)

DEFAULT_BOUNDS = (1e-3, 1e3)
DEGREE_BOUNDS = (0.5, 4.0)

_REGISTRY: dict[str, type["Kernel"]] = {}


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array of feature rows, got ndim={x.ndim}")
    return x


def _column_std(values: np.ndarray) -> float:
    s = float(np.std(values))
    return s if s > 0.0 else 1.0


class Kernel(ABC):
    """Base class handling hyperparameter plumbing for all kernels.

    Subclasses declare ``_fields`` (ordered hyperparameter attribute names,
    each a positive float or 1-D array of positive floats) and may mark a
    subset as ``fixed`` to exclude it from the optimization coordinates.
    """

    variant: str = ""
    _fields: tuple[str, ...] = ()

    def __init__(self, fixed: Sequence[str] = ()):
        unknown = set(fixed) - set(self._fields)
        if unknown:
            raise ValidationError(f"unknown fixed parameter(s) {sorted(unknown)} for kernel '{self.variant}'")
        self.fixed = frozenset(fixed)

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.variant:
            _REGISTRY[cls.variant] = cls

    # -- evaluation ------------------------------------------------------

    @abstractmethod
    def __call__(self, X, X2=None) -> np.ndarray:
        """Gram matrix between the rows of X and X2 (X itself if omitted)."""

    @abstractmethod
    def gradients(self, X) -> np.ndarray:
        """d Gram / d log(theta_j), stacked (n_theta, n, n) in theta order."""

    @abstractmethod
    def input_gradient(self, X, x) -> np.ndarray:
        """d k(X_i, x) / d x_d for a single query row x, shape (n, d)."""

    def diag(self, X) -> np.ndarray:
        X = _as_matrix(X)
        return np.array([self(row[None, :])[0, 0] for row in X])

    # -- hyperparameter plumbing ------------------------------------------

    @property
    def free_fields(self) -> tuple[str, ...]:
        return tuple(f for f in self._fields if f not in self.fixed)

    def _field_values(self, name: str) -> np.ndarray:
        return np.atleast_1d(np.asarray(getattr(self, name), dtype=float))

    def param_labels(self) -> list[str]:
        labels = []
        for name in self.free_fields:
            values = self._field_values(name)
            if values.size == 1:
                labels.append(name)
            else:
                labels.extend(f"{name}[{i}]" for i in range(values.size))
        return labels

    @property
    def n_theta(self) -> int:
        return sum(self._field_values(name).size for name in self.free_fields)

    @property
    def theta(self) -> np.ndarray:
        """Free hyperparameters as a flat log-space vector."""
        if self.n_theta == 0:
            return np.empty(0)
        return np.log(np.concatenate([self._field_values(name) for name in self.free_fields]))

    @theta.setter
    def theta(self, value) -> None:
        value = np.asarray(value, dtype=float)
        if value.shape != (self.n_theta,):
            raise DimensionMismatch(f"theta must have length {self.n_theta}, got {value.shape}")
        pos = 0
        for name in self.free_fields:
            current = getattr(self, name)
            size = self._field_values(name).size
            chunk = np.exp(value[pos : pos + size])
            setattr(self, name, chunk.copy() if isinstance(current, np.ndarray) else float(chunk[0]))
            pos += size

    def _bounds_for(self, name: str) -> tuple[float, float]:
        return DEFAULT_BOUNDS

    def theta_bounds(self) -> np.ndarray:
        """(n_theta, 2) log-space box constraints, in theta order."""
        rows = []
        for name in self.free_fields:
            lo, hi = self._bounds_for(name)
            rows.extend([(np.log(lo), np.log(hi))] * self._field_values(name).size)
        return np.array(rows).reshape(-1, 2)

    def init_from_data(self, X, y) -> None:
        """Set data-driven starting values: lengthscales from feature spread,
        amplitudes from target spread.  Fixed fields are left untouched."""

    def clone(self) -> "Kernel":
        return copy.deepcopy(self)

    # -- composition and serialization -------------------------------------

    def _operands(self, node_type: type) -> list["Kernel"]:
        return list(self.children) if isinstance(self, node_type) else [self]

    def __mul__(self, other: "Kernel") -> "ProductKernel":
        return ProductKernel(self._operands(ProductKernel) + other._operands(ProductKernel))

    def __add__(self, other: "Kernel") -> "SumKernel":
        return SumKernel(self._operands(SumKernel) + other._operands(SumKernel))

    def to_dict(self) -> dict:
        params = {}
        for name in self._fields:
            value = getattr(self, name)
            params[name] = list(np.asarray(value, dtype=float)) if np.ndim(value) else float(value)
        spec: dict = {"variant": self.variant, "params": params}
        if self.fixed:
            spec["fixed"] = sorted(self.fixed)
        extra = self._extra_spec()
        if extra:
            spec.update(extra)
        return spec

    def _extra_spec(self) -> dict:
        return {}

    def __repr__(self) -> str:
        parts = ", ".join(f"{name}={getattr(self, name)!r}" for name in self._fields)
        return f"{type(self).__name__}({parts})"


def kernel_from_dict(spec: dict) -> Kernel:
    """Rebuild a kernel from its ``to_dict`` form."""
    if "variant" not in spec:
        raise ValidationError("kernel spec is missing 'variant'")
    variant = spec["variant"]
    if variant not in _REGISTRY:
        raise ValidationError(f"unknown kernel variant '{variant}'")
    return _REGISTRY[variant]._from_spec(spec)


def _columns_tuple(columns) -> tuple[int, ...] | None:
    if columns is None:
        return None
    return tuple(int(c) for c in columns)


class SquaredExponential(Kernel):
    """Isotropic kernel signal^2 * exp(-||x - x'||^2 / (2 lengthscale^2)).

    Distance runs over all feature columns unless ``columns`` narrows it.
    This is the single-lengthscale baseline; it expects standardized
    features, since one spread parameter is shared by every input.
    """

    variant = "se"
    _fields = ("signal", "lengthscale")

    def __init__(self, signal=1.0, lengthscale=1.0, columns=None, fixed=()):
        super().__init__(fixed)
        self.signal = float(signal)
        self.lengthscale = float(lengthscale)
        self.columns = _columns_tuple(columns)

    def _slice(self, X: np.ndarray) -> np.ndarray:
        return X if self.columns is None else X[:, list(self.columns)]

    def _sqdist(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatch(f"feature dimensions differ: {A.shape[1]} vs {B.shape[1]}")
        diff = A[:, None, :] - B[None, :, :]
        return np.sum(diff * diff, axis=-1)

    def __call__(self, X, X2=None) -> np.ndarray:
        A = self._slice(_as_matrix(X))
        B = A if X2 is None else self._slice(_as_matrix(X2))
        sq = self._sqdist(A, B)
        return self.signal**2 * np.exp(-0.5 * sq / self.lengthscale**2)

    def diag(self, X) -> np.ndarray:
        X = _as_matrix(X)
        return np.full(X.shape[0], self.signal**2)

    def gradients(self, X) -> np.ndarray:
        A = self._slice(_as_matrix(X))
        sq = self._sqdist(A, A)
        K = self.signal**2 * np.exp(-0.5 * sq / self.lengthscale**2)
        grads = {"signal": 2.0 * K, "lengthscale": K * sq / self.lengthscale**2}
        return np.stack([grads[name] for name in self.free_fields]) if self.free_fields else np.empty((0, *K.shape))

    def input_gradient(self, X, x) -> np.ndarray:
        X = _as_matrix(X)
        x = np.asarray(x, dtype=float)
        K_col = self(X, x[None, :])[:, 0]
        out = np.zeros_like(X)
        cols = list(self.columns) if self.columns is not None else slice(None)
        out[:, cols] = K_col[:, None] * (X[:, cols] - x[cols][None, :]) / self.lengthscale**2
        return out

    def init_from_data(self, X, y) -> None:
        X = self._slice(_as_matrix(X))
        if "lengthscale" not in self.fixed:
            self.lengthscale = float(np.clip(np.mean([_column_std(X[:, j]) for j in range(X.shape[1])]), *DEFAULT_BOUNDS))
        if "signal" not in self.fixed:
            self.signal = float(np.clip(_column_std(np.asarray(y, dtype=float)), *DEFAULT_BOUNDS))

    def _extra_spec(self) -> dict:
        return {"columns": list(self.columns)} if self.columns is not None else {}

    @classmethod
    def _from_spec(cls, spec: dict) -> "SquaredExponential":
        p = spec["params"]
        return cls(p["signal"], p["lengthscale"], columns=spec.get("columns"), fixed=spec.get("fixed", ()))


class ArdSquaredExponential(Kernel):
    """SE kernel with one lengthscale per input column (relevance weighting).

    signal^2 * exp(-1/2 * sum_d (x_d - x'_d)^2 / lengthscales_d^2).  A large
    fitted lengthscale marks its column as irrelevant.  Restricted to the
    capacity-lag columns (and with ``signal`` playing the window amplitude)
    this is also the capacity factor of the composite fade kernel.
    """

    variant = "ard_se"
    _fields = ("signal", "lengthscales")

    def __init__(self, signal=1.0, lengthscales=(1.0,), columns=None, fixed=()):
        super().__init__(fixed)
        self.signal = float(signal)
        self.lengthscales = np.atleast_1d(np.asarray(lengthscales, dtype=float)).copy()
        self.columns = _columns_tuple(columns)
        if self.columns is not None and len(self.columns) != self.lengthscales.size:
            raise DimensionMismatch(
                f"{self.lengthscales.size} lengthscales for {len(self.columns)} columns"
            )

    def _slice(self, X: np.ndarray) -> np.ndarray:
        A = X if self.columns is None else X[:, list(self.columns)]
        if A.shape[1] != self.lengthscales.size:
            raise DimensionMismatch(
                f"kernel has {self.lengthscales.size} lengthscales but saw {A.shape[1]} columns"
            )
        return A

    def _sqdiff(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        diff = A[:, None, :] - B[None, :, :]
        return diff * diff  # (n1, n2, d)

    def __call__(self, X, X2=None) -> np.ndarray:
        A = self._slice(_as_matrix(X))
        B = A if X2 is None else self._slice(_as_matrix(X2))
        sq = self._sqdiff(A, B)
        return self.signal**2 * np.exp(-0.5 * np.sum(sq / self.lengthscales**2, axis=-1))

    def diag(self, X) -> np.ndarray:
        X = _as_matrix(X)
        return np.full(X.shape[0], self.signal**2)

    def gradients(self, X) -> np.ndarray:
        A = self._slice(_as_matrix(X))
        sq = self._sqdiff(A, A)
        K = self.signal**2 * np.exp(-0.5 * np.sum(sq / self.lengthscales**2, axis=-1))
        out = []
        for name in self.free_fields:
            if name == "signal":
                out.append(2.0 * K)
            else:
                out.extend(K * sq[:, :, d] / self.lengthscales[d] ** 2 for d in range(self.lengthscales.size))
        return np.stack(out) if out else np.empty((0, *K.shape))

    def input_gradient(self, X, x) -> np.ndarray:
        X = _as_matrix(X)
        x = np.asarray(x, dtype=float)
        K_col = self(X, x[None, :])[:, 0]
        out = np.zeros_like(X)
        cols = list(self.columns) if self.columns is not None else list(range(X.shape[1]))
        for d, j in enumerate(cols):
            out[:, j] = K_col * (X[:, j] - x[j]) / self.lengthscales[d] ** 2
        return out

    def init_from_data(self, X, y) -> None:
        A = self._slice(_as_matrix(X))
        if "lengthscales" not in self.fixed:
            stds = [np.clip(_column_std(A[:, d]), *DEFAULT_BOUNDS) for d in range(A.shape[1])]
            self.lengthscales = np.asarray(stds, dtype=float)
        if "signal" not in self.fixed:
            self.signal = float(np.clip(_column_std(np.asarray(y, dtype=float)), *DEFAULT_BOUNDS))

    def _extra_spec(self) -> dict:
        return {"columns": list(self.columns)} if self.columns is not None else {}

    @classmethod
    def _from_spec(cls, spec: dict) -> "ArdSquaredExponential":
        p = spec["params"]
        return cls(p["signal"], p["lengthscales"], columns=spec.get("columns"), fixed=spec.get("fixed", ()))


class ArrheniusKernel(Kernel):
    """Laplacian kernel on reciprocal temperature: scale * exp(-|1/T - 1/T'| / lengthscale).

    Temperatures must be in Kelvin (strictly positive); the reciprocal map
    gives the kernel the exponential temperature sensitivity of thermally
    activated degradation.
    """

    variant = "arrhenius"
    _fields = ("scale", "lengthscale")

    def __init__(self, scale=1.0, lengthscale=1.0, column=0, fixed=()):
        super().__init__(fixed)
        self.scale = float(scale)
        self.lengthscale = float(lengthscale)
        self.column = int(column)

    def _reciprocal(self, X: np.ndarray) -> np.ndarray:
        if self.column >= X.shape[1]:
            raise DimensionMismatch(f"temperature column {self.column} out of range for {X.shape[1]} columns")
        t = X[:, self.column]
        if np.any(t <= 0.0):
            raise NonPositiveTemperature("temperatures must be positive Kelvin values")
        return 1.0 / t

    def _absdiff(self, X, X2) -> np.ndarray:
        u = self._reciprocal(_as_matrix(X))
        v = u if X2 is None else self._reciprocal(_as_matrix(X2))
        return np.abs(u[:, None] - v[None, :])

    def __call__(self, X, X2=None) -> np.ndarray:
        return self.scale * np.exp(-self._absdiff(X, X2) / self.lengthscale)

    def diag(self, X) -> np.ndarray:
        X = _as_matrix(X)
        self._reciprocal(X)
        return np.full(X.shape[0], self.scale)

    def gradients(self, X) -> np.ndarray:
        r = self._absdiff(X, None)
        K = self.scale * np.exp(-r / self.lengthscale)
        grads = {"scale": K, "lengthscale": K * r / self.lengthscale}
        return np.stack([grads[name] for name in self.free_fields]) if self.free_fields else np.empty((0, *K.shape))

    def input_gradient(self, X, x) -> np.ndarray:
        X = _as_matrix(X)
        x = np.asarray(x, dtype=float)
        u = self._reciprocal(X)
        ustar = self._reciprocal(x[None, :])[0]
        K_col = self.scale * np.exp(-np.abs(u - ustar) / self.lengthscale)
        out = np.zeros_like(X)
        tstar = x[self.column]
        out[:, self.column] = -K_col * np.sign(u - ustar) / (self.lengthscale * tstar**2)
        return out

    def init_from_data(self, X, y) -> None:
        if "lengthscale" not in self.fixed:
            u = self._reciprocal(_as_matrix(X))
            self.lengthscale = float(np.clip(_column_std(u), *DEFAULT_BOUNDS))
        if "scale" not in self.fixed:
            self.scale = float(np.clip(_column_std(np.asarray(y, dtype=float)), *DEFAULT_BOUNDS))

    def _extra_spec(self) -> dict:
        return {"column": self.column}

    @classmethod
    def _from_spec(cls, spec: dict) -> "ArrheniusKernel":
        p = spec["params"]
        return cls(p["scale"], p["lengthscale"], column=spec.get("column", 0), fixed=spec.get("fixed", ()))


class PolynomialKernel(Kernel):
    """Non-stationary kernel (slope * x * x' + offset)^degree on one column.

    Built for the depth-of-discharge feature stored as a fraction in (0, 1],
    which keeps the base positive and well conditioned.  The degree may be a
    non-integer, in which case the Gram matrix is not guaranteed positive
    semi-definite; downstream factorization relies on the jitter ladder.
    """

    variant = "polynomial"
    _fields = ("slope", "offset", "degree")

    def __init__(self, slope=1.0, offset=1.0, degree=1.0, column=0, fixed=()):
        super().__init__(fixed)
        self.slope = float(slope)
        self.offset = float(offset)
        self.degree = float(degree)
        self.column = int(column)

    def _bounds_for(self, name: str) -> tuple[float, float]:
        return DEGREE_BOUNDS if name == "degree" else DEFAULT_BOUNDS

    def _values(self, X: np.ndarray) -> np.ndarray:
        if self.column >= X.shape[1]:
            raise DimensionMismatch(f"column {self.column} out of range for {X.shape[1]} columns")
        return X[:, self.column]

    def _base(self, X, X2) -> np.ndarray:
        a = self._values(_as_matrix(X))
        b = a if X2 is None else self._values(_as_matrix(X2))
        base = self.slope * a[:, None] * b[None, :] + self.offset
        if np.any(base <= 0.0):
            raise NonPositiveBase("polynomial kernel base must be positive; check slope/offset and inputs")
        return base

    def __call__(self, X, X2=None) -> np.ndarray:
        return self._base(X, X2) ** self.degree

    def diag(self, X) -> np.ndarray:
        a = self._values(_as_matrix(X))
        base = self.slope * a * a + self.offset
        if np.any(base <= 0.0):
            raise NonPositiveBase("polynomial kernel base must be positive; check slope/offset and inputs")
        return base**self.degree

    def gradients(self, X) -> np.ndarray:
        base = self._base(X, None)
        K = base**self.degree
        inner = base - self.offset  # slope * x * x'
        grads = {
            "slope": self.degree * base ** (self.degree - 1.0) * inner,
            "offset": self.degree * base ** (self.degree - 1.0) * self.offset,
            "degree": K * np.log(base) * self.degree,
        }
        return np.stack([grads[name] for name in self.free_fields]) if self.free_fields else np.empty((0, *K.shape))

    def input_gradient(self, X, x) -> np.ndarray:
        X = _as_matrix(X)
        x = np.asarray(x, dtype=float)
        a = self._values(X)
        base = self.slope * a * x[self.column] + self.offset
        if np.any(base <= 0.0):
            raise NonPositiveBase("polynomial kernel base must be positive; check slope/offset and inputs")
        out = np.zeros_like(X)
        out[:, self.column] = self.degree * base ** (self.degree - 1.0) * self.slope * a
        return out

    def _extra_spec(self) -> dict:
        return {"column": self.column}

    @classmethod
    def _from_spec(cls, spec: dict) -> "PolynomialKernel":
        p = spec["params"]
        return cls(p["slope"], p["offset"], p["degree"], column=spec.get("column", 0), fixed=spec.get("fixed", ()))


class _CompositeKernel(Kernel):
    """Shared plumbing for product and sum composition nodes."""

    _fields = ()

    def __init__(self, children: Sequence[Kernel]):
        super().__init__(())
        children = list(children)
        if len(children) < 2:
            raise ValidationError("composite kernels need at least two children")
        self.children = children

    @property
    def free_fields(self) -> tuple[str, ...]:
        return ()

    def param_labels(self) -> list[str]:
        return [f"k{i}.{label}" for i, child in enumerate(self.children) for label in child.param_labels()]

    @property
    def n_theta(self) -> int:
        return sum(child.n_theta for child in self.children)

    @property
    def theta(self) -> np.ndarray:
        parts = [child.theta for child in self.children]
        return np.concatenate(parts) if parts else np.empty(0)

    @theta.setter
    def theta(self, value) -> None:
        value = np.asarray(value, dtype=float)
        if value.shape != (self.n_theta,):
            raise DimensionMismatch(f"theta must have length {self.n_theta}, got {value.shape}")
        pos = 0
        for child in self.children:
            child.theta = value[pos : pos + child.n_theta]
            pos += child.n_theta

    def theta_bounds(self) -> np.ndarray:
        parts = [child.theta_bounds() for child in self.children]
        return np.concatenate(parts) if parts else np.empty((0, 2))

    def init_from_data(self, X, y) -> None:
        for child in self.children:
            child.init_from_data(X, y)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "params": {}, "children": [c.to_dict() for c in self.children]}

    @classmethod
    def _from_spec(cls, spec: dict):
        return cls([kernel_from_dict(c) for c in spec.get("children", [])])

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.children!r})"


class ProductKernel(_CompositeKernel):
    """Elementwise product of child Gram matrices ('and' composition)."""

    variant = "product"

    def __call__(self, X, X2=None) -> np.ndarray:
        K = self.children[0](X, X2)
        for child in self.children[1:]:
            K = K * child(X, X2)
        return K

    def diag(self, X) -> np.ndarray:
        d = self.children[0].diag(X)
        for child in self.children[1:]:
            d = d * child.diag(X)
        return d

    def gradients(self, X) -> np.ndarray:
        grams = [child(X) for child in self.children]
        out = []
        for i, child in enumerate(self.children):
            others = np.ones_like(grams[0])
            for j, gram in enumerate(grams):
                if j != i:
                    others = others * gram
            child_grads = child.gradients(X)
            out.extend(child_grads[m] * others for m in range(child_grads.shape[0]))
        n = grams[0].shape[0]
        return np.stack(out) if out else np.empty((0, n, n))

    def input_gradient(self, X, x) -> np.ndarray:
        X = _as_matrix(X)
        x = np.asarray(x, dtype=float)
        cols = [child(X, x[None, :])[:, 0] for child in self.children]
        out = np.zeros_like(X)
        for i, child in enumerate(self.children):
            others = np.ones(X.shape[0])
            for j, col in enumerate(cols):
                if j != i:
                    others = others * col
            out += child.input_gradient(X, x) * others[:, None]
        return out


class SumKernel(_CompositeKernel):
    """Elementwise sum of child Gram matrices ('or' composition)."""

    variant = "sum"

    def __call__(self, X, X2=None) -> np.ndarray:
        K = self.children[0](X, X2)
        for child in self.children[1:]:
            K = K + child(X, X2)
        return K

    def diag(self, X) -> np.ndarray:
        d = self.children[0].diag(X)
        for child in self.children[1:]:
            d = d + child.diag(X)
        return d

    def gradients(self, X) -> np.ndarray:
        parts = [child.gradients(X) for child in self.children]
        n = _as_matrix(X).shape[0]
        return np.concatenate(parts) if parts else np.empty((0, n, n))

    def input_gradient(self, X, x) -> np.ndarray:
        out = self.children[0].input_gradient(X, x)
        for child in self.children[1:]:
            out = out + child.input_gradient(X, x)
        return out
