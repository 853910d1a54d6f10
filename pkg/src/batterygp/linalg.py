"""Dense symmetric linear algebra for exact GP inference.

Only what the GP engine needs: Cholesky factorization with an adaptive
jitter ladder, triangular solves, and the log-determinant read off a
factor.  Kernel matrices are symmetrized on entry, never inverted
explicitly.  All functions are pure and safe for concurrent callers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import (
    DimensionMismatch,
    NotPositiveDefinite,
    SingularTriangular,
    ValidationError,
)

# First jitter rung relative to the mean diagonal; absolute floor covers
# matrices with a zero diagonal.
JITTER_RELATIVE = 1e-10
JITTER_FLOOR = 1e-12
DEFAULT_JITTER_ATTEMPTS = 8


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular Cholesky factor plus the diagonal jitter it needed.

    ``L @ L.T`` reconstructs the (symmetrized) input with ``jitter`` added to
    its diagonal.
    """

    L: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return self.L.shape[0]


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A.T) / 2, tolerating float drift from kernel assembly."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def cholesky(a: np.ndarray) -> CholFactor:
    """Factor a symmetric positive-definite matrix as L @ L.T.

    Raises NotPositiveDefinite if any pivot is non-positive.  The input is
    symmetrized first, so small asymmetries do not matter.
    """
    a = symmetrize(a)
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix entries must be finite")
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix of size {a.shape[0]} is not positive definite") from exc
    return CholFactor(L=lower, jitter=0.0)


def cholesky_jittered(a: np.ndarray, max_attempts: int = DEFAULT_JITTER_ATTEMPTS) -> CholFactor:
    """Factor A, escalating diagonal jitter 0, eps, 10*eps, ... until success.

    eps is 1e-10 times the mean diagonal, with an absolute floor of 1e-12 so
    zero-diagonal inputs still get a usable ladder.  The jitter actually used
    is recorded on the returned factor.
    """
    if max_attempts < 1:
        raise ValidationError("max_attempts must be >= 1")
    a = symmetrize(a)
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix entries must be finite")
    eps = max(JITTER_RELATIVE * float(np.mean(np.diag(a))), JITTER_FLOOR)
    identity = np.eye(a.shape[0])
    jitter = 0.0
    for attempt in range(max_attempts):
        try:
            lower = np.linalg.cholesky(a + jitter * identity)
        except np.linalg.LinAlgError:
            jitter = eps if attempt == 0 else jitter * 10.0
            continue
        return CholFactor(L=lower, jitter=jitter)
    raise NotPositiveDefinite(
        f"matrix of size {a.shape[0]} not positive definite after {max_attempts} "
        f"jitter attempts (last jitter {jitter:.3e})"
    )


def _check_triangular_solve(t: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DimensionMismatch(f"triangular matrix must be square, got shape {t.shape}")
    if b.shape[0] != t.shape[0]:
        raise DimensionMismatch(f"matrix is {t.shape[0]}x{t.shape[0]} but rhs has leading dimension {b.shape[0]}")
    if np.any(np.diag(t) == 0.0):
        raise SingularTriangular("triangular matrix has a zero diagonal entry")
    return t, b


def solve_lower(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve L @ x = b for lower-triangular L."""
    lower, b = _check_triangular_solve(lower, b)
    return solve_triangular(lower, b, lower=True)


def solve_upper(upper: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve U @ x = b for upper-triangular U."""
    upper, b = _check_triangular_solve(upper, b)
    return solve_triangular(upper, b, lower=False)


def chol_solve(factor: CholFactor, b: np.ndarray) -> np.ndarray:
    """Solve (L @ L.T) @ x = b via forward then backward substitution."""
    return solve_upper(factor.L.T, solve_lower(factor.L, b))


def log_det(factor: CholFactor) -> float:
    """log det of the factored matrix: 2 * sum(log diag(L))."""
    return 2.0 * float(np.sum(np.log(np.diag(factor.L))))
