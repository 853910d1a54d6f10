"""Exact Gaussian-process regression with marginal-likelihood training.

The estimator follows the scikit-learn fit/predict contract.  Training
minimizes the negative log marginal likelihood

    L = 1/2 log det(K + sn^2 I) + 1/2 y^T (K + sn^2 I)^{-1} y + n/2 log(2 pi)

over log-hyperparameters with a multi-start projected gradient method.
All solves go through the Cholesky factor; the covariance matrix is never
inverted explicitly.  Targets are centered by their training mean, and
features can optionally be standardized with training-set statistics.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import linalg
from .exceptions import AllStartsFailed, DimensionMismatch, NumericalError, ValidationError
from .kernels import Kernel, SquaredExponential

DEFAULT_NOISE_BOUNDS = (1e-4, 10.0)


def _lambda_matrix(kernel: Kernel, noise: float, X: np.ndarray) -> np.ndarray:
    K = linalg.symmetrize(kernel(X))
    return K + noise**2 * np.eye(K.shape[0])


def negative_log_likelihood(kernel: Kernel, noise: float, X, y, jitter_attempts: int = 8) -> float:
    """The training objective for given hyperparameters (lower is better)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    factor = linalg.cholesky_jittered(_lambda_matrix(kernel, noise, X), jitter_attempts)
    alpha = linalg.chol_solve(factor, y)
    n = y.shape[0]
    return 0.5 * linalg.log_det(factor) + 0.5 * float(y @ alpha) + 0.5 * n * math.log(2.0 * math.pi)


def nll_and_gradient(kernel: Kernel, noise: float, X, y, jitter_attempts: int = 8) -> tuple[float, np.ndarray]:
    """Objective and its gradient in log-space, kernel parameters first, noise last.

    Each component is 1/2 tr(lam^{-1} dlam) - 1/2 alpha^T dlam alpha with
    alpha = lam^{-1} y; the noise term uses dlam/dlog(sn) = 2 sn^2 I.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    factor = linalg.cholesky_jittered(_lambda_matrix(kernel, noise, X), jitter_attempts)
    alpha = linalg.chol_solve(factor, y)
    value = 0.5 * linalg.log_det(factor) + 0.5 * float(y @ alpha) + 0.5 * n * math.log(2.0 * math.pi)

    lam_inv = linalg.chol_solve(factor, np.eye(n))
    grad = np.empty(kernel.n_theta + 1)
    dK = kernel.gradients(X)
    for j in range(kernel.n_theta):
        grad[j] = 0.5 * (float(np.sum(lam_inv * dK[j])) - float(alpha @ dK[j] @ alpha))
    grad[-1] = noise**2 * (float(np.trace(lam_inv)) - float(alpha @ alpha))
    return value, grad


def minimize_projected_gradient(
    fun,
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iters: int = 200,
    grad_tol: float = 1e-6,
    armijo: float = 1e-4,
):
    """Projected gradient descent with a backtracking (halving) line search.

    ``fun(x, need_grad)`` returns ``(value, grad_or_None)`` and may raise
    NumericalError for infeasible points; such trial points are rejected by
    the line search.  The trial step uses a Barzilai-Borwein estimate where
    available, safeguarded by the Armijo sufficient-decrease condition with
    constant ``armijo``.  Returns ``(x, value, trace)`` where ``trace`` holds
    the accepted objective values (strictly decreasing after the first).
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    value, grad = fun(x, True)
    trace = [value]
    prev_x = prev_grad = None
    for _ in range(max_iters):
        projected = x - np.clip(x - grad, lower, upper)
        if np.max(np.abs(projected)) < grad_tol:
            break
        if prev_x is not None:
            s = x - prev_x
            u = grad - prev_grad
            su = float(s @ u)
            step = float(s @ s) / su if su > 1e-300 else 1.0
            step = float(np.clip(step, 1e-10, 1e6))
        else:
            step = 1.0
        accepted = False
        while step >= 1e-14:
            candidate = np.clip(x - step * grad, lower, upper)
            decrease = float(grad @ (x - candidate))
            if decrease <= 0.0:
                break
            try:
                trial = fun(candidate, False)[0]
            except NumericalError:
                trial = math.inf
            if trial <= value - armijo * decrease:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        prev_x, prev_grad = x, grad
        x = candidate
        value, grad = fun(x, True)
        trace.append(value)
    return x, value, np.asarray(trace)


class ExactGPRegressor(BaseEstimator, RegressorMixin):
    """Exact GP regression with hyperparameters fit by restarted NLL descent.

    Parameters
    ----------
    kernel : Kernel, optional
        Covariance function; defaults to an isotropic squared exponential.
        ``fit`` works on a clone, the passed instance is never mutated.
    noise : float
        Initial observation-noise standard deviation.  When the optimizer is
        disabled this value is used as-is.
    noise_bounds : (float, float)
        Box constraints for the noise during optimization.
    optimizer : {"pgd", None}
        ``None`` skips hyperparameter optimization and only conditions on the
        data with the kernel's current parameters.
    n_restarts : int
        Total optimization starts: the first uses data-driven initial values,
        the rest are drawn log-uniformly inside the bounds.
    max_iters, grad_tol : int, float
        Per-start iteration cap and projected-gradient stopping tolerance.
    random_state : int
        Seed for the restart draws; fitting is deterministic per seed.
    jitter_attempts : int
        Ladder length for the jittered Cholesky factorization.
    standardize_features : bool
        Standardize inputs to zero mean / unit variance using training
        statistics (recommended for isotropic and per-dimension SE kernels;
        physics-structured kernels should see raw units).

    Attributes (after fit)
    ----------------------
    kernel_ : fitted kernel, noise_ : fitted noise, nll_ : achieved objective,
    factor_ : Cholesky factor of K + sn^2 I, alpha_ : weight vector,
    y_mean_ : target centering constant, nll_trace_ : accepted objective
    values of the winning restart.
    """

    def __init__(
        self,
        kernel: Kernel | None = None,
        noise: float = 0.1,
        noise_bounds: tuple[float, float] = DEFAULT_NOISE_BOUNDS,
        optimizer: str | None = "pgd",
        n_restarts: int = 8,
        max_iters: int = 200,
        grad_tol: float = 1e-6,
        random_state: int = 0,
        jitter_attempts: int = 8,
        standardize_features: bool = False,
    ):
        self.kernel = kernel
        self.noise = noise
        self.noise_bounds = noise_bounds
        self.optimizer = optimizer
        self.n_restarts = n_restarts
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.random_state = random_state
        self.jitter_attempts = jitter_attempts
        self.standardize_features = standardize_features

    # -- fitting -----------------------------------------------------------

    def _transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.x_mean_) / self.x_std_

    def fit(self, X, y) -> "ExactGPRegressor":
        if self.optimizer not in ("pgd", None):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        if self.n_restarts < 1 or self.max_iters < 1 or self.grad_tol <= 0:
            raise ValidationError("need n_restarts >= 1, max_iters >= 1, grad_tol > 0")
        min_samples = 2 if self.optimizer is not None else 1
        X, y = check_X_y(X, y, y_numeric=True, ensure_min_samples=min_samples)
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)

        if self.standardize_features:
            self.x_mean_ = X.mean(axis=0)
            std = X.std(axis=0)
            self.x_std_ = np.where(std > 0.0, std, 1.0)
        else:
            self.x_mean_ = np.zeros(X.shape[1])
            self.x_std_ = np.ones(X.shape[1])
        self.X_train_ = X
        self.Z_train_ = self._transform(X)
        self.y_mean_ = float(y.mean())
        self.y_train_ = y - self.y_mean_

        self.kernel_ = (self.kernel if self.kernel is not None else SquaredExponential()).clone()

        if self.optimizer is None:
            self.noise_ = float(self.noise)
        else:
            self._optimize()

        lam = _lambda_matrix(self.kernel_, self.noise_, self.Z_train_)
        self.factor_ = linalg.cholesky_jittered(lam, self.jitter_attempts)
        self.alpha_ = linalg.chol_solve(self.factor_, self.y_train_)
        self.nll_ = negative_log_likelihood(
            self.kernel_, self.noise_, self.Z_train_, self.y_train_, self.jitter_attempts
        )
        return self

    def _optimize(self) -> None:
        kernel = self.kernel_
        Z, yc = self.Z_train_, self.y_train_
        kernel.init_from_data(Z, yc)
        y_std = float(np.std(yc))
        noise0 = float(np.clip(0.1 * y_std if y_std > 0.0 else 0.1, *self.noise_bounds))

        theta0 = np.concatenate([kernel.theta, [math.log(noise0)]])
        bounds = np.vstack([kernel.theta_bounds(), [np.log(self.noise_bounds)]])
        lower, upper = bounds[:, 0], bounds[:, 1]

        def objective(theta, need_grad):
            kernel.theta = theta[:-1]
            noise = math.exp(theta[-1])
            if need_grad:
                return nll_and_gradient(kernel, noise, Z, yc, self.jitter_attempts)
            return negative_log_likelihood(kernel, noise, Z, yc, self.jitter_attempts), None

        rng = np.random.default_rng(self.random_state)
        starts = [theta0]
        for _ in range(self.n_restarts - 1):
            starts.append(rng.uniform(lower, upper))

        best = None
        for index, start in enumerate(starts):
            try:
                theta, value, trace = minimize_projected_gradient(
                    objective, start, lower, upper, self.max_iters, self.grad_tol
                )
            except NumericalError:
                continue
            if best is None or value < best[0]:
                best = (value, index, theta, trace)
        if best is None:
            raise AllStartsFailed(f"all {self.n_restarts} optimizer starts failed to factorize")

        _, _, theta, trace = best
        kernel.theta = theta[:-1]
        self.noise_ = math.exp(theta[-1])
        self.nll_trace_ = trace

    # -- prediction ---------------------------------------------------------

    def _check_predict_input(self, X) -> np.ndarray:
        check_is_fitted(self, "kernel_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.X_train_.shape[1]:
            raise DimensionMismatch(
                f"model was fit with {self.X_train_.shape[1]} features, got {X.shape[1]}"
            )
        return X

    def predict(self, X, return_std: bool = False, return_cov: bool = False, include_noise: bool = False):
        """Posterior mean, optionally with standard deviation or covariance.

        The variance is the latent-function variance; ``include_noise=True``
        adds the fitted observation noise for predictive intervals over
        measurements.  Tiny negative variances from round-off are clamped
        to zero.
        """
        if return_std and return_cov:
            raise ValidationError("request either return_std or return_cov, not both")
        Z = self._transform(self._check_predict_input(X))
        K_star = self.kernel_(self.Z_train_, Z)
        mean = K_star.T @ self.alpha_ + self.y_mean_
        if not (return_std or return_cov):
            return mean
        V = linalg.solve_lower(self.factor_.L, K_star)
        if return_std:
            var = self.kernel_.diag(Z) - np.sum(V * V, axis=0)
            var = np.where(var > 0.0, var, 0.0)
            if include_noise:
                var = var + self.noise_**2
            return mean, np.sqrt(var)
        cov = linalg.symmetrize(self.kernel_(Z) - V.T @ V)
        diag = np.diag(cov).copy()
        np.fill_diagonal(cov, np.where(diag > 0.0, diag, 0.0))
        if include_noise:
            cov = cov + self.noise_**2 * np.eye(cov.shape[0])
        return mean, cov

    def mean_input_gradient(self, x) -> np.ndarray:
        """Gradient of the predictive mean at one point, in input units."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise DimensionMismatch("expected a single feature row")
        Z = self._transform(self._check_predict_input(x[None, :]))
        grad = self.kernel_.input_gradient(self.Z_train_, Z[0]).T @ self.alpha_
        return grad / self.x_std_
