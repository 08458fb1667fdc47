"""Kernel regression, random-feature networks, and the complexity quantity.

Two model families share one story.  Kernel regression interpolates labels
through the Gram matrix H of a kernel; the quadratic form y^T H^{-1} y is the
data-dependent complexity that drives the generalization bound

    sqrt(2 y^T H^{-1} y / n) + O(sqrt(log(n / (lambda0 delta)) / n)).

A width-m network with frozen Gaussian hidden weights and a trained top
layer is the finite-width realization of the same kernel: its minimum-norm
top weights w* satisfy ||w*||**2 = y^T (h h^T)^{-1} y, and (1/m) h h^T
concentrates to the kernel Gram as m grows.

Exact Gram solves are restricted to n <= 2000 (cubic cost); larger problems
go through the random-feature path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "SingularGramError",
    "IllConditionedError",
    "GramSystem",
    "MAX_EXACT_GRAM",
    "JITTER_LADDER",
    "gram",
    "complexity",
    "gen_bound",
    "solve_min_norm",
    "predict",
    "FeatureMap",
    "feature_map",
    "random_features",
    "FitResult",
    "fit_top_layer",
    "RandomFeatureModel",
    "fit_random_feature_model",
    "gradient_descent_fit",
    "rmse",
    "normalized_rmse",
]

MAX_EXACT_GRAM = 2000
# Relative jitter levels, scaled by trace(H)/n; the smallest level whose
# Cholesky succeeds is kept.
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)
_RESIDUAL_TOL = 1e-8


class SingularGramError(ValueError):
    """The Gram matrix is singular by construction (duplicate inputs)."""


class IllConditionedError(ArithmeticError):
    """No jitter level produced a usable factorization or solve."""


@dataclass
class GramSystem:
    """Factorized kernel Gram matrix with a smallest-eigenvalue estimate."""

    H: np.ndarray
    cholesky: np.ndarray
    jitter: float
    lambda_min: float
    n: int

    def solve(self, y: np.ndarray) -> np.ndarray:
        z = scipy.linalg.solve_triangular(self.cholesky, y, lower=True)
        return scipy.linalg.solve_triangular(self.cholesky.T, z, lower=False)


def _find_duplicates(X: np.ndarray) -> tuple[int, int] | None:
    seen: dict[bytes, int] = {}
    for i, row in enumerate(X):
        key = row.tobytes()
        if key in seen:
            return seen[key], i
        seen[key] = i
    return None


def _laddered_cholesky(G: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.trace(G)) / len(G)
    for level in JITTER_LADDER:
        j = level * scale
        try:
            L = np.linalg.cholesky(G + j * np.eye(len(G)) if j else G)
            return L, j
        except np.linalg.LinAlgError:
            continue
    raise IllConditionedError(
        f"Cholesky failed at every jitter level up to {JITTER_LADDER[-1]} * trace/n"
    )


def gram(kernel, X) -> GramSystem:
    """Assemble and factorize the Gram matrix H_ab = K(x_a, x_b).

    Exact duplicates among the inputs make H singular for any dot-product
    kernel with positive series coefficients, so they are rejected before any
    factorization, naming the colliding rows.  The smallest eigenvalue is
    estimated by a full symmetric eigendecomposition (n <= 2000 enforced).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array of row inputs")
    n = len(X)
    if n > MAX_EXACT_GRAM:
        raise ValueError(
            f"n = {n} exceeds the exact-solve cutoff {MAX_EXACT_GRAM}; "
            "use the random-feature path for larger problems"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs must be finite")
    dup = _find_duplicates(X)
    if dup is not None:
        raise SingularGramError(
            f"inputs {dup[0]} and {dup[1]} are identical; the Gram matrix is singular"
        )
    H = np.asarray(kernel.gram_matrix(X), dtype=float)
    H = 0.5 * (H + H.T)  # enforce exact symmetry against roundoff
    lambda_min = float(np.linalg.eigvalsh(H)[0])
    L, jitter = _laddered_cholesky(H)
    return GramSystem(H=H, cholesky=L, jitter=jitter, lambda_min=lambda_min, n=n)


def complexity(system: GramSystem, y) -> float:
    """Complexity quantity y^T H^{-1} y via the cached factorization."""
    y = np.asarray(y, dtype=float)
    alpha = system.solve(y)
    _check_solve_residual(system, alpha, y)
    return max(float(y @ alpha), 0.0)


def _check_solve_residual(system: GramSystem, alpha: np.ndarray, y: np.ndarray) -> None:
    norm_y = float(np.linalg.norm(y))
    if norm_y == 0.0:
        return
    resid = float(np.linalg.norm(system.H @ alpha - y)) / norm_y
    if resid > _RESIDUAL_TOL:
        raise IllConditionedError(
            f"solve residual {resid:.3e} exceeds {_RESIDUAL_TOL:.0e} "
            f"(jitter {system.jitter:.3e}, lambda_min {system.lambda_min:.3e})"
        )


def gen_bound(complexity_value: float, n: int, lambda0: float, delta: float) -> float:
    """Generalization-error bound sqrt(2 c / n) + sqrt(log(n/(lambda0 delta)) / n).

    The second term's O(1) constant is set to 1, so this is a diagnostic
    quantity for comparing settings, never a certified ceiling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if lambda0 <= 0:
        raise ValueError(f"lambda0 must be positive, got {lambda0}")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if complexity_value < 0:
        raise ValueError("complexity must be >= 0")
    first = math.sqrt(2.0 * complexity_value / n)
    second = math.sqrt(max(math.log(n / (lambda0 * delta)), 0.0) / n)
    return first + second


def solve_min_norm(system: GramSystem, y) -> np.ndarray:
    """Dual coefficients alpha = H^{-1} y of the kernel interpolant."""
    y = np.asarray(y, dtype=float)
    alpha = system.solve(y)
    _check_solve_residual(system, alpha, y)
    return alpha


def predict(alpha, X_train, kernel, X_eval) -> np.ndarray:
    """Kernel predictor sum_a alpha_a K(x_a, x) at one or many points."""
    X_eval = np.asarray(X_eval, dtype=float)
    single = X_eval.ndim == 1
    if single:
        X_eval = X_eval[None, :]
    values = kernel.cross_matrix(X_eval, np.asarray(X_train, dtype=float)) @ np.asarray(alpha)
    return float(values[0]) if single else values


# ---------------------------------------------------------------------------
# Random-feature models
# ---------------------------------------------------------------------------


def _apply_activation(pre: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(pre, 0.0)
    if activation == "exponential":
        return np.exp(pre)
    raise ValueError(f"unknown activation {activation!r}")


@dataclass(frozen=True)
class FeatureMap:
    """Frozen hidden layer: weights (m, d) ~ N(0, sigma_sq), fixed activation."""

    weights: np.ndarray
    activation: str
    sigma_sq: float
    seed: int

    @property
    def width(self) -> int:
        return len(self.weights)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return _apply_activation(X @ self.weights.T, self.activation)


def feature_map(dim: int, width: int, activation: str, sigma_sq: float = 1.0, seed: int = 0) -> FeatureMap:
    if width < 1:
        raise ValueError("width must be >= 1")
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=math.sqrt(sigma_sq), size=(width, dim))
    return FeatureMap(weights=W, activation=activation, sigma_sq=float(sigma_sq), seed=int(seed))


def random_features(X, width: int, activation: str, sigma_sq: float = 1.0, seed: int = 0) -> tuple[np.ndarray, FeatureMap]:
    """Feature matrix phi(X W^T) plus the map that produced it."""
    X = np.asarray(X, dtype=float)
    fmap = feature_map(X.shape[1], width, activation, sigma_sq, seed)
    return fmap.transform(X), fmap


@dataclass(frozen=True)
class FitResult:
    """Minimum-norm top-layer fit with its training diagnostics."""

    weights: np.ndarray
    relative_residual: float
    rank: int | None
    solver: str


def fit_top_layer(features, y, solver: str = "auto") -> FitResult:
    """Minimum-norm least-squares top weights for y = h w.

    ``solver="lstsq"`` is the rank-revealing SVD route and handles both the
    overparameterized (m >= n, exact interpolation) and underparameterized
    regimes.  ``solver="normal"`` solves the normal equations with the jitter
    ladder, which matches lstsq to solver precision for tall well-conditioned
    problems at a fraction of the cost; ``"auto"`` picks it when n >= 4 m.
    """
    h = np.asarray(features, dtype=float)
    y = np.asarray(y, dtype=float)
    if h.ndim != 2 or len(h) != len(y):
        raise ValueError("features must be (n, m) with one row per label")
    dead = ~np.any(h != 0.0, axis=1)
    if np.any(dead):
        warnings.warn(
            f"{int(np.sum(dead))} feature rows are identically zero; "
            "the fit is likely ill-conditioned",
            stacklevel=2,
        )
    n, m = h.shape
    if solver == "auto":
        solver = "normal" if n >= 4 * m else "lstsq"
    if solver == "lstsq":
        w, _, rank, _ = scipy.linalg.lstsq(h, y)
    elif solver == "normal":
        G = h.T @ h
        L, _ = _laddered_cholesky(G)
        z = scipy.linalg.solve_triangular(L, h.T @ y, lower=True)
        w = scipy.linalg.solve_triangular(L.T, z, lower=False)
        rank = None
    else:
        raise ValueError(f"unknown solver {solver!r}")
    norm_y = float(np.linalg.norm(y))
    resid = float(np.linalg.norm(h @ w - y)) / norm_y if norm_y > 0 else 0.0
    return FitResult(weights=w, relative_residual=resid, rank=rank, solver=solver)


@dataclass(frozen=True)
class RandomFeatureModel:
    """Random hidden layer plus fitted top weights; prediction is linear in w."""

    feature_map: FeatureMap
    top_weights: np.ndarray
    fit: FitResult

    @property
    def width(self) -> int:
        return self.feature_map.width

    def predict(self, X) -> np.ndarray:
        return self.feature_map.transform(X) @ self.top_weights


def fit_random_feature_model(
    X,
    y,
    width: int,
    activation: str,
    sigma_sq: float = 1.0,
    seed: int = 0,
    solver: str = "auto",
) -> RandomFeatureModel:
    """Freeze a random hidden layer and fit the top layer by least squares."""
    features, fmap = random_features(X, width, activation, sigma_sq, seed)
    fit = fit_top_layer(features, y, solver=solver)
    return RandomFeatureModel(feature_map=fmap, top_weights=fit.weights, fit=fit)


def gradient_descent_fit(
    features,
    y,
    epochs: int = 2000,
    step: float | None = None,
    seed: int = 0,
) -> FitResult:
    """Full-batch gradient descent on the mean-squared error, from w = 0.

    The constant step defaults to 1 / (2 lambda_max) where lambda_max is a
    power-iteration estimate of the largest eigenvalue of the feature Gram
    h^T h / n.  With a fixed epoch budget this is the deterministic stand-in
    for small-learning-rate SGD; on a well-conditioned convex problem it
    converges to the direct least-squares solution.
    """
    h = np.asarray(features, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = h.shape
    G = h.T @ h / n
    c = h.T @ y / n
    if step is None:
        v = np.random.default_rng(seed).normal(size=m)
        v /= np.linalg.norm(v)
        for _ in range(50):
            v = G @ v
            nv = np.linalg.norm(v)
            if nv == 0.0:
                break
            v /= nv
        lambda_max = float(v @ (G @ v))
        if lambda_max <= 0:
            raise IllConditionedError("feature Gram has no positive curvature")
        step = 1.0 / (2.0 * lambda_max)
    w = np.zeros(m)
    for _ in range(epochs):
        w -= step * (G @ w - c)
    norm_y = float(np.linalg.norm(y))
    resid = float(np.linalg.norm(h @ w - y)) / norm_y if norm_y > 0 else 0.0
    return FitResult(weights=w, relative_residual=resid, rank=None, solver="gd")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def rmse(predictions, labels) -> float:
    predictions = np.asarray(predictions, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    return float(np.sqrt(np.mean((predictions - labels) ** 2)))


def normalized_rmse(predictions, labels) -> float:
    """RMSE divided by the label range max - min of the evaluation set."""
    labels = np.asarray(labels, dtype=float)
    spread = float(labels.max() - labels.min()) if labels.size else 0.0
    if spread <= 0.0:
        raise ValueError("labels are constant; the normalized error is undefined")
    return rmse(predictions, labels) / spread
