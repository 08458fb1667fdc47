"""Dot-product kernels: closed forms, series coefficients, Monte-Carlo estimates.

Every kernel here depends on its inputs only through x . x' and expands as
K(x, x') = sum_k b_k (x . x')**k.  The learnability bounds consume the
coefficient schedule b_k; the regression engine consumes the closed-form
evaluator; the Monte-Carlo estimator realizes the same kernels as finite
random-feature averages (1/m) sum_i phi(z_i . x) phi(z_i . x').

The lifted-ReLU kernel is the workhorse: appending the constant coordinate
1/sqrt(2) to unit inputs (and shrinking them by sqrt(2)) turns the ReLU
network kernel into

    K(t) = (t + 1) / (4 pi) * (pi - arccos((t + 1) / 2)),   t = x . x',

whose expansion about t = 0 has strictly positive coefficients at every
degree, closing the odd-degree gap of the plain ReLU kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

__all__ = [
    "CoefficientsUnavailableError",
    "modified_relu_eval",
    "input_lift",
    "gaussian_eval",
    "slow_decay_eval",
    "modified_relu_coefficients",
    "modified_relu_angle_coefficients",
    "CoefficientPrefix",
    "DotProductKernel",
    "ModifiedReLUKernel",
    "GaussianSphereKernel",
    "SlowDecayKernel",
    "MonteCarloKernel",
    "mc_kernel_estimate",
    "mc_kernel_estimate_detail",
    "nngp_reference",
    "nngp_reference_pair",
    "MAX_COEFFICIENTS",
]

MAX_COEFFICIENTS = 2000
_DOT_TOLERANCE = 1e-9
_SQRT2 = math.sqrt(2.0)


class CoefficientsUnavailableError(ValueError):
    """Raised when a kernel has no extractable power-series coefficients."""


# ---------------------------------------------------------------------------
# Closed-form evaluators
# ---------------------------------------------------------------------------


def modified_relu_eval(t):
    """Lifted-ReLU kernel (t + 1)/(4 pi) * (pi - arccos((t + 1)/2)) for t = x . x'.

    Inputs are assumed unit-norm before lifting, so |t| <= 1; values within
    1e-9 of the boundary are clamped, anything further out is rejected.
    """
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + _DOT_TOLERANCE):
        worst = float(np.max(np.abs(t)))
        raise ValueError(f"dot product magnitude {worst} exceeds 1 beyond tolerance")
    t = np.clip(t, -1.0, 1.0)
    out = (t + 1.0) / (4.0 * np.pi) * (np.pi - np.arccos((t + 1.0) / 2.0))
    return out if out.ndim else float(out)


def input_lift(x, normalize_first: bool = False, require_unit: bool = True):
    """Map x to (x / sqrt(2), 1 / sqrt(2)), preserving unit norm.

    Dot products of lifted unit vectors equal (x . x' + 1) / 2.  With
    ``normalize_first`` the input is projected to the unit sphere first;
    ``require_unit=False`` skips the norm check entirely (used when the lift
    serves as a plain constant-bias feature on raw data).
    """
    x = np.asarray(x, dtype=float)
    vecs = x[None, :] if x.ndim == 1 else x
    norms = np.linalg.norm(vecs, axis=1)
    if normalize_first:
        if np.any(norms == 0):
            raise ValueError("cannot normalize a zero vector")
        vecs = vecs / norms[:, None]
    elif require_unit and np.any(np.abs(norms - 1.0) > _DOT_TOLERANCE):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"input norm deviates from 1 by {worst}; pass normalize_first=True")
    lifted = np.hstack([vecs / _SQRT2, np.full((len(vecs), 1), 1.0 / _SQRT2)])
    return lifted[0] if x.ndim == 1 else lifted


def gaussian_eval(x, x_prime) -> float:
    """Gaussian kernel exp(-||x - x'||**2 / 2).

    On a sphere of radius r this equals exp(-r**2) * exp(x . x').
    """
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if x.shape != x_prime.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x_prime.shape}")
    d = x - x_prime
    return float(np.exp(-0.5 * np.dot(d, d)))


def _zeta_tail(s: float, n: int) -> float:
    """Euler-Maclaurin estimate of sum_{k>n} k**-s for s > 1."""
    return n ** (1.0 - s) / (s - 1.0) - 0.5 * n**-s + s / 12.0 * n ** (-s - 1.0)


def slow_decay_eval(t: float, s: float) -> float:
    """Hand-built slow-decay kernel sum_{k>=1} k**-s t**k for t = x . x'.

    For |t| < 1 the series is summed directly with a geometric tail bound
    below 1e-12 of the result; at |t| = 1 an Euler-Maclaurin tail closes the
    slowly converging sum (finite exactly when s > 1).
    """
    t = float(t)
    s = float(s)
    if abs(t) > 1.0 + _DOT_TOLERANCE:
        raise ValueError(f"|t| = {abs(t)} lies outside the kernel's domain")
    t = min(1.0, max(-1.0, t))
    if abs(t) == 1.0:
        if s <= 1.0:
            raise ArithmeticError(f"series diverges at |t| = 1 for s = {s} <= 1")
        n = 10_000
        ks = np.arange(1, n + 1, dtype=float)
        zeta = float(np.sum(ks**-s)) + _zeta_tail(s, n)
        if t == 1.0:
            return zeta
        # Alternating case: sum (-1)^k k^-s = (2^{1-s} - 1) zeta(s).
        return (2.0 ** (1.0 - s) - 1.0) * zeta
    if t == 0.0:
        return 0.0
    total = 0.0
    power = t
    k = 1
    while True:
        term = power * k**-s
        total += term
        # Geometric tail: |remaining| <= |t|^(k+1) (k+1)^-s / (1 - |t|).
        tail = abs(t) ** (k + 1) * (k + 1) ** -s / (1.0 - abs(t))
        if tail <= 1e-12 * max(abs(total), 1e-300):
            return total
        power *= t
        k += 1


# ---------------------------------------------------------------------------
# Modified-ReLU series coefficients
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def modified_relu_angle_coefficients(k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Series coefficients s_k of the angle factor pi - arccos((t + 1)/2).

    Each s_k is the double sum over n >= max(0, ceil((k-1)/2)) of

        1/(2n+1) * (2n-1)!!/(2n)!! * 2^{-(2n+1)} * C(2n+1, k),

    plus pi/2 at k = 0.  The n-sum concentrates around n ~ k with Gaussian
    decay of width sqrt(k), so it is truncated at n = k + O(sqrt(k)) with the
    discarded remainder folded into the returned per-coefficient uncertainty
    (alongside a summation roundoff allowance).  Asymptotically
    s_k ~ k**-1.5 / (2 sqrt(pi)).

    Returns (coefficients, uncertainties), both of length k_max + 1.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if k_max > MAX_COEFFICIENTS + 1:
        raise ValueError(f"k_max exceeds the supported maximum {MAX_COEFFICIENTS}")
    eps = float(np.finfo(float).eps)
    coeffs = np.zeros(k_max + 1)
    uncert = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        n_min = k // 2  # smallest n with 2n + 1 >= k
        # Gaussian concentration around n ~ k: 12 standard deviations plus a
        # constant floor comfortably exceed any contributing range.
        n_max = k + int(12.0 * math.sqrt(k + 1.0)) + 60
        n = np.arange(n_min, n_max + 1, dtype=float)
        # (2n-1)!!/(2n)!! = C(2n, n) / 4^n, assembled via log-gammas.
        log_double_fact = gammaln(2 * n + 1) - 2 * gammaln(n + 1) - 2 * n * math.log(2.0)
        log_binom = gammaln(2 * n + 2) - gammaln(k + 1) - gammaln(2 * n + 2 - k)
        log_terms = (
            log_double_fact
            - np.log(2 * n + 1)
            - (2 * n + 1) * math.log(2.0)
            + log_binom
        )
        terms = np.exp(log_terms)
        coeffs[k] = float(np.sum(terms))
        # Truncation residual: super-geometric decay past n_max, bounded by a
        # short geometric extrapolation of the final term.
        last = float(terms[-1])
        uncert[k] = 2.0 * last + eps * float(np.sum(terms)) * len(terms) ** 0.5
    coeffs[0] += math.pi / 2.0
    return coeffs, uncert


@lru_cache(maxsize=8)
def modified_relu_coefficients(k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Power-series coefficients b_k of the lifted-ReLU kernel about t = 0.

    The kernel is (t + 1)/(4 pi) times the angle factor, so
    b_k = (s_k + s_{k-1}) / (4 pi).  Every b_k is strictly positive, the
    coefficients sum to K(1) = 1/2, and b_k ~ k**-1.5 / (4 pi**1.5).

    Returns (coefficients, uncertainties) for k = 0 .. k_max.
    """
    if not 0 <= k_max <= MAX_COEFFICIENTS:
        raise ValueError(f"k_max must lie in [0, {MAX_COEFFICIENTS}]")
    s, u = modified_relu_angle_coefficients(k_max + 1)
    b = np.empty(k_max + 1)
    ub = np.empty(k_max + 1)
    b[0] = s[0] / (4.0 * math.pi)
    ub[0] = u[0] / (4.0 * math.pi)
    b[1:] = (s[1 : k_max + 1] + s[: k_max]) / (4.0 * math.pi)
    ub[1:] = (u[1 : k_max + 1] + u[: k_max]) / (4.0 * math.pi)
    return b, ub


@dataclass(frozen=True)
class CoefficientPrefix:
    """Prefix b_0 .. b_K of a kernel's series with per-coefficient uncertainty."""

    values: np.ndarray
    uncertainty: np.ndarray
    kind: str

    def __len__(self) -> int:
        return len(self.values)


# ---------------------------------------------------------------------------
# Kernel objects
# ---------------------------------------------------------------------------


class DotProductKernel:
    """Base for kernels of the form K(x, x') = sum_k b_k (x . x')**k.

    Instances are immutable after construction and evaluation is pure, so
    they may be shared freely across threads.
    """

    kind: str = "abstract"

    def eval_dot(self, t):
        """Closed-form kernel value as a function of t = x . x'."""
        raise NotImplementedError

    def eval_pair(self, x, x_prime) -> float:
        return float(self.eval_dot(float(np.dot(x, x_prime))))

    def gram_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.asarray(self.eval_dot(X @ X.T))

    def cross_matrix(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        return np.asarray(self.eval_dot(A @ B.T))

    def coefficients(self, k_max: int) -> CoefficientPrefix:
        raise CoefficientsUnavailableError(f"kernel kind {self.kind!r} has no coefficient extraction")

    def log_coeff(self, k: int) -> float:
        """ln b_k, for use as a bound schedule."""
        raise CoefficientsUnavailableError(f"kernel kind {self.kind!r} has no coefficient extraction")

    def series_tail_bound(self, k_max: int, t: float) -> float:
        """Upper bound on |K(t) - sum_{k<=k_max} b_k t**k| for |t| < 1."""
        raise CoefficientsUnavailableError(f"kernel kind {self.kind!r} has no coefficient extraction")


class ModifiedReLUKernel(DotProductKernel):
    """Lifted-ReLU kernel with all-positive series coefficients."""

    kind = "modified-relu"

    def eval_dot(self, t):
        return modified_relu_eval(t)

    def gram_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.asarray(self.eval_dot(np.clip(X @ X.T, -1.0, 1.0)))

    def cross_matrix(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        return np.asarray(self.eval_dot(np.clip(A @ B.T, -1.0, 1.0)))

    def coefficients(self, k_max: int) -> CoefficientPrefix:
        values, uncert = modified_relu_coefficients(k_max)
        return CoefficientPrefix(values=values, uncertainty=uncert, kind=self.kind)

    def log_coeff(self, k: int) -> float:
        if not 0 <= k <= MAX_COEFFICIENTS:
            raise ValueError(f"k must lie in [0, {MAX_COEFFICIENTS}]")
        # Round the cached prefix up to a power of two so repeated schedule
        # queries at nearby degrees share one table.
        size = min(max(64, 1 << int(k).bit_length()), MAX_COEFFICIENTS)
        values, _ = modified_relu_coefficients(size)
        return math.log(values[k])

    def series_tail_bound(self, k_max: int, t: float) -> float:
        if abs(t) >= 1.0:
            raise ValueError("tail bound requires |t| < 1")
        values, uncert = modified_relu_coefficients(k_max)
        # The coefficients are positive and sum to K(1) = 1/2, so the mass
        # beyond the prefix is 1/2 - sum(prefix) and each dropped term is
        # damped by at least |t|**(k_max+1).
        remaining = max(0.5 - float(np.sum(values)), 0.0)
        powers = np.abs(t) ** np.arange(k_max + 1)
        return remaining * abs(t) ** (k_max + 1) + float(uncert @ powers)


class GaussianSphereKernel(DotProductKernel):
    """Gaussian kernel exp(-||x - x'||**2 / 2), series-expanded on a radius-r sphere.

    The pairwise evaluator uses the distance form (valid for any inputs);
    the coefficient schedule b_k = exp(-r**2) / k! describes the kernel
    restricted to the sphere of the declared radius, where
    K = exp(-r**2) exp(x . x').
    """

    kind = "gaussian-on-sphere"

    def __init__(self, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        self.radius = float(radius)

    def eval_dot(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(-self.radius**2 + t)
        return out if out.ndim else float(out)

    def eval_pair(self, x, x_prime) -> float:
        return gaussian_eval(x, x_prime)

    def gram_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        sq = np.sum(X * X, axis=1)
        dist_sq = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
        return np.exp(-0.5 * np.maximum(dist_sq, 0.0))

    def cross_matrix(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        sa = np.sum(A * A, axis=1)
        sb = np.sum(B * B, axis=1)
        dist_sq = sa[:, None] + sb[None, :] - 2.0 * (A @ B.T)
        return np.exp(-0.5 * np.maximum(dist_sq, 0.0))

    def coefficients(self, k_max: int) -> CoefficientPrefix:
        if not 0 <= k_max <= MAX_COEFFICIENTS:
            raise ValueError(f"k_max must lie in [0, {MAX_COEFFICIENTS}]")
        ks = np.arange(k_max + 1)
        values = np.exp(-self.radius**2 - gammaln(ks + 1))
        uncert = np.finfo(float).eps * values
        return CoefficientPrefix(values=values, uncertainty=uncert, kind=self.kind)

    def log_coeff(self, k: int) -> float:
        return -self.radius**2 - float(gammaln(k + 1))

    def series_tail_bound(self, k_max: int, t: float) -> float:
        # Tail of exp(-r^2) sum t^k / k!: first dropped term times a geometric
        # safety factor (term ratio <= |t| / (k_max + 2)).
        first = math.exp(self.log_coeff(k_max + 1)) * abs(t) ** (k_max + 1)
        ratio = abs(t) / (k_max + 2)
        return first / (1.0 - ratio) if ratio < 1 else math.inf


class SlowDecayKernel(DotProductKernel):
    """Hand-built kernel sum_{k>=1} k**-s (x . x')**k with s in (1, 2]."""

    kind = "slow-decay"

    def __init__(self, s: float = 2.0):
        if not 1.0 < s <= 2.0:
            raise ValueError(f"decay exponent s must lie in (1, 2], got {s}")
        self.s = float(s)

    def eval_dot(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return slow_decay_eval(float(t), self.s)
        return np.vectorize(lambda v: slow_decay_eval(v, self.s))(t)

    def coefficients(self, k_max: int) -> CoefficientPrefix:
        if not 0 <= k_max <= MAX_COEFFICIENTS:
            raise ValueError(f"k_max must lie in [0, {MAX_COEFFICIENTS}]")
        ks = np.arange(k_max + 1, dtype=float)
        values = np.zeros(k_max + 1)
        values[1:] = ks[1:] ** -self.s
        uncert = np.finfo(float).eps * values
        return CoefficientPrefix(values=values, uncertainty=uncert, kind=self.kind)

    def log_coeff(self, k: int) -> float:
        if k == 0:
            return -math.inf
        return -self.s * math.log(k)

    def series_tail_bound(self, k_max: int, t: float) -> float:
        if abs(t) >= 1.0:
            raise ValueError("tail bound requires |t| < 1")
        return abs(t) ** (k_max + 1) * (k_max + 1) ** -self.s / (1.0 - abs(t))


# ---------------------------------------------------------------------------
# Monte-Carlo kernel estimation
# ---------------------------------------------------------------------------

_ACTIVATIONS = ("relu", "exponential")


def _apply_activation(pre: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(pre, 0.0)
    if activation == "exponential":
        return np.exp(pre)
    raise ValueError(f"unknown activation {activation!r}; expected one of {_ACTIVATIONS}")


def mc_kernel_estimate(
    x,
    x_prime,
    activation: str,
    m: int,
    sigma_sq: float = 1.0,
    seed: int = 0,
) -> float:
    """Monte-Carlo estimate (1/m) sum_i phi(z_i . x) phi(z_i . x').

    The z_i are i.i.d. centered Gaussians with variance sigma_sq per
    coordinate, drawn deterministically from ``seed``; the same seed always
    produces the same hidden-weight draw, independent of call order.
    """
    return mc_kernel_estimate_detail(x, x_prime, activation, m, sigma_sq, seed)[0]


def mc_kernel_estimate_detail(
    x,
    x_prime,
    activation: str,
    m: int,
    sigma_sq: float = 1.0,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo kernel estimate plus its standard error."""
    if m < 1:
        raise ValueError("sample count m must be >= 1")
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    rng = np.random.default_rng(seed)
    z = rng.normal(scale=math.sqrt(sigma_sq), size=(int(m), len(x)))
    products = _apply_activation(z @ x, activation) * _apply_activation(z @ x_prime, activation)
    mean = float(np.mean(products))
    stderr = float(np.std(products, ddof=1) / math.sqrt(m)) if m > 1 else math.inf
    return mean, stderr


class MonteCarloKernel(DotProductKernel):
    """Finite-width random-feature kernel (1/m) h(x) . h(x').

    All pairwise evaluations share the single hidden-weight draw implied by
    ``seed``, so any Gram matrix built from this kernel is positive
    semidefinite by construction.
    """

    kind = "monte-carlo"

    def __init__(self, activation: str, m: int, sigma_sq: float = 1.0, seed: int = 0):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}; expected one of {_ACTIVATIONS}")
        if m < 1:
            raise ValueError("width m must be >= 1")
        self.activation = activation
        self.m = int(m)
        self.sigma_sq = float(sigma_sq)
        self.seed = int(seed)
        self._weights: dict[int, np.ndarray] = {}

    def _weights_for(self, dim: int) -> np.ndarray:
        if dim not in self._weights:
            rng = np.random.default_rng(self.seed)
            self._weights[dim] = rng.normal(scale=math.sqrt(self.sigma_sq), size=(self.m, dim))
        return self._weights[dim]

    def _features(self, X: np.ndarray) -> np.ndarray:
        W = self._weights_for(X.shape[1])
        return _apply_activation(X @ W.T, self.activation)

    def eval_dot(self, t):
        raise CoefficientsUnavailableError(
            "a sampled kernel is a function of its inputs, not of x . x' alone"
        )

    def eval_pair(self, x, x_prime) -> float:
        x = np.asarray(x, dtype=float)
        x_prime = np.asarray(x_prime, dtype=float)
        h = self._features(np.vstack([x, x_prime]))
        return float(h[0] @ h[1] / self.m)

    def gram_matrix(self, X) -> np.ndarray:
        h = self._features(np.asarray(X, dtype=float))
        return (h @ h.T) / self.m

    def cross_matrix(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        ha = self._features(A)
        hb = self._features(B)
        return (ha @ hb.T) / self.m

    def coefficients(self, k_max: int) -> CoefficientPrefix:
        raise CoefficientsUnavailableError(
            "series coefficients are not extractable from a sampled kernel"
        )


# ---------------------------------------------------------------------------
# Quadrature reference for the random-feature expectation
# ---------------------------------------------------------------------------

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def _relu_expectation_unit(t: float) -> float:
    """E[relu(g1) relu(g2)] for standard normals with correlation t, by quadrature.

    Conditioning on g1 = a reduces the inner expectation to the Gaussian mean
    identity E[relu(N(mu, s^2))] = mu Phi(mu/s) + s phi(mu/s); the remaining
    one-dimensional integral over a > 0 is smooth and handled adaptively.
    """
    if t >= 1.0:
        return 0.5
    if t <= -1.0:
        return 0.0
    s = math.sqrt(1.0 - t * t)

    def integrand(a: float) -> float:
        mu = t * a
        inner = mu * _norm_cdf(mu / s) + s * _norm_pdf(mu / s)
        return a * inner * _norm_pdf(a)

    val, _ = quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def nngp_reference(t: float, activation: str, sigma_sq: float = 1.0) -> float:
    """Reference value of E[phi(z . x) phi(z . x')] for unit x, x' with x . x' = t.

    Computed independently of any sampling: adaptive quadrature of the
    defining Gaussian expectation for relu, the Gaussian moment identity
    E[exp(g1 + g2)] = exp(Var(g1 + g2) / 2) for the exponential activation.
    """
    t = float(t)
    if abs(t) > 1.0 + _DOT_TOLERANCE:
        raise ValueError("correlation |t| must be <= 1 for unit inputs")
    t = min(1.0, max(-1.0, t))
    if activation == "relu":
        return sigma_sq * _relu_expectation_unit(t)
    if activation == "exponential":
        return math.exp(sigma_sq * (1.0 + t))
    raise ValueError(f"unknown activation {activation!r}; expected one of {_ACTIVATIONS}")


def nngp_reference_pair(x, x_prime, activation: str, sigma_sq: float = 1.0) -> float:
    """Like ``nngp_reference`` but for inputs of arbitrary norm."""
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(x_prime))
    if nx == 0.0 or ny == 0.0:
        if activation == "relu":
            return 0.0
        if activation == "exponential":
            return math.exp(0.5 * sigma_sq * (nx**2 + ny**2))
    rho = float(np.dot(x, x_prime)) / (nx * ny)
    rho = min(1.0, max(-1.0, rho))
    if activation == "relu":
        return sigma_sq * nx * ny * _relu_expectation_unit(rho)
    if activation == "exponential":
        var = sigma_sq * (nx**2 + ny**2 + 2.0 * nx * ny * rho)
        return math.exp(0.5 * var)
    raise ValueError(f"unknown activation {activation!r}; expected one of {_ACTIVATIONS}")
