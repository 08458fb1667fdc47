"""Power-series machinery and the calculus of learnability bounds.

The central object is an auxiliary series: a power series whose coefficients
are the absolute values of the coefficients of some analytic function g.  A
target g(beta . x) on the unit sphere is learnable with roughly

    (sqrt_M)^2 / eps^2

samples, where sqrt_M is computed from the auxiliary series by one of the
rules below:

    univariate       sqrt_M = beta * g~'(beta) + g~(0)
    monomial         sqrt_M = p * prod_i ||beta_i||        (degree-p monomial)
    kernel-weighted  sqrt_M = sum_k b_k^{-1/2} |a_k| beta^k
    multivariate     sqrt_M = g~'(1) + g~(0)
    product          sqrt_M = g~'(1) h~(1) + g~(1) h~'(1) + g~(0) h~(0)
    chain            sqrt_M = g~'(h~(1)) h~'(1) + g~(h~(0))
    bivariate        sqrt_M = f~_x(g~(1), h~(1)) g~'(1)
                              + f~_y(g~(1), h~(1)) h~'(1) + f~(g~(0), h~(0))

All rules drop O(1) constants; every report carries a ``constants_dropped``
flag.  Bounds that overflow double precision are kept in log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "DivergenceError",
    "UnlearnableTermError",
    "AuxSeries",
    "BivariateSeries",
    "BoundReport",
    "BOUND_RULES",
    "CoefficientSchedule",
    "power_law_schedule",
    "gaussian_schedule",
    "plain_relu_schedule",
    "univariate_bound",
    "monomial_bound",
    "kernel_weighted_bound",
    "multivariate_bound",
    "product_bound",
    "chain_bound",
    "bivariate_chain_bound",
]

# Evaluation consumes the whole stored coefficient prefix and reports a
# geometric estimate for the dropped tail; divergence is declared after this
# many consecutive growing terms.
_GROWTH_LIMIT = 50

# Largest x for which math.exp(x) is finite in IEEE double.
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


class DivergenceError(ArithmeticError):
    """A series was evaluated at or beyond its radius of convergence."""


class UnlearnableTermError(ValueError):
    """The kernel schedule has a zero coefficient where the target does not."""


def _as_nonneg_coeffs(raw: Iterable[float]) -> tuple[float, ...]:
    coeffs = tuple(abs(float(c)) for c in raw)
    for c in coeffs:
        if not math.isfinite(c):
            raise ValueError("series coefficients must be finite")
    return coeffs


@dataclass(frozen=True)
class AuxSeries:
    """Truncated power series with nonnegative coefficients.

    ``coeffs[k]`` multiplies y**k.  ``radius`` is the declared radius of
    convergence of the underlying function; evaluation refuses points at or
    beyond it.  Instances are immutable and safe to share across threads.
    """

    coeffs: tuple[float, ...]
    radius: float = math.inf

    def __post_init__(self) -> None:
        if not (self.radius > 0):
            raise ValueError("radius must be positive")
        for c in self.coeffs:
            if c < 0 or not math.isfinite(c):
                raise ValueError("auxiliary coefficients must be finite and >= 0")

    @classmethod
    def from_coeffs(cls, raw: Iterable[float], radius: float = math.inf) -> "AuxSeries":
        """Build the auxiliary series of a function from its raw coefficients.

        Coefficients are replaced by their absolute values; an empty sequence
        yields the zero series.
        """
        return cls(_as_nonneg_coeffs(raw), float(radius))

    @property
    def truncation_degree(self) -> int:
        """Degree at which the stored coefficient sequence was cut off."""
        return len(self.coeffs) - 1

    def _check_point(self, y: float) -> float:
        y = float(y)
        if y < 0:
            raise ValueError(f"series argument must be >= 0, got {y}")
        if y >= self.radius:
            raise DivergenceError(
                f"evaluation point {y} is at or beyond the radius of convergence {self.radius}"
            )
        return y

    def _sum(self, y: float, derivative: bool) -> tuple[float, float]:
        """Sum the whole stored prefix, returning (value, tail estimate).

        Every stored coefficient is consumed (early stopping would silently
        drop sparse high-degree terms); the geometric tail estimate, from the
        ratio of the last two positive terms, describes the unknown
        continuation beyond the truncation degree.  The tail is negligible
        only when that ratio test says so, mirroring the truncation policy
        used to build coefficient prefixes in the first place.
        """
        y = self._check_point(y)
        if not self.coeffs:
            return 0.0, 0.0
        total = 0.0
        prev_term: float | None = None
        ratio: float | None = None
        growth_run = 0
        power = 1.0  # y**(k - start) as the loop advances
        start = 1 if derivative else 0
        for k in range(start, len(self.coeffs)):
            c = self.coeffs[k]
            term = k * c * power if derivative else c * power
            total += term
            if not math.isfinite(total):
                raise DivergenceError(f"series sum overflowed at degree {k}")
            if prev_term is not None and 0 < prev_term < term:
                growth_run += 1
                if growth_run >= _GROWTH_LIMIT:
                    raise DivergenceError(
                        f"series terms grew for {_GROWTH_LIMIT} consecutive degrees at y = {y}"
                    )
            else:
                growth_run = 0
            if prev_term is not None and prev_term > 0 and term > 0:
                ratio = term / prev_term
            if term > 0:
                prev_term = term
            power *= y
        if prev_term is None or ratio is None:
            tail = 0.0
        elif ratio >= 1.0:
            tail = math.inf
        else:
            tail = prev_term * ratio / (1.0 - ratio)
        return total, tail

    def value(self, y: float) -> float:
        """Evaluate the truncated series at ``y``."""
        return self._sum(y, derivative=False)[0]

    def value_and_tail(self, y: float) -> tuple[float, float]:
        """Evaluate at ``y`` and report a geometric estimate of the dropped tail."""
        return self._sum(y, derivative=False)

    def derivative(self, y: float) -> float:
        """Evaluate the term-wise derivative sum(k * c_k * y**(k-1)) at ``y``."""
        return self._sum(y, derivative=True)[0]

    def derivative_and_tail(self, y: float) -> tuple[float, float]:
        return self._sum(y, derivative=True)


@dataclass(frozen=True)
class BivariateSeries:
    """Dense two-variable power series with nonnegative coefficients.

    ``grid[i, j]`` multiplies x**i * y**j; entries with i + j beyond
    ``max_total_degree`` are rejected at construction.
    """

    grid: np.ndarray
    max_total_degree: int = 64

    def __post_init__(self) -> None:
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 2:
            raise ValueError("bivariate coefficient grid must be 2-D")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("bivariate coefficients must be finite and >= 0")
        i, j = np.indices(g.shape)
        if np.any(g[(i + j) > self.max_total_degree] != 0):
            raise ValueError(
                f"nonzero coefficient beyond total degree {self.max_total_degree}"
            )
        object.__setattr__(self, "grid", g)

    @classmethod
    def from_coeffs(cls, raw, max_total_degree: int = 64) -> "BivariateSeries":
        """Absolute values of a raw coefficient grid."""
        return cls(np.abs(np.asarray(raw, dtype=float)), max_total_degree)

    def value(self, x: float, y: float) -> float:
        nx, ny = self.grid.shape
        px = np.power(float(x), np.arange(nx))
        py = np.power(float(y), np.arange(ny))
        return float(px @ self.grid @ py)

    def partial_x(self, x: float, y: float) -> float:
        nx, ny = self.grid.shape
        if nx < 2:
            return 0.0
        dgrid = self.grid[1:] * np.arange(1, nx)[:, None]
        px = np.power(float(x), np.arange(nx - 1))
        py = np.power(float(y), np.arange(ny))
        return float(px @ dgrid @ py)

    def partial_y(self, x: float, y: float) -> float:
        return BivariateSeries(self.grid.T, self.max_total_degree).partial_x(y, x)


BOUND_RULES = (
    "univariate",
    "monomial",
    "kernel-weighted",
    "multivariate",
    "product",
    "chain",
    "bivariate",
    "gravity",
)

_DEFAULT_DELTA = 0.01


@dataclass(frozen=True)
class BoundReport:
    """A computed sqrt(M) value with provenance.

    The bound is held canonically in log domain (``log_sqrt_M``) so that
    astronomically large values stay representable; ``sqrt_M`` recovers the
    linear value and is ``inf`` when it does not fit in a double.  All O(1)
    constants in the originating formulas are set to 1, recorded by
    ``constants_dropped``.
    """

    log_sqrt_M: float
    rule: str
    delta: float = _DEFAULT_DELTA
    constants_dropped: bool = True

    def __post_init__(self) -> None:
        if self.rule not in BOUND_RULES:
            raise ValueError(f"unknown bound rule {self.rule!r}")
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")
        if math.isnan(self.log_sqrt_M):
            raise ValueError("log_sqrt_M must not be NaN")

    @classmethod
    def from_linear(cls, sqrt_M: float, rule: str, delta: float = _DEFAULT_DELTA) -> "BoundReport":
        if sqrt_M < 0:
            raise ValueError("sqrt_M must be >= 0")
        log_val = math.log(sqrt_M) if sqrt_M > 0 else -math.inf
        return cls(log_sqrt_M=log_val, rule=rule, delta=delta)

    @property
    def sqrt_M(self) -> float:
        """Linear-domain bound; inf when the log-domain value overflows."""
        if self.log_sqrt_M > _LOG_FLOAT_MAX:
            return math.inf
        return math.exp(self.log_sqrt_M)

    @property
    def M(self) -> float:
        if 2 * self.log_sqrt_M > _LOG_FLOAT_MAX:
            return math.inf
        return math.exp(2 * self.log_sqrt_M)

    def sample_estimate(self, epsilon: float) -> float:
        """Sample count (M + log(1/delta)) / epsilon**2 with unit constants."""
        if not (epsilon > 0):
            raise ValueError("epsilon must be positive")
        return (self.M + math.log(1.0 / self.delta)) / epsilon**2

    def to_document(self, epsilon: float | None = None) -> dict:
        """JSON-ready report: rule, bound, delta, optional sample estimate."""
        doc: dict = {
            "rule": self.rule,
            "delta": self.delta,
            "constants_dropped": self.constants_dropped,
        }
        if self.log_sqrt_M <= _LOG_FLOAT_MAX:
            doc["sqrt_M"] = self.sqrt_M
        else:
            doc["log_sqrt_M"] = self.log_sqrt_M
        if epsilon is not None:
            doc["epsilon"] = epsilon
            doc["sample_estimate"] = self.sample_estimate(epsilon)
        return doc


# ---------------------------------------------------------------------------
# Kernel coefficient schedules
# ---------------------------------------------------------------------------

# A schedule maps a degree k to log(b_k), where b_k is the kernel's power
# series coefficient.  -inf encodes b_k == 0 (the degree is unlearnable);
# +inf encodes a "free" degree whose bound contribution is zero.
CoefficientSchedule = Callable[[int], float]


def power_law_schedule(s: float) -> CoefficientSchedule:
    """Schedule b_k = k**(-s) for k >= 1; degree 0 costs nothing.

    With s = 2 this reproduces the operational ReLU-type weighting, turning
    the kernel-weighted rule into sum_k k |a_k| beta**k term for term.
    """

    def log_coeff(k: int) -> float:
        if k == 0:
            return math.inf
        return -s * math.log(k)

    return log_coeff


def gaussian_schedule(radius: float = 1.0) -> CoefficientSchedule:
    """Schedule b_k = exp(-r**2) / k! of the Gaussian kernel on a radius-r sphere."""
    r_sq = float(radius) ** 2

    def log_coeff(k: int) -> float:
        return -r_sq - float(gammaln(k + 1))

    return log_coeff


def plain_relu_schedule() -> CoefficientSchedule:
    """Un-lifted ReLU weighting: k**(-2) support only on k = 1 and even k.

    Odd degrees above 1 have b_k = 0 and make the corresponding target terms
    unlearnable; the lifted kernel exists precisely to repair this gap.
    """

    def log_coeff(k: int) -> float:
        if k == 0:
            return math.inf
        if k == 1 or k % 2 == 0:
            return -2.0 * math.log(k)
        return -math.inf

    return log_coeff


# ---------------------------------------------------------------------------
# Bound rules
# ---------------------------------------------------------------------------


def univariate_bound(
    g_coeffs: Sequence[float],
    beta: float,
    radius: float = math.inf,
    delta: float = _DEFAULT_DELTA,
) -> BoundReport:
    """Bound for a univariate analytic target composed with a linear map.

    sqrt_M = beta * g~'(beta) + g~(0), valid for beta inside the radius of
    convergence of g.
    """
    beta = float(beta)
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta >= radius:
        raise DivergenceError(
            f"beta = {beta} is at or beyond the radius of convergence {radius}"
        )
    g = AuxSeries.from_coeffs(g_coeffs, radius)
    g0 = g.coeffs[0] if g.coeffs else 0.0
    sqrt_M = beta * g.derivative(beta) + g0
    return BoundReport.from_linear(sqrt_M, "univariate", delta)


def monomial_bound(betas: Sequence[float], delta: float = _DEFAULT_DELTA) -> BoundReport:
    """Bound p * prod_i beta_i for a product of p linear factors."""
    betas = [float(b) for b in betas]
    if not betas:
        raise ValueError(
            "empty factor list describes a constant; use univariate_bound, "
            "whose bound for a constant a0 is |a0|"
        )
    if any(b < 0 for b in betas):
        raise ValueError("factor norms must be >= 0")
    sqrt_M = len(betas) * math.prod(betas)
    return BoundReport.from_linear(sqrt_M, "monomial", delta)


def kernel_weighted_bound(
    g_coeffs: Sequence[float],
    beta: float,
    schedule: CoefficientSchedule,
    delta: float = _DEFAULT_DELTA,
) -> BoundReport:
    """Bound sum_k b_k^{-1/2} |a_k| beta**k under a kernel coefficient schedule.

    Each term is assembled in log domain so that rapidly shrinking schedules
    (for example the Gaussian one, with b_k^{-1/2} = e^{r^2/2} sqrt(k!)) do
    not overflow.  A schedule zero at a degree the target actually uses makes
    that term unlearnable.
    """
    beta = float(beta)
    if beta < 0:
        raise ValueError("beta must be >= 0")
    log_terms = []
    for k, a in enumerate(g_coeffs):
        a = abs(float(a))
        if a == 0.0:
            continue
        log_b = schedule(k)
        if log_b == -math.inf:
            raise UnlearnableTermError(
                f"schedule assigns zero kernel weight to degree {k}, "
                f"but the target has coefficient {a} there"
            )
        if log_b == math.inf:
            continue  # free degree, contributes nothing
        if beta == 0.0:
            if k > 0:
                continue
            log_terms.append(-0.5 * log_b + math.log(a))
            continue
        log_terms.append(-0.5 * log_b + math.log(a) + k * math.log(beta))
    if not log_terms:
        return BoundReport(-math.inf, "kernel-weighted", delta)
    return BoundReport(float(logsumexp(log_terms)), "kernel-weighted", delta)


def multivariate_bound(
    terms: Sequence[tuple[float, Sequence[float]]],
    delta: float = _DEFAULT_DELTA,
) -> BoundReport:
    """Bound g~'(1) + g~(0) for a multivariate power series.

    ``terms`` lists (coefficient, [factor norms]) pairs; the induced
    auxiliary coefficients are a~_k = sum over degree-k terms of
    |a| * prod(norms).
    """
    aux: dict[int, float] = {}
    for a, norms in terms:
        k = len(norms)
        weight = abs(float(a)) * math.prod(float(b) for b in norms)
        aux[k] = aux.get(k, 0.0) + weight
    sqrt_M = sum(k * w for k, w in aux.items()) + aux.get(0, 0.0)
    if not math.isfinite(sqrt_M):
        raise DivergenceError("induced auxiliary series diverges at 1")
    return BoundReport.from_linear(sqrt_M, "multivariate", delta)


def product_bound(g: AuxSeries, h: AuxSeries, delta: float = _DEFAULT_DELTA) -> BoundReport:
    """Product rule: sqrt_M = g~'(1) h~(1) + g~(1) h~'(1) + g~(0) h~(0)."""
    g0 = g.coeffs[0] if g.coeffs else 0.0
    h0 = h.coeffs[0] if h.coeffs else 0.0
    sqrt_M = g.derivative(1.0) * h.value(1.0) + g.value(1.0) * h.derivative(1.0) + g0 * h0
    return BoundReport.from_linear(sqrt_M, "product", delta)


def chain_bound(outer: AuxSeries, inner: AuxSeries, delta: float = _DEFAULT_DELTA) -> BoundReport:
    """Chain rule: sqrt_M = g~'(h~(1)) h~'(1) + g~(h~(0)) for g o h."""
    h1 = inner.value(1.0)
    h0 = inner.coeffs[0] if inner.coeffs else 0.0
    for point in (h0, h1):
        if point >= outer.radius:
            raise DivergenceError(
                f"inner auxiliary value {point} is at or beyond the outer "
                f"radius of convergence {outer.radius}"
            )
    sqrt_M = outer.derivative(h1) * inner.derivative(1.0) + outer.value(h0)
    return BoundReport.from_linear(sqrt_M, "chain", delta)


def bivariate_chain_bound(
    f: BivariateSeries,
    g: AuxSeries,
    h: AuxSeries,
    delta: float = _DEFAULT_DELTA,
) -> BoundReport:
    """Two-argument composition rule for f(g(x), h(x)).

    Total derivative of f~(g~(y), h~(y)) at y = 1, plus the degree-zero term
    f~(g~(0), h~(0)) to stay consistent with the univariate conventions.
    """
    g1, h1 = g.value(1.0), h.value(1.0)
    g0 = g.coeffs[0] if g.coeffs else 0.0
    h0 = h.coeffs[0] if h.coeffs else 0.0
    sqrt_M = (
        f.partial_x(g1, h1) * g.derivative(1.0)
        + f.partial_y(g1, h1) * h.derivative(1.0)
        + f.value(g0, h0)
    )
    if not math.isfinite(sqrt_M):
        raise DivergenceError("bivariate composition diverges at 1")
    return BoundReport.from_linear(sqrt_M, "bivariate", delta)
