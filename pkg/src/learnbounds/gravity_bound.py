"""Learnability bound for the k-body inverse-square force law.

The force component along one axis is a sum of terms m_i m_j r^{-3} (x_j - x_i).
The r^{-3} factor is non-analytic at 0, so it is replaced on the working
annulus [r_min, r_max] by a degree-d polynomial in r**2 built from the
binomial series

    (1 - x)^{-3/2} = sum_n (2n+1)!!/(2n)!! * x**n,      x = 1 - r**2 / a**2,

expanded about the shift a**2 = (r_min**2 + r_max**2) / 2 that equalizes the
truncation error at both endpoints.  Degree d = ceil(R**2 * ln(k**2 / eps))
with R = r_max / r_min then yields the closed-form log-domain bound

    ln sqrt_M = -0.5 ln k + 1.5 ln d + d ln(24 k),

optionally inflated by (d**2 b_d)^{-1/2} for a kernel whose coefficient
schedule b_d decays faster than the modified-ReLU one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .series import BoundReport, CoefficientSchedule

__all__ = [
    "TaylorApprox",
    "binomial_series_coefficients",
    "inverse_cube_taylor",
    "gravity_degree",
    "gravity_bound_log",
    "kernel_penalty_log",
    "gravity_bound_crosscheck",
    "CrossCheck",
]

_EPS = float(np.finfo(float).eps)


def binomial_series_coefficients(n_max: int) -> np.ndarray:
    """Coefficients (2n+1)!!/(2n)!! of (1 - x)^{-3/2} for n = 0 .. n_max.

    Built by the exact ratio recurrence c_{n+1} = c_n * (2n+3) / (2n+2);
    all coefficients are positive and increasing.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    c = np.empty(n_max + 1)
    c[0] = 1.0
    for n in range(n_max):
        c[n + 1] = c[n] * (2 * n + 3) / (2 * n + 2)
    return c


@dataclass(frozen=True)
class TaylorApprox:
    """Polynomial approximation of r**-3 on [r_min, r_max].

    ``coeffs[n]`` multiplies (1 - r**2 / shift_sq)**n; the stored values are
    the binomial coefficients divided by shift_sq**1.5, so ``value`` is a
    plain Horner evaluation in the shifted variable.  ``error_bound`` is the
    Lagrange remainder at the worse endpoint plus an explicit double-precision
    evaluation allowance; it certifies |value(r) - r**-3| on the interval.
    """

    degree: int
    shift_sq: float
    coeffs: np.ndarray
    error_bound: float
    r_min: float
    r_max: float

    def value(self, r):
        """Evaluate the polynomial at radius r (scalar or array)."""
        r = np.asarray(r, dtype=float)
        x = 1.0 - (r * r) / self.shift_sq
        acc = np.zeros_like(x)
        for c in self.coeffs[::-1]:
            acc = acc * x + c
        # At the exact expansion center the polynomial equals r**-3
        # identically; return the reference expression there so the zero
        # error_bound of a degenerate interval is honored bit for bit.
        out = np.where(x == 0.0, np.power(r, -3.0), acc)
        return out if out.ndim else float(out)

    def base_coefficients(self) -> np.ndarray:
        """The underlying (1 - x)^{-3/2} coefficients (shift scaling removed)."""
        return self.coeffs * self.shift_sq**1.5


def inverse_cube_taylor(r_min: float, r_max: float, degree: int) -> TaylorApprox:
    """Degree-``degree`` polynomial in r**2 approximating r**-3 on [r_min, r_max]."""
    r_min, r_max = float(r_min), float(r_max)
    if r_min <= 0:
        raise ValueError(f"r_min must be positive, got {r_min}")
    if r_max < r_min:
        raise ValueError("r_max must be >= r_min")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    a_sq = 0.5 * (r_min**2 + r_max**2)
    base = binomial_series_coefficients(degree + 1)
    scale = a_sq**-1.5
    coeffs = base[: degree + 1] * scale
    # Worse endpoint of the shifted variable; the symmetric shift makes the
    # two endpoint magnitudes equal up to rounding.
    x_lo = abs(1.0 - r_min**2 / a_sq)
    x_hi = abs(1.0 - r_max**2 / a_sq)
    x_hat = max(x_lo, x_hi)
    if x_hat == 0.0:
        error_bound = 0.0
    else:
        lagrange = scale * base[degree + 1] * x_hat ** (degree + 1) / (1.0 - x_hat) ** (2.5 + degree)
        # Horner roundoff allowance: the evaluation sums degree+1 terms whose
        # absolute values total at most poly_abs; the r**-3 reference itself
        # carries a few ulp.
        poly_abs = scale * float(np.polyval(base[degree::-1], x_hat))
        roundoff = 4.0 * _EPS * (degree + 1) * poly_abs + 4.0 * _EPS * r_min**-3.0
        error_bound = lagrange + roundoff
    return TaylorApprox(
        degree=degree,
        shift_sq=a_sq,
        coeffs=coeffs,
        error_bound=float(error_bound),
        r_min=r_min,
        r_max=r_max,
    )


def gravity_degree(R: float, k: int, eps: float) -> int:
    """Polynomial degree ceil(R**2 * ln(k**2 / eps)) for the force approximation.

    Clamped to 1 (with a warning) when eps >= k**2 would drive it to zero.
    """
    R = float(R)
    eps = float(eps)
    if R < 1:
        raise ValueError("distance ratio R must be >= 1")
    if k < 2:
        raise ValueError("body count k must be >= 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = math.ceil(R * R * math.log(k * k / eps))
    if d < 1:
        warnings.warn(
            f"requested accuracy eps = {eps} >= k**2 = {k * k} gives a "
            "non-positive degree; clamping to 1",
            stacklevel=2,
        )
        return 1
    return d


def kernel_penalty_log(degree: float, schedule: CoefficientSchedule) -> float:
    """Additive log-domain penalty -0.5 * ln(d**2 * b_ceil(d)) for a kernel schedule."""
    if degree <= 0:
        raise ValueError("degree must be positive")
    return -0.5 * (2.0 * math.log(degree) + schedule(math.ceil(degree)))


def gravity_bound_log(
    R: float,
    k: int,
    eps: float,
    kernel_penalty: CoefficientSchedule | None = None,
    delta: float = 0.01,
) -> BoundReport:
    """Log-domain sqrt_M bound for learning one force component of k bodies.

    Uses the real-valued degree d = R**2 ln(k**2/eps) inside the closed form
    (the integer ceiling is only needed when actually building the Taylor
    polynomial).  With ``kernel_penalty`` the bound is inflated by
    (d**2 b_ceil(d))^{-1/2}.
    """
    R = float(R)
    eps = float(eps)
    if R < 1:
        raise ValueError("distance ratio R must be >= 1")
    if k < 2:
        raise ValueError("body count k must be >= 2")
    if not (0 < eps < k * k):
        raise ValueError(f"eps must lie in (0, k**2) = (0, {k * k})")
    d = R * R * math.log(k * k / eps)
    log_sqrt_M = -0.5 * math.log(k) + 1.5 * math.log(d) + d * math.log(24.0 * k)
    if kernel_penalty is not None:
        log_sqrt_M += kernel_penalty_log(d, kernel_penalty)
    return BoundReport(log_sqrt_M=log_sqrt_M, rule="gravity", delta=delta)


@dataclass(frozen=True)
class CrossCheck:
    """Closed-form vs first-principles log bounds, for reporting only."""

    log_closed_form: float
    log_recomputed: float

    @property
    def log_gap(self) -> float:
        return self.log_closed_form - self.log_recomputed


def gravity_bound_crosscheck(R: float, k: int, eps: float) -> CrossCheck:
    """Recompute the gravity bound from the composition rules underlying it.

    One force term is m_i m_j * f_d(h(x)) * g(x) with h the squared distance
    and g a coordinate difference.  Majorizing each piece on the rescaled
    configuration (squared distances bounded by 6, coordinate differences by
    sqrt(2)) and applying the product and chain rules gives

        A = f~'(6) * 12 * sqrt(2) + f~(6) * sqrt(2),
        f~(y) = sqrt(pi d) (1 + y / a**2)**d,

    and ln sqrt_M = ln(sqrt(8) k / r_max**3) + ln A with r_max**2 = 2/k.
    The closed form in ``gravity_bound_log`` simplifies this aggressively, so
    only factor-level agreement is expected; the closed form is authoritative.
    """
    R = float(R)
    eps = float(eps)
    if R < 1 or k < 2 or not (0 < eps < k * k):
        raise ValueError("require R >= 1, k >= 2, 0 < eps < k**2")
    d = R * R * math.log(k * k / eps)
    r_max_sq = 2.0 / k
    a_sq = 0.5 * r_max_sq * (1.0 + 1.0 / R**2)
    log_u = math.log1p(6.0 / a_sq)
    # f~'(6) * h~'(1) * k~(1):  sqrt(pi d) * (d/a^2) * u^(d-1) * 12 * sqrt(2)
    log_t1 = (
        0.5 * math.log(math.pi * d)
        + math.log(d)
        - math.log(a_sq)
        + (d - 1.0) * log_u
        + math.log(12.0)
        + 0.5 * math.log(2.0)
    )
    # f~(6) * k~'(1):  sqrt(pi d) * u^d * sqrt(2)
    log_t2 = 0.5 * math.log(math.pi * d) + d * log_u + 0.5 * math.log(2.0)
    log_A = float(np.logaddexp(log_t1, log_t2))
    log_recomputed = 0.5 * math.log(8.0) + math.log(k) - 1.5 * math.log(r_max_sq) + log_A
    log_closed = gravity_bound_log(R, k, eps).log_sqrt_M
    return CrossCheck(log_closed_form=log_closed, log_recomputed=log_recomputed)
