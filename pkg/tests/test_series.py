"""Auxiliary series and the bound calculus rules."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from learnbounds import (
    AuxSeries,
    BivariateSeries,
    BoundReport,
    DivergenceError,
    UnlearnableTermError,
    bivariate_chain_bound,
    chain_bound,
    gaussian_schedule,
    kernel_weighted_bound,
    monomial_bound,
    multivariate_bound,
    plain_relu_schedule,
    power_law_schedule,
    product_bound,
    univariate_bound,
)

ONES = [1.0] * 80  # geometric series 1/(1-y), truncated far past double precision at y=0.5


# ---------------------------------------------------------------------------
# AuxSeries construction and evaluation
# ---------------------------------------------------------------------------


def test_from_coeffs_takes_absolute_values():
    s = AuxSeries.from_coeffs([1, -2, 3])
    assert s.coeffs == (1.0, 2.0, 3.0)


def test_empty_series_is_zero():
    s = AuxSeries.from_coeffs([])
    assert s.value(0.7) == 0.0
    assert s.derivative(0.3) == 0.0


def test_geometric_series_value_and_derivative():
    # 1/(1-y) and 1/(1-y)^2 at y = 0.5, summed numerically
    s = AuxSeries.from_coeffs(ONES)
    assert s.value(0.5) == pytest.approx(2.0, abs=1e-12)
    assert s.derivative(0.5) == pytest.approx(4.0, abs=1e-12)


def test_constant_series():
    s = AuxSeries.from_coeffs([3.5])
    assert s.value(0.9) == 3.5
    assert s.derivative(0.9) == 0.0


def test_negative_argument_rejected():
    with pytest.raises(ValueError, match=">= 0"):
        AuxSeries.from_coeffs([1, 1]).value(-0.1)


def test_point_at_declared_radius_rejected():
    s = AuxSeries.from_coeffs(ONES, radius=1.0)
    with pytest.raises(DivergenceError, match="radius"):
        s.value(1.0)


def test_growing_terms_declared_divergent():
    s = AuxSeries.from_coeffs([1.0] * 80)  # radius defaults to inf
    with pytest.raises(DivergenceError, match="grew"):
        s.value(1.2)


def test_tail_estimate_matches_geometric_truth():
    v, tail = AuxSeries.from_coeffs([1.0] * 31).value_and_tail(0.5)
    # for an exactly geometric series the ratio estimate equals the true tail
    assert v + tail == pytest.approx(2.0, rel=1e-12)
    assert tail == pytest.approx(2.0 - v, rel=1e-9)


@given(
    coeffs=st.lists(st.floats(-10, 10, allow_nan=False), min_size=0, max_size=6),
    y=st.floats(0, 2, allow_nan=False),
)
@settings(max_examples=150)
def test_value_and_derivative_match_polynomial_oracle(coeffs, y):
    s = AuxSeries.from_coeffs(coeffs)
    poly = np.polynomial.Polynomial([abs(c) for c in coeffs] or [0.0])
    assert s.value(y) == pytest.approx(poly(y), rel=1e-9, abs=1e-9)
    assert s.derivative(y) == pytest.approx(poly.deriv()(y), rel=1e-9, abs=1e-9)


@given(
    coeffs=st.lists(st.floats(0, 5, allow_nan=False), min_size=1, max_size=6),
    y1=st.floats(0, 1.5, allow_nan=False),
    y2=st.floats(0, 1.5, allow_nan=False),
)
@settings(max_examples=100)
def test_value_monotone_nondecreasing(coeffs, y1, y2):
    lo, hi = sorted([y1, y2])
    s = AuxSeries.from_coeffs(coeffs)
    assert s.value(hi) >= s.value(lo) - 1e-12 * max(1.0, s.value(hi))


# ---------------------------------------------------------------------------
# BoundReport
# ---------------------------------------------------------------------------


def test_report_log_domain_survives_overflow():
    r = BoundReport(log_sqrt_M=5000.0, rule="gravity")
    assert r.sqrt_M == math.inf
    doc = r.to_document()
    assert doc["log_sqrt_M"] == 5000.0
    assert "sqrt_M" not in doc


def test_report_document_keys():
    doc = univariate_bound([1, 1], 0.5).to_document(epsilon=0.1)
    assert set(doc) == {"rule", "delta", "constants_dropped", "sqrt_M", "epsilon", "sample_estimate"}
    json.dumps(doc)  # must serialize


def test_report_rejects_bad_rule_and_delta():
    with pytest.raises(ValueError):
        BoundReport(log_sqrt_M=0.0, rule="nonsense")
    with pytest.raises(ValueError):
        BoundReport(log_sqrt_M=0.0, rule="gravity", delta=1.5)


@given(
    log_m=st.floats(-5, 5),
    eps1=st.floats(0.01, 1.0),
    eps2=st.floats(0.01, 1.0),
)
@settings(max_examples=100)
def test_sample_estimate_monotonic(log_m, eps1, eps2):
    lo, hi = sorted([eps1, eps2])
    r = BoundReport(log_sqrt_M=log_m, rule="univariate")
    assert r.sample_estimate(hi) <= r.sample_estimate(lo)
    bigger = BoundReport(log_sqrt_M=log_m + 0.5, rule="univariate")
    assert bigger.sample_estimate(lo) >= r.sample_estimate(lo)


# ---------------------------------------------------------------------------
# univariate / monomial / kernel-weighted
# ---------------------------------------------------------------------------


def test_univariate_geometric_worked_value():
    # 1/(1-y) at beta = 0.5: 0.5 * 4 + 1 = 3
    r = univariate_bound(ONES, 0.5)
    assert r.sqrt_M == pytest.approx(3.0, abs=1e-10)
    assert r.rule == "univariate"


def test_univariate_constant_function():
    assert univariate_bound([-2.5], 0.7).sqrt_M == pytest.approx(2.5)


def test_univariate_linear_at_beta_one():
    assert univariate_bound([0.0, 1.0], 1.0).sqrt_M == pytest.approx(1.0)


def test_univariate_names_radius_on_divergence():
    with pytest.raises(DivergenceError, match="1.0"):
        univariate_bound(ONES, 1.0, radius=1.0)


def test_monomial_worked_values():
    assert monomial_bound([1, 1, 1]).sqrt_M == pytest.approx(3.0)
    assert monomial_bound([2, 0.5]).sqrt_M == pytest.approx(2.0)
    assert monomial_bound([0.3]).sqrt_M == pytest.approx(0.3)


def test_monomial_empty_defers_to_univariate():
    with pytest.raises(ValueError, match="univariate"):
        monomial_bound([])


def test_kernel_weighted_gaussian_schedule():
    # g = y at beta 1 under the Gaussian schedule: b_1^{-1/2} = e^{1/2} sqrt(1!)
    r = kernel_weighted_bound([0.0, 1.0], 1.0, gaussian_schedule(1.0))
    assert r.sqrt_M == pytest.approx(math.exp(0.5), rel=1e-12)


def test_kernel_weighted_power_law_matches_relu_formula():
    # b_k = k^-2 makes each term k |a_k| beta^k
    r = kernel_weighted_bound([0.0, 0.0, 1.0], 1.0, power_law_schedule(2.0))
    assert r.sqrt_M == pytest.approx(2.0, rel=1e-12)
    coeffs = [0.3, 1.2, 0.7, 0.1]
    beta = 0.8
    expected = sum(k * abs(a) * beta**k for k, a in enumerate(coeffs))
    r2 = kernel_weighted_bound(coeffs, beta, power_law_schedule(2.0))
    assert r2.sqrt_M == pytest.approx(expected, rel=1e-12)


def test_kernel_weighted_unlearnable_odd_power():
    with pytest.raises(UnlearnableTermError, match="degree 3"):
        kernel_weighted_bound([0, 0, 0, 1.0], 0.5, plain_relu_schedule())


def test_plain_relu_schedule_supports_even_and_one():
    sched = plain_relu_schedule()
    r = kernel_weighted_bound([0.5, 1.0, 2.0, 0.0, 1.0], 0.5, sched)
    expected = 1 * 1.0 * 0.5 + 2 * 2.0 * 0.25 + 4 * 1.0 * 0.5**4
    assert r.sqrt_M == pytest.approx(expected, rel=1e-12)


def test_kernel_weighted_huge_schedule_stays_in_log_domain():
    # Gaussian schedule at degree 400: b_k^{-1/2} = sqrt(400!) overflows linearly
    coeffs = [0.0] * 400 + [1.0]
    r = kernel_weighted_bound(coeffs, 1.0, gaussian_schedule(1.0))
    assert math.isfinite(r.log_sqrt_M)
    assert r.log_sqrt_M > 700  # beyond linear representability
    assert r.sqrt_M == math.inf


# ---------------------------------------------------------------------------
# multivariate / product / chain / bivariate
# ---------------------------------------------------------------------------


def test_multivariate_single_term_agrees_with_monomial():
    r = multivariate_bound([(1.0, [1.0, 1.0])])
    assert r.sqrt_M == pytest.approx(monomial_bound([1.0, 1.0]).sqrt_M, rel=1e-15)


def test_multivariate_constant_plus_linear():
    r = multivariate_bound([(1.0, []), (1.0, [1.0])])
    assert r.sqrt_M == pytest.approx(2.0)


def test_multivariate_exponential_series():
    # a~_k = 1/k! at unit norms: g~'(1) + g~(0) = e + 1
    terms = [(1.0 / math.factorial(k), [1.0] * k) for k in range(30)]
    assert multivariate_bound(terms).sqrt_M == pytest.approx(math.e + 1.0, abs=1e-10)


def test_product_two_linear_factors():
    lin = AuxSeries.from_coeffs([0.0, 1.0])
    assert product_bound(lin, lin).sqrt_M == pytest.approx(2.0)


def test_product_constant_factor_scales():
    c = AuxSeries.from_coeffs([2.5])
    h = AuxSeries.from_coeffs([0.5, 1.0, 0.25])
    expected = 2.5 * h.derivative(1.0) + 2.5 * h.coeffs[0]
    assert product_bound(c, h).sqrt_M == pytest.approx(expected, rel=1e-14)


def test_product_one_plus_y_squared():
    s = AuxSeries.from_coeffs([1.0, 1.0])
    assert product_bound(s, s).sqrt_M == pytest.approx(5.0)


def test_product_symmetric():
    g = AuxSeries.from_coeffs([0.3, 0.9, 0.1])
    h = AuxSeries.from_coeffs([1.0, 0.2])
    assert product_bound(g, h).sqrt_M == product_bound(h, g).sqrt_M


def test_chain_identity_outer_equals_multivariate_of_inner():
    inner = AuxSeries.from_coeffs([0.5, 1.0, 0.25])
    identity = AuxSeries.from_coeffs([0.0, 1.0])
    got = chain_bound(identity, inner).sqrt_M
    expected = inner.derivative(1.0) + inner.coeffs[0]
    assert got == pytest.approx(expected, rel=1e-15)


def test_chain_identity_inner():
    outer = AuxSeries.from_coeffs([0.5, 1.0, 0.25])
    identity = AuxSeries.from_coeffs([0.0, 1.0])
    assert chain_bound(outer, identity).sqrt_M == pytest.approx(
        outer.derivative(1.0) + outer.value(0.0), rel=1e-14
    )


def test_chain_exponential_outer():
    # e^y o y: e * 1 + 1
    outer = AuxSeries.from_coeffs([1.0 / math.factorial(k) for k in range(30)])
    inner = AuxSeries.from_coeffs([0.0, 1.0])
    assert chain_bound(outer, inner).sqrt_M == pytest.approx(math.e + 1.0, abs=1e-10)


def test_chain_divergence_names_violating_value():
    outer = AuxSeries.from_coeffs(ONES, radius=1.0)
    inner = AuxSeries.from_coeffs([0.0, 2.0])  # h~(1) = 2 beyond outer radius
    with pytest.raises(DivergenceError, match="2.0"):
        chain_bound(outer, inner)


def test_bivariate_xy_reproduces_product_rule():
    f = BivariateSeries.from_coeffs([[0.0, 0.0], [0.0, 1.0]])  # f(x, y) = x y
    g = AuxSeries.from_coeffs([0.2, 0.7, 0.1])
    h = AuxSeries.from_coeffs([0.4, 1.1])
    assert bivariate_chain_bound(f, g, h).sqrt_M == pytest.approx(
        product_bound(g, h).sqrt_M, rel=1e-15
    )


def test_bivariate_projection_reproduces_multivariate():
    f = BivariateSeries.from_coeffs([[0.0], [1.0]])  # f(x, y) = x
    g = AuxSeries.from_coeffs([0.5, 1.0, 0.25])
    h = AuxSeries.from_coeffs([0.9, 0.1])
    expected = g.derivative(1.0) + g.coeffs[0]
    assert bivariate_chain_bound(f, g, h).sqrt_M == pytest.approx(expected, rel=1e-15)


def test_bivariate_sum_of_identities():
    f = BivariateSeries.from_coeffs([[0.0, 1.0], [1.0, 0.0]])  # x + y
    lin = AuxSeries.from_coeffs([0.0, 1.0])
    assert bivariate_chain_bound(f, lin, lin).sqrt_M == pytest.approx(2.0)


def test_bivariate_rejects_excess_degree():
    grid = np.zeros((70, 70))
    grid[40, 40] = 1.0  # total degree 80 > 64
    with pytest.raises(ValueError, match="total degree"):
        BivariateSeries.from_coeffs(grid)


def test_bivariate_partials_match_finite_differences():
    rng = np.random.default_rng(3)
    grid = rng.uniform(0, 1, size=(4, 4))
    f = BivariateSeries.from_coeffs(grid)
    x0, y0, h = 0.7, 1.3, 1e-6
    fx = (f.value(x0 + h, y0) - f.value(x0 - h, y0)) / (2 * h)
    fy = (f.value(x0, y0 + h) - f.value(x0, y0 - h)) / (2 * h)
    assert f.partial_x(x0, y0) == pytest.approx(fx, rel=1e-8)
    assert f.partial_y(x0, y0) == pytest.approx(fy, rel=1e-8)


# ---------------------------------------------------------------------------
# Consistency triangle (exact to 1e-12 relative)
# ---------------------------------------------------------------------------


@given(
    b1=st.floats(0.1, 3.0),
    b2=st.floats(0.1, 3.0),
)
@settings(max_examples=60)
def test_consistency_triangle(b1, b2):
    lin1 = AuxSeries.from_coeffs([0.0, b1])
    lin2 = AuxSeries.from_coeffs([0.0, b2])
    prod = product_bound(lin1, lin2).sqrt_M
    mono = monomial_bound([b1, b2]).sqrt_M
    assert prod == pytest.approx(mono, rel=1e-12)

    f_xy = BivariateSeries.from_coeffs([[0.0, 0.0], [0.0, 1.0]])
    assert bivariate_chain_bound(f_xy, lin1, lin2).sqrt_M == pytest.approx(prod, rel=1e-12)

    identity = AuxSeries.from_coeffs([0.0, 1.0])
    inner = AuxSeries.from_coeffs([0.3, b1, 0.2 * b2])
    chain = chain_bound(identity, inner).sqrt_M
    multi = multivariate_bound(
        [(0.3, []), (b1, [1.0]), (0.2 * b2, [1.0, 1.0])]
    ).sqrt_M
    assert chain == pytest.approx(multi, rel=1e-12)
