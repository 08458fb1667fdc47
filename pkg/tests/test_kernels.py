"""Kernel evaluators, series coefficients, and Monte-Carlo estimation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from learnbounds import (
    CoefficientsUnavailableError,
    GaussianSphereKernel,
    ModifiedReLUKernel,
    MonteCarloKernel,
    SlowDecayKernel,
    gaussian_eval,
    input_lift,
    mc_kernel_estimate,
    mc_kernel_estimate_detail,
    modified_relu_angle_coefficients,
    modified_relu_coefficients,
    modified_relu_eval,
    nngp_reference,
    nngp_reference_pair,
    slow_decay_eval,
)


def unit_vectors(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Closed-form evaluators
# ---------------------------------------------------------------------------


def test_modified_relu_anchor_values():
    assert modified_relu_eval(1.0) == pytest.approx(0.5, rel=1e-15)
    assert modified_relu_eval(-1.0) == 0.0
    assert modified_relu_eval(0.0) == pytest.approx(1.0 / 6.0, rel=1e-15)


def test_modified_relu_clamps_and_rejects():
    assert modified_relu_eval(1.0 + 5e-10) == pytest.approx(0.5)
    with pytest.raises(ValueError, match="exceeds 1"):
        modified_relu_eval(1.1)


def test_input_lift_basis_vector():
    lifted = input_lift(np.array([1.0, 0.0]))
    assert lifted == pytest.approx([1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)])


def test_input_lift_preserves_norm_and_dot():
    x = unit_vectors(1, 5, 0)[0]
    lx = input_lift(x)
    assert np.dot(lx, lx) == pytest.approx(1.0, abs=1e-12)
    assert np.dot(lx, input_lift(-x)) == pytest.approx(0.0, abs=1e-12)
    y = unit_vectors(1, 5, 1)[0]
    assert np.dot(lx, input_lift(y)) == pytest.approx((np.dot(x, y) + 1) / 2, abs=1e-12)


def test_input_lift_validation():
    with pytest.raises(ValueError, match="norm"):
        input_lift(np.array([2.0, 0.0]))
    with pytest.raises(ValueError, match="zero"):
        input_lift(np.zeros(3), normalize_first=True)
    lifted = input_lift(np.array([2.0, 0.0]), normalize_first=True)
    assert lifted == pytest.approx([1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)])


def test_gaussian_eval_anchor_values():
    x = np.array([1.0, 0.0])
    assert gaussian_eval(x, x) == 1.0
    y = np.array([0.0, 1.0])  # ||x - y||^2 = 2
    assert gaussian_eval(x, y) == pytest.approx(math.exp(-1.0), rel=1e-15)
    with pytest.raises(ValueError, match="mismatch"):
        gaussian_eval(np.ones(2), np.ones(3))


def test_gaussian_sphere_identity():
    # on the unit sphere exp(-||x-x'||^2/2) == exp(-1) exp(x.x')
    X = unit_vectors(6, 4, 2)
    kern = GaussianSphereKernel(radius=1.0)
    for i in range(len(X)):
        for j in range(len(X)):
            direct = gaussian_eval(X[i], X[j])
            series_form = kern.eval_dot(float(X[i] @ X[j]))
            assert direct == pytest.approx(series_form, rel=1e-12)


def test_slow_decay_values():
    assert slow_decay_eval(0.0, 2.0) == 0.0
    assert slow_decay_eval(1.0, 2.0) == pytest.approx(math.pi**2 / 6, abs=1e-12)
    # direct-summation oracle at t = 0.5 (converges fast)
    oracle = sum(k**-2.0 * 0.5**k for k in range(1, 80))
    assert slow_decay_eval(0.5, 2.0) == pytest.approx(oracle, abs=1e-12)


def test_slow_decay_alternating_boundary():
    ks = np.arange(1, 1_000_001, dtype=float)
    oracle = float(np.sum((-1.0) ** ks * ks**-2.0))  # error below first dropped term 1e-12
    assert slow_decay_eval(-1.0, 2.0) == pytest.approx(oracle, abs=1e-11)


def test_slow_decay_divergence_and_domain():
    with pytest.raises(ArithmeticError, match="diverges"):
        slow_decay_eval(1.0, 1.0)
    with pytest.raises(ValueError, match="domain"):
        slow_decay_eval(1.5, 2.0)
    with pytest.raises(ValueError, match=r"\(1, 2\]"):
        SlowDecayKernel(s=2.5)


# ---------------------------------------------------------------------------
# Modified-ReLU coefficients
# ---------------------------------------------------------------------------


def test_b0_is_one_sixth():
    b, _ = modified_relu_coefficients(0)
    assert b[0] == pytest.approx(1.0 / 6.0, abs=1e-10)


def test_coefficients_positive_and_sum_to_half():
    b, _ = modified_relu_coefficients(2000)
    assert np.all(b[:501] > 0)
    partial = float(np.sum(b[:501]))
    assert partial < 0.5
    # the remaining mass is the computed continuation plus an integral tail
    continuation = float(np.sum(b[501:]))
    analytic_tail = 2.0 / (4.0 * math.pi**1.5 * math.sqrt(2000.0)) * 1.3
    assert 0.5 - partial <= continuation + analytic_tail
    assert abs(0.5 - float(np.sum(b)) - analytic_tail / 1.3) < analytic_tail


def test_coefficients_match_cauchy_integral_oracle():
    # b_k = rho^-k / (2 pi) * integral of K(rho e^{i theta}) e^{-i k theta},
    # evaluated by FFT on a circle inside the unit disk
    rho, n = 0.9, 1 << 14
    theta = 2 * np.pi * np.arange(n) / n
    z = rho * np.exp(1j * theta)
    kz = (z + 1) / (4 * np.pi) * (np.pi - np.arccos((z + 1) / 2))
    c = np.fft.fft(kz) / n
    oracle = (c[:101] / rho ** np.arange(101)).real
    b, _ = modified_relu_coefficients(100)
    assert np.max(np.abs(b - oracle)) < 1e-12


def test_kernel_coefficients_from_angle_series():
    b, _ = modified_relu_coefficients(50)
    s, _ = modified_relu_angle_coefficients(51)
    assert b[0] == pytest.approx(s[0] / (4 * math.pi), rel=1e-14)
    assert np.allclose(b[1:], (s[1:51] + s[:50]) / (4 * math.pi), rtol=1e-14)


def test_angle_series_asymptote():
    # saddle-point law for the angle factor: s_k ~ k^-1.5 / (2 sqrt(pi))
    s, _ = modified_relu_angle_coefficients(400)
    ks = np.arange(100, 401)
    rescaled = s[ks] * 2.0 * math.sqrt(math.pi) * ks**1.5
    assert np.all(rescaled >= 0.8)
    assert np.all(rescaled <= 1.2)


def test_kernel_series_asymptote():
    # the (t+1)/(4 pi) prefactor divides the angle asymptote by 2 pi
    b, _ = modified_relu_coefficients(400)
    ks = np.arange(100, 401)
    rescaled = b[ks] * 4.0 * math.pi**1.5 * ks**1.5
    assert np.all(rescaled >= 0.8)
    assert np.all(rescaled <= 1.2)


@pytest.mark.parametrize("t", [-0.9, 0.0, 0.5, 0.9])
def test_series_matches_closed_form_within_tail_bound(t):
    kern = ModifiedReLUKernel()
    prefix = kern.coefficients(500)
    powers = t ** np.arange(501)
    series_value = float(prefix.values @ powers)
    assert abs(series_value - modified_relu_eval(t)) <= kern.series_tail_bound(500, t)


def test_gaussian_coefficients_exact():
    prefix = GaussianSphereKernel(radius=1.0).coefficients(10)
    expected = np.exp(-1.0) / np.array([math.factorial(k) for k in range(11)])
    assert np.allclose(prefix.values, expected, rtol=1e-12)


def test_slow_decay_coefficients():
    prefix = SlowDecayKernel(s=2.0).coefficients(5)
    assert prefix.values[0] == 0.0
    assert np.allclose(prefix.values[1:], np.arange(1, 6, dtype=float) ** -2.0)


def test_series_tail_bounds_are_true_bounds():
    for kern in (GaussianSphereKernel(1.0), SlowDecayKernel(2.0)):
        prefix = kern.coefficients(30)
        for t in (-0.7, 0.3, 0.9):
            series_value = float(prefix.values @ t ** np.arange(31))
            assert abs(series_value - kern.eval_dot(t)) <= kern.series_tail_bound(30, t)


def test_monte_carlo_kind_has_no_coefficients():
    kern = MonteCarloKernel("relu", m=10)
    with pytest.raises(CoefficientsUnavailableError):
        kern.coefficients(5)


def test_coefficient_limits():
    with pytest.raises(ValueError, match="2000"):
        modified_relu_coefficients(5000)


# ---------------------------------------------------------------------------
# Symmetry and positive semidefiniteness
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kern",
    [
        ModifiedReLUKernel(),
        GaussianSphereKernel(1.0),
        SlowDecayKernel(2.0),
        MonteCarloKernel("relu", m=64, seed=5),
        MonteCarloKernel("exponential", m=64, seed=5),
    ],
    ids=lambda k: k.kind + "-" + getattr(k, "activation", ""),
)
def test_kernel_symmetry(kern):
    X = unit_vectors(6, 4, 11)
    for i in range(len(X)):
        for j in range(len(X)):
            assert kern.eval_pair(X[i], X[j]) == pytest.approx(
                kern.eval_pair(X[j], X[i]), rel=1e-12
            )


@pytest.mark.parametrize(
    "kern",
    [ModifiedReLUKernel(), GaussianSphereKernel(1.0), SlowDecayKernel(2.0)],
    ids=lambda k: k.kind,
)
def test_gram_positive_semidefinite_spot_check(kern):
    X = unit_vectors(20, 6, 7)
    H = kern.gram_matrix(X)
    assert np.allclose(H, H.T, atol=1e-14)
    assert float(np.linalg.eigvalsh(H)[0]) >= -1e-8


def test_monte_carlo_gram_is_psd_by_construction():
    X = unit_vectors(20, 6, 7)
    H = MonteCarloKernel("relu", m=32, seed=1).gram_matrix(X)
    assert float(np.linalg.eigvalsh(H)[0]) >= -1e-10


# ---------------------------------------------------------------------------
# Monte-Carlo estimation
# ---------------------------------------------------------------------------


def test_mc_determinism():
    x, y = unit_vectors(2, 5, 3)
    a = mc_kernel_estimate(x, y, "relu", m=1000, seed=42)
    b = mc_kernel_estimate(x, y, "relu", m=1000, seed=42)
    assert a == b
    assert a != mc_kernel_estimate(x, y, "relu", m=1000, seed=43)


def test_mc_self_product_approaches_half():
    # E[relu(g)^2] = sigma^2/2 for a unit input
    x = unit_vectors(1, 4, 9)[0]
    est, se = mc_kernel_estimate_detail(x, x, "relu", m=200_000, seed=0)
    assert abs(est - 0.5) <= 3 * se


def test_mc_lifted_matches_quadrature_reference():
    rng = np.random.default_rng(17)
    for pair_seed in range(4):
        x, y = unit_vectors(2, 5, 100 + pair_seed)
        lx, ly = input_lift(x), input_lift(y)
        ref = nngp_reference(float(lx @ ly), "relu")
        est, se = mc_kernel_estimate_detail(lx, ly, "relu", m=100_000, seed=int(rng.integers(2**31)))
        assert abs(est - ref) <= 3 * se


def test_mc_exponential_proportional_to_gaussian_kernel():
    # On the unit sphere the exponential-activation expectation is
    # exp(sigma^2 (1 + t)): a fixed multiple exp(2 sigma^2) of the Gaussian
    # kernel exp(t - 1).  The constant is measured, not assumed.
    X = unit_vectors(6, 4, 21)
    ratios = []
    for i in range(0, 6, 2):
        est = mc_kernel_estimate(X[i], X[i + 1], "exponential", m=400_000, seed=7)
        ratios.append(est / gaussian_eval(X[i], X[i + 1]))
    ratios = np.array(ratios)
    assert np.all(np.abs(ratios / math.exp(2.0) - 1.0) < 0.05)


def test_nngp_reference_anchors():
    assert nngp_reference(1.0, "relu") == pytest.approx(0.5)
    assert nngp_reference(-1.0, "relu") == 0.0
    assert nngp_reference(0.0, "relu") == pytest.approx(1.0 / (2 * math.pi), abs=1e-12)
    assert nngp_reference(0.3, "exponential", sigma_sq=2.0) == pytest.approx(math.exp(2.6))


@given(t=st.floats(-1.0, 1.0), scale=st.floats(0.1, 3.0))
@settings(max_examples=30, deadline=None)
def test_nngp_reference_pair_scaling(t, scale):
    x = np.array([1.0, 0.0])
    y = np.array([t, math.sqrt(max(0.0, 1 - t * t))])
    unit = nngp_reference(t, "relu")
    scaled = nngp_reference_pair(scale * x, scale * y, "relu")
    assert scaled == pytest.approx(scale**2 * unit, rel=1e-9, abs=1e-12)
