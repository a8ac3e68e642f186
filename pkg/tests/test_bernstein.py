import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from lifshitz.bernstein import (
    drift, heat_kernel_at_zero, mixture, moment_bound_check, moment_integral,
    parse_bernstein, phi_eval, relativistic, scaling_window_check, sphere_area,
    stable, stable_log, stable_with_drift,
)
from lifshitz.errors import DomainError

ALL_SPECS = [
    drift(),
    drift(2.5),
    stable(1.0),
    stable(0.5),
    stable(1.7),
    mixture([1.0, 0.5]),
    stable_with_drift(1.0, 0.5),
    relativistic(1.0, 1.0),
    relativistic(0.6, 2.0),
    stable_log(1.0, 0.5),
    stable_log(1.5, -0.5),
]
IDS = [s.to_text() for s in ALL_SPECS]


def stable_kernel_at_zero(alpha, t, d):
    # int_0^inf exp(-t r^alpha) r^(d-1) dr = Gamma(d/alpha) / (alpha t^(d/alpha))
    return (2 * math.pi) ** -d * sphere_area(d) * special.gamma(d / alpha) / (alpha * t ** (d / alpha))


def relativistic_kernel_at_zero_1d(m, t):
    # (1/pi) int_0^inf exp(-t(sqrt(k^2+m^2)-m)) dk = (m/pi) e^(mt) K_1(mt)
    return m / math.pi * math.exp(m * t) * special.kv(1, m * t)


class TestPhiEval:
    def test_stable_square_root(self):
        assert phi_eval(stable(1.0), 4.0) == pytest.approx(2.0, rel=1e-15)

    def test_relativistic_arithmetic(self):
        assert phi_eval(relativistic(1.0, 1.0), 3.0) == pytest.approx(1.0, rel=1e-14)

    def test_mixture_sum_of_powers(self):
        assert phi_eval(mixture([1.0, 0.5]), 16.0) == pytest.approx(6.0, rel=1e-15)

    def test_stable_log_closed_form(self):
        lam = 3.0
        assert phi_eval(stable_log(1.0, 0.5), lam) == pytest.approx(
            lam**0.5 * math.log1p(lam) ** 0.25, rel=1e-15)

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_nonpositive_rejected(self, lam):
        with pytest.raises(DomainError):
            phi_eval(stable(1.0), lam)

    def test_relativistic_small_argument_no_cancellation(self):
        spec = relativistic(1.0, 1.0)
        # (1+l)^(1/2) - 1 = l/2 - l^2/8 + ...
        assert phi_eval(spec, 1e-12) == pytest.approx(0.5e-12, rel=1e-9)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=IDS)
def test_zero_at_origin(spec):
    assert float(spec(0.0)) == 0.0
    assert float(spec(1e-300)) < 1e-50


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ALL_SPECS),
       st.floats(1e-8, 1e8), st.floats(1e-8, 1e8))
def test_monotone(spec, a, b):
    lo, hi = min(a, b), max(a, b)
    assert phi_eval(spec, lo) <= phi_eval(spec, hi)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=IDS)
def test_canonical_metadata_holds_on_window(spec):
    top = min(spec.lambda0, 1e6)
    grid = np.geomspace(1e-9, top * (1 - 1e-9), 200)
    assert scaling_window_check(spec, grid).ok


@pytest.mark.parametrize("spec", ALL_SPECS, ids=IDS)
def test_grows_faster_than_log(spec):
    lam = np.geomspace(1e3, 1e9, 25)
    K = spec(lam) / np.log(lam)
    assert np.all(np.diff(K) > 0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=IDS)
def test_high_frequency_floor(spec):
    c, p, a = spec.high_frequency_floor()
    lam = np.geomspace(1.0, 1e12, 300)
    assert np.all(spec(lam) >= c * lam**p - a - 1e-12 * spec(lam))


class TestScalingWindow:
    def test_exact_power(self):
        res = scaling_window_check(stable(1.0), [1e-3, 0.5, 10.0])
        assert res.ok and res.min_ratio == pytest.approx(1.0) and res.max_ratio == pytest.approx(1.0)

    def test_relativistic_user_constants(self):
        spec = relativistic(1.0, 1.0, c1=0.25, c2=0.5)
        res = scaling_window_check(spec, np.geomspace(1e-6, 0.999, 100))
        assert res.ok
        assert res.max_ratio == pytest.approx(0.5, rel=1e-3)

    def test_wrong_order_detected(self):
        spec = stable(1.0, order=2.0, lambda0=1.0)
        res = scaling_window_check(spec, np.geomspace(1e-4, 0.5, 20))
        assert not res.ok
        assert res.worst_ratio == pytest.approx(100.0)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            scaling_window_check(stable(1.0), [])

    def test_grid_outside_window(self):
        with pytest.raises(DomainError):
            scaling_window_check(mixture([1.0, 0.5]), [2.0])


class TestHeatKernelAtZero:
    def test_gaussian_2d(self):
        assert heat_kernel_at_zero(drift(), 1.0, 2) == pytest.approx(1 / (4 * math.pi), rel=1e-10)

    def test_cauchy(self):
        assert heat_kernel_at_zero(stable(1.0), 1.0, 1) == pytest.approx(1 / math.pi, rel=1e-10)

    def test_gaussian_1d(self):
        assert heat_kernel_at_zero(drift(), 2.0, 1) == pytest.approx((8 * math.pi) ** -0.5, rel=1e-10)

    @pytest.mark.parametrize("alpha,d,t", [(0.3, 1, 10.0), (0.5, 3, 2.0), (1.5, 2, 0.1), (2.0, 3, 1e-3),
                                           (0.8, 2, 1e4)])
    def test_stable_closed_form(self, alpha, d, t):
        assert heat_kernel_at_zero(stable(alpha), t, d) == pytest.approx(
            stable_kernel_at_zero(alpha, t, d), rel=1e-9)

    @pytest.mark.parametrize("m,t", [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0), (1.0, 50.0)])
    def test_relativistic_bessel(self, m, t):
        assert heat_kernel_at_zero(relativistic(1.0, m), t, 1) == pytest.approx(
            relativistic_kernel_at_zero_1d(m, t), rel=1e-9)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=IDS)
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_positive_nonincreasing(self, spec, d):
        vals = [heat_kernel_at_zero(spec, t, d) for t in np.geomspace(1e-2, 1e3, 8)]
        assert all(v > 0 for v in vals)
        assert all(b <= a * (1 + 1e-10) for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=IDS)
    def test_diagonal_bound_bounded(self, spec):
        d = 2
        ts = np.geomspace(1.0, 1e4, 9)
        scaled = np.array([heat_kernel_at_zero(spec, t, d) * t ** (d / spec.alpha) for t in ts])
        # bounded above and away from zero: no drift over four decades
        assert scaled.max() / scaled.min() < 50

    def test_bad_t(self):
        with pytest.raises(DomainError):
            heat_kernel_at_zero(drift(), 0.0, 1)


class TestMoments:
    def test_drift_half(self):
        assert moment_integral(drift(), 0.5, 4.0) == pytest.approx(0.5, rel=1e-10)

    def test_stable_half(self):
        assert moment_integral(stable(1.0), 0.5, 2.0) == pytest.approx(0.5641895835477563, rel=1e-10)

    def test_drift_one(self):
        assert moment_integral(drift(), 1.0, 10.0) == pytest.approx(0.1, rel=1e-10)

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("t", [0.1, 1.0, 37.0, 1e4])
    def test_subordination_identity_drift(self, gamma, t):
        assert moment_integral(drift(), gamma, t) == pytest.approx(t**-gamma, rel=1e-9)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_stable_gamma_half_alpha(self, alpha):
        # Phi(lam^(2/alpha)) = lam, so the integral is 1/t
        for t in (1.0, 10.0, 1e4):
            assert moment_integral(stable(alpha), alpha / 2, t) == pytest.approx(
                1 / (special.gamma(alpha / 2 + 1) * t), rel=1e-9)

    def test_bound_stable(self):
        ok, C = moment_bound_check(stable(1.0), 0.5, 1.0, np.geomspace(1, 1e4, 9))
        assert ok and C == pytest.approx(1 / special.gamma(1.5), rel=1e-9)

    def test_bound_drift(self):
        ok, C = moment_bound_check(drift(), 1.0, 1.0, np.geomspace(1, 1e4, 9))
        assert ok and C == pytest.approx(1.0, rel=1e-9)

    def test_bound_small_alpha(self):
        # oracle: E[S_t^-gamma] = Gamma(1 + gamma/a) t^(-gamma/a) / Gamma(1 + gamma) for Phi = lam^a
        alpha, gamma = 0.5, 0.25
        ok, C = moment_bound_check(stable(alpha), gamma, 1.0, np.geomspace(1, 1e4, 9))
        a = alpha / 2
        assert ok
        assert C == pytest.approx(special.gamma(1 + gamma / a) / special.gamma(1 + gamma), rel=1e-8)

    def test_bound_with_supplied_constant(self):
        ok, _ = moment_bound_check(stable(1.0), 0.5, 1.0, [1.0, 10.0], constant=1.0)
        assert not ok

    def test_grid_below_t0(self):
        with pytest.raises(DomainError):
            moment_bound_check(drift(), 1.0, 2.0, [1.0, 3.0])


class TestTextForm:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=IDS)
    def test_round_trip(self, spec):
        again = parse_bernstein(spec.to_text())
        assert again == spec
        assert again.to_text() == spec.to_text()

    @pytest.mark.parametrize("text", [
        "stable(alpha=1.0)", "relativistic(theta=1.0,m=1.0)", "drift(b=1.0)",
        "mixture(alphas=[1.0,0.5])", "stablelog(alpha=1.0,beta=0.5)",
    ])
    def test_canonical_examples(self, text):
        assert parse_bernstein(text).to_text() == text

    def test_override_serialized(self):
        spec = relativistic(1.0, 1.0, c1=0.25)
        assert "c1=0.25" in spec.to_text()
        assert parse_bernstein(spec.to_text()).c1 == 0.25

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-3, 2.0), st.floats(1e-3, 10.0))
    def test_round_trip_bits(self, alpha, b):
        spec = stable_with_drift(alpha, b)
        assert parse_bernstein(spec.to_text()) == spec

    @pytest.mark.parametrize("text", ["cauchy(alpha=1.0)", "stable(beta=1.0)", "stable(alpha=3.0)", "stable"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_bernstein(text)
