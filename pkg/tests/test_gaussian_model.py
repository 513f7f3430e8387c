import math

import mpmath as mp
import numpy as np
import pytest

from testroll.dist_core import normal_cdf
from testroll.errors import DomainError
from testroll.gaussian_model import (GaussianState, LimitCurve, gaussian_error_prob, gaussian_marginal_ratio,
                                     gaussian_wmb_threshold, limit_curve_derivative, limit_curve_sup,
                                     limit_curve_value)

mp.mp.dps = 40


def mp_curve(k, t):
    t = mp.mpf(t)
    return 2 * mp.ncdf(-t) + k * t * mp.npdf(t)


def golden_max(f, lo, hi, tol=mp.mpf("1e-25")):
    """Golden-section maximiser in high precision, independent of any closed form."""
    invphi = (mp.sqrt(5) - 1) / 2
    a, b = mp.mpf(lo), mp.mpf(hi)
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


class TestErrorProb:
    def test_example(self):
        assert gaussian_error_prob(100, GaussianState(0.2, 1.0)) == pytest.approx(normal_cdf(-1.0), rel=1e-15)

    def test_zero_effect(self):
        assert gaussian_error_prob(50, GaussianState(0.0)) == 0.5

    def test_sign_invariant(self):
        assert gaussian_error_prob(30, GaussianState(-0.3, 2.0)) == gaussian_error_prob(30, GaussianState(0.3, 2.0))

    @pytest.mark.parametrize("kwargs", [dict(tau=0.1, sigma=0.0), dict(tau=math.nan), dict(tau=0.1, sigma=-1)])
    def test_invalid_state(self, kwargs):
        with pytest.raises(DomainError):
            GaussianState(**kwargs)

    def test_invalid_m(self):
        with pytest.raises(DomainError):
            gaussian_error_prob(0, GaussianState(0.1))


class TestLimitCurve:
    def test_origin(self):
        assert limit_curve_value(LimitCurve(3.0), 0.0) == 1.0

    def test_example_k3(self):
        t = math.sqrt(1 / 3)
        want = float(mp_curve(3, mp.sqrt(mp.mpf(1) / 3)))
        assert limit_curve_value(LimitCurve(3.0), t) == pytest.approx(want, abs=1e-14)
        # four-digit rounding 1.1488 is loose; the exact value is 1.148612
        assert limit_curve_value(LimitCurve(3.0), t) == pytest.approx(1.1488, abs=5e-4)

    def test_negative_t(self):
        with pytest.raises(DomainError):
            limit_curve_value(LimitCurve(2.0), -0.1)

    def test_negative_k(self):
        with pytest.raises(DomainError):
            LimitCurve(-1.0)

    @pytest.mark.parametrize("k", [0.5, 2.0, 3.0, 7.0])
    @pytest.mark.parametrize("t", [0.1, 0.8, 2.5])
    def test_derivative_finite_difference(self, k, t):
        c = LimitCurve(k)
        h = 1e-6
        fd = (limit_curve_value(c, t + h) - limit_curve_value(c, t - h)) / (2 * h)
        assert limit_curve_derivative(c, t) == pytest.approx(fd, abs=1e-8)

    @pytest.mark.parametrize("k", [2.5, 3.0, 5.0, 10.0, 100.0])
    def test_sup_against_golden_section(self, k):
        sup, t_star = limit_curve_sup(LimitCurve(k))
        t_hat = golden_max(lambda t: mp_curve(k, t), 0, 5)
        assert abs(t_star - float(t_hat)) < 1e-8
        assert abs(sup - float(mp_curve(k, t_hat))) < 1e-12

    @pytest.mark.parametrize("k", [0.0, 1.0, 2.0])
    def test_sup_is_one_when_k_at_most_two(self, k):
        assert limit_curve_sup(LimitCurve(k)) == (1.0, 0.0)
        ts = np.linspace(0, 8, 2001)
        assert max(limit_curve_value(LimitCurve(k), float(t)) for t in ts) <= 1.0

    def test_for_sizes(self):
        assert LimitCurve.for_sizes(400, 100).k == 3.0
        with pytest.raises(DomainError):
            LimitCurve.for_sizes(400, 0)


class TestRuleOfThirds:
    @pytest.mark.parametrize("N,expected", [(1000, 334), (300, 100), (6, 2), (12, 4), (9, 4)])
    def test_threshold(self, N, expected):
        th = gaussian_wmb_threshold(N)
        assert th.even == expected
        assert th.continuous == pytest.approx(N / 3)

    def test_threshold_rejects(self):
        with pytest.raises(DomainError):
            gaussian_wmb_threshold(0)

    @pytest.mark.parametrize("N", [6, 12, 300, 1000])
    def test_sup_ratio_crosses_at_third(self, N):
        taus = np.linspace(0.0, 4.0, 801)
        for m in range(2, N, 2):
            sup = max(gaussian_marginal_ratio(N, m, GaussianState(float(t))) for t in taus)
            assert (sup <= 1.0 + 1e-12) == (3 * m >= N), (N, m, sup)
