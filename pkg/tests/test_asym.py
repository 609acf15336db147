import json

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from hankel_asym.asym import (
    C_KEYS,
    D_KEYS,
    bessel_det_asym,
    c_constants,
    d_constants,
    log_u_integral,
    predict_log_An_inv,
    predict_log_det,
    s_squared_integral,
)
from hankel_asym.bigreal import Precision, required_precision
from hankel_asym.errors import DomainError
from hankel_asym.fredholm import KernelSpec, nystrom_log_det
from hankel_asym.hankel import log_An_inv, log_det_hankel
from hankel_asym.specfun import barnes_log_g_product
from hankel_asym.weights import WeightSpec

from conftest import BUILTIN

P = Precision(128)


def close(a, b, tol=mpf(2) ** -110):
    with mpmath.workprec(256):
        return abs(mpf(a) - mpf(b)) <= tol


class TestDConstants:
    def test_nu0(self):
        d = d_constants(0, P)
        with mpmath.workprec(128):
            assert d[0] == 1 and d[1] == mpf(-3) / 2 and d[2] == 0
            assert close(d[3], mpmath.log(2 * mpmath.pi))
            assert close(d[4], mpf(-1) / 6)
            g = barnes_log_g_product(mpf(-1) / 2, P)
            assert close(d[5], 4 * g / 3 + mpmath.log(mpmath.pi) / 3 - mpmath.log(2) / 18)

    def test_against_mpmath_barnes(self):
        with mpmath.workprec(128):
            for nu in (0.5, 1.5):
                g_half = mpmath.log(mpmath.barnesg(mpf(1) / 2))
                nu_m = mpf(nu)
                ref = (
                    4 * g_half / 3 + (mpf(1) / 3 + nu_m / 2) * mpmath.log(mpmath.pi)
                    + (nu_m / 2 - mpf(1) / 18) * mpmath.log(2) - mpmath.log(mpmath.barnesg(1 + nu_m))
                )
                assert close(d_constants(nu, P)[5], ref, mpf(2) ** -100)

    @pytest.mark.parametrize("nu", [0, 0.5, 1])
    def test_large_n_form_converges(self, nu):
        diffs = [abs(predict_log_An_inv(nu, n, P) - log_An_inv(nu, n, P)) for n in (10, 20, 40)]
        assert diffs[2] < diffs[1] < diffs[0] < 0.05

    def test_domain(self):
        with pytest.raises(DomainError):
            d_constants(-0.6, P)
        with pytest.raises(DomainError):
            predict_log_An_inv(0, 1, P)


class TestCConstants:
    @pytest.mark.parametrize("family,params", BUILTIN)
    def test_structural(self, family, params):
        k = c_constants(WeightSpec(0.5, family, params), P)
        assert (k.c1, k.c2, k.c3, k.c4, k.c6) == (k.d1, k.d2, k.d3, k.d4, k.d5)

    def test_unit(self):
        k = c_constants(WeightSpec(0.5), P)
        assert k.c5 == 0 and k.c7 == k.d6

    @pytest.mark.parametrize("theta", [0.5, -0.5, 2.0])
    def test_gauss_closed_forms(self, theta):
        spec = WeightSpec(0, "gauss_exp", {"theta": theta})
        k = c_constants(spec, P, "quadrature")
        tol = mpf(2) ** -(128 - 48)
        with mpmath.workprec(128):
            assert close(k.c5, theta / mpmath.sqrt(mpmath.pi), tol)
            assert close(k.c7 - k.d6, mpf(theta) ** 2 / (8 * mpmath.pi), tol)

    def test_gauss_nu_term(self):
        spec = WeightSpec(1.0, "gauss_exp", {"theta": 0.5})
        k = c_constants(spec, P)
        with mpmath.workprec(128):
            assert close(k.c7, k.d6 - mpf("0.25") + mpf("0.25") / (8 * mpmath.pi))

    def test_rational_series(self):
        # a_k = (-1)**(k+1) alpha**k / k: log U(y**2) = sum a_k e**(-k y**2)
        alpha = mpf("0.5")
        spec = WeightSpec(0, "rational_exp", {"alpha": 0.5})
        with mpmath.workprec(160):
            a = lambda k: (-1) ** (k + 1) * alpha**k / k
            s2 = mpmath.pi / 2 * mpmath.fsum(
                a(i) * a(j) * mpmath.sqrt(i * j) / (i + j) for i in range(1, 140) for j in range(1, 140)
            )
            c5 = -mpmath.polylog(1.5, -alpha) / mpmath.sqrt(mpmath.pi)
            assert close(s_squared_integral(spec, P), s2, mpf(2) ** -100)
            assert close(2 / mpmath.pi * log_u_integral(spec, P), c5, mpf(2) ** -100)

    def test_continuity_at_zero(self):
        vals = [c_constants(WeightSpec(0, "gauss_exp", {"theta": t}), P) for t in (1e-2, 1e-4, 1e-6)]
        unit = c_constants(WeightSpec(0), P)
        gaps = [abs(v.c5 - unit.c5) + abs(v.c7 - unit.c7) for v in vals]
        assert gaps[2] < gaps[1] < gaps[0]
        rvals = [c_constants(WeightSpec(0, "rational_exp", {"alpha": a}), P, "quadrature") for a in (1e-2, 1e-4)]
        assert abs(rvals[1].c5) < abs(rvals[0].c5)

    def test_method_check(self):
        with pytest.raises(DomainError):
            c_constants(WeightSpec(0), P, "magic")

    def test_serialization(self):
        k = c_constants(WeightSpec(0, "gauss_exp", {"theta": 0.5}), P)
        data = k.to_dict(40)
        assert list(data) == list(C_KEYS + D_KEYS)
        assert all(isinstance(v, str) for v in data.values())
        with mpmath.workprec(128):
            assert close(mpf(data["c5"]), k.c5, mpf("1e-38"))
        json.dumps(data)

    def test_overrides(self):
        k = c_constants(WeightSpec(0), P)
        bad = k.with_overrides(c2=-1)
        assert bad.c2 == -1 and k.c2 == mpf(-3) / 2
        with pytest.raises(DomainError):
            k.with_overrides(c9=1)

    def test_doubling(self):
        spec = WeightSpec(0.5, "gauss_exp", {"theta": -0.5})
        a = c_constants(spec, P, "quadrature")
        b = c_constants(spec, Precision(256), "quadrature")
        with mpmath.workprec(256):
            assert abs(a.c7 - b.c7) < mpf(2) ** -(128 - 32) * abs(b.c7)


class TestPredict:
    def test_unit_formula(self):
        k = c_constants(WeightSpec(0), P)
        with mpmath.workprec(128):
            n = mpf(10)
            ref = n * n * mpmath.log(n) - mpf(3) / 2 * n * n + n * mpmath.log(2 * mpmath.pi) - mpmath.log(n) / 6 + k.d6
            assert close(predict_log_det(k, 10), ref, mpf(2) ** -100)

    @given(st.integers(2, 500), st.floats(-1.0, 2.0))
    @settings(max_examples=20, deadline=None)
    def test_difference_from_unit(self, n, theta):
        k = c_constants(WeightSpec(0.5, "gauss_exp", {"theta": theta}), P)
        u = c_constants(WeightSpec(0.5), P)
        with mpmath.workprec(128):
            diff = predict_log_det(k, n) - predict_log_det(u, n)
            assert close(diff, k.c5 * mpmath.sqrt(n) + (k.c7 - k.d6), mpf(2) ** -100 * n * n)

    def test_domain(self):
        with pytest.raises(DomainError):
            predict_log_det(c_constants(WeightSpec(0), P), 1)

    def test_residual_trend(self):
        spec = WeightSpec(0, "gauss_exp", {"theta": 0.5})
        k = c_constants(spec, P)
        res = []
        for n in (8, 16, 32):
            prec = required_precision(n)
            exact = log_det_hankel(spec, n, prec)
            with mpmath.workprec(prec.bits):
                res.append(abs(exact - predict_log_det(k, n)))
        assert res[2] < res[1] < res[0]


class TestBesselAsym:
    def test_unit(self):
        assert bessel_det_asym(WeightSpec(0), 9) == 0

    def test_gauss_value(self):
        spec = WeightSpec(0, "gauss_exp", {"theta": 0.5})
        with mpmath.workprec(128):
            ref = 2 / mpmath.sqrt(mpmath.pi) + 1 / (32 * mpmath.pi)
            assert close(bessel_det_asym(spec, 16, P), ref)

    def test_trend(self):
        spec = WeightSpec(0, "gauss_exp", {"theta": 0.5})
        gaps = [abs(nystrom_log_det(KernelSpec("bessel_compressed", n, spec)) - float(bessel_det_asym(spec, n))) for n in (4, 16, 64)]
        assert gaps[2] < gaps[1] < gaps[0]

    def test_domain(self):
        with pytest.raises(DomainError):
            bessel_det_asym(WeightSpec(0), 0)


def test_end_to_end_decomposition():
    # log det H_n - [large-n form of log 1/A_n] - log det(I + K_n) -> 0
    spec = WeightSpec(0.5, "rational_exp", {"alpha": 1.0})
    gaps = []
    for n in (4, 8, 16):
        exact = log_det_hankel(spec, n, required_precision(n))
        lag = nystrom_log_det(KernelSpec("laguerre_cd", n, spec))
        with mpmath.workprec(256):
            gaps.append(abs(exact - predict_log_An_inv(0.5, n, P) - lag))
    assert gaps[2] < gaps[1] < gaps[0]
