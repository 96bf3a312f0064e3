import json
import math

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from quasibound._mp import workprec
from quasibound.errors import BudgetExceeded, ConstantMismatch, EvenDegree
from quasibound.flatbuild import (
    build_theorem_b,
    calibrate_c1,
    choose_parameters,
    clamp_psi,
    find_l0,
    flatten_step,
    flatten_step_detailed,
    phi_exact,
    phi_series,
    r_poly,
    u_bound_holds,
    u_poly,
    u_sign,
    verify_state,
)
from quasibound.polycore import Poly, sup_norm


def inv_log(t):
    return 1 / math.log(t + 3)


def exp2(t):
    return math.exp(-2 * t)


class TestPhi:
    def test_n_one_is_identity(self):
        s = phi_series(1, 7)
        assert [int(v) for v in s.coeffs] == [0, 1, 0, 0, 0, 0, 0, 0]

    @pytest.mark.parametrize("n", [1, 3, 5, 21, 99])
    def test_shape(self, n):
        s = phi_series(n, 12)
        assert s.coeffs[0] == 0 and s.coeffs[1] == 1
        assert all(s.coeffs[k] == 0 for k in range(0, 13, 2))

    def test_cubic_coefficient_finite_difference(self):
        # third derivative at 0 by a central difference of radius 1e-3
        with workprec(256):
            h = mpfr("1e-3")
            f = lambda w: phi_exact(3, w)
            d3 = (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3)
            fd = d3 / 6
            got = phi_series(3, 5).coeffs[3]
        assert abs(got - fd) < 1e-5
        # closed form: (1/6)(1 - 1/9)
        assert abs(float(got) - 4 / 27) < 1e-60

    @settings(max_examples=10, deadline=None)
    @given(st.sampled_from([3, 5, 7, 11]), st.floats(-0.4, 0.4))
    def test_partial_sums_converge(self, n, w):
        with workprec(256):
            exact = phi_exact(n, w)
            err = abs(phi_series(n, 60)(mpfr(w)) - exact)
        assert err < 1e-20


class TestU:
    def test_small(self):
        assert [int(v) for v in u_poly(1).mono_coeffs] == [0, 1]
        assert [int(v) for v in u_poly(3).mono_coeffs] == [0, 3, 0, -4]

    def test_even(self):
        with pytest.raises(EvenDegree):
            u_poly(4)

    def test_signed_chebyshev(self):
        for n in range(1, 100, 2):
            s = (-1) ** ((n - 1) // 2)
            assert u_sign(n) == s
            u = u_poly(n)
            T = Poly.chebyshev_t(n)
            assert list(u.cheb) == [s * v for v in T.cheb]

    def test_sine_identity(self):
        with workprec(256):
            for n in (5, 17):
                for t in ("0.3", "-0.8"):
                    t = mpfr(t)
                    assert abs(u_poly(n)(t) - gmpy2.sin(n * gmpy2.asin(t))) < 1e-70

    def test_bound_grid(self):
        assert all(u_bound_holds(n) for n in range(1, 100, 2))


class TestR:
    def test_n_one_cancels(self):
        R = r_poly(1, 4)
        assert (R + Poly.monomial(1)).is_zero

    def test_three_five(self):
        R = r_poly(3, 5)
        assert R.degree <= 15
        with workprec(256):
            ts = [mpfr(k) / 3000 for k in range(1, 1001)]
            C = max(abs(t + R(t)) / ((6 * t) ** 6 / 720) for t in ts)
        assert 0 < C <= 8

    @pytest.mark.parametrize("n,l", [(3, 6), (5, 9), (7, 12)])
    def test_norm(self, n, l):
        R = r_poly(n, l)
        assert R.degree <= l * n
        assert sup_norm(R).upper <= mpfr(8) / n

    def test_l0(self):
        assert find_l0(3, 8.0, l_max=20) == 1


class TestFlatten:
    def test_n_one_branch(self):
        M, P = flatten_step(Poly.monomial(1), 100.0, 10, lambda t: 1 / t)
        assert (P + Poly.monomial(1)).is_zero
        assert P.degree <= M and M > 10

    def test_parameters(self):
        n, l, M = choose_parameters(7.0, 3, 1.0, 10, lambda t: 1 / t, 8.0)
        assert n == 57 and M == l * n * 3
        assert math.lgamma(l + 2) >= math.log(8 * 7) + 2 * M

    def test_budget_reported(self):
        with pytest.raises(BudgetExceeded) as info:
            flatten_step(Poly.monomial(1), 0.5, 10, lambda t: 1 / t)
        assert info.value.partial["n"] == 17 and info.value.partial["M"] > 20000

    def test_cubic_budget(self):
        with pytest.raises(BudgetExceeded):
            flatten_step(Poly.from_mono([0, 3, 0, -4]), 1.0, 10, lambda t: 1 / t)

    def test_needs_zero_at_origin(self):
        with pytest.raises(ValueError):
            flatten_step(Poly.from_mono([1, 1]), 1.0, 3, lambda t: 1 / t)

    @pytest.mark.slow
    def test_genuine_correction(self):
        r = flatten_step_detailed(Poly.monomial(1), 3.0, 10, lambda t: 1 / t)
        assert (r.n, r.l, r.M) == (3, 1088, 3264)
        assert r.P.degree <= r.M
        assert r.norm_P <= 3
        with workprec(r.precision_bits):
            assert r.flat_sup <= gmpy2.exp(mpfr(-2 * r.M))

    @pytest.mark.slow
    def test_mismatch_at_small_constant(self):
        with pytest.raises(ConstantMismatch) as info:
            flatten_step(Poly.monomial(1), 0.4, 10, lambda t: 1 / t, C1=1.0)
        assert float(info.value.measured.norm_P) > 0.4


class TestBuild:
    def test_single_stage(self):
        state = build_theorem_b(inv_log, exp2, 1)
        assert state.degrees == [1]
        assert state.partial_sum(mpfr("0.25")) == mpfr("0.25")
        assert state.failure is None and state.all_pass
        assert not state.psi_clamped

    def test_clamp_recorded(self):
        state = build_theorem_b(inv_log, lambda t: math.exp(-t), 1)
        assert state.psi_clamped
        assert state.to_json()["psi_clamped"] is True
        psi, clamped = clamp_psi(lambda t: math.exp(-t))
        assert clamped and psi(3.0) == math.exp(-6.0)

    def test_failure_keeps_good_stages(self):
        state = build_theorem_b(inv_log, exp2, 3)
        assert state.degrees == [1]
        assert state.failure.startswith("stage 2: BudgetExceeded")
        assert not state.all_pass

    def test_serialized_state(self):
        state = build_theorem_b(inv_log, exp2, 1)
        doc = json.loads(json.dumps(state.to_json()))
        assert doc["stages"][0]["n_j"] == 1
        assert all(ok for _, ok in verify_state(doc, exp2))
        head = state.to_csv().splitlines()[0]
        assert head == "j,n_j,deg_P_j,norm_P_j,flatness_bound,pass"


class TestCalibration:
    def test_small_calibration(self):
        rep = calibrate_c1(n_values=[3, 5], l_max=6, grid=20)
        assert rep.u_bound_ok
        assert rep.lemma_norm > 0 and rep.taylor_remainder > 0
        assert rep.to_json()["pass"] == rep.passed
