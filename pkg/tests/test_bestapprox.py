import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from quasibound._mp import workprec
from quasibound.bestapprox import (
    Modulus,
    TargetFunction,
    approx_sequence,
    beurling_partial_sum,
    certified_error,
    e_star,
    remez_exchange,
    results_to_csv,
    tail_bound,
)
from quasibound.errors import BadSequence
from quasibound.polycore import Poly


def lp_minimax(func, n, points=3001):
    """Discrete minimax error on a Chebyshev-like grid by linear programming."""
    x = np.cos(np.linspace(0, np.pi, points))
    V = np.polynomial.chebyshev.chebvander(x, n)
    y = func(x)
    m = n + 1
    # variables: coefficients (m), level e; minimize e subject to |V a - y| <= e
    c = np.zeros(m + 1)
    c[-1] = 1.0
    ones = np.ones((points, 1))
    A = np.vstack([np.hstack([V, -ones]), np.hstack([-V, -ones])])
    b = np.concatenate([y, -y])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * m + [(0, None)], method="highs")
    return res.x[-1]


def alternates(f, r):
    vals = [r.residual(f, x) for x in r.alternation_points]
    return all((a > 0) != (b > 0) for a, b in zip(vals, vals[1:])), min(abs(v) for v in vals)


class TestRemez:
    def test_identity_exact(self):
        f = TargetFunction.polynomial(Poly.monomial(1))
        r = remez_exchange(f, 1)
        assert r.error == 0
        assert abs(r.best_poly(mpfr("0.37")) - mpfr("0.37")) < 1e-70

    def test_abs_degree_one(self):
        r = remez_exchange(TargetFunction.builtin("abs"), 1)
        assert abs(r.error - mpfr(0.5)) < 1e-10
        assert abs(r.best_poly(0) - mpfr(0.5)) < 1e-10
        assert abs(r.best_poly(1) - mpfr(0.5)) < 1e-10

    def test_square_degree_one(self):
        f = TargetFunction.polynomial(Poly.monomial(2))
        r = remez_exchange(f, 1)
        assert abs(r.error - mpfr(0.5)) < 1e-10

    @pytest.mark.parametrize("name,n", [("abs", 10), ("exp", 4), ("runge", 8), ("sign_smooth", 12)])
    def test_against_lp_oracle(self, name, n):
        funcs = {
            "abs": np.abs,
            "exp": np.exp,
            "runge": lambda x: 1 / (1 + 25 * x * x),
            "sign_smooth": lambda x: np.tanh(10 * x),
        }
        f = TargetFunction.builtin(name)
        r = remez_exchange(f, n, tol=1e-12)
        # the discrete minimax on a grid is a lower bound, close to the true value
        lower = lp_minimax(funcs[name], n)
        assert lower * (1 - 1e-9) <= float(r.error) <= lower * (1 + 2e-5)

    @pytest.mark.parametrize("name,n", [("abs", 6), ("exp", 5), ("runge", 10), ("sign_smooth", 9)])
    def test_equioscillation(self, name, n):
        f = TargetFunction.builtin(name)
        r = remez_exchange(f, n, tol=1e-10)
        assert len(r.alternation_points) == n + 2
        assert list(r.alternation_points) == sorted(r.alternation_points)
        ok, level = alternates(f, r)
        assert ok and level >= r.error * (1 - 1e-10)
        # de la Vallee Poussin sandwich
        assert r.lower_bound <= r.error

    def test_certified_error_dominates(self):
        f = TargetFunction.builtin("runge")
        r = remez_exchange(f, 6)
        assert certified_error(f, r) >= r.error

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            remez_exchange(TargetFunction.builtin("abs"), -1)
        with pytest.raises(ValueError):
            remez_exchange(TargetFunction.builtin("abs"), 2, tol=0)


class TestSequence:
    def test_t8(self):
        f = TargetFunction.series([0] * 8 + [1])
        errs = [r.error for r in approx_sequence(f, [4, 8])]
        assert abs(errs[0] - 1) < 1e-10 and errs[1] == 0

    def test_identity(self):
        f = TargetFunction.polynomial(Poly.monomial(1))
        errs = [float(r.error) for r in approx_sequence(f, [0, 1, 2])]
        assert abs(errs[0] - 1) < 1e-10 and errs[1:] == [0, 0]

    def test_zero(self):
        f = TargetFunction.polynomial(Poly.from_cheb([0]))
        assert all(r.error == 0 for r in approx_sequence(f, [0, 3, 5]))

    def test_not_increasing(self):
        with pytest.raises(BadSequence):
            approx_sequence(TargetFunction.builtin("abs"), [3, 3])

    def test_errors_nonincreasing(self):
        rs = approx_sequence(TargetFunction.builtin("exp"), [1, 2, 3, 4, 5])
        assert all(b.error <= a.error for a, b in zip(rs, rs[1:]))

    def test_csv_columns(self):
        rs = approx_sequence(TargetFunction.builtin("abs"), [1])
        head, row = results_to_csv(rs).splitlines()
        assert head == "n,E_n,E_star_n,iterations"
        assert row.startswith("1,0.5")


class TestTail:
    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=14), st.integers(0, 3))
    def test_tail_bounds_error(self, coeffs, n):
        f = TargetFunction.series(coeffs)
        r = remez_exchange(f, n, tol=1e-8)
        assert r.error <= tail_bound(coeffs, n) * (1 + 1e-9) + 1e-30


class TestEStar:
    def test_examples(self):
        with workprec(256):
            assert abs(e_star(1e-10, 5) - mpfr(math.exp(-5))) < 1e-15
            assert e_star(0.5, 5) == 0.5
            assert e_star(0, 0) == 1

    @given(st.floats(0, 10), st.integers(0, 60))
    def test_floor(self, err, n):
        v = e_star(err, n)
        assert v >= mpfr(math.exp(-n)) * (1 - 1e-15)
        if err >= math.exp(-n):
            assert v == mpfr(err)


class TestBeurling:
    def test_ones(self):
        assert beurling_partial_sum([1] * 100, 100) == 0

    def test_geometric(self):
        beta = Fraction(3, 10)
        N = 200
        with workprec(256):
            errors = [gmpy2.exp(-mpfr(beta.numerator) / beta.denominator * n) for n in range(1, N + 1)]
            total = beurling_partial_sum(errors, N)
        harmonic = sum(Fraction(1, n) for n in range(1, N + 1))
        assert abs(float(total) - float(beta * harmonic)) < 1e-12

    def test_square_exponent(self):
        with workprec(256):
            errors = [gmpy2.exp(-mpfr(n * n)) for n in range(1, 51)]
            assert abs(beurling_partial_sum(errors, 50) - 50) < 1e-40

    def test_bad(self):
        with pytest.raises(BadSequence):
            beurling_partial_sum([0.5, 0.0], 2)


class TestJson:
    def test_round_trip(self):
        f = TargetFunction.series(["0.5", "0.25", "0.125"], tail="1e-9")
        g = TargetFunction.from_json(f.to_json())
        assert g.kind == f.kind and g.cheb_coeffs == f.cheb_coeffs and g.tail == f.tail

    def test_builtin_holder_modulus(self):
        doc = {"kind": "builtin", "name": "abs", "modulus": {"type": "holder", "constant": 2, "exponent": 0.5}}
        f = TargetFunction.from_json(doc)
        assert f.modulus(0.25) == pytest.approx(1.0)
        assert Modulus("lipschitz", 3.0, 1.0)(0) == 0
