import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from quasibound._mp import workprec
from quasibound.bestapprox import TargetFunction
from quasibound.errors import BudgetExceeded, DegenerateThreshold, ZeroPolynomial
from quasibound.intervals import IntervalSet
from quasibound.polycore import Poly, sup_norm
from quasibound.sublevel import DyadicCover, e_set, measure_sublevel, nadic_maximal_cover, poly_sublevel, rule_holds


def grid_measure(coeffs, t, points=2_000_001):
    # midpoint-rule quadrature of the indicator of {|P| <= t}
    x = np.linspace(-1, 1, points + 1)
    mid = (x[:-1] + x[1:]) / 2
    vals = np.abs(np.polynomial.chebyshev.chebval(mid, [float(v) for v in coeffs]))
    return 2.0 * np.count_nonzero(vals <= t) / points


def t2_closed_form(t):
    return 2 * (math.sqrt((1 + t) / 2) - math.sqrt((1 - t) / 2))


class TestPolySublevel:
    def test_t2_full(self):
        with pytest.warns(DegenerateThreshold):
            S = poly_sublevel(Poly.chebyshev_t(2), 1)
        assert S.total_length == 2

    @pytest.mark.parametrize("t", [0.1, 0.3, 0.5, 0.9])
    def test_t2_closed_form(self, t):
        S = poly_sublevel(Poly.chebyshev_t(2), t)
        assert len(S) == 2
        assert abs(float(S.total_length) - t2_closed_form(t)) < 1e-15

    def test_constant_above(self):
        assert poly_sublevel(Poly.constant(2), 0.5).total_length == 0

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            poly_sublevel(Poly.monomial(1), 0)

    @settings(max_examples=12, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=41), st.floats(0.01, 0.6))
    def test_against_grid(self, coeffs, frac):
        p = Poly.from_cheb(coeffs)
        if p.is_zero:
            return
        t = float(sup_norm(p).upper) * frac
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateThreshold)
            S = poly_sublevel(p, t)
        assert abs(float(S.total_length) - grid_measure(p.cheb, t, 400_001)) < 5e-5

    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=20), st.floats(0.01, 0.5), st.floats(1.0, 3.0))
    def test_monotone_in_threshold(self, coeffs, t1, ratio):
        p = Poly.from_cheb(coeffs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateThreshold)
            small = poly_sublevel(p, t1)
            big = poly_sublevel(p, t1 * ratio)
        assert small.is_subset(big, slack=mpfr(2) ** -100)
        assert small.total_length <= big.total_length


class TestESet:
    @pytest.mark.parametrize("n,delta", [(3, 0.5), (5, 1.0), (7, 2.0), (12, 0.25)])
    def test_monomial(self, n, delta):
        S = e_set(Poly.monomial(n), delta)
        assert abs(float(S.total_length) - 2 * math.exp(-delta)) < 1e-12

    def test_t4_against_grid(self):
        S = e_set(Poly.chebyshev_t(4), 0.5)
        t = math.exp(-2.0)
        # with x = cos(th): |cos 4th| <= t on 4th in [acos t + k pi, acos(-t) + k pi]
        exact = sum(
            abs(math.cos((k * math.pi + math.acos(t)) / 4) - math.cos((k * math.pi + math.acos(-t)) / 4)) for k in range(4)
        )
        assert abs(float(S.total_length) - exact) < 1e-12
        assert abs(float(S.total_length) - grid_measure([0, 0, 0, 0, 1], t)) < 1e-5

    def test_small_delta(self):
        S = e_set(Poly.chebyshev_t(6), 1e-9)
        assert float(S.total_length) > 1.99

    def test_zero(self):
        with pytest.raises(ZeroPolynomial):
            e_set(Poly.from_cheb([0]), 1)

    @settings(max_examples=10, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=15), st.floats(0.1, 2.0), st.sampled_from([-3.0, 0.25, 7.5]))
    def test_scale_invariant(self, coeffs, delta, alpha):
        p = Poly.from_cheb(coeffs)
        if p.is_zero or p.degree == 0:
            return
        a = e_set(p, delta).total_length
        b = e_set(p * alpha, delta).total_length
        assert abs(a - b) < mpfr(2) ** -100


class TestMeasure:
    def test_identity(self):
        f = TargetFunction.polynomial(Poly.monomial(1))
        lo, hi = measure_sublevel(f, 0.3, tol=1e-9)
        with workprec(256):
            exact = mpfr("0.6")
        assert lo - 1e-60 <= exact <= hi + 1e-60 and hi - lo <= 1e-9

    def test_constant_one(self):
        f = TargetFunction.polynomial(Poly.constant(1))
        lo, hi = measure_sublevel(f, 0.5)
        assert lo == 0 and hi == 0

    def test_t8_cross_check(self):
        f = TargetFunction.series([0] * 8 + [1])
        lo, hi = measure_sublevel(f, 0.2, tol=1e-5)
        exact = poly_sublevel(Poly.chebyshev_t(8), 0.2).total_length
        assert lo <= exact <= hi and hi - lo <= 1e-5

    def test_builtin_abs(self):
        lo, hi = measure_sublevel(TargetFunction.builtin("abs"), 0.25, tol=1e-8)
        assert lo <= 0.5 <= hi

    def test_budget(self):
        f = TargetFunction.series([0] * 8 + [1])
        with pytest.raises(BudgetExceeded) as info:
            measure_sublevel(f, 0.2, tol=1e-12, budget=1000)
        lo, hi = info.value.partial
        assert lo <= hi


def brute_cover(E, N, exponent, depth):
    """Independent oracle: exhaustive level-by-level scan with Fractions."""
    parts = [(Fraction(a), Fraction(b)) for a, b in ((mpq(a), mpq(b)) for a, b in E)]

    def inside(lo, hi):
        return sum(max(Fraction(0), min(b, hi) - max(a, lo)) for a, b in parts)

    def ok(lo, hi):
        m = inside(lo, hi)
        return m > 0 and float(m) ** exponent >= float(hi - lo) * (1 - 1e-12)

    members = []
    frontier = [(0, 0)]
    while frontier:
        level, idx = frontier.pop()
        if level >= depth:
            continue
        for child in range(idx * N, idx * N + N):
            w = Fraction(2, N ** (level + 1))
            lo = -1 + child * w
            if inside(lo, lo + w) == 0:
                continue
            if ok(lo, lo + w):
                members.append((level + 1, child))
            else:
                frontier.append((level + 1, child))
    return sorted(members)


class TestCover:
    def test_full_excludes_root(self):
        cover = nadic_maximal_cover(IntervalSet.full(), 3, 0.9)
        assert cover.members == ((1, 0, 3),)

    def test_single_nadic_interval(self):
        J = IntervalSet.interval(-0.75, -0.625)
        cover = nadic_maximal_cover(J, 4, 0.9)
        assert list((lv, i) for lv, i, _ in cover.intervals()) == [(2, 2)]
        assert cover.covered_length == mpq(1, 8)

    @pytest.mark.parametrize("seed", range(6))
    def test_against_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        pts = np.sort(rng.uniform(-1, 1, 6))
        E = IntervalSet.from_pairs([(pts[0], pts[1]), (pts[2], pts[3]), (pts[4], pts[5])])
        N = int(rng.integers(2, 6))
        expo = float(rng.uniform(0.6, 0.95))
        depth = 6
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cover = nadic_maximal_cover(E, N, expo, depth_limit=depth)
        got = sorted((lv, i) for lv, i, _ in cover.intervals())
        assert got == brute_cover(E, N, expo, depth)

    @pytest.mark.parametrize("seed", range(4))
    def test_maximal_disjoint_chain(self, seed):
        rng = np.random.default_rng(100 + seed)
        pts = np.sort(rng.uniform(-1, 1, 4))
        E = IntervalSet.from_pairs([(pts[0], pts[1]), (pts[2], pts[3])])
        N, expo = 3, 0.8
        cover = nadic_maximal_cover(E, N, expo, depth_limit=12)
        spans = []
        for level, i, (lo, hi) in cover.intervals():
            m = E.intersect_interval(mpfr(lo), mpfr(hi)).total_length
            assert rule_holds(mpq(m), hi - lo, expo)
            if level > 1:
                plo, phi = DyadicCover.bounds(N, level - 1, i // N)
                pm = E.intersect_interval(mpfr(plo), mpfr(phi)).total_length
                assert not rule_holds(mpq(pm), phi - plo, expo)
            spans.append((lo, hi))
        spans.sort()
        assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))
        total = sum(hi - lo for lo, hi in spans)
        assert total == cover.covered_length
        captured = float(cover.captured_length)
        assert abs(captured + float(cover.residual) - float(E.total_length)) < 1e-12
        assert float(total) >= captured**expo / N * (1 - 1e-12)
        assert float(cover.residual) <= cover.residual_bound + 1e-15
