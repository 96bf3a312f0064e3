"""Sublevel sets of polynomials and functions, and maximal N-adic covers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr, mpq

from . import _cheb
from ._mp import to_decimal, to_mpfr, workprec
from .errors import BudgetExceeded, DegenerateThreshold, DepthLimit, EmptySet, ZeroPolynomial
from .intervals import IntervalSet
from .polycore import solve_monotone, sup_norm


def _monotone_piece(c, d, u, v, pu, pv, t):
    """``{x in [u, v]: |P(x)| <= t}`` for P monotone on [u, v]; None if empty."""
    if pu <= pv:
        if pv < -t or pu > t:
            return None
        left = u if pu >= -t else solve_monotone(c, d, -t, u, v)
        right = v if pv <= t else solve_monotone(c, d, t, u, v)
    else:
        if pu < -t or pv > t:
            return None
        left = u if pu <= t else solve_monotone(c, d, t, u, v)
        right = v if pv >= -t else solve_monotone(c, d, -t, u, v)
    return (left, right)


def poly_sublevel(p, threshold):
    """``{x in [-1, 1]: |P(x)| <= threshold}`` as a union of closed intervals.

    The critical points of P split [-1, 1] into pieces on which P is
    monotone; on each piece the set is one interval whose ends solve
    ``P = +-threshold``.
    """
    with workprec(p.precision_bits):
        t = to_mpfr(threshold)
        if t <= 0:
            raise ValueError("threshold must be positive")
        c = list(p.cheb)
        if not any(c[1:]):
            return IntervalSet.full() if abs(c[0]) <= t else IntervalSet.empty()
        d = _cheb.derivative(c)
        points = [mpfr(-1)]
        for x, lo, hi, ok in p.critical_points:
            points.extend([x] if ok else [lo, hi])
        points.append(mpfr(1))
        values = [_cheb.clenshaw(c, x) for x in points]
        if t >= max(abs(v) for v in values):
            warnings.warn("threshold is at least the sup norm; returning [-1, 1]", DegenerateThreshold, stacklevel=2)
            return IntervalSet.full()
        pieces = []
        for u, v, pu, pv in zip(points, points[1:], values, values[1:]):
            if u == v:
                continue
            piece = _monotone_piece(c, d, u, v, pu, pv, t)
            if piece is not None:
                pieces.append(piece)
        return IntervalSet.from_pairs(pieces)


def e_set(p, delta):
    """Points where ``|P| <= exp(-delta * deg P) * ||P||``."""
    if p.is_zero:
        raise ZeroPolynomial("sublevel set of the zero polynomial")
    with workprec(p.precision_bits):
        delta = to_mpfr(delta)
        if delta <= 0:
            raise ValueError("delta must be positive")
        norm = sup_norm(p).upper
        threshold = gmpy2.exp(-delta * p.degree) * norm
    return poly_sublevel(p, threshold)


def measure_sublevel(f, t, tol=1e-6, budget=1 << 22, rtol=None):
    """Bracket ``(lower, upper)`` for the length of ``{|f| <= t}``.

    Cells are classified with the modulus of continuity of ``f``: inside when
    ``|f(mid)| + omega(h/2) <= t``, outside when ``|f(mid)| - omega(h/2) > t``.
    With ``rtol`` the stop rule is also met once the gap is below
    ``rtol * lower``.
    """
    with workprec(f.precision_bits):
        t = to_mpfr(t)
        tol = to_mpfr(tol)
        if t <= 0 or tol <= 0:
            raise ValueError("t and tol must be positive")
        inside = mpfr(0)
        undecided = [(mpfr(-1), mpfr(1))]
        spent = 0
        while True:
            open_len = sum((b - a for a, b in undecided), mpfr(0))
            if open_len <= tol or (rtol is not None and inside > 0 and open_len <= rtol * inside):
                return inside, inside + open_len
            if spent + len(undecided) > budget:
                raise BudgetExceeded(
                    f"cell budget {budget} exhausted with gap {float(open_len):g}",
                    (inside, inside + open_len),
                )
            nxt = []
            for a, b in undecided:
                spent += 1
                mid = (a + b) / 2
                v = abs(f(mid))
                w = f.modulus((b - a) / 2)
                if v + w <= t:
                    inside += b - a
                elif v - w > t:
                    continue
                else:
                    nxt.append((a, mid))
                    nxt.append((mid, b))
            undecided = nxt


# -- N-adic covers ------------------------------------------------------------

def _q(x):
    return x if isinstance(x, type(mpq(0))) else mpq(to_mpfr(x))


@dataclass(frozen=True)
class DyadicCover:
    """Maximal N-adic intervals of [-1, 1] on which E is dense enough.

    ``members`` holds runs ``(level, start, count)``: the intervals of width
    ``2 / N**level`` with indices ``start .. start + count - 1``.
    """

    N: int
    exponent: float
    members: tuple
    covered_length: object
    captured_length: object
    residual: object
    residual_bound: float
    depth_limit: int

    @property
    def member_count(self):
        return sum(count for _, _, count in self.members)

    @staticmethod
    def bounds(N, level, index):
        w = mpq(2, N**level)
        return -1 + index * w, -1 + (index + 1) * w

    def intervals(self):
        for level, start, count in self.members:
            for i in range(start, start + count):
                yield level, i, self.bounds(self.N, level, i)

    def to_json(self, bits=128):
        with workprec(bits):
            return {
                "N": self.N,
                "exponent": self.exponent,
                "members": [list(m) for m in self.members],
                "covered_length": to_decimal(mpfr(self.covered_length), bits),
                "captured_length": to_decimal(mpfr(self.captured_length), bits),
                "residual": to_decimal(mpfr(self.residual), bits),
                "residual_bound": self.residual_bound,
                "depth_limit": self.depth_limit,
            }


def _meets(parts, lo, hi):
    total = mpq(0)
    for a, b in parts:
        if b <= lo or a >= hi:
            continue
        total += min(b, hi) - max(a, lo)
    return total


def rule_holds(length_in_E, width, exponent):
    """``|E cap I| ** exponent >= |I|``, compared in logarithms."""
    if length_in_E <= 0:
        return False
    if length_in_E >= width:
        return True
    bits = max(128, width.denominator.bit_length() + 64)
    with workprec(bits):
        return to_mpfr(exponent) * gmpy2.log(mpfr(length_in_E)) >= gmpy2.log(mpfr(width))


def nadic_maximal_cover(E, N, exponent, depth_limit=40):
    """Maximal N-adic subintervals I of [-1, 1] with ``|E cap I|**exponent >= |I|``.

    The root [-1, 1] itself is never a member.  Mass of E still unassigned at
    ``depth_limit`` is reported as ``residual`` together with the a priori
    bound ``2 * N ** (-depth_limit * (1/exponent - 1))``.
    """
    N = int(N)
    if N < 2:
        raise ValueError("N must be at least 2")
    if not 0 < exponent < 1:
        raise ValueError("exponent must lie in (0, 1)")
    if E.is_empty:
        raise EmptySet("cover of an empty set")
    parts = [(_q(a), _q(b)) for a, b in E if b > a]
    runs = []
    covered = mpq(0)
    captured = mpq(0)
    residual = mpq(0)
    frontier = [(0, 0)]
    while frontier:
        level, idx = frontier.pop()
        lo, hi = DyadicCover.bounds(N, level, idx)
        level += 1
        if level > depth_limit:
            residual += _meets(parts, lo, hi)
            continue
        child_w = (hi - lo) / N
        base = idx * N
        edge = set()
        for a, b in parts:
            a, b = max(a, lo), min(b, hi)
            if b <= a:
                continue
            first = base + int((a - lo) // child_w)
            last = min(base + int((b - lo) // child_w), base + N - 1)
            # children lying wholly inside [a, b] satisfy the rule outright
            full_lo = first if DyadicCover.bounds(N, level, first)[0] >= a else first + 1
            full_hi = last if DyadicCover.bounds(N, level, last)[1] <= b else last - 1
            if full_hi >= full_lo:
                count = full_hi - full_lo + 1
                runs.append((level, full_lo, count))
                covered += count * child_w
                captured += count * child_w
            edge.update(j for j in (first, last) if not full_lo <= j <= full_hi)
        for j in sorted(edge):
            clo, chi = DyadicCover.bounds(N, level, j)
            mass = _meets(parts, clo, chi)
            if mass == 0:
                continue
            if rule_holds(mass, chi - clo, exponent):
                runs.append((level, j, 1))
                covered += chi - clo
                captured += mass
            else:
                frontier.append((level, j))
    runs.sort()
    bound = 2.0 * float(N) ** (-depth_limit * (1.0 / exponent - 1.0))
    if residual > 0:
        warnings.warn(
            f"depth limit {depth_limit} reached; residual {float(residual):.3g} (bound {bound:.3g})",
            DepthLimit,
            stacklevel=2,
        )
    return DyadicCover(N, float(exponent), tuple(runs), covered, captured, residual, bound, depth_limit)
