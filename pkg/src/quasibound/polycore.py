"""Dual-basis polynomials on [-1, 1] and the classical inequalities.

The Chebyshev coefficients are canonical; the monomial coefficients are
derived on first use at raised precision.  Norms are certified by interval
subdivision on Chebyshev expansions (``sum |b_k|`` bounds the restricted
polynomial), with critical points located by a bracketed Newton iteration.
"""

from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import gmpy2
from gmpy2 import mpfr

from . import _cheb
from ._mp import DEFAULT_PRECISION, to_decimal, to_mpfr, workprec
from .errors import BadMeasure, DegreeOrder, EmptySet, ExtrapolationWarning
from .intervals import IntervalSet


def _strip(coeffs):
    coeffs = list(coeffs)
    while len(coeffs) > 1 and not coeffs[-1]:
        coeffs.pop()
    return coeffs or [mpfr(0)]


@dataclass(frozen=True, eq=False)
class Poly:
    """A real polynomial held in the Chebyshev basis at a fixed precision.

    Use the ``from_*`` constructors; the raw field ``cheb`` must already be a
    tuple of mpfr rounded to ``precision_bits``.
    """

    cheb: tuple
    precision_bits: int = DEFAULT_PRECISION

    # -- construction -----------------------------------------------------
    @classmethod
    def from_cheb(cls, coeffs, precision_bits=DEFAULT_PRECISION):
        with workprec(precision_bits):
            c = _strip(to_mpfr(v) for v in coeffs)
        return cls(tuple(c), int(precision_bits))

    @classmethod
    def from_mono(cls, coeffs, precision_bits=DEFAULT_PRECISION):
        coeffs = list(coeffs) or [0]
        guard = precision_bits + len(coeffs) + 32
        with workprec(guard):
            c = _cheb.mono_to_cheb([to_mpfr(v) for v in coeffs])
        return cls.from_cheb(c, precision_bits)

    @classmethod
    def chebyshev_t(cls, n, precision_bits=DEFAULT_PRECISION):
        return cls.from_cheb([0] * n + [1], precision_bits)

    @classmethod
    def monomial(cls, n, precision_bits=DEFAULT_PRECISION):
        return cls.from_mono([0] * n + [1], precision_bits)

    @classmethod
    def constant(cls, value, precision_bits=DEFAULT_PRECISION):
        return cls.from_cheb([value], precision_bits)

    def with_precision(self, bits):
        return Poly.from_cheb(self.cheb, bits)

    # -- views ------------------------------------------------------------
    @property
    def cheb_coeffs(self):
        return list(self.cheb)

    @cached_property
    def mono_coeffs(self):
        guard = self.precision_bits + len(self.cheb) + 32
        with workprec(guard):
            m = _cheb.cheb_to_mono(list(self.cheb))
        with workprec(self.precision_bits):
            return [mpfr(v) for v in m]

    @cached_property
    def degree(self):
        with workprec(self.precision_bits):
            scale = max(abs(v) for v in self.cheb)
            if not scale:
                return 0
            cut = scale * mpfr(2) ** (-(self.precision_bits // 2))
            for k in range(len(self.cheb) - 1, -1, -1):
                if abs(self.cheb[k]) > cut:
                    return k
        return 0

    @property
    def is_zero(self):
        return not any(self.cheb)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Poly):
            return other
        return Poly.constant(other, self.precision_bits)

    def __add__(self, other):
        other = self._coerce(other)
        bits = max(self.precision_bits, other.precision_bits)
        with workprec(bits):
            return Poly.from_cheb(_cheb.add(list(self.cheb), list(other.cheb)), bits)

    __radd__ = __add__

    def __neg__(self):
        return Poly(tuple(-v for v in self.cheb), self.precision_bits)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        bits = self.precision_bits
        if isinstance(other, Poly):
            bits = max(bits, other.precision_bits)
            with workprec(bits):
                return Poly.from_cheb(_cheb.multiply(list(self.cheb), list(other.cheb)), bits)
        with workprec(bits):
            s = to_mpfr(other)
            return Poly.from_cheb([s * v for v in self.cheb], bits)

    __rmul__ = __mul__

    def __truediv__(self, other):
        with workprec(self.precision_bits):
            s = to_mpfr(other)
            return Poly.from_cheb([v / s for v in self.cheb], self.precision_bits)

    def derivative(self, order=1):
        with workprec(self.precision_bits):
            c = list(self.cheb)
            for _ in range(order):
                c = _cheb.derivative(c)
            return Poly.from_cheb(c, self.precision_bits)

    def __call__(self, x):
        return evaluate(self, x)

    # -- cached analysis --------------------------------------------------
    @cached_property
    def critical_points(self):
        """Sorted locations of the real zeros of P' in [-1, 1].

        Each entry is ``(x, lo, hi, certified)``: ``x`` approximates the
        zero, ``[lo, hi]`` brackets it, ``certified`` is False for clusters
        that subdivision could not separate.
        """
        with workprec(self.precision_bits):
            d = _cheb.derivative(list(self.cheb))
            if not any(d):
                return ()
            dd = _cheb.derivative(d)
            out = []
            for lo, hi, ok in isolate_roots(d, mpfr(-1), mpfr(1)):
                if ok:
                    lo, hi = refine_root(d, dd, lo, hi)
                out.append(((lo + hi) / 2, lo, hi, ok))
            return tuple(out)

    # -- serialization ----------------------------------------------------
    def to_json(self, basis="chebyshev"):
        coeffs = self.cheb_coeffs if basis == "chebyshev" else self.mono_coeffs
        return {
            "basis": basis,
            "degree": self.degree,
            "precision_bits": self.precision_bits,
            "coefficients": [to_decimal(v, self.precision_bits) for v in coeffs],
        }

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        bits = int(doc.get("precision_bits", DEFAULT_PRECISION))
        coeffs = doc["coefficients"]
        with workprec(bits):
            values = [to_mpfr(v) for v in coeffs]
        if doc.get("basis", "chebyshev") == "monomial":
            return cls.from_mono(values, bits)
        if doc.get("basis", "chebyshev") != "chebyshev":
            raise ValueError(f"unknown basis {doc.get('basis')!r}")
        return cls.from_cheb(values, bits)

    def __repr__(self):
        head = ", ".join(f"{float(v):.4g}" for v in self.cheb[:6])
        tail = ", ..." if len(self.cheb) > 6 else ""
        return f"Poly(deg={self.degree}, cheb=[{head}{tail}], bits={self.precision_bits})"


@dataclass(frozen=True)
class NormResult:
    lower: object
    upper: object
    witness_point: object

    @property
    def value(self):
        return (self.lower + self.upper) / 2


# -- root isolation ---------------------------------------------------------

def _noise(coeffs, scale):
    return len(coeffs) * scale * mpfr(2) ** (4 - gmpy2.get_context().precision)


def _excludes_zero(r, noise):
    """True if the series has no zero on [-1, 1] (constant term dominates)."""
    head = abs(r[0])
    rest = _cheb.abs_sum(r) - head
    return head > rest + noise


def isolate_roots(c, a, b, min_width=None):
    """Brackets for the real zeros of the series ``c`` on ``[a, b]``.

    Returns sorted ``(lo, hi, certified)`` triples.  A certified bracket holds
    exactly one simple zero (the derivative keeps a strict sign there and the
    endpoint values differ in sign); uncertified ones are clusters narrower
    than ``min_width``.
    """
    prec = gmpy2.get_context().precision
    if min_width is None:
        min_width = mpfr(2) ** (-(3 * prec) // 4)
    scale = _cheb.abs_sum(c)
    if not scale:
        raise ValueError("zero series has no isolated roots")
    found = []
    stack = [(a, b, _cheb.restrict_to(c, a, b), _noise(c, scale))]
    half = mpfr(1) / 2
    while stack:
        lo, hi, r, noise = stack.pop()
        if _excludes_zero(r, noise):
            continue
        if _cheb.abs_sum(r) <= 4 * noise:
            # indistinguishable from zero at this precision
            found.append((lo, hi, False))
            continue
        dr = _cheb.derivative(r)
        if _excludes_zero(dr, noise * len(r) ** 2):
            gl, gr = _cheb.endpoint_values(r)
            if gl == 0 or gr == 0 or (gl > 0) != (gr > 0):
                found.append((lo, hi, True))
            continue
        if hi - lo <= min_width:
            found.append((lo, hi, False))
            continue
        mid = (lo + hi) / 2
        child_noise = noise + _noise(r, _cheb.abs_sum(r))
        stack.append((mid, hi, _cheb.restrict(r, half, half), child_noise))
        stack.append((lo, mid, _cheb.restrict(r, -half, half), child_noise))
    found.sort(key=lambda t: t[0])
    merged = []
    for lo, hi, ok in found:
        # a zero sitting exactly on a split point is reported by both halves
        if merged and merged[-1][1] == lo:
            plo, _, pok = merged[-1]
            if not (pok or ok) or not _cheb.clenshaw(c, lo):
                merged[-1] = (plo, hi, pok and ok)
                continue
        merged.append((lo, hi, ok))
    return merged


def refine_root(c, dc, lo, hi, width=None, max_iter=None):
    """Shrink a sign-change bracket of ``c`` by safeguarded Newton steps."""
    prec = gmpy2.get_context().precision
    if width is None:
        width = mpfr(2) ** (8 - prec) * max(mpfr(1), abs(lo), abs(hi))
    if max_iter is None:
        max_iter = 4 * prec
    flo = _cheb.clenshaw(c, lo)
    fhi = _cheb.clenshaw(c, hi)
    if not flo:
        return lo, lo
    if not fhi:
        return hi, hi
    pos_lo = flo > 0
    x = (lo + hi) / 2
    dx = dx_old = hi - lo
    for _ in range(max_iter):
        fx = _cheb.clenshaw(c, x)
        if not fx:
            return x, x
        if (fx > 0) == pos_lo:
            lo = x
        else:
            hi = x
        if hi - lo <= width:
            break
        dfx = _cheb.clenshaw(dc, x)
        step = fx / dfx if dfx else None
        if step is not None and abs(step) < width:
            # Newton has converged: try to close the bracket around the estimate
            xc = min(max(x - step, lo), hi)
            a = max(lo, xc - width)
            b = min(hi, xc + width)
            if (_cheb.clenshaw(c, a) > 0) == pos_lo and (_cheb.clenshaw(c, b) > 0) != pos_lo:
                return a, b
        dx_old, dx = dx, None
        if step is not None and lo < x - step < hi and 2 * abs(step) < abs(dx_old):
            dx = step
            x = x - step
        else:
            dx = (hi - lo) / 2
            x = lo + dx
    return lo, hi


def solve_monotone(c, dc, target, lo, hi):
    """Point in [lo, hi] where the monotone series ``c`` equals ``target``."""
    shifted = list(c)
    shifted[0] = shifted[0] - target
    a, b = refine_root(shifted, dc, lo, hi)
    return (a + b) / 2


# -- public operations ------------------------------------------------------

def evaluate(p, x):
    """P(x) by Clenshaw's recurrence; warns when ``|x| > 1``."""
    with workprec(p.precision_bits + 16):
        x = to_mpfr(x)
        if abs(x) > 1:
            warnings.warn(f"evaluating outside [-1, 1] at x={float(x):g}", ExtrapolationWarning, stacklevel=2)
        value = _cheb.clenshaw(list(p.cheb), x)
    with workprec(p.precision_bits):
        return mpfr(value)


def norm_upper(p, a=-1, b=1):
    """Cheap upper bound for max |P| on [a, b]: sum of |restricted coefficients|."""
    with workprec(p.precision_bits):
        a, b = to_mpfr(a), to_mpfr(b)
        if a == b:
            return abs(_cheb.clenshaw(list(p.cheb), a))
        return _cheb.abs_sum(_cheb.restrict_to(list(p.cheb), a, b))


def _as_set(S):
    if S is None:
        return IntervalSet.full()
    if isinstance(S, IntervalSet):
        return S
    a, b = S
    return IntervalSet.interval(a, b)


def sup_norm(p, S=None, tol=None):
    """Certified enclosure of ``max |P|`` over ``S`` (default [-1, 1]).

    Branch and bound: a cell's upper bound is the absolute sum of the
    Chebyshev coefficients of P restricted to it.  Cells on which P' has no
    zero are settled by their endpoint values; cells on which P' is monotone
    are settled by locating the single critical point.
    """
    S = _as_set(S)
    if S.is_empty:
        raise EmptySet("sup_norm over an empty set")
    with workprec(p.precision_bits):
        c = list(p.cheb)
        first = S.intervals[0][0]
        if not any(c):
            return NormResult(mpfr(0), mpfr(0), first)
        scale = _cheb.abs_sum(c)
        tol = scale * mpfr(2) ** (-(p.precision_bits // 2)) if tol is None else to_mpfr(tol)
        d = _cheb.derivative(c)
        dd = _cheb.derivative(d)
        noise = _noise(c, scale)
        best = mpfr(-1)
        witness = first
        settled = mpfr(0)
        heap = []
        counter = 0

        def consider(x):
            nonlocal best, witness
            v = abs(_cheb.clenshaw(c, x))
            if v > best:
                best, witness = v, x
            return v

        for a, b in S:
            consider(a)
            consider(b)
            if a < b:
                r = _cheb.restrict_to(c, a, b)
                heapq.heappush(heap, (-_cheb.abs_sum(r), counter, a, b, r))
                counter += 1
        half = mpfr(1) / 2
        while heap:
            ub = -heap[0][0]
            if ub <= best + tol:
                break
            _, _, a, b, r = heapq.heappop(heap)
            dr = _cheb.derivative(r)
            if _excludes_zero(dr, noise * len(r) ** 2):
                settled = max(settled, consider(a), consider(b))
                continue
            ddr = _cheb.derivative(dr)
            if _excludes_zero(ddr, noise * len(r) ** 4):
                gl, gr = _cheb.endpoint_values(dr)
                top = max(consider(a), consider(b))
                if gl == 0 or gr == 0 or (gl > 0) != (gr > 0):
                    lo, hi = refine_root(d, dd, a, b)
                    x = (lo + hi) / 2
                    slope = max(abs(_cheb.clenshaw(d, lo)), abs(_cheb.clenshaw(d, hi)))
                    top = max(top, consider(x) + (hi - lo) * slope)
                settled = max(settled, top)
                continue
            mid = (a + b) / 2
            consider(mid)
            for lo, hi, alpha in ((a, mid, -half), (mid, b, half)):
                rr = _cheb.restrict(r, alpha, half)
                heapq.heappush(heap, (-_cheb.abs_sum(rr), counter, lo, hi, rr))
                counter += 1
        upper = max(best, settled, -heap[0][0] if heap else best)
        return NormResult(best, upper, witness)


def coeff_norm(p):
    """Sum of the absolute values of the monomial coefficients."""
    with workprec(p.precision_bits):
        total = mpfr(0)
        for v in p.mono_coeffs:
            total += abs(v)
        return total


def vmarkov_bound(n, k, norm=1):
    """``(1/2) (2/(k+1))^(k+1) n^(2k+2) * norm``: bound on ``||P^(k+1)||`` for deg P <= n."""
    n = int(n)
    k = int(k)
    if n < 1 or k < 0:
        raise DegreeOrder(f"need n >= 1 and k >= 0, got n={n}, k={k}")
    if k + 1 > n:
        raise DegreeOrder(f"derivative order {k + 1} exceeds degree {n}")
    m = k + 1
    return mpfr(gmpy2.mpq(2**m * n ** (2 * m), 2 * m**m)) * to_mpfr(norm)


def crude_remez_bound(k, measE, lenI):
    """``(4 |I| / |E|)^k``, the factor in ``||P||_I <= (4 eta)^k ||P||_E``."""
    measE = to_mpfr(measE)
    lenI = to_mpfr(lenI)
    if measE <= 0:
        raise BadMeasure(f"|E| must be positive, got {float(measE):g}")
    slack = lenI * mpfr(2) ** (-(gmpy2.get_context().precision // 2))
    if measE > lenI + slack:
        raise BadMeasure(f"|E|={float(measE):g} exceeds |I|={float(lenI):g}")
    if lenI > 2:
        raise BadMeasure(f"|I| must lie in (0, 2], got {float(lenI):g}")
    return (4 * lenI / measE) ** int(k)


def taylor_truncate(p, x0, k, length=2):
    """Taylor polynomial of degree ``k`` at ``x0`` and its Lagrange remainder bound.

    The bound is ``((e/2) * length / (k+1))^(k+1) * ||P^(k+1)||_[-1,1]``, which
    dominates ``|P - P_k|`` on any interval of the given length centred at
    ``x0`` and contained in [-1, 1].
    """
    k = int(k)
    if k < 0:
        raise DegreeOrder("k must be nonnegative")
    bits = p.precision_bits
    with workprec(bits + 32):
        x0 = to_mpfr(x0)
        c = list(p.cheb)
        taylor = []
        fact = mpfr(1)
        for j in range(k + 1):
            if j:
                fact *= j
            taylor.append(_cheb.clenshaw(c, x0) / fact)
            c = _cheb.derivative(c)
        mono = [mpfr(0)] * (k + 1)
        for j, tj in enumerate(taylor):
            if not tj:
                continue
            for i in range(j + 1):
                mono[i] += tj * math.comb(j, i) * (-x0) ** (j - i)
        pk = Poly.from_mono(mono, bits)
        if not any(c):
            bound = mpfr(0)
        else:
            norm = sup_norm(Poly.from_cheb(c, bits)).upper
            e = gmpy2.exp(mpfr(1))
            bound = (e / 2 * to_mpfr(length) / (k + 1)) ** (k + 1) * norm
    with workprec(bits):
        return pk, mpfr(bound)
