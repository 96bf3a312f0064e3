"""Best uniform polynomial approximation by the Remez exchange."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from . import _cheb
from ._mp import DEFAULT_PRECISION, to_decimal, to_mpfr, workprec
from .errors import BadSequence, NoConvergence
from .polycore import Poly, sup_norm

BUILTINS = ("abs", "exp", "runge", "sign_smooth")
KINDS = ("chebyshev_series", "builtin", "polynomial")


@dataclass(frozen=True)
class Modulus:
    """Modulus of continuity ``omega(h) = constant * h**exponent``."""

    kind: str = "lipschitz"
    constant: float = 1.0
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("lipschitz", "holder"):
            raise ValueError(f"unknown modulus type {self.kind!r}")
        if self.kind == "lipschitz" and self.exponent != 1:
            raise ValueError("a Lipschitz modulus has exponent 1")
        if not 0 < self.exponent <= 1 or self.constant < 0:
            raise ValueError("need constant >= 0 and exponent in (0, 1]")

    def __call__(self, h):
        h = to_mpfr(h)
        if h <= 0:
            return mpfr(0)
        if self.exponent == 1:
            return to_mpfr(self.constant) * h
        return to_mpfr(self.constant) * h ** to_mpfr(self.exponent)

    def to_json(self):
        return {"type": self.kind, "constant": self.constant, "exponent": self.exponent}

    @classmethod
    def from_json(cls, doc):
        return cls(doc.get("type", "lipschitz"), float(doc["constant"]), float(doc.get("exponent", 1.0)))


_BUILTIN_LIPSCHITZ = {"abs": 1.0, "exp": math.e, "runge": 3.25, "sign_smooth": 10.0}


def _builtin_eval(name, x):
    if name == "abs":
        return abs(x)
    if name == "exp":
        return gmpy2.exp(x)
    if name == "runge":
        return 1 / (1 + 25 * x * x)
    if name == "sign_smooth":
        return gmpy2.tanh(10 * x)
    raise ValueError(f"unknown builtin {name!r}")


def _series_lipschitz(coeffs):
    # |T_k'| <= k^2 on [-1, 1]
    return sum(k * k * abs(float(a)) for k, a in enumerate(coeffs))


@dataclass(frozen=True, eq=False)
class TargetFunction:
    """A continuous function on [-1, 1] with a stated modulus of continuity.

    For ``chebyshev_series`` the stored coefficients are a truncation and
    ``tail`` bounds the discarded part in sup norm.
    """

    kind: str
    cheb_coeffs: tuple | None = None
    builtin_name: str | None = None
    modulus: Modulus = field(default_factory=Modulus)
    tail: object = 0
    precision_bits: int = DEFAULT_PRECISION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "builtin" and self.builtin_name not in BUILTINS:
            raise ValueError(f"unknown builtin {self.builtin_name!r}")
        if self.kind != "builtin" and self.cheb_coeffs is None:
            raise ValueError(f"{self.kind} needs coefficients")

    @classmethod
    def series(cls, coeffs, tail=0, precision_bits=DEFAULT_PRECISION, modulus=None):
        with workprec(precision_bits):
            c = tuple(to_mpfr(v) for v in coeffs)
            tail = to_mpfr(tail)
        if modulus is None:
            modulus = Modulus("lipschitz", _series_lipschitz(c) + 2 * float(tail), 1.0)
        return cls("chebyshev_series", c, None, modulus, tail, precision_bits)

    @classmethod
    def lacunary(cls, terms, precision_bits=DEFAULT_PRECISION):
        """Series ``sum coeff * T_n`` from a mapping ``{n: coeff}``."""
        top = max(terms)
        coeffs = [0] * (top + 1)
        for n, a in terms.items():
            coeffs[n] = a
        return cls.series(coeffs, precision_bits=precision_bits)

    @classmethod
    def polynomial(cls, p):
        modulus = Modulus("lipschitz", _series_lipschitz(p.cheb), 1.0)
        return cls("polynomial", tuple(p.cheb), None, modulus, mpfr(0), p.precision_bits)

    @classmethod
    def builtin(cls, name, precision_bits=DEFAULT_PRECISION):
        if name not in BUILTINS:
            raise ValueError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
        return cls("builtin", None, name, Modulus("lipschitz", _BUILTIN_LIPSCHITZ[name], 1.0), 0, precision_bits)

    @property
    def is_polynomial(self):
        return self.kind != "builtin" and not self.tail

    @property
    def series_degree(self):
        if self.cheb_coeffs is None:
            return None
        return Poly.from_cheb(self.cheb_coeffs, self.precision_bits).degree

    def as_poly(self):
        if self.cheb_coeffs is None:
            raise TypeError("builtin target has no polynomial form")
        return Poly.from_cheb(self.cheb_coeffs, self.precision_bits)

    def __call__(self, x):
        x = to_mpfr(x)
        if self.kind == "builtin":
            return _builtin_eval(self.builtin_name, x)
        return _cheb.clenshaw(list(self.cheb_coeffs), x)

    def to_json(self):
        doc = {"kind": self.kind, "modulus": self.modulus.to_json(), "precision_bits": self.precision_bits}
        if self.kind == "builtin":
            doc["name"] = self.builtin_name
        else:
            doc["coefficients"] = [to_decimal(v, self.precision_bits) for v in self.cheb_coeffs]
            if self.tail:
                doc["tail"] = to_decimal(self.tail, self.precision_bits)
        return doc

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        bits = int(doc.get("precision_bits", DEFAULT_PRECISION))
        modulus = Modulus.from_json(doc["modulus"]) if "modulus" in doc else None
        kind = doc.get("kind")
        if kind == "builtin":
            f = cls.builtin(doc["name"], bits)
            return f if modulus is None else cls("builtin", None, f.builtin_name, modulus, 0, bits)
        if kind == "polynomial":
            f = cls.polynomial(Poly.from_cheb(doc["coefficients"], bits))
            if modulus is not None:
                f = cls("polynomial", f.cheb_coeffs, None, modulus, mpfr(0), bits)
            return f
        if kind == "chebyshev_series":
            return cls.series(doc["coefficients"], doc.get("tail", 0), bits, modulus)
        raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class ApproxResult:
    n: int
    error: object
    best_poly: Poly
    alternation_points: tuple
    iterations: int
    lower_bound: object = None
    converged: bool = True

    @property
    def bracket(self):
        return (self.lower_bound, self.error)

    def residual(self, f, x):
        return f(x) - self.best_poly(x)


# -- exchange internals -----------------------------------------------------

def _cheb_row(n, x):
    row = [mpfr(1)]
    if n >= 1:
        row.append(x)
    for _ in range(2, n + 1):
        row.append(2 * x * row[-1] - row[-2])
    return row


def _solve(a, b):
    """Gaussian elimination with partial pivoting, in place."""
    m = len(b)
    for col in range(m):
        piv = max(range(col, m), key=lambda i: abs(a[i][col]))
        if not a[piv][col]:
            raise ZeroDivisionError("singular reference system")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for i in range(col + 1, m):
            factor = a[i][col] / a[col][col]
            if factor:
                row_i, row_c = a[i], a[col]
                for j in range(col, m):
                    row_i[j] -= factor * row_c[j]
                b[i] -= factor * b[col]
    x = [mpfr(0)] * m
    for i in range(m - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, m):
            s -= a[i][j] * x[j]
        x[i] = s / a[i][i]
    return x


def _levelled_poly(f, ref, n):
    rows = []
    rhs = []
    for i, x in enumerate(ref):
        rows.append(_cheb_row(n, x) + [mpfr(-1) ** i])
        rhs.append(f(x))
    sol = _solve(rows, rhs)
    return sol[:-1], sol[-1]


_INVPHI = (math.sqrt(5) - 1) / 2


def _golden_max(g, a, b, steps):
    invphi = mpfr(_INVPHI)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(steps):
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    return (c, gc) if gc >= gd else (d, gd)


def _extrema(resid, grid, golden_steps):
    """Signed local extrema of the residual, one per sign run of the grid."""
    vals = [resid(x) for x in grid]
    runs = []
    i = 0
    m = len(grid)
    while i < m:
        if not vals[i]:
            i += 1
            continue
        sign = vals[i] > 0
        j = i
        best = i
        while j + 1 < m and (vals[j + 1] > 0) == sign and vals[j + 1]:
            j += 1
            if abs(vals[j]) > abs(vals[best]):
                best = j
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, m - 1)]
        x, v = grid[best], abs(vals[best])
        if lo < hi:
            xg, vg = _golden_max(lambda t: abs(resid(t)), lo, hi, golden_steps)
            if vg > v and (resid(xg) > 0) == sign:
                x, v = xg, vg
        if runs and runs[-1][2] == sign:
            # runs split only by exact zeros of the residual: keep the larger
            if v > runs[-1][1]:
                runs[-1] = (x, v, sign)
        else:
            runs.append((x, v, sign))
        i = j + 1
    return runs


def _pick_window(ext, size):
    """Thin alternating extrema to ``size`` points, dropping the smallest first.

    An interior point goes together with its smaller neighbour so that the
    signs keep alternating; an odd excess is removed at an end.
    """
    ext = list(ext)
    while len(ext) > size:
        if (len(ext) - size) % 2:
            ext.pop(0 if ext[0][1] <= ext[-1][1] else -1)
            continue
        i = min(range(len(ext)), key=lambda k: ext[k][1])
        if i == 0 or i == len(ext) - 1:
            del ext[i]
            continue
        j = i - 1 if ext[i - 1][1] <= ext[i + 1][1] else i + 1
        del ext[max(i, j)]
        del ext[min(i, j)]
    return ext


def _single_exchange(ref, resid, x_new):
    """Swap ``x_new`` into the reference keeping sign alternation."""
    s_new = resid(x_new) > 0
    ref = list(ref)
    signs = [resid(x) > 0 for x in ref]
    k = 0
    while k < len(ref) and ref[k] < x_new:
        k += 1
    if k == 0:
        if signs[0] == s_new:
            ref[0] = x_new
        else:
            ref = [x_new] + ref[:-1]
    elif k == len(ref):
        if signs[-1] == s_new:
            ref[-1] = x_new
        else:
            ref = ref[1:] + [x_new]
    else:
        if signs[k - 1] == s_new:
            ref[k - 1] = x_new
        else:
            ref[k] = x_new
    return ref


def _grid(n, bits):
    m = max(24 * (n + 2), 400)
    pi = gmpy2.const_pi()
    pts = {mpfr(-1), mpfr(1)}
    for j in range(m + 1):
        pts.add(-gmpy2.cos(pi * j / m))
        pts.add(mpfr(2 * j - m) / m)
    return sorted(pts)


def remez_exchange(f, n, tol=1e-10, max_iter=60, precision_bits=None):
    """Best uniform approximation of ``f`` from polynomials of degree <= n."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    tol = float(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    bits = precision_bits or f.precision_bits
    with workprec(bits):
        pi = gmpy2.const_pi()
        ref = sorted(-gmpy2.cos(pi * j / (n + 1)) for j in range(n + 2))
        if f.is_polynomial and f.series_degree <= n:
            p = Poly.from_cheb(f.cheb_coeffs[: n + 1], bits)
            return ApproxResult(n, mpfr(0), p, tuple(ref), 0, mpfr(0), True)
        grid = _grid(n, bits)
        scale = max(abs(f(x)) for x in grid)
        floor = max(scale, mpfr(1)) * mpfr(2) ** (-(bits // 2))
        golden_steps = 90
        state = None
        for it in range(1, max_iter + 1):
            try:
                b, level = _levelled_poly(f, ref, n)
            except ZeroDivisionError as exc:
                raise NoConvergence(f"degenerate reference at iteration {it}", max_iter, None, state) from exc

            def resid(x, b=b):
                return f(x) - _cheb.clenshaw(b, x)

            ext = _extrema(resid, sorted(set(grid) | set(ref)), golden_steps)
            top = max((e[1] for e in ext), default=mpfr(0))
            lower = min(abs(resid(x)) for x in ref)
            state = ApproxResult(n, top, Poly.from_cheb(b, bits), tuple(ref), it, lower, False)
            if top <= floor:
                return ApproxResult(n, top, state.best_poly, tuple(ref), it, mpfr(0), True)
            if len(ext) >= n + 2:
                window = _pick_window(ext, n + 2)
                new_ref = [e[0] for e in window]
            else:
                x_top = max(ext, key=lambda e: e[1])[0]
                new_ref = _single_exchange(ref, resid, x_top)
            new_lower = min(abs(resid(x)) for x in new_ref)
            alternates = all((resid(new_ref[i]) > 0) != (resid(new_ref[i + 1]) > 0) for i in range(len(new_ref) - 1))
            if alternates and (top - new_lower) / top <= tol:
                return ApproxResult(n, top, state.best_poly, tuple(new_ref), it, new_lower, True)
            ref = new_ref
        raise NoConvergence(
            f"remez exchange for n={n} did not reach tol={tol:g} in {max_iter} iterations",
            max_iter,
            (state.lower_bound, state.error),
            state,
        )


def certified_error(f, result):
    """Rigorous upper bound for ``||f - P||`` (P = result.best_poly).

    Exact for polynomial and series targets (certified sup norm of the
    difference plus the series tail); for builtins, a fine grid plus the
    modulus of the residual.
    """
    bits = result.best_poly.precision_bits
    with workprec(bits):
        if f.kind != "builtin":
            diff = Poly.from_cheb(f.cheb_coeffs, bits) - result.best_poly
            return sup_norm(diff).upper + to_mpfr(f.tail)
        m = 4096
        h = mpfr(2) / m
        top = max(abs(f(x) - result.best_poly(x)) for x in (mpfr(-1) + h * j for j in range(m + 1)))
        lip_p = _series_lipschitz(result.best_poly.cheb)
        return top + f.modulus(h / 2) + to_mpfr(lip_p) * h / 2


def approx_sequence(f, degrees, tol=1e-10, max_iter=60):
    """One ``ApproxResult`` per degree; failures keep their best bracket."""
    degrees = [int(d) for d in degrees]
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise BadSequence("degrees must be strictly increasing")
    out = []
    for n in degrees:
        try:
            out.append(remez_exchange(f, n, tol, max_iter))
        except NoConvergence as exc:
            warnings.warn(str(exc), stacklevel=2)
            if exc.result is not None:
                out.append(exc.result)
    for prev, cur in zip(out, out[1:]):
        if cur.error > prev.error * (1 + 2 * tol) + mpfr(2) ** (-(cur.best_poly.precision_bits // 2)):
            warnings.warn(f"E_n increased between n={prev.n} and n={cur.n}", stacklevel=2)
    return out


def e_star(error, n):
    """``max(error, e^(-n))``."""
    error = to_mpfr(error)
    if error < 0 or n < 0:
        raise ValueError("need error >= 0 and n >= 0")
    return max(error, gmpy2.exp(-to_mpfr(n)))


def tail_bound(coeffs, n):
    """``sum_{k > n} |a_k|``: bound on ``E_n`` for a Chebyshev series."""
    total = mpfr(0)
    for a in list(coeffs)[int(n) + 1:]:
        total += abs(to_mpfr(a))
    return total


def beurling_partial_sum(errors, N=None):
    """``sum_{n=1}^{N} max(log(1/e_n), 0) / n^2``; ``errors[0]`` is ``e_1``."""
    errors = list(errors)
    N = len(errors) if N is None else int(N)
    if N > len(errors):
        raise BadSequence(f"need {N} terms, got {len(errors)}")
    total = mpfr(0)
    for i in range(N):
        e = to_mpfr(errors[i])
        if e <= 0:
            raise BadSequence(f"e_{i + 1} = {float(e):g} is not positive")
        if e < 1:
            total += -gmpy2.log(e) / (i + 1) ** 2
    return total


def results_to_csv(results, digits=20):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "E_n", "E_star_n", "iterations"])
    for r in results:
        writer.writerow([r.n, format(r.error, f".{digits}g"), format(e_star(r.error, r.n), f".{digits}g"), r.iterations])
    return buf.getvalue()
