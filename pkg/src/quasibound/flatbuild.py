"""Flat polynomial corrections and the stage-by-stage construction of a
function with prescribed flatness at the origin and fast approximation.

Ingredients: the Taylor polynomials of ``Phi_n(w) = n sin(arcsin(w) / n)``,
the odd polynomials ``u_n(t) = sin(n arcsin t)``, and the correction
``R_{n,l} = -(1/n) Phi_{n,l}(u_n)``, which cancels ``t`` to high order near
the origin while staying of size ``O(1/n)`` on [-1, 1].
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr
import numpy as np

from . import _cheb
from ._mp import to_decimal, to_mpfr, workprec
from .errors import BudgetExceeded, ConstantMismatch, EvenDegree, PrecisionLoss
from .lemmas import Certificate
from .polycore import Poly, coeff_norm, sup_norm

DEFAULT_C1 = 8.0
DEFAULT_DEGREE_CAP = 20000


def _check_odd(n):
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive odd integer")
    if n % 2 == 0:
        raise EvenDegree(f"u_n is a polynomial only for odd n, got {n}")
    return n


# -- Phi series -------------------------------------------------------------------

@dataclass(frozen=True)
class PhiSeries:
    n: int
    l: int
    coeffs: tuple
    precision_bits: int

    def __call__(self, w):
        total = mpfr(0)
        for a in reversed(self.coeffs):
            total = total * w + a
        return total

    def as_poly(self):
        return Poly.from_mono(self.coeffs, self.precision_bits)


def _arcsin_series(l):
    out = [mpfr(0)] * (l + 1)
    term = mpfr(1)  # (2k)! / (4^k (k!)^2)
    k = 0
    while 2 * k + 1 <= l:
        out[2 * k + 1] = term / (2 * k + 1)
        term = term * (2 * k + 1) / (2 * k + 2)
        k += 1
    return out


def _compose_sin(g, l):
    """Taylor coefficients of ``sin(g(w))`` for a series ``g`` with g(0) = 0.

    Uses ``h' = cos(g) g'`` and ``c' = -sin(g) g'`` coefficientwise; also
    returns the largest ratio of term magnitude to result magnitude seen.
    """
    dg = [k * g[k] for k in range(l + 1)]  # dg[k] = k g_k, coefficient of w^(k-1) in g'
    h = [mpfr(0)] * (l + 1)
    c = [mpfr(0)] * (l + 1)
    c[0] = mpfr(1)
    worst = mpfr(1)
    for k in range(1, l + 1):
        sh = mpfr(0)
        sc = mpfr(0)
        mag = mpfr(0)
        for j in range(1, k + 1):
            if dg[j]:
                sh += dg[j] * c[k - j]
                sc -= dg[j] * h[k - j]
                mag += abs(dg[j] * c[k - j])
        h[k] = sh / k
        c[k] = sc / k
        if k % 2 and mag and sh:
            worst = max(worst, mag / abs(sh))
    return h, worst


def phi_series(n, l, precision_bits=256):
    """Taylor coefficients of ``n sin(arcsin(w) / n)`` through order ``l``.

    Computed by power-series composition.  When cancellation eats more than
    half of the mantissa the computation is repeated at doubled precision.
    """
    n = _check_odd(n)
    l = int(l)
    if l < 1:
        raise ValueError("l must be at least 1")
    bits = int(precision_bits)
    if n == 1:
        with workprec(bits):
            return PhiSeries(1, l, tuple(mpfr(int(k == 1)) for k in range(l + 1)), bits)
    for _ in range(6):
        with workprec(bits + 32):
            g = [a / n for a in _arcsin_series(l)]
            h, worst = _compose_sin(g, l)
            lost = float(gmpy2.log2(worst)) if worst > 1 else 0.0
            if lost <= bits / 2:
                coeffs = [mpfr(0)] + [n * v for v in h[1:]]
                for k in range(0, l + 1, 2):
                    coeffs[k] = mpfr(0)
                with workprec(bits):
                    return PhiSeries(n, l, tuple(mpfr(v) for v in coeffs), bits)
        bits *= 2
    raise PrecisionLoss(f"phi_series(n={n}, l={l}) lost more than half the precision")


def phi_exact(n, w):
    """``n sin(arcsin(w) / n)`` at the current precision."""
    w = to_mpfr(w)
    return n * gmpy2.sin(gmpy2.asin(w) / n)


# -- u_n and R_{n,l} ---------------------------------------------------------------

def u_mono_int(n):
    """Integer monomial coefficients of ``sin(n arcsin t)`` for odd n.

    From ``sin((k+2)x) + sin((k-2)x) = 2 cos(2x) sin(kx)`` with
    ``cos 2x = 1 - 2 t^2``.
    """
    n = _check_odd(n)
    prev = [0, -1]  # u_{-1}
    cur = [0, 1]  # u_1
    k = 1
    while k < n:
        nxt = [0] * (k + 3)
        for i, a in enumerate(cur):
            if a:
                nxt[i] += 2 * a
                nxt[i + 2] -= 4 * a
        for i, a in enumerate(prev):
            nxt[i] -= a
        prev, cur = cur, nxt
        k += 2
    return cur


def u_poly(n, precision_bits=256):
    """``sin(n arcsin t)``, a polynomial of degree n for odd n."""
    return Poly.from_mono(u_mono_int(n), precision_bits)


def u_sign(n):
    return -1 if (n - 1) // 2 % 2 else 1


def r_poly(n, l, precision_bits=256, phi=None):
    """``-(1/n) Phi_{n,l}(u_n(t))``, of degree at most ``l n``.

    Since ``u_n = s T_n`` with ``s = (-1)**((n-1)/2)`` and
    ``T_m(T_n) = T_{mn}``, writing ``Phi_{n,l}(w) = sum g_m T_m(w)`` gives the
    Chebyshev coefficients directly: ``g_m s**m`` at index ``m n``.
    """
    n = _check_odd(n)
    bits = int(precision_bits)
    if phi is None:
        phi = phi_series(n, l, bits)
    s = u_sign(n)
    with workprec(bits + l + 32):
        g = _cheb.mono_to_cheb(list(phi.coeffs))
        out = [mpfr(0)] * (len(g) - 1) * n + [mpfr(0)]
        for m, gm in enumerate(g):
            out[m * n] = -gm * (s**m) / n
    R = Poly.from_cheb(out, bits)
    # the dilation identity is checked, not trusted
    with workprec(bits):
        u = u_poly(n, bits)
        for x in ("0.3", "-0.71", "0.95"):
            x = mpfr(x)
            direct = -phi(u(x)) / n
            if abs(direct - R(x)) > mpfr(2) ** (-(bits // 2)) * (1 + abs(direct)):
                raise PrecisionLoss(f"composition check failed for n={n}, l={l}")
    return R


# -- one flattening step --------------------------------------------------------------

def _smallest(pred, start=1, limit=10**300):
    """Smallest integer l >= start with a monotone predicate true, or None."""
    if pred(start):
        return start
    lo, hi = start, start * 2
    while not pred(hi):
        lo, hi = hi, hi * 2
        if hi > limit:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def choose_parameters(q_star, deg_q, eps, N, phi, C1):
    """``(n, l, M)`` for a flattening step.

    n is the smallest odd integer >= C1 ||Q||_* / eps; l is the smallest
    integer with ``M = l n deg Q > N``, ``phi(M) <= 1/(2n)`` and
    ``(l+1)! >= C1 e^{2M} ||Q||_*`` (compared in logarithms).
    """
    raw = C1 * q_star / eps
    n = max(1, math.ceil(raw - 1e-12))
    if n % 2 == 0:
        n += 1
    step = n * deg_q
    log_need = math.log(C1) + math.log(q_star)
    l_deg = N // step + 1
    l_phi = _smallest(lambda l: phi(l * step) <= 1.0 / (2 * n))
    l_fac = _smallest(lambda l: math.lgamma(l + 2) >= log_need + 2.0 * l * step)
    if l_phi is None or l_fac is None:
        return n, None, None
    l = max(l_deg, l_phi, l_fac, 1)
    return n, l, l * step


@dataclass
class FlattenResult:
    M: int
    P: Poly
    n: int
    l: int
    norm_P: object
    flat_radius: object
    flat_sup: object
    flat_bound: object
    precision_bits: int


def flatten_step_detailed(Q, eps, N, phi, C1=DEFAULT_C1, degree_cap=DEFAULT_DEGREE_CAP):
    """Find ``(M, P)`` with ``||P|| <= eps`` and ``|Q + P| <= e^{-2M}`` on ``|t| <= phi(M)``."""
    eps = float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    with workprec(Q.precision_bits):
        if abs(Q(0)) > mpfr(2) ** (-(Q.precision_bits // 2)):
            raise ValueError("Q(0) must vanish")
        q_star = float(coeff_norm(Q))
    deg_q = Q.degree
    n, l, M = choose_parameters(q_star, deg_q, eps, int(N), phi, float(C1))
    if M is None or M > degree_cap:
        partial = {"n": n, "l": l, "M": M, "degree_cap": degree_cap}
        if l is None:
            # report the order of magnitude of the factorial requirement
            partial["log_l_needed"] = 2.0 * n * deg_q + 1.0
        raise BudgetExceeded(f"flattening needs degree M={M} (n={n}, l={l}) above the cap {degree_cap}", partial)
    bits = max(256, 4 * M, Q.precision_bits)
    with workprec(bits):
        Qb = Q.with_precision(bits)
        R = r_poly(n, l, bits)
        mono_q = Qb.mono_coeffs
        if n == 1:
            P = -Qb
        else:
            guard = bits + M + 64
            with workprec(guard):
                r_mono = _cheb.cheb_to_mono(list(R.cheb))
                total = [mpfr(0)] * (M + 1)
                for j, cj in enumerate(mono_q):
                    if j == 0 or not cj:
                        continue
                    for i, ri in enumerate(r_mono):
                        if ri:
                            total[i * j] += cj * ri
                cheb = _cheb.mono_to_cheb(total)
            P = Poly.from_cheb(cheb, bits)
        radius = to_mpfr(phi(M))
        norm_P = sup_norm(P).upper
        flat_bound = gmpy2.exp(mpfr(-2 * M))
        S = Qb + P
        if S.is_zero or radius <= 0:
            flat_sup = mpfr(0)
        else:
            r = min(radius, mpfr(1))
            flat_sup = sup_norm(S, (-r, r)).upper
        result = FlattenResult(M, P, n, l, norm_P, radius, flat_sup, flat_bound, bits)
        if P.degree > M:
            raise ConstantMismatch(f"deg P = {P.degree} exceeds M = {M}", result)
        if norm_P > eps or flat_sup > flat_bound:
            raise ConstantMismatch(
                f"verification failed at C1={C1}: ||P||={float(norm_P):.3g} (eps {eps:.3g}), "
                f"flatness {float(flat_sup):.3g} (bound {float(flat_bound):.3g})",
                result,
            )
        return result


def flatten_step(Q, eps, N, phi, C1=DEFAULT_C1, degree_cap=DEFAULT_DEGREE_CAP):
    """``(M, P)`` from the flattening corollary, both bounds verified."""
    r = flatten_step_detailed(Q, eps, N, phi, C1, degree_cap)
    return r.M, r.P


# -- the staged construction ---------------------------------------------------------------

@dataclass
class Stage:
    j: int
    n_j: int
    P: Poly
    norm: object
    flat_radius: object = None
    flat_sup: object = None
    flat_bound: object = None
    precision_bits: int = 256
    l: int | None = None
    n_param: int | None = None


@dataclass
class ConstructionState:
    stages: list
    partial_sum: Poly
    phi: object
    psi: object
    C1: float
    verification_log: list = field(default_factory=list)
    psi_clamped: bool = False
    failure: str | None = None
    phi_name: str = ""
    psi_name: str = ""

    @property
    def degrees(self):
        return [s.n_j for s in self.stages]

    @property
    def all_pass(self):
        return self.failure is None and all(c.passed for c in self.verification_log)

    def to_json(self):
        stages = []
        for s in self.stages:
            b = s.precision_bits
            stages.append(
                {
                    "j": s.j,
                    "n_j": s.n_j,
                    "degree": s.P.degree,
                    "precision_bits": b,
                    "norm": to_decimal(to_mpfr(s.norm), 64),
                    "flat_radius": None if s.flat_radius is None else to_decimal(to_mpfr(s.flat_radius), 64),
                    "flat_sup": None if s.flat_sup is None else to_decimal(to_mpfr(s.flat_sup), 64),
                    "flat_bound": None if s.flat_bound is None else to_decimal(to_mpfr(s.flat_bound), 64),
                    "l": s.l,
                    "n": s.n_param,
                    "P": s.P.to_json(),
                }
            )
        return {
            "schema_version": 1,
            "phi": self.phi_name,
            "psi": self.psi_name,
            "psi_clamped": self.psi_clamped,
            "C1": self.C1,
            "stages": stages,
            "certificates": [c.to_json(64) for c in self.verification_log],
            "failure": self.failure,
            "all_pass": self.all_pass,
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "n_j", "deg_P_j", "norm_P_j", "flatness_bound", "pass"])
        for s in self.stages:
            ok = all(c.passed for c in self.verification_log if c.inputs.get("stage") == s.j)
            bound = "" if s.flat_bound is None else format(to_mpfr(s.flat_bound), ".6g")
            w.writerow([s.j, s.n_j, s.P.degree, format(to_mpfr(s.norm), ".6g"), bound, ok])
        return buf.getvalue()


def clamp_psi(psi, probe=None):
    """``min(e^{-2x}, psi(x))`` unless psi already satisfies the bound on probe points."""
    if probe is None:
        probe = [1.0 + 0.5 * i for i in range(200)] + [10.0**k for k in range(3, 9)]
    if all(psi(x) <= math.exp(-2.0 * x) for x in probe):
        return psi, False

    def clamped(x):
        return min(math.exp(-2.0 * x), psi(x))

    return clamped, True


def _future_tail(psi_last, n_last):
    # sum_{j > last} ||P_j|| <= psi(n_last)/2 + sum_{i >= 1} e^{-2(n_last+i)}/2, using psi <= e^{-2x}
    with workprec(128):
        geo = gmpy2.exp(mpfr(-2 * n_last - 2)) / (2 * (1 - gmpy2.exp(mpfr(-2))))
        return to_mpfr(psi_last) / 2 + geo


def _psi_value(psi, x, bits):
    with workprec(bits):
        v = psi(x)
        return to_mpfr(v) if v > 0 else gmpy2.exp(mpfr(-2 * x))


def stage_certificates(state):
    """Certificates for every completed stage, recomputed from the stage records."""
    certs = []
    stages = state.stages
    for s in stages[1:]:
        prev = stages[s.j - 2]
        bound = _psi_value(state.psi, prev.n_j, 128) / 2
        certs.append(Certificate("stage_norm", {"stage": s.j, "n_prev": prev.n_j}, bound, s.norm, 1.0, "le"))
        certs.append(Certificate("stage_flatness", {"stage": s.j, "n_j": s.n_j}, s.flat_bound, s.flat_sup, 1.0, "le"))
    last = stages[-1]
    future = _future_tail(_psi_value(state.psi, last.n_j, 128), last.n_j)
    for s in stages:
        tail = sum((to_mpfr(t.norm) for t in stages[s.j:]), mpfr(0)) + future
        psi_n = _psi_value(state.psi, s.n_j, 128)
        certs.append(Certificate("approx_surrogate", {"stage": s.j, "n_j": s.n_j}, psi_n, tail, 1.0, "le"))
        if s.flat_sup is not None:
            total = to_mpfr(s.flat_sup) + tail
            with workprec(128):
                certs.append(
                    Certificate("flat_surrogate", {"stage": s.j, "n_j": s.n_j}, gmpy2.exp(mpfr(-s.n_j)), total, 1.0, "le")
                )
    return certs


def build_theorem_b(phi, psi, stages, C1=DEFAULT_C1, degree_cap=DEFAULT_DEGREE_CAP, phi_name="", psi_name=""):
    """Run the inductive construction for ``stages`` stages.

    Stage 1 is ``P_1(x) = x``.  Stage m+1 flattens ``Q = P_1 + ... + P_m``
    with ``eps = psi(n_m)/2`` and ``N = n_m``.  On failure the state up to
    the last good stage is returned with the reason in ``failure``.
    """
    psi_c, clamped = clamp_psi(psi)
    P1 = Poly.from_mono([0, 1])
    with workprec(256):
        first = Stage(1, 1, P1, sup_norm(P1).upper, precision_bits=256)
    state = ConstructionState([first], P1, phi, psi_c, float(C1), [], clamped, None, phi_name, psi_name)
    for m in range(1, int(stages)):
        prev = state.stages[-1]
        eps = float(_psi_value(psi_c, prev.n_j, 128)) / 2
        try:
            r = flatten_step_detailed(state.partial_sum, eps, prev.n_j, phi, C1, degree_cap)
        except (BudgetExceeded, ConstantMismatch) as exc:
            state.failure = f"stage {m + 1}: {type(exc).__name__}: {exc}"
            break
        stage = Stage(m + 1, r.M, r.P, r.norm_P, r.flat_radius, r.flat_sup, r.flat_bound, r.precision_bits, r.l, r.n)
        state.stages.append(stage)
        state.partial_sum = state.partial_sum.with_precision(r.precision_bits) + r.P
    state.verification_log = stage_certificates(state)
    return state


def verify_state(doc, psi):
    """Independent pass over a serialized state: recompute every stage bound.

    Returns a list of ``(label, ok)`` pairs.
    """
    out = []
    stages = doc["stages"]
    partial = None
    for s in stages:
        bits = int(s["precision_bits"])
        P = Poly.from_json(s["P"]).with_precision(bits)
        with workprec(bits):
            partial = P if partial is None else partial.with_precision(bits) + P
            norm = sup_norm(P).upper
            if s["j"] > 1:
                prev_n = stages[s["j"] - 2]["n_j"]
                out.append((f"stage {s['j']} norm", bool(norm <= _psi_value(psi, prev_n, bits) / 2)))
                r = min(to_mpfr(s["flat_radius"]), mpfr(1))
                flat = mpfr(0) if partial.is_zero else sup_norm(partial, (-r, r)).upper
                out.append((f"stage {s['j']} flatness", bool(flat <= gmpy2.exp(mpfr(-2 * s["n_j"])))))
            out.append((f"stage {s['j']} degree", P.degree <= s["n_j"]))
    return out


# -- calibration of the constant ---------------------------------------------------------------

@dataclass
class CalibrationReport:
    C1: float
    bounded_partial_sums: float
    taylor_remainder: float
    lemma_norm: float
    lemma_flatness: float
    u_bound_ok: bool
    l0: dict

    @property
    def needed(self):
        return max(self.bounded_partial_sums, self.taylor_remainder, self.lemma_norm, self.lemma_flatness)

    @property
    def passed(self):
        return self.u_bound_ok and self.needed <= self.C1

    def to_json(self):
        return {
            "C1": self.C1,
            "needed": self.needed,
            "pass": self.passed,
            "bounded_partial_sums": self.bounded_partial_sums,
            "taylor_remainder": self.taylor_remainder,
            "lemma_norm": self.lemma_norm,
            "lemma_flatness": self.lemma_flatness,
            "u_bound_ok": self.u_bound_ok,
            "l0": {str(k): v for k, v in self.l0.items()},
        }


def u_bound_holds(n, points=10_000):
    """``|u_n(t)| <= min(1, n|t|)`` on a uniform grid, in double precision."""
    coeffs = [float(v) for v in u_poly(n, 128).cheb]
    t = np.linspace(-1.0, 1.0, points)
    u = np.polynomial.chebyshev.chebval(t, coeffs)
    slack = 8 * n * np.finfo(float).eps
    return bool(np.all(np.abs(u) <= np.minimum(1.0, n * np.abs(t)) + slack))


def find_l0(n, C, l_max=200, window=10, bits=256):
    """Smallest l with ``max_[-1,1] |Phi_{n,l'}| <= C`` for all l' in [l, l+window]."""
    phi = phi_series(n, l_max + window, bits)
    good = []
    with workprec(bits):
        for l in range(1, l_max + window + 1):
            P = Poly.from_mono(phi.coeffs[: l + 1], bits)
            good.append(bool(sup_norm(P).upper <= C))
    for l in range(1, l_max + 1):
        if all(good[l - 1 : l + window]):
            return l
    return None


def _grid(lo, hi, count):
    step = (hi - lo) / (count - 1)
    return [lo + step * i for i in range(count)]


def calibrate_c1(C1=DEFAULT_C1, n_values=range(3, 22, 2), l_max=30, grid=200, bits=256):
    """Empirical constants behind the four displayed ``<~`` bounds.

    Each entry is the smallest C making the bound true on the sampled
    instances: partial sums of Phi_n on [-1, 1]; the Taylor remainder
    ``|Phi_n - Phi_{n,l}| <= C (2|u|)^(l+1)/(l+1)!`` on ``|u| <= 1/2``;
    ``n ||R_{n,l}||``; and ``|t + R_{n,l}| <= C (2n|t|)^(l+1)/(l+1)!`` on
    ``|t| <= 1/n``.
    """
    worst = {"partial": 0.0, "taylor": 0.0, "norm": 0.0, "flat": 0.0}
    l0 = {}
    with workprec(bits):
        for n in n_values:
            phi_full = phi_series(n, l_max, bits)
            us = [u for u in _grid(mpfr(0), mpfr(1) / 2, grid)[1:]]
            exact = {u: phi_exact(n, u) for u in us}
            ts = [t for t in _grid(mpfr(0), mpfr(1) / n, grid)[1:]]
            u_poly_n = u_poly(n, bits)
            u_at = {t: u_poly_n(t) for t in ts}
            for l in range(1, l_max + 1):
                phi = PhiSeries(n, l, phi_full.coeffs[: l + 1], bits)
                Pl = phi.as_poly()
                worst["partial"] = max(worst["partial"], float(sup_norm(Pl).upper))
                log_fact = gmpy2.lgamma(mpfr(l + 2))[0]
                for u in us:
                    diff = abs(exact[u] - phi(u))
                    scale = gmpy2.exp((l + 1) * gmpy2.log(2 * u) - log_fact)
                    worst["taylor"] = max(worst["taylor"], float(diff / scale))
                R = r_poly(n, l, bits, phi)
                worst["norm"] = max(worst["norm"], float(n * sup_norm(R).upper))
                for t in ts:
                    val = abs(t + R(t))
                    scale = gmpy2.exp((l + 1) * gmpy2.log(2 * n * t) - log_fact)
                    worst["flat"] = max(worst["flat"], float(val / scale))
            l0[n] = find_l0(n, C1, l_max=l_max, bits=bits)
    u_ok = all(u_bound_holds(n) for n in range(1, 100, 2))
    return CalibrationReport(float(C1), worst["partial"], worst["taylor"], worst["norm"], worst["flat"], u_ok, l0)
