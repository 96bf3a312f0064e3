"""Per-instance certificates for the spreading lemma, the claim, the
comparison lemma, and the level-set decay scan.

A certificate records its inputs in serialized form, the derived parameters,
the bound being tested and the measured quantity.  ``sense`` says which way
the inequality points: ``"le"`` means measured <= slack * claimed, ``"ge"``
means measured * slack >= claimed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import gmpy2
from gmpy2 import mpfr

from ._mp import to_decimal, to_mpfr, workprec
from .bestapprox import TargetFunction, e_star, remez_exchange, tail_bound
from .errors import GeometryFail, HypothesisFail, KappaFail, NoFeasible, NoMEps
from .intervals import IntervalSet
from .polycore import Poly, sup_norm
from .sublevel import DyadicCover, e_set, measure_sublevel, nadic_maximal_cover, poly_sublevel

SCHEMA_VERSION = 1
_LOG4 = math.log(4.0)


# -- kappa ------------------------------------------------------------------

def _exponent(c, eps):
    return 1.0 / (2.0 - c) + eps


def _log_a(L, c, delta, eps):
    # log A at |I| = |E|**p, |E| = exp(-L)
    return 2.0 * math.log(delta) - 1.0 + _exponent(c, eps) * L


def _cond_i_margin(L, c, delta, eps):
    """Log-form slack of the first proof condition (>= 0 means it holds)."""
    la = _log_a(L, c, delta, eps)
    if la <= 0:
        return -math.inf
    return eps * (2.0 - c) * L - (1.0 - c) * (2.0 * math.log(la) - 2.0 * math.log(delta) + 1.0) - _LOG4


def proof_conditions(lenE, c, delta, eps, lenI=None):
    """The three conditions on (|E|, |I|, c, delta) the spreading proof needs.

    Returns a dict of booleans.  ``lenI`` defaults to the largest admissible
    value ``|E| ** (1/(2-c) + eps)``.
    """
    with workprec(max(gmpy2.get_context().precision, 128)):
        lenE = to_mpfr(lenE)
        p = _exponent(c, eps)
        lenI = lenE ** to_mpfr(p) if lenI is None else to_mpfr(lenI)
        e = gmpy2.exp(mpfr(1))
        d = to_mpfr(delta)
        log_a = gmpy2.log(d * d / (e * lenI))
        ok_ii = bool(log_a > 1)
        if log_a <= 0:
            return {"i": False, "ii": False, "iii": False}
        log_b = log_a - 2 * gmpy2.log(log_a)
        ok_ii = ok_ii and bool(log_b > 0)
        # (i): |I|^((2-c)/(1-c)) log^2 A <= delta^2 / (4^(1/(1-c)) e) |E|^(1/(1-c))
        lhs = (2 - to_mpfr(c)) / (1 - to_mpfr(c)) * gmpy2.log(lenI) + 2 * gmpy2.log(log_a)
        rhs = 2 * gmpy2.log(d) - gmpy2.log(mpfr(4)) / (1 - to_mpfr(c)) - 1 + gmpy2.log(lenE) / (1 - to_mpfr(c))
        ok_i = bool(lhs <= rhs)
        # (iii): log^2 B <= e^2 A
        ok_iii = bool(log_b > 0 and 2 * gmpy2.log(log_b) <= 2 + log_a)
        return {"i": ok_i, "ii": ok_ii, "iii": ok_iii}


def _threshold_L(c, delta, eps):
    """Smallest L such that all conditions hold for every |E| <= exp(-L)."""
    p = _exponent(c, eps)
    # (ii)/(iii): A > e with B > 1, i.e. log A >= 1 (log B >= 2 - 2 log 2 beyond)
    L_ii = (2.0 - 2.0 * math.log(delta)) / p + 1e-12
    a = eps * (2.0 - c)
    b = 2.0 * (1.0 - c)
    # the margin is convex in L with minimum where log A = b p / a
    L_min = (b * p / a - 2.0 * math.log(delta) + 1.0) / p
    lo = max(L_ii, L_min)
    if _cond_i_margin(lo, c, delta, eps) >= 0:
        return lo
    hi = max(2.0 * lo, 1.0)
    while _cond_i_margin(hi, c, delta, eps) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise NoFeasible("no admissible measure for these parameters")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _cond_i_margin(mid, c, delta, eps) >= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * hi:
            break
    return hi


@dataclass(frozen=True)
class KappaInfo:
    log_kappa: float
    worst_c: float
    worst_delta: float
    corner_is_worst: bool

    @property
    def value(self):
        with workprec(128):
            return gmpy2.exp(mpfr(self.log_kappa))


@lru_cache(maxsize=4096)
def kappa_info(delta0, eps, c0, grid=24):
    """Admissible measure threshold with the location of the binding case."""
    delta0 = float(delta0)
    eps = float(eps)
    c0 = float(c0)
    if not 0 < delta0 <= 1:
        raise ValueError("delta0 must lie in (0, 1]")
    if not 0 < c0 < 1:
        raise ValueError("c0 must lie in (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps >= (1 - c0) / (2 - c0):
        raise NoFeasible(f"eps={eps} is not below (1-c0)/(2-c0)={(1 - c0) / (2 - c0):.6g}")
    c_max = (1 - 2 * eps) / (1 - eps)
    corner = _threshold_L(c0, delta0, eps)
    worst = (corner, c0, delta0)
    for i in range(grid + 1):
        c = c0 + (c_max - c0) * i / grid
        if i == grid:
            c = c_max - 1e-12 * (c_max - c0)
        for j in range(grid + 1):
            delta = delta0 ** (1 - j / grid)
            L = _threshold_L(c, delta, eps)
            if L > worst[0]:
                worst = (L, c, delta)
    L, c, delta = worst
    return KappaInfo(-L, c, delta, L <= corner * (1 + 1e-12))


def kappa(delta0, eps, c0):
    """Largest |E| for which the spreading proof's conditions hold uniformly.

    Uniform over c in [c0, (1-2 eps)/(1-eps)), delta in [delta0, 1] and every
    |I| <= |E| ** (1/(2-c) + eps).  Returned as an mpfr; it is typically far
    below double-precision range for small ``eps``.
    """
    return kappa_info(float(delta0), float(eps), float(c0)).value


# -- parameter records --------------------------------------------------------

@dataclass(frozen=True)
class SpreadingParams:
    delta0: float
    c0: float
    c: float
    eps: float
    delta: float
    n: int
    lenE: object
    lenI: object
    A: object
    B: object
    lam: object
    k: int
    kappa: object

    @classmethod
    def derive(cls, delta0, c0, c, eps, delta, n, lenE, lenI, kappa_value):
        e = gmpy2.exp(mpfr(1))
        d = to_mpfr(delta)
        A = d * d / (e * to_mpfr(lenI))
        log_a = gmpy2.log(A)
        B = A / (log_a * log_a)
        lam = d / gmpy2.log(B)
        k = int(gmpy2.floor(lam * n))
        return cls(delta0, c0, c, eps, float(delta), int(n), to_mpfr(lenE), to_mpfr(lenI), A, B, lam, k, kappa_value)

    def to_json(self, bits):
        out = {}
        for key, value in asdict(self).items():
            out[key] = to_decimal(value, bits) if isinstance(value, type(mpfr(0))) else value
        return out


@dataclass
class Certificate:
    lemma: str
    inputs: dict
    claimed_bound: object
    measured_value: object
    slack_factor: float = 1.0
    sense: str = "le"
    derived: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: str = ""
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self):
        m = to_mpfr(self.measured_value)
        b = to_mpfr(self.claimed_bound)
        s = to_mpfr(self.slack_factor)
        return bool(m <= s * b) if self.sense == "le" else bool(m * s >= b)

    @property
    def ratio(self):
        b = to_mpfr(self.claimed_bound)
        return to_mpfr(self.measured_value) / b if b else mpfr("inf")

    def to_json(self, bits=128):
        return {
            "schema_version": self.schema_version,
            "lemma": self.lemma,
            "inputs": self.inputs,
            "claimed_bound": to_decimal(to_mpfr(self.claimed_bound), bits),
            "measured_value": to_decimal(to_mpfr(self.measured_value), bits),
            "slack_factor": self.slack_factor,
            "sense": self.sense,
            "pass": self.passed,
            "derived": self.derived,
            "checks": self.checks,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        bits = int(doc.get("inputs", {}).get("precision_bits", 256))
        with workprec(bits):
            return cls(
                doc["lemma"],
                doc["inputs"],
                to_mpfr(doc["claimed_bound"]),
                to_mpfr(doc["measured_value"]),
                doc.get("slack_factor", 1.0),
                doc.get("sense", "le"),
                doc.get("derived", {}),
                doc.get("checks", {}),
                doc.get("notes", ""),
                doc.get("schema_version", SCHEMA_VERSION),
            )

    def summary_row(self, instance_id):
        return [
            instance_id,
            self.lemma,
            format(to_mpfr(self.claimed_bound), ".17g"),
            format(to_mpfr(self.measured_value), ".17g"),
            self.slack_factor,
            self.passed,
        ]


def _interval_json(a, b, bits):
    return [to_decimal(to_mpfr(a), bits), to_decimal(to_mpfr(b), bits)]


def bits_for(log_scale, floor=256):
    """Precision able to resolve quantities of size ``exp(-log_scale)``."""
    return max(floor, int(math.ceil(log_scale / math.log(2))) + 160)


# -- spreading lemma ------------------------------------------------------------

def spreading_check(p, E, I, delta, c, eps, delta0=None, c0=None, slack=2.0, n=None):
    """Certificate for ``||P||_I <= exp(-c delta n)`` given ``||P||_E <= exp(-delta n)``.

    ``n`` defaults to the degree of ``p``.  For ``delta > 1`` the instance is
    restated with ``delta' = 1`` and ``n' = floor(delta n)``, which keeps the
    hypothesis implied and P inside the larger polynomial space.
    """
    n = p.degree if n is None else int(n)
    if n < 1:
        raise GeometryFail("degree must be at least 1", {"n": n})
    delta = float(delta)
    c = float(c)
    eps = float(eps)
    c0 = c if c0 is None else float(c0)
    delta0 = min(delta, 1.0) if delta0 is None else float(delta0)
    notes = []
    if delta > 1:
        n_new = int(math.floor(delta * n))
        notes.append(f"rescaled delta={delta:g}, n={n} to delta=1, n={n_new}")
        delta, n = 1.0, n_new
    if delta0 > 1:
        notes.append(f"delta0={delta0:g} clamped to 1")
        delta0 = 1.0
    if not 0 < c0 <= c < 1:
        raise GeometryFail("need 0 < c0 <= c < 1", {"c0": c0, "c": c})
    if not 0 < eps < (1 - c) / (2 - c):
        raise GeometryFail("need 0 < eps < (1-c)/(2-c)", {"eps": eps, "c": c})
    if delta < delta0:
        raise GeometryFail("delta below delta0", {"delta": delta, "delta0": delta0})
    if isinstance(I, IntervalSet):
        a, b = I.hull
    else:
        a, b = I
    bits = p.precision_bits
    with workprec(bits):
        a, b = to_mpfr(a), to_mpfr(b)
        I_set = IntervalSet.interval(a, b)
        lenE = E.total_length
        lenI = b - a
        info = kappa_info(delta0, eps, c0)
        kap = info.value
        checks = {}
        if not E.is_subset(I_set, slack=lenI * mpfr(2) ** (-(bits // 2))):
            raise GeometryFail("E is not contained in I", {})
        if not 0 < lenE:
            raise GeometryFail("E has zero length", {})
        if not lenE < kap:
            raise GeometryFail(f"|E|={float(lenE):.3g} is not below kappa={float(kap):.3g}", {"kappa": float(kap)})
        power = lenE ** to_mpfr(_exponent(c, eps))
        if not lenI <= power * (1 + mpfr(2) ** (-(bits // 2))):
            raise GeometryFail("|I| exceeds |E|**(1/(2-c)+eps)", {"lenI": float(lenI), "limit": float(power)})
        full = sup_norm(p)
        if full.lower > 1 + mpfr(2) ** (-(bits // 2)):
            raise HypothesisFail("||P|| on [-1, 1] exceeds 1", {"norm": float(full.lower)})
        hyp_bound = gmpy2.exp(-to_mpfr(delta) * n)
        on_E = max((sup_norm(p, IntervalSet.interval(u, v)).upper for u, v in E), default=mpfr(0))
        # E is usually produced numerically; its endpoints carry rounding
        if on_E > hyp_bound * (1 + mpfr(2) ** -40):
            raise HypothesisFail("||P||_E exceeds exp(-delta n)", {"norm_E": float(on_E), "bound": float(hyp_bound)})
        params = SpreadingParams.derive(delta0, c0, c, eps, delta, n, lenE, lenI, kap)
        e = gmpy2.exp(mpfr(1))
        eta = lenI / lenE
        lam = params.lam
        log4eta = gmpy2.log(4 * eta)
        checks["kappa_corner_is_worst"] = info.corner_is_worst
        checks["lambda_le_2_7"] = bool(log4eta <= 0 or lam <= to_mpfr(delta) * (1 - to_mpfr(c)) / log4eta)
        checks["lambda_2_8"] = bool(lam * gmpy2.log(lam * lam / (e * lenI)) >= to_mpfr(delta))
        checks["lambda_2_9"] = bool(lam * lam >= lenI / e)
        k = params.k
        remez_factor = (4 * eta) ** k
        taylor_term = (e * lenI * n * n / mpfr((k + 1) ** 2)) ** (k + 1)
        checks["k_2_4"] = bool(remez_factor <= gmpy2.exp(to_mpfr(delta) * (1 - to_mpfr(c)) * n))
        checks["k_2_5"] = bool(taylor_term <= hyp_bound)
        chain = remez_factor * (hyp_bound + taylor_term)
        claimed = gmpy2.exp(-to_mpfr(c) * to_mpfr(delta) * n)
        measured = sup_norm(p, I_set).upper
        checks["chain_2_3_dominates"] = bool(measured <= chain)
        derived = params.to_json(bits)
        derived.update(
            eta=to_decimal(eta, bits),
            chain_bound=to_decimal(chain, bits),
            hypothesis_norm=to_decimal(on_E, bits),
            hypothesis_margin=to_decimal(on_E / hyp_bound, 64),
            kappa_worst_c=info.worst_c,
            kappa_worst_delta=info.worst_delta,
        )
        inputs = {
            "poly": p.to_json(),
            "E": E.to_json(bits),
            "I": _interval_json(a, b, bits),
            "delta": float(delta),
            "n": n,
            "c": c,
            "eps": eps,
            "delta0": delta0,
            "c0": c0,
            "precision_bits": bits,
        }
        return Certificate("spreading", inputs, claimed, measured, float(slack), "le", derived, checks, "; ".join(notes))


# -- claim ----------------------------------------------------------------------

def _log_int(N):
    return math.log(N) if N.bit_length() < 1000 else float(gmpy2.log(gmpy2.mpz(N)))


def claim_parameters(delta0, eps, c0):
    """``(eps_spread, kappa_spread, N, kappa_claim)`` for the claim.

    The spreading lemma is run with ``eps/2``; the N-adic grid must have
    members no longer than kappa, so ``N > 2 / kappa``; the factor ``1/N``
    lost in the covering chain is absorbed into the remaining ``eps/2`` once
    ``|E| <= N ** (-2/eps)``.
    """
    eps_s = eps / 2.0
    info = kappa_info(min(float(delta0), 1.0), eps_s, float(c0))
    log_kappa_s = info.log_kappa
    with workprec(max(256, int(-log_kappa_s * 3) + 128)):
        kap_s = gmpy2.exp(mpfr(log_kappa_s))
        N = int(gmpy2.floor(2 / kap_s)) + 1
        log_N = float(gmpy2.log(mpfr(N)))
    log_kappa_claim = min(log_kappa_s, -log_N / (eps - eps_s))
    return eps_s, log_kappa_s, N, log_kappa_claim


def claim_check(p, delta, c, eps, delta0=None, c0=None, gate=True, depth_limit=40):
    """Certificate for ``|E_P(c delta)| >= |E_P(delta)| ** (1/(2-c) + eps)``."""
    c = float(c)
    eps = float(eps)
    delta = float(delta)
    c0 = c if c0 is None else float(c0)
    delta0 = min(delta, 1.0) if delta0 is None else float(delta0)
    if not 0 < eps < (1 - c) / (2 - c):
        raise GeometryFail("need 0 < eps < (1-c)/(2-c)", {"eps": eps, "c": c})
    n = p.degree
    bits = max(p.precision_bits, bits_for(delta * n))
    p = p.with_precision(bits)
    with workprec(bits):
        p = p / sup_norm(p).upper
        eps_s, log_kap_s, N, log_kap_claim = claim_parameters(delta0, eps, c0)
        E = e_set(p, delta)
        lenE = E.total_length
        checks = {}
        derived = {"eps_spread": eps_s, "log_kappa_spread": log_kap_s, "log_N": _log_int(N), "log_kappa_claim": log_kap_claim}
        if lenE > 0 and float(gmpy2.log(lenE)) > log_kap_claim:
            if gate:
                raise KappaFail(
                    f"|E_P(delta)|={float(lenE):.3g} above the claim threshold exp({log_kap_claim:.4g})",
                    derived,
                )
            checks["smallness_gate"] = False
        else:
            checks["smallness_gate"] = True
        expo = _exponent(c, eps)
        Ec = e_set(p, c * delta)
        measured = Ec.total_length
        claimed = lenE ** to_mpfr(expo) if lenE > 0 else mpfr(0)
        notes = []
        if lenE > 0 and checks["smallness_gate"]:
            cover = nadic_maximal_cover(E, N, _exponent(c, eps_s), depth_limit)
            member_ok = True
            members = IntervalSet.empty()
            for level, start, count in cover.members:
                lo = DyadicCover.bounds(N, level, start)[0]
                hi = DyadicCover.bounds(N, level, start + count - 1)[1]
                members = members.union(IntervalSet.interval(mpfr(lo), mpfr(hi)))
                if count > 1:
                    # every interval in the run lies inside E
                    continue
                part = E.intersect_interval(mpfr(lo), mpfr(hi))
                cert = spreading_check(p, part, (mpfr(lo), mpfr(hi)), delta, c, eps_s, delta0, c0, slack=1.0)
                member_ok = member_ok and cert.passed
            checks["members_spread"] = member_ok
            checks["cover_inside_E_c"] = members.is_subset(Ec, slack=mpfr(2) ** (-(bits // 2)))
            chain = to_mpfr(cover.covered_length) * N >= to_mpfr(cover.captured_length) ** to_mpfr(_exponent(c, eps_s))
            checks["covering_chain"] = bool(chain)
            derived["cover_members"] = cover.member_count
            derived["cover_residual"] = to_decimal(mpfr(cover.residual), 64)
        inputs = {
            "poly": p.to_json(),
            "delta": delta,
            "c": c,
            "eps": eps,
            "delta0": delta0,
            "c0": c0,
            "precision_bits": bits,
        }
        derived["lenE"] = to_decimal(lenE, bits)
        derived["exponent"] = expo
        return Certificate("claim", inputs, claimed, measured, 1.0, "ge", derived, checks, "; ".join(notes))


# -- comparison lemma -----------------------------------------------------------

def select_m_eps(t, gamma, max_m=64, fraction=0.99):
    """Smallest M (and an eps) with ``(1/(2 - t**(1/M)) + eps)**M <= t + gamma``.

    Among admissible eps the choice is ``fraction`` times the largest one,
    since a larger eps loosens the smallness threshold.
    """
    t = float(t)
    gamma = float(gamma)
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    if not 0 < gamma < 1 - t:
        raise ValueError("gamma must lie in (0, 1 - t)")
    target = t + gamma
    for M in range(1, max_m + 1):
        c = t ** (1.0 / M)
        base = 1.0 / (2.0 - c)
        eps_top = target ** (1.0 / M) - base
        eps_top = min(eps_top, (1 - c) / (2 - c))
        if eps_top > 0:
            eps = fraction * eps_top
            assert (base + eps) ** M <= target
            return M, eps
    raise NoMEps(f"no M <= {max_m} works for t={t}, gamma={gamma}")


def comparison_check(p, delta, t, gamma, delta0=None, t0=None, gate=True):
    """Certificate for ``|E_P(t delta)| >= |E_P(delta)| ** (t + gamma)``.

    The claim is applied M times with ``c = t**(1/M)``.  Smallness is gated
    at ``|E_P(delta)| <= kappa_claim ** (1/(t+gamma))``: if some intermediate
    set is larger than kappa_claim, the final set is larger still and the power bound
    holds anyway.
    """
    t = float(t)
    gamma = float(gamma)
    delta = float(delta)
    M, eps = select_m_eps(t, gamma)
    t0 = t if t0 is None else float(t0)
    delta0 = min(delta, 1.0) if delta0 is None else float(delta0)
    c = t ** (1.0 / M)
    n = p.degree
    bits = max(p.precision_bits, bits_for(delta * n))
    p = p.with_precision(bits)
    with workprec(bits):
        p = p / sup_norm(p).upper
        stage_delta0 = min(t * delta0, 1.0)
        _, _, N, log_kap_claim = claim_parameters(stage_delta0, eps, t0)
        gate_log = log_kap_claim / (t + gamma)
        E = e_set(p, delta)
        lenE = E.total_length
        checks = {}
        derived = {"M": M, "eps": eps, "c": c, "log_N": _log_int(N), "log_kappa_claim": log_kap_claim, "gate_log": gate_log}
        small = not (lenE > 0 and float(gmpy2.log(lenE)) > gate_log)
        if not small and gate:
            raise KappaFail(f"|E_P(delta)|={float(lenE):.3g} above exp({gate_log:.4g})", derived)
        checks["smallness_gate"] = small
        # the M intermediate applications of the claim, measured directly
        stage_ok = True
        lengths = [lenE]
        for i in range(1, M + 1):
            Li = e_set(p, delta * c**i).total_length
            need = lengths[-1] ** to_mpfr(_exponent(c, eps)) if lengths[-1] > 0 else mpfr(0)
            stage_ok = stage_ok and bool(Li >= need)
            lengths.append(Li)
        checks["stages_claim"] = stage_ok
        measured = e_set(p, t * delta).total_length
        claimed = lenE ** to_mpfr(t + gamma) if lenE > 0 else mpfr(0)
        derived["stage_lengths"] = [to_decimal(v, 64) for v in lengths]
        derived["lenE"] = to_decimal(lenE, bits)
        inputs = {
            "poly": p.to_json(),
            "delta": delta,
            "t": t,
            "gamma": gamma,
            "delta0": delta0,
            "t0": t0,
            "precision_bits": bits,
        }
        return Certificate("comparison", inputs, claimed, measured, 1.0, "ge", derived, checks, "")


# -- level-set decay scan ----------------------------------------------------------

def _level_measure(f, level, bits, tol=1e-9):
    """Bracket for ``|{|f| <= level}|``; exact sublevel sets for series targets."""
    with workprec(bits):
        level = to_mpfr(level)
        if f.kind != "builtin":
            F = Poly.from_cheb(f.cheb_coeffs, bits)
            tail = to_mpfr(f.tail)
            slack = mpfr(2) ** (-(bits // 2))

            def length(th):
                if th <= 0:
                    return mpfr(0)
                S = poly_sublevel(F, th)
                return S.total_length, len(S)

            lo = length(level - tail)
            hi = length(level + tail)
            lo_len, lo_cnt = lo if lo else (mpfr(0), 0)
            hi_len, hi_cnt = hi
            return max(lo_len - 2 * lo_cnt * slack, mpfr(0)), hi_len + 2 * hi_cnt * slack
        return measure_sublevel(f, level, tol=tol, rtol=1e-6)


def _abs_log_bracket(lo, hi):
    """Range of ``|log m|`` over ``m in [lo, hi]``."""
    log_lo = abs(gmpy2.log(lo)) if lo > 0 else mpfr("inf")
    log_hi = abs(gmpy2.log(hi))
    if hi <= 1:
        return log_hi, log_lo
    if lo >= 1:
        return log_lo, log_hi
    return mpfr(0), max(log_lo, log_hi)


def theorem_a_scan(f, degrees, beta, eps=0.1, mode="auto", tol=1e-10):
    """Per-degree rows of E_n, E*_n, a bracket for m_f(E*_n) and the decay ratios.

    ``mode="tail"`` takes ``E_n`` from the Chebyshev tail sum (an upper bound,
    exact to leading order for lacunary series) and ``P_n`` as the truncated
    series; ``mode="remez"`` runs the exchange.  Rows violating
    ``E_n <= exp(-beta n)`` are flagged and left out of the ratio columns.
    """
    degrees = [int(d) for d in degrees]
    if mode == "auto":
        mode = "tail" if f.kind != "builtin" else "remez"
    # the smallest level is about exp(-max degree); resolve it with room to spare
    scale = 2 * (max(degrees) + 16)
    bits = bits_for(scale, floor=f.precision_bits)
    rows = []
    with workprec(bits):
        for j, n in enumerate(degrees, start=1):
            row = {"j": j, "n_j": n, "mode": mode}
            try:
                if mode == "tail":
                    err = tail_bound(f.cheb_coeffs, n) + to_mpfr(f.tail)
                    P = Poly.from_cheb(list(f.cheb_coeffs[: n + 1]) or [0], bits)
                else:
                    res = remez_exchange(f, n, tol)
                    err = res.error
                    P = res.best_poly.with_precision(bits)
                estar = e_star(err, n)
                row["E"] = err
                row["E_star"] = estar
                row["beta_ok"] = bool(err <= gmpy2.exp(-to_mpfr(beta) * n))
                lo, hi = _level_measure(f, estar, bits)
                row["m_lower"], row["m_upper"] = lo, hi
                if not P.is_zero:
                    normP = sup_norm(P).upper
                    row["P_norm"] = normP
                    row["sandwich_upper_len"] = poly_sublevel(P, 4 * estar * normP).total_length if 4 * estar < 1 else mpfr(2)
                    if rows and "E_star" in rows[-1]:
                        prev = rows[-1]["E_star"]
                        row["sandwich_lower_len"] = poly_sublevel(P, prev * normP / 4).total_length
                        row["gap_ok"] = bool(prev / 4 >= (4 * estar) ** to_mpfr(eps))
                row["error"] = ""
            except Exception as exc:  # a bad row never aborts the scan
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
        good = [r for r in rows if not r["error"] and r.get("beta_ok") and r["m_upper"] > 0]
        prev = None
        for r in rows:
            r["ratio_1_3"] = None
            r["scaled_1_4"] = None
            if r not in good:
                continue
            m_mid = (r["m_lower"] + r["m_upper"]) / 2
            logm = abs(gmpy2.log(m_mid)) if m_mid > 0 else mpfr("inf")
            r["abs_log_m"] = logm
            if logm > 0:
                r["scaled_1_4"] = gmpy2.log(logm) / r["j"]
            if prev is not None and prev["abs_log_m"] > 0:
                r["ratio_1_3"] = logm / prev["abs_log_m"]
                # bracket for the ratio from the measure brackets
                lo_a, hi_a = _abs_log_bracket(r["m_lower"], r["m_upper"])
                lo_b, hi_b = _abs_log_bracket(prev["m_lower"], prev["m_upper"])
                r["ratio_lower"] = lo_a / hi_b if hi_b > 0 else mpfr(0)
                r["ratio_upper"] = hi_a / lo_b if lo_b > 0 else mpfr("inf")
            prev = r
    return rows


def ratios_increasing(rows, certified=True):
    """True if the decay ratio column strictly increases over available rows.

    With ``certified`` the comparison uses the ratio brackets: each ratio's
    upper end must lie below the next one's lower end.
    """
    rs = [r for r in rows if r.get("ratio_1_3") is not None]
    if len(rs) < 2:
        return len(rs) == 1
    for a, b in zip(rs, rs[1:]):
        if certified:
            if not a["ratio_upper"] < b["ratio_lower"]:
                return False
        elif not a["ratio_1_3"] < b["ratio_1_3"]:
            return False
    return True


SCAN_COLUMNS = ["j", "n_j", "E", "E_star", "m_lower", "m_upper", "ratio_1_3", "scaled_1_4"]


# -- independent re-verification ----------------------------------------------------

def verify_certificate(cert, rel_tol=1e-9):
    """Recompute the measured value from serialized inputs alone.

    Returns ``(agrees, recomputed)``.
    """
    if isinstance(cert, (str, dict)):
        cert = Certificate.from_json(cert)
    inp = cert.inputs
    bits = int(inp.get("precision_bits", 256))
    with workprec(bits):
        p = Poly.from_json(inp["poly"]).with_precision(bits)
        if cert.lemma == "spreading":
            a, b = (to_mpfr(v) for v in inp["I"])
            value = sup_norm(p, IntervalSet.interval(a, b)).upper
        elif cert.lemma == "claim":
            value = e_set(p, float(inp["c"]) * float(inp["delta"])).total_length
        elif cert.lemma == "comparison":
            value = e_set(p, float(inp["t"]) * float(inp["delta"])).total_length
        elif cert.lemma == "theorem_a_step":
            f = TargetFunction.from_json(inp["target"])
            lo, hi = _level_measure(f, to_mpfr(inp["level"]), bits)
            value = (lo + hi) / 2
        else:
            raise ValueError(f"unknown lemma {cert.lemma!r}")
        ref = to_mpfr(cert.measured_value)
        scale = max(abs(ref), abs(value))
        agrees = bool(abs(value - ref) <= rel_tol * scale) if scale else True
        return agrees, value
