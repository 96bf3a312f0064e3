"""Seeded random instance generators and property sweeps.

Random polynomials: Chebyshev coefficients uniform in [-1, 1], then divided
by a certified upper bound of the sup norm, so ``||P|| <= 1``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _cheb
from ._mp import workprec
from .errors import KappaFail, PreconditionReport
from .intervals import IntervalSet
from .lemmas import (
    _exponent,
    bits_for,
    claim_check,
    claim_parameters,
    comparison_check,
    kappa,
    select_m_eps,
    spreading_check,
)
from .polycore import Poly, crude_remez_bound, isolate_roots, refine_root, sup_norm, vmarkov_bound
from .sublevel import e_set


def random_unit_poly(rng, degree, bits=256):
    coeffs = rng.uniform(-1.0, 1.0, int(degree) + 1)
    with workprec(bits):
        p = Poly.from_cheb([float(v) for v in coeffs], bits)
        return p / sup_norm(p).upper


def real_roots(p):
    with workprec(p.precision_bits):
        c = list(p.cheb)
        d = _cheb.derivative(c)
        out = []
        for lo, hi, ok in isolate_roots(c, mpfr(-1), mpfr(1)):
            if ok:
                lo, hi = refine_root(c, d, lo, hi)
            out.append((lo + hi) / 2)
        return out


# -- classical inequalities --------------------------------------------------------

def markov_sweep(count=500, max_degree=30, seed=0, bits=256):
    """``||P^(k+1)|| <= vmarkov_bound(n, k)`` for random unit-norm P and all k < n."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(count):
        n = int(rng.integers(1, max_degree + 1))
        p = random_unit_poly(rng, n, bits)
        n = p.degree
        with workprec(bits):
            c = list(p.cheb)
            worst = mpfr(0)
            ok = True
            for k in range(n):
                c = _cheb.derivative(c)
                bound = vmarkov_bound(n, k, 1)
                value = _cheb.abs_sum(c)
                if value > bound:
                    value = sup_norm(Poly.from_cheb(c, bits)).upper
                worst = max(worst, value / bound)
                ok = ok and bool(value <= bound)
        rows.append({"instance_id": i, "degree": n, "worst_ratio": float(worst), "pass": ok})
    return rows


def _random_subsets(rng, lo, hi, pieces):
    cuts = sorted(float(v) for v in rng.uniform(0.0, 1.0, 2 * pieces))
    width = hi - lo
    return [(lo + width * cuts[2 * i], lo + width * cuts[2 * i + 1]) for i in range(pieces)]


def remez_sweep(count=500, max_degree=20, seed=0, bits=256):
    """``||P||_I <= (4|I|/|E|)^deg ||P||_E`` for random P, I and finite unions E in I."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(count):
        n = int(rng.integers(1, max_degree + 1))
        p = random_unit_poly(rng, n, bits)
        a, b = sorted(float(v) for v in rng.uniform(-1.0, 1.0, 2))
        if b - a < 1e-3:
            b = min(1.0, a + 1e-3)
        parts = _random_subsets(rng, a, b, int(rng.integers(1, 5)))
        with workprec(bits):
            E = IntervalSet.from_pairs(parts)
            if E.total_length <= 0:
                E = IntervalSet.interval(a, b)
            lenI = mpfr(b) - mpfr(a)
            factor = crude_remez_bound(p.degree, E.total_length, lenI)
            c = list(p.cheb)
            upper_I = _cheb.abs_sum(_cheb.restrict_to(c, mpfr(a), mpfr(b)))
            lower_E = mpfr(0)
            for u, v in E:
                for s in range(9):
                    x = u + (v - u) * s / 8
                    lower_E = max(lower_E, abs(_cheb.clenshaw(c, x)))
            ok = bool(upper_I <= factor * lower_E)
            if not ok:
                upper_I = sup_norm(p, (a, b)).upper
                lower_E = max(sup_norm(p, IntervalSet.interval(u, v)).lower for u, v in E)
                ok = bool(upper_I <= factor * lower_E)
            ratio = upper_I / (factor * lower_E) if lower_E else mpfr("inf")
        rows.append({"instance_id": i, "degree": p.degree, "ratio": float(ratio), "pass": ok})
    return rows


# -- spreading lemma -------------------------------------------------------------------

def spreading_instance(rng, max_degree=40, bits=256):
    """One admissible spreading-lemma instance ``(p, E, I, delta, c, eps)``.

    E is a finite union inside a sublevel component around a real root of P
    (so ``||P||_E <= e^{-delta n}``), with ``|E| < kappa``; I is an interval
    containing E of length at most ``|E| ** (1/(2-c)+eps)``.
    """
    while True:
        n = int(rng.integers(2, max_degree + 1))
        p = random_unit_poly(rng, n, bits)
        c = float(rng.uniform(0.5, 0.9))
        delta = float(rng.uniform(0.5, 1.0))
        eps = float(rng.uniform(0.5, 0.95)) * (1 - c) / (2 - c)
        roots = real_roots(p)
        if not roots:
            continue
        x0 = roots[int(rng.integers(len(roots)))]
        with workprec(bits):
            kap = kappa(delta, eps, c)
            comps = [(u, v) for u, v in e_set(p, delta) if u <= x0 <= v]
            if not comps:
                continue
            u, v = comps[0]
            h = min(v - u, kap) * mpfr(float(rng.uniform(0.05, 0.9)))
            lo = max(u, x0 - h * mpfr(float(rng.uniform(0.0, 1.0))))
            lo = min(lo, v - h)
            hull = (lo, lo + h)
            pieces = int(rng.integers(1, 4))
            cuts = sorted(mpfr(float(x)) for x in rng.uniform(0.0, 1.0, 2 * pieces - 2))
            pts = [mpfr(0)] + cuts + [mpfr(1)]
            E = IntervalSet.from_pairs([(hull[0] + h * pts[2 * i], hull[0] + h * pts[2 * i + 1]) for i in range(pieces)])
            lenE = E.total_length
            if lenE <= 0:
                continue
            limit = lenE ** mpfr(_exponent(c, eps))
            if h > limit:
                continue
            lenI = min(max(limit * mpfr(float(rng.uniform(0.5, 1.0))), h), mpfr(2))
            a_min = max(mpfr(-1), hull[1] - lenI)
            a_max = min(hull[0], 1 - lenI)
            a = a_min + (a_max - a_min) * mpfr(float(rng.uniform(0.0, 1.0)))
            return p, E, (a, a + lenI), delta, c, eps


def _run_check(job):
    kind, args, kwargs = job
    fn = {"spreading": spreading_check, "comparison": comparison_check, "claim": claim_check}[kind]
    try:
        return fn(*args, **kwargs), None
    except PreconditionReport as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _run_jobs(jobs, workers=1):
    """Run checks, in parallel when ``workers > 1``; results keep job order."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_check, jobs, chunksize=4))
    else:
        results = [_run_check(job) for job in jobs]
    certs = []
    skipped = []
    for i, (cert, reason) in enumerate(results):
        if cert is None:
            skipped.append({"instance_id": i, "reason": reason})
        else:
            certs.append(cert)
    return certs, skipped


def spreading_sweep(count=500, seed=0, max_degree=40, bits=256, workers=1, slack=2.0):
    """Certificates for random admissible instances; precondition reports are
    kept in the output rather than dropped."""
    rng = np.random.default_rng(seed)
    jobs = []
    for _ in range(count):
        p, E, I, delta, c, eps = spreading_instance(rng, max_degree, bits)
        jobs.append(("spreading", (p, E, I, delta, c, eps), {"delta0": delta, "c0": c, "slack": float(slack)}))
    return _run_jobs(jobs, workers)


def slack_pass_counts(certs, slacks=(2.0, 4.0)):
    out = {}
    for s in slacks:
        out[s] = sum(1 for cert in certs if cert.measured_value <= s * cert.claimed_bound)
    return out


# -- claim and comparison lemma ------------------------------------------------------------

def _gated_delta(p, log_limit, start):
    """Smallest tried delta (geometric steps) whose sublevel set is below exp(log_limit)."""
    n = p.degree
    delta = start
    for _ in range(12):
        bits = bits_for(delta * n)
        q = p.with_precision(bits)
        with workprec(bits):
            L = e_set(q, delta).total_length
            if L == 0 or float(gmpy2.log(L)) <= log_limit:
                return delta
        delta *= 1.25
    return delta


def comparison_instance(rng, max_degree=40, bits=256):
    n = int(rng.integers(2, max_degree + 1))
    p = random_unit_poly(rng, n, bits)
    t = float(rng.uniform(0.5, 0.9))
    gamma = (1 - t) * float(rng.uniform(0.85, 0.98))
    M, eps = select_m_eps(t, gamma)
    _, _, _, log_kap = claim_parameters(min(t, 1.0), eps, t)
    gate = log_kap / (t + gamma)
    n = p.degree
    start = max(1.0, (-gate + 2.0 * np.log(n + 1) + 4.0) / n)
    delta = _gated_delta(p, gate, start)
    return p, delta, t, gamma


def comparison_sweep(count=500, seed=0, max_degree=40, bits=256, workers=1):
    rng = np.random.default_rng(seed)
    jobs = []
    for _ in range(count):
        p, delta, t, gamma = comparison_instance(rng, max_degree, bits)
        jobs.append(("comparison", (p, delta, t, gamma), {"delta0": 1.0, "t0": t}))
    return _run_jobs(jobs, workers)


def claim_sweep(count=200, seed=0, max_degree=40, bits=256, workers=1):
    rng = np.random.default_rng(seed)
    jobs = []
    for _ in range(count):
        n = int(rng.integers(2, max_degree + 1))
        p = random_unit_poly(rng, n, bits)
        c = float(rng.uniform(0.5, 0.9))
        eps = float(rng.uniform(0.8, 0.95)) * (1 - c) / (2 - c)
        _, _, _, log_kap = claim_parameters(1.0, eps, c)
        n = p.degree
        delta = _gated_delta(p, log_kap, max(1.0, (-log_kap + 2.0 * np.log(n + 1) + 4.0) / n))
        jobs.append(("claim", (p, delta, c, eps), {"delta0": 1.0, "c0": c}))
    return _run_jobs(jobs, workers)
