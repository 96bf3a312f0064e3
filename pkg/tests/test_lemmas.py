import json
import math

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from quasibound._mp import workprec
from quasibound.bestapprox import TargetFunction
from quasibound.errors import GeometryFail, HypothesisFail, KappaFail, NoFeasible, NoMEps
from quasibound.intervals import IntervalSet
from quasibound.lemmas import (
    Certificate,
    claim_check,
    claim_parameters,
    comparison_check,
    kappa,
    kappa_info,
    proof_conditions,
    ratios_increasing,
    select_m_eps,
    spreading_check,
    theorem_a_scan,
    verify_certificate,
)
from quasibound.polycore import Poly
from quasibound.sublevel import e_set


class TestKappa:
    def test_example_point(self):
        kap = kappa(1, 0.05, 0.5)
        assert 0 < kap < 1
        with workprec(256):
            conds = proof_conditions(kap / 2, 0.5, 1.0, 0.05)
        assert conds == {"i": True, "ii": True, "iii": True}

    @pytest.mark.parametrize("delta0,eps,c0", [(1, 0.05, 0.5), (0.5, 0.1, 0.6), (0.7, 0.02, 0.8), (1, 0.3, 0.5)])
    def test_conditions_hold_uniformly_below(self, delta0, eps, c0):
        info = kappa_info(delta0, eps, c0)
        c_max = (1 - 2 * eps) / (1 - eps)
        with workprec(512):
            for shrink in (mpfr(1) / 2, mpfr(10) ** -3):
                lenE = info.value * shrink
                for i in range(5):
                    c = c0 + (c_max - c0) * i / 5
                    for delta in (delta0, (delta0 + 1) / 2, 1.0):
                        for frac in (1, mpfr(10) ** -2):
                            lenI = lenE ** mpfr(1 / (2 - c) + eps) * frac
                            conds = proof_conditions(lenE, c, delta, eps, lenI)
                            assert all(conds.values()), (c, delta, conds)

    def test_threshold_is_tight_at_worst_case(self):
        info = kappa_info(1, 0.1, 0.5)
        with workprec(256):
            conds = proof_conditions(info.value * 1.05, info.worst_c, info.worst_delta, 0.1)
        assert not all(conds.values())

    def test_corner_is_worst(self):
        for delta0, eps, c0 in [(1, 0.05, 0.5), (0.5, 0.1, 0.7), (0.2, 0.02, 0.9)]:
            assert kappa_info(delta0, eps, c0).corner_is_worst

    def test_no_feasible_at_boundary(self):
        with pytest.raises(NoFeasible):
            kappa(1, 1 / 3, 0.5)

    def test_monotonicity_grid(self):
        deltas = [0.2, 0.4, 0.6, 0.8, 1.0]
        cs = [0.5, 0.6, 0.7, 0.8, 0.9]
        fracs = [0.1, 0.3, 0.5, 0.7, 0.9]
        for c0 in cs:
            top = (1 - c0) / (2 - c0)
            for f in fracs:
                vals = [kappa_info(d, f * top, c0).log_kappa for d in deltas]
                assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))
            for d in deltas:
                vals = [kappa_info(d, f * top, c0).log_kappa for f in fracs]
                # larger eps shrinks the admissible |I|, so kappa grows with eps
                assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))
        eps = 0.02
        for d in deltas:
            vals = [kappa_info(d, eps, c0).log_kappa for c0 in cs]
            assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))


def small_box(n=6, h="1e-7"):
    with workprec(256):
        h = mpfr(h)
        return Poly.monomial(n), (-h / 2, h / 2)


class TestSpreading:
    def test_e_equals_i(self):
        p, (a, b) = small_box()
        E = IntervalSet.interval(a, b)
        cert = spreading_check(p, E, (a, b), 1.0, 0.5, 0.2)
        assert cert.passed
        with workprec(256):
            assert cert.measured_value <= gmpy2.exp(mpfr(-6))
        assert cert.checks["chain_2_3_dominates"]

    def test_chebyshev_component(self):
        n = 10
        p = Poly.chebyshev_t(n)
        c, eps, delta = 0.5, 0.3, 1.0
        with workprec(256):
            x0 = gmpy2.cos(gmpy2.const_pi() / (2 * n))
            comp = [(u, v) for u, v in e_set(p, delta) if u <= x0 <= v][0]
            E = IntervalSet.from_pairs([comp])
            ell = E.total_length
            room = (ell ** mpfr(1 / (2 - c) + eps) - ell) / 3
            I = (comp[0] - room, comp[1] + room)
        cert = spreading_check(p, E, I, delta, c, eps)
        assert cert.passed
        assert float(cert.ratio) < 1
        assert json.loads(json.dumps(cert.to_json()))["pass"] is True

    def test_interval_too_long(self):
        p, (a, b) = small_box()
        E = IntervalSet.interval(a, b)
        with workprec(256):
            ell = b - a
            limit = ell ** mpfr(1 / 1.5 + 0.2)
            I = (a, a + limit * (1 + mpfr(10) ** -6))
        with pytest.raises(GeometryFail):
            spreading_check(p, E, I, 1.0, 0.5, 0.2)

    def test_hypothesis_fail(self):
        p = Poly.monomial(3)
        with workprec(256):
            E = IntervalSet.interval(mpfr("0.5"), mpfr("0.5") + mpfr(10) ** -8)
        with pytest.raises(HypothesisFail):
            spreading_check(p, E, E.hull, 1.0, 0.5, 0.2)

    def test_e_outside_i(self):
        p, (a, b) = small_box()
        with pytest.raises(GeometryFail):
            spreading_check(p, IntervalSet.interval(a, b), (a, (a + b) / 2), 1.0, 0.5, 0.2)

    def test_delta_above_one_rescaled(self):
        p, (a, b) = small_box(4, "1e-8")
        cert = spreading_check(p, IntervalSet.interval(a, b), (a, b), 2.5, 0.5, 0.2)
        assert cert.inputs["n"] == 10 and cert.inputs["delta"] == 1.0
        assert "rescaled" in cert.notes


class TestClaim:
    @pytest.mark.parametrize("n,delta,c", [(5, 1.0, 0.5), (8, 0.7, 0.8), (3, 2.0, 0.6)])
    def test_monomial_closed_form(self, n, delta, c):
        eps = 0.5 * (1 - c) / (2 - c)
        cert = claim_check(Poly.monomial(n), delta, c, eps, gate=False)
        measured = 2 * math.exp(-c * delta)
        claimed = (2 * math.exp(-delta)) ** (1 / (2 - c) + eps)
        assert abs(float(cert.measured_value) - measured) < 1e-12
        assert abs(float(cert.claimed_bound) - claimed) < 1e-12
        assert cert.passed and measured >= claimed
        assert cert.checks["smallness_gate"] is False

    def test_gate_refuses_large_sets(self):
        with pytest.raises(KappaFail):
            claim_check(Poly.monomial(5), 1.0, 0.5, 0.1)

    def test_c_near_one(self):
        p = Poly.monomial(7)
        ratios = []
        for c in (0.9, 0.99, 0.999):
            eps = 0.5 * (1 - c) / (2 - c)
            cert = claim_check(p, 1.0, c, eps, gate=False)
            ratios.append(float(cert.measured_value / cert.claimed_bound))
        # both sets converge as c -> 1 and the exponent tends to 1
        assert all(r >= 1 for r in ratios)
        assert ratios[0] > ratios[1] > ratios[2] > 1 - 1e-12

    def test_parameters(self):
        eps_s, log_k, N, log_claim = claim_parameters(1.0, 0.2, 0.5)
        assert eps_s == 0.1
        with workprec(512):
            assert N * gmpy2.exp(mpfr(log_k)) > 2
        assert log_claim <= log_k

    def test_gated_random_instance(self):
        from quasibound.sweeps import claim_sweep

        certs, skipped = claim_sweep(3, seed=11)
        assert certs and all(c.passed for c in certs)
        for cert in certs:
            assert all(cert.checks.values()), cert.checks
            agrees, _ = verify_certificate(json.loads(json.dumps(cert.to_json())))
            assert agrees


def exhaustive_m(t, gamma):
    # independent scan: smallest M admitting some eps in (0, (1-c)/(2-c))
    for M in range(1, 65):
        c = t ** (1.0 / M)
        if (1 / (2 - c)) ** M < t + gamma:
            return M
    return None


class TestComparison:
    def test_gamma_domain(self):
        with pytest.raises(ValueError):
            select_m_eps(0.6, 0.4)
        with pytest.raises(ValueError):
            comparison_check(Poly.monomial(3), 1.0, 0.6, 0.5)

    @pytest.mark.parametrize("t,gamma", [(0.25, 0.25), (0.5, 0.1), (0.9, 0.05), (0.3, 0.6)])
    def test_m_selection(self, t, gamma):
        M, eps = select_m_eps(t, gamma)
        assert M == exhaustive_m(t, gamma)
        c = t ** (1 / M)
        assert 0 < eps < (1 - c) / (2 - c)
        assert (1 / (2 - c) + eps) ** M <= t + gamma

    def test_no_m(self):
        with pytest.raises(NoMEps):
            select_m_eps(0.01, 1e-9, max_m=3)

    @pytest.mark.parametrize("delta", [1.0, 2.0, 4.0])
    def test_monomial_closed_form(self, delta):
        cert = comparison_check(Poly.monomial(6), delta, 0.5, 0.1, gate=False)
        lhs = 2 * math.exp(-delta / 2)
        rhs = (2 * math.exp(-delta)) ** 0.6
        assert abs(float(cert.measured_value) - lhs) < 1e-12
        assert abs(float(cert.claimed_bound) - rhs) < 1e-12
        assert cert.passed and cert.checks["stages_claim"]

    def test_random_instances(self):
        from quasibound.sweeps import comparison_sweep

        certs, skipped = comparison_sweep(4, seed=5)
        assert len(certs) + len(skipped) == 4
        assert all(c.passed for c in certs)
        assert all(c.checks["smallness_gate"] for c in certs)


class TestScan:
    def lacunary(self, count=4):
        with workprec(256):
            terms = {2 ** (2**j): gmpy2.exp(-mpfr(2 ** (2**j))) for j in range(count)}
        return TargetFunction.lacunary(terms)

    def test_lacunary_ratios(self):
        f = self.lacunary()
        degrees = [2, 4, 16, 256]
        rows = theorem_a_scan(f, degrees, beta=1.0)
        for j, row in enumerate(rows):
            tail = sum(math.exp(-degrees[i]) for i in range(j + 1, 4))
            assert float(row["E"]) <= tail * (1 + 1e-12) + 1e-300
            assert row["m_lower"] <= row["m_upper"]
        assert ratios_increasing(rows, certified=True)

    def test_polynomial_beyond_degree(self):
        f = TargetFunction.polynomial(Poly.from_mono([0, 1, 0, 1]))
        rows = theorem_a_scan(f, [4, 6], beta=0.5)
        for row in rows:
            assert row["E"] == 0
            with workprec(256):
                assert abs(row["E_star"] - gmpy2.exp(-mpfr(row["n_j"]))) < 1e-60

    def test_beta_violation_flagged(self):
        f = self.lacunary(3)
        rows = theorem_a_scan(f, [2, 4, 16], beta=50.0)
        assert rows[0]["beta_ok"] is False
        assert rows[0]["ratio_1_3"] is None

    def test_uncertified_vs_certified(self):
        rows = [
            {"ratio_1_3": 2.0, "ratio_lower": 1.9, "ratio_upper": 2.1},
            {"ratio_1_3": 3.0, "ratio_lower": 2.0, "ratio_upper": 4.0},
        ]
        assert ratios_increasing(rows, certified=False)
        assert not ratios_increasing(rows, certified=True)


class TestCertificate:
    @given(st.floats(1e-6, 10), st.floats(1e-6, 10), st.sampled_from(["le", "ge"]), st.sampled_from([1.0, 2.0, 4.0]))
    def test_pass_rule(self, measured, claimed, sense, slack):
        cert = Certificate("spreading", {}, claimed, measured, slack, sense)
        expected = measured <= slack * claimed if sense == "le" else measured * slack >= claimed
        assert cert.passed == expected

    def test_round_trip_and_reverify(self):
        p, (a, b) = small_box()
        cert = spreading_check(p, IntervalSet.interval(a, b), (a, b), 1.0, 0.5, 0.2)
        doc = json.loads(json.dumps(cert.to_json()))
        back = Certificate.from_json(doc)
        assert back.passed == cert.passed and back.lemma == "spreading"
        agrees, value = verify_certificate(doc)
        assert agrees

    @settings(max_examples=5, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_sweep_certificates_reverify(self, seed):
        from quasibound.sweeps import spreading_sweep

        certs, _ = spreading_sweep(1, seed=seed, max_degree=12)
        for cert in certs:
            assert verify_certificate(cert.to_json())[0]
