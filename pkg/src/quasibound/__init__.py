"""Certified sublevel-set, approximation and flat-polynomial computations
for quasianalyticity experiments, in arbitrary precision."""

from .bestapprox import ApproxResult, Modulus, TargetFunction, approx_sequence, beurling_partial_sum, remez_exchange
from .intervals import IntervalSet
from .lemmas import Certificate, claim_check, comparison_check, kappa, spreading_check, theorem_a_scan
from .polycore import NormResult, Poly, sup_norm
from .sublevel import DyadicCover, e_set, measure_sublevel, nadic_maximal_cover, poly_sublevel

__version__ = "0.1.0"

__all__ = [
    "ApproxResult",
    "Certificate",
    "DyadicCover",
    "IntervalSet",
    "Modulus",
    "NormResult",
    "Poly",
    "TargetFunction",
    "approx_sequence",
    "beurling_partial_sum",
    "claim_check",
    "comparison_check",
    "e_set",
    "kappa",
    "measure_sublevel",
    "nadic_maximal_cover",
    "poly_sublevel",
    "remez_exchange",
    "spreading_check",
    "sup_norm",
    "theorem_a_scan",
]
