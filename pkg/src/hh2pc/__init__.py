"""Two-party private approximate heavy hitters.

Library + CLI for computing an approximate top-B summary of the sum of two
privately held integer vectors with polylogarithmic communication, leaking
only the exact top-B summary and the Euclidean norm, together with a harness
that verifies both the approximation and the simulatability guarantees.
"""

from .extensions import Basis, fwht_int, run_basis_hh, run_taxicab, transform
from .normest import NormEstimate, estimate_norm, estimate_norm_sketch, simulate_norm_estimate
from .params import ProtocolParams, parse_fraction
from .privacy import (
    LeakageProfile,
    gen_disjointness_instance,
    gen_leakage_instance,
    leakage_profile,
    privacy_test,
    simulate_heavy_hitters,
    split_vector,
    tv_distance,
)
from .protocol import HeavyHittersOutput, pad_index_set, run_heavy_hitters, run_heavy_hitters_with_error
from .qualified import QualifiedSet, is_prefix, is_significant, is_significant_set, qualified_set
from .runtime import PRIME, Share, Transcript, pss, reconstruct, share, smc_eval
from .sketch import MeasurementMatrix, Sketch, estimate_coeff, gen_matrix, recover_superset, sketch
from .terms import (
    Representation,
    Term,
    compare_terms,
    decreasing_rearrangement,
    norm,
    norm_squared,
    residual,
    support,
    top_b,
)

__all__ = [
    "Basis",
    "LeakageProfile",
    "MeasurementMatrix",
    "NormEstimate",
    "PRIME",
    "HeavyHittersOutput",
    "ProtocolParams",
    "QualifiedSet",
    "Representation",
    "Share",
    "Sketch",
    "Term",
    "Transcript",
    "compare_terms",
    "decreasing_rearrangement",
    "estimate_coeff",
    "estimate_norm",
    "estimate_norm_sketch",
    "fwht_int",
    "gen_disjointness_instance",
    "gen_leakage_instance",
    "gen_matrix",
    "is_prefix",
    "is_significant",
    "is_significant_set",
    "leakage_profile",
    "norm",
    "norm_squared",
    "pad_index_set",
    "parse_fraction",
    "privacy_test",
    "pss",
    "qualified_set",
    "reconstruct",
    "recover_superset",
    "residual",
    "run_basis_hh",
    "run_heavy_hitters",
    "run_heavy_hitters_with_error",
    "run_taxicab",
    "share",
    "simulate_norm_estimate",
    "simulate_heavy_hitters",
    "sketch",
    "smc_eval",
    "split_vector",
    "support",
    "top_b",
    "transform",
    "tv_distance",
]

__version__ = "0.1.0"
