"""Private Euclidean-norm approximation, as a pluggable contract.

Two modes are provided. Ideal mode reproduces the norm protocol's contract
exactly: the estimate is a deterministic function of the exact squared norm
and a seed, always lands in [E/(1+eps), E], and its distribution over fresh
seeds therefore factors through the squared norm — which is precisely what
makes it simulatable. Sketch mode computes a deflated second-moment estimate
from a ±1 sketch; it meets the band with high probability but is not
certified simulatable.

The seed-derived offset u is quantized to 2^20 levels and the estimate is
snapped to the 2^-30 fixed-point grid, so the output distribution for any
fixed input is finite and testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .params import ceil_frac
from .runtime import seed_to_int
from .sketch import MeasurementMatrix, Sketch

U_LEVELS = 1 << 20
_GRID_BITS = 30
_GRID = 1 << _GRID_BITS


@dataclass(frozen=True)
class NormEstimate:
    value: Fraction
    squared: Fraction
    mode: str  # "ideal" | "sketch"
    seed: bytes

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("norm estimate must be nonnegative")
        if self.value * self.value != self.squared:
            raise ValueError("squared field must equal value^2 exactly")


def _ceil_isqrt(x: int) -> int:
    if x <= 0:
        return 0
    r = math.isqrt(x - 1) + 1
    return r


def draw_level(seed: bytes) -> int:
    """Uniform level in [0, 2^20); exact since 2^20 divides 2^64."""
    return seed_to_int(seed, 64) % U_LEVELS


def _snap(exact_sq: int, factor: float, epsilon: Fraction) -> Fraction:
    """Fixed-point value q with q^2 inside [E/(1+eps), E], near sqrt(E)*factor."""
    m0 = math.isqrt(exact_sq << (2 * _GRID_BITS))
    m = int(float(m0) * factor)
    m_hi = m0
    lo_num = exact_sq << (2 * _GRID_BITS)
    # smallest m with m^2 >= E * 2^60 / (1 + eps)
    frac = Fraction(lo_num) / (1 + epsilon)
    m_lo = _ceil_isqrt(ceil_frac(frac))
    m = min(max(m, m_lo), m_hi)
    return Fraction(m, _GRID)


def norm_value_at_level(exact_squared_norm: int, epsilon: Fraction, level: int) -> Fraction:
    """The estimate value at a given grid level: sqrt(E) * (1+eps)^(-u/2)
    with u = level / 2^20, snapped to the fixed-point grid inside the band."""
    if exact_squared_norm < 0:
        raise ValueError("squared norm must be nonnegative")
    if not 0 <= level < U_LEVELS:
        raise ValueError("level out of range")
    epsilon = Fraction(epsilon)
    if exact_squared_norm == 0:
        return Fraction(0)
    u = level / U_LEVELS
    factor = math.exp(-0.5 * u * math.log1p(float(epsilon)))
    return _snap(exact_squared_norm, factor, epsilon)


def estimate_norm(exact_squared_norm: int, epsilon: Fraction, seed: bytes) -> NormEstimate:
    """Ideal-mode estimate: E/(1+eps) <= value^2 <= E always, with the offset
    drawn from the seed on a 2^20-level geometric grid."""
    epsilon = Fraction(epsilon)
    q = norm_value_at_level(exact_squared_norm, epsilon, draw_level(seed))
    return NormEstimate(q, q * q, "ideal", bytes(seed))


def simulate_norm_estimate(
    exact_squared_norm: int, epsilon: Fraction, fresh_seed: bytes
) -> tuple[NormEstimate, bytes]:
    """The norm protocol's simulator: same deterministic map as estimate_norm,
    so the output distribution over fresh seeds is identical by construction.
    Returns the seed used, which stands in for the simulated matrix seed."""
    return estimate_norm(exact_squared_norm, epsilon, fresh_seed), bytes(fresh_seed)


def norm_rows_per_rep(epsilon: Fraction) -> int:
    return ceil_frac(64 / (Fraction(epsilon) * Fraction(epsilon)))


def estimate_norm_sketch(sk: Sketch, matrix: MeasurementMatrix, epsilon: Fraction, k: int) -> NormEstimate:
    """Sketch-mode estimate: median over repetition groups of the mean squared
    sketch value, deflated into the one-sided band.

    With rows_per_rep >= 64/eps^2, each group mean is within a
    (1 ± (1 - (1+eps)^-1/2)) factor of the squared norm except with
    probability <= 1/8, and the median then lands the deflated value in
    [E/(1+eps), E] except with probability 2^-k."""
    epsilon = Fraction(epsilon)
    if sk.matrix_seed != matrix.seed:
        raise ValueError("sketch was not built from this matrix")
    if matrix.rows_per_rep < norm_rows_per_rep(epsilon):
        raise ValueError("sketch has too few rows per repetition for this epsilon")
    if matrix.reps < max(3, k + 1):
        raise ValueError("sketch has too few repetitions for this k")
    vals = sk.values
    if not vals.any():
        return NormEstimate(Fraction(0), Fraction(0), "sketch", bytes(matrix.seed))
    sq_sums = [
        int(np.dot(g, g))
        for g in vals.reshape(matrix.reps, matrix.rows_per_rep).astype(object)
    ]
    sq_sums.sort()
    mid = len(sq_sums) // 2
    if len(sq_sums) % 2 == 1:
        med = Fraction(sq_sums[mid], matrix.rows_per_rep)
    else:
        med = Fraction(sq_sums[mid - 1] + sq_sums[mid], 2 * matrix.rows_per_rep)
    deflate = math.exp(-0.25 * math.log1p(float(epsilon)))
    m = int(math.isqrt((med.numerator << (2 * _GRID_BITS)) // med.denominator) * deflate)
    q = Fraction(max(m, 0), _GRID)
    return NormEstimate(q, q * q, "sketch", bytes(matrix.seed))
