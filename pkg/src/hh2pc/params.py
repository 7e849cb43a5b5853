"""Shared protocol parameters and the thresholds derived from them.

All distortion arithmetic is kept in exact rationals (``fractions.Fraction``)
so that threshold comparisons made by the protocol are never subject to
floating-point boundary effects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

# Supported envelope for exact squared-norm arithmetic: with coefficients of
# the sum vector bounded by 2M, squared norms are at most 4*M^2*N, and all
# internal products stay below 2^63 when M^2 * N <= 2^60.
MAX_M2N = 1 << 60


def parse_fraction(text: str | int | Fraction) -> Fraction:
    """Parse a rational given as 'p/q' (or a plain integer string)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = text.strip()
    if "/" in s:
        p, q = s.split("/", 1)
        return Fraction(int(p), int(q))
    return Fraction(int(s))


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def recovery_pass_limit(m: int, n: int) -> int:
    """Upper bound on recovery passes: squared norms start at most 4*M^2*N
    and each productive pass at least halves the residual energy, down to 1."""
    return max(1, math.ceil(math.log2(4 * m * m * n + 1)))


@dataclass(frozen=True)
class ProtocolParams:
    """Parameters fixed before a protocol session.

    n: vector length, a power of two >= 2
    m: per-party coefficient bound (inputs lie in [-m, m])
    b: summary size, 1 <= b <= n
    k: security / failure parameter
    epsilon: distortion, rational > 0
    """

    n: int
    m: int
    b: int
    k: int
    epsilon: Fraction
    theta: Fraction = field(init=False)
    b_prime: int = field(init=False)

    def __post_init__(self) -> None:
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if not 1 <= self.b <= self.n:
            raise ValueError(f"b must satisfy 1 <= b <= n, got {self.b}")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        eps = parse_fraction(self.epsilon)
        if eps <= 0:
            raise ValueError("epsilon must be > 0")
        object.__setattr__(self, "epsilon", eps)
        if self.m * self.m * self.n > MAX_M2N:
            raise ValueError("m^2 * n exceeds the supported exact-arithmetic envelope (2^60)")
        theta = eps / (self.b * (1 + eps))
        object.__setattr__(self, "theta", theta)
        # Padding size for the recovered index set: at most ceil(1/theta)
        # candidates clear the threshold per pass, times the pass limit,
        # but never more than the universe itself.
        raw = ceil_frac(1 / theta) * recovery_pass_limit(self.m, self.n)
        object.__setattr__(self, "b_prime", min(raw, self.n))
        if self.b > self.b_prime:
            raise AssertionError("derived padding size smaller than b")

    @property
    def theta_recovery(self) -> Fraction:
        """Threshold targeted by the sketch-recovery step: theta / (1 + eps)."""
        return self.theta / (1 + self.epsilon)

    @property
    def pass_limit(self) -> int:
        return recovery_pass_limit(self.m, self.n)

    def coeff_bound(self) -> int:
        """Magnitude bound for coefficients of the sum vector."""
        return 2 * self.m
