"""Taxicab heavy hitters and orthonormal-basis heavy hitters.

The taxicab variant is a pure parameter remap: running the Euclidean
protocol at distortion eps^2/B turns the (1 + sqrt(B * eps_euclid)) taxicab
factor into (1 + eps).

Basis runs transform locally and run the ordinary protocol on the
transformed vectors. Hadamard is the exact demonstration basis: the
unnormalized transform of an integer vector is integer (the orthonormal
scaling 1/sqrt(N) is carried implicitly), norms scale by exactly N, and the
transform is self-inverse up to that factor. The "fourier" kind is the real
Hartley member of the Fourier family; its coefficients are not integers, so
they are pushed through a fixed-point quantization (scale 2^20) before the
integer protocol, with the quantization budgeted against eps/8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .params import ProtocolParams, parse_fraction
from .protocol import HeavyHittersOutput, run_heavy_hitters
from .terms import Term, as_vector

FOURIER_FIXED_POINT_BITS = 20


@dataclass(frozen=True)
class Basis:
    kind: str  # "identity" | "hadamard" | "fourier"
    dimension: int

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "hadamard", "fourier"):
            raise ValueError(f"unknown basis kind: {self.kind}")
        n = self.dimension
        if n < 1 or (n & (n - 1)) != 0:
            raise ValueError("basis dimension must be a power of two")


def fwht_int(y) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform, exact over the integers.
    Self-inverse up to the factor N: fwht_int(fwht_int(y)) == N * y."""
    out = as_vector(y).copy()
    n = len(out)
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            lo = out[start : start + h].copy()
            hi = out[start + h : start + 2 * h].copy()
            out[start : start + h] = lo + hi
            out[start + h : start + 2 * h] = lo - hi
        h *= 2
    return out


def hartley(y: np.ndarray) -> np.ndarray:
    """Unnormalized discrete Hartley transform (cos + sin kernel), computed
    via the FFT. Self-inverse up to the factor N, like the Hadamard case."""
    f = np.fft.fft(np.asarray(y, dtype=np.float64))
    return f.real - f.imag


def transform(y, basis: Basis, direction: str = "forward") -> np.ndarray:
    """Orthonormal transform of y. Forward and inverse coincide for the
    self-inverse bases used here; round-trips are exact for identity and
    Hadamard-in-scaled-integers, and within 1e-9 for the float paths."""
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    arr = np.asarray(y, dtype=np.float64)
    if len(arr) != basis.dimension:
        raise ValueError("vector length does not match basis dimension")
    if basis.kind == "identity":
        return arr.copy()
    scale = 1.0 / math.sqrt(basis.dimension)
    if basis.kind == "hadamard":
        return fwht_int(np.rint(arr).astype(np.int64)).astype(np.float64) * scale if _is_integral(arr) else _fwht_float(arr) * scale
    return hartley(arr) * scale


def _is_integral(arr: np.ndarray) -> bool:
    return bool(np.all(arr == np.rint(arr)))


def _fwht_float(y: np.ndarray) -> np.ndarray:
    out = y.astype(np.float64).copy()
    h = 1
    n = len(out)
    while h < n:
        for start in range(0, n, 2 * h):
            lo = out[start : start + h].copy()
            hi = out[start + h : start + 2 * h].copy()
            out[start : start + h] = lo + hi
            out[start + h : start + 2 * h] = lo - hi
        h *= 2
    return out


def run_taxicab(a, b, b_count: int, epsilon, k: int, session_seed, norm_mode: str = "ideal") -> HeavyHittersOutput:
    """Heavy hitters with the taxicab guarantee: the Euclidean protocol run at
    eps_euclid = eps^2 / B, so sqrt(B * eps_euclid) = eps. Leakage is
    unchanged (the optimal summary and the Euclidean norm)."""
    eps = parse_fraction(epsilon)
    va, vb = as_vector(a), as_vector(b)
    eps_euclid = eps * eps / b_count
    m = max(1, int(np.abs(va).max(initial=0)), int(np.abs(vb).max(initial=0)))
    params = ProtocolParams(n=len(va), m=m, b=b_count, k=k, epsilon=eps_euclid)
    return run_heavy_hitters(va, vb, params, session_seed, norm_mode=norm_mode)


def taxicab_internal_epsilon(epsilon, b_count: int) -> Fraction:
    eps = parse_fraction(epsilon)
    return eps * eps / b_count


def prepare_basis_inputs(
    a, b, basis: Basis, params: ProtocolParams
) -> tuple[np.ndarray, np.ndarray, ProtocolParams]:
    """Locally transform both inputs for a basis run and derive the protocol
    parameters for the transformed instance."""
    va, vb = as_vector(a), as_vector(b)
    if basis.dimension != params.n:
        raise ValueError("basis dimension does not match protocol n")
    if basis.kind == "identity":
        return va, vb, params
    if basis.kind == "hadamard":
        scaled = ProtocolParams(
            n=params.n, m=params.m * params.n, b=params.b, k=params.k, epsilon=params.epsilon
        )
        return fwht_int(va), fwht_int(vb), scaled
    scale = 1 << FOURIER_FIXED_POINT_BITS
    root = math.sqrt(params.n)
    xa = np.rint(hartley(va) / root * scale).astype(np.int64)
    xb = np.rint(hartley(vb) / root * scale).astype(np.int64)
    m_q = int(math.ceil(params.m * root * scale)) + 1
    quantized = ProtocolParams(
        n=params.n,
        m=m_q,
        b=params.b,
        k=params.k,
        epsilon=params.epsilon * Fraction(7, 8),
    )
    return xa, xb, quantized


def run_basis_hh(
    a,
    b,
    basis: Basis,
    params: ProtocolParams,
    session_seed,
    norm_mode: str = "ideal",
) -> HeavyHittersOutput:
    """Heavy hitters over an orthonormal basis: both parties transform their
    inputs locally and the ordinary protocol runs on the transformed vectors.

    For kind="hadamard" the output terms carry the sqrt(N)-scaled integer
    coefficients of the transform domain (orthonormal coefficient = value /
    sqrt(N)); squared errors in the scaled domain are exactly N times the
    vector-domain ones. For kind="fourier" the transformed values are
    fixed-point quantized at 2^20 and the protocol distortion is tightened
    to 7*eps/8 to budget the quantization error.
    """
    xa, xb, run_params = prepare_basis_inputs(a, b, basis, params)
    return run_heavy_hitters(xa, xb, run_params, session_seed, norm_mode=norm_mode)


def hadamard_error_squared(c, rep: tuple[Term, ...]) -> Fraction:
    """Exact squared Euclidean error, in the vector domain, of a Hadamard
    transform-domain representation holding sqrt(N)-scaled coefficients."""
    vec = as_vector(c)
    n = len(vec)
    xt = np.zeros(n, dtype=np.int64)
    for i, v in rep:
        xt[i] = v
    back = fwht_int(xt)  # N * (F applied to the orthonormal coefficients)
    diff = n * vec - back
    return Fraction(int(np.dot(diff, diff)), n * n)


def hadamard_domain_error_squared(c, rep: tuple[Term, ...]) -> Fraction:
    """Same error, computed in the transform domain via Parseval."""
    vec = as_vector(c)
    n = len(vec)
    x = fwht_int(vec)
    xt = np.zeros(n, dtype=np.int64)
    for i, v in rep:
        xt[i] = v
    diff = x - xt
    return Fraction(int(np.dot(diff, diff)), n)
