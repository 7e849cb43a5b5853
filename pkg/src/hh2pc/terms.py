"""Vectors, terms, the total order on terms, and B-term summaries.

A term is an (index, value) pair. Terms are compared by coefficient
magnitude, with ties broken toward the larger index, which makes the order
total over terms with distinct indices. All arithmetic here is exact integer
arithmetic.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np


class Term(NamedTuple):
    index: int
    value: int


Representation = tuple[Term, ...]


def as_vector(values: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("vector must be one-dimensional")
    return arr


def term_key(t: Term) -> tuple[int, int]:
    """Sort key realizing the term order: magnitude first, then index."""
    return (abs(t.value), t.index)


def compare_terms(t1: Term, t2: Term) -> int:
    """Return -1, 0 or 1 as t1 is below, equal to, or above t2 in the term order."""
    k1, k2 = term_key(t1), term_key(t2)
    if k1 < k2:
        return -1
    if k1 > k2:
        return 1
    return 0


def decreasing_rearrangement(c: Sequence[int] | np.ndarray) -> tuple[int, ...]:
    """Indices of c sorted so their terms are strictly decreasing."""
    vec = as_vector(c)
    order = sorted(range(len(vec)), key=lambda i: (abs(int(vec[i])), i), reverse=True)
    return tuple(order)


def top_b(c: Sequence[int] | np.ndarray, b: int) -> Representation:
    """The b largest terms of c (the optimal b-term summary), largest first."""
    vec = as_vector(c)
    if not 1 <= b <= len(vec):
        raise ValueError(f"b must satisfy 1 <= b <= {len(vec)}, got {b}")
    order = decreasing_rearrangement(vec)
    return tuple(Term(i, int(vec[i])) for i in order[:b])


def as_representation(terms: Iterable[Term]) -> Representation:
    """Validate distinct indices and return the terms sorted largest-first."""
    ts = [Term(int(i), int(v)) for i, v in terms]
    seen = set()
    for t in ts:
        if t.index in seen:
            raise ValueError(f"duplicate index {t.index} in representation")
        seen.add(t.index)
    ts.sort(key=term_key, reverse=True)
    return tuple(ts)


def norm_squared(c: Sequence[int] | np.ndarray) -> int:
    """Exact squared Euclidean norm."""
    vec = as_vector(c)
    return int(np.dot(vec, vec))


def norm(c: Sequence[int] | np.ndarray, p: int) -> float | int:
    """||c||_p for p in {1, 2}. p=1 is exact; p=2 is the real square root
    of the exact squared norm (use norm_squared for exact comparisons)."""
    vec = as_vector(c)
    if p == 1:
        return int(np.abs(vec).sum())
    if p == 2:
        return float(np.sqrt(norm_squared(vec)))
    raise ValueError("p must be 1 or 2")


def residual(c: Sequence[int] | np.ndarray, rep: Iterable[Term]) -> np.ndarray:
    """c minus the terms of rep."""
    out = as_vector(c).copy()
    for i, v in rep:
        if not 0 <= i < len(out):
            raise ValueError(f"term index {i} out of range")
        out[i] -= v
    return out


def support(c: Sequence[int] | np.ndarray) -> set[int]:
    vec = as_vector(c)
    return {int(i) for i in np.flatnonzero(vec)}


def representation_vector(rep: Iterable[Term], n: int) -> np.ndarray:
    """Dense length-n vector with the terms of rep placed at their indices."""
    out = np.zeros(n, dtype=np.int64)
    for i, v in rep:
        out[i] = v
    return out


def error_squared(c: Sequence[int] | np.ndarray, rep: Iterable[Term]) -> int:
    """Exact squared Euclidean error of the representation rep for c."""
    return norm_squared(residual(c, rep))


def error_l1(c: Sequence[int] | np.ndarray, rep: Iterable[Term]) -> int:
    return int(np.abs(residual(c, rep)).sum())
