"""Significant indices, qualified index sets, and the prefix relation.

These are the exact, non-private reference computations the protocol's
guarantees are checked against. Threshold comparisons use exact rational
arithmetic. A zero coefficient is never significant: the trivial inequality
0 >= theta * 0 on an all-zero tail would otherwise admit meaningless indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .terms import as_vector, decreasing_rearrangement, term_key, Term


@dataclass(frozen=True)
class QualifiedSet:
    """Qualified index set: indices ordered by decreasing term."""

    indices: tuple[int, ...]
    ell: int
    theta: Fraction

    def __contains__(self, i: int) -> bool:
        return i in self.indices

    def as_set(self) -> set[int]:
        return set(self.indices)


def is_significant(c, I: Iterable[int], i: int, theta: Fraction) -> bool:
    """True iff index i carries a theta fraction of the energy over I.

    Requires i in I. Zero coefficients are never significant.
    """
    vec = as_vector(c)
    idx = set(int(j) for j in I)
    if i not in idx:
        raise ValueError(f"index {i} not in the index set")
    ci = int(vec[i])
    if ci == 0:
        return False
    total = sum(int(vec[j]) ** 2 for j in idx)
    return Fraction(ci * ci) >= theta * total


def is_significant_set(c, I: Iterable[int], theta: Fraction) -> bool:
    """True iff, walking I's members from the largest term down, each one is
    significant for the universe with all strictly larger processed members
    removed."""
    vec = as_vector(c)
    members = sorted(
        (int(j) for j in set(I)),
        key=lambda j: term_key(Term(j, int(vec[j]))),
        reverse=True,
    )
    universe_sq = sum(int(v) ** 2 for v in vec)
    for j in members:
        cj = int(vec[j])
        if cj == 0:
            return False
        if Fraction(cj * cj) < theta * universe_sq:
            return False
        universe_sq -= cj * cj
    return True


def qualified_set(c, ell: int, theta: Fraction) -> QualifiedSet:
    """The unique maximal significant prefix of the decreasing rearrangement,
    truncated to length ell.

    The walk stops at the first index failing the significance test, at the
    first zero coefficient, or at length ell, whichever comes first.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    vec = as_vector(c)
    order = decreasing_rearrangement(vec)
    tail_sq = int(np.dot(vec, vec))
    taken: list[int] = []
    for j in order:
        if len(taken) >= ell:
            break
        cj = int(vec[j])
        if cj == 0:
            break
        if Fraction(cj * cj) < theta * tail_sq:
            break
        taken.append(j)
        tail_sq -= cj * cj
    return QualifiedSet(indices=tuple(taken), ell=ell, theta=Fraction(theta))


def is_prefix(P: Iterable[int], Q: Iterable[int], c) -> bool:
    """True iff P is a downward-closed subset of Q under the term order:
    every member of Q with a term above some member of P is itself in P."""
    vec = as_vector(c)
    ps = set(int(i) for i in P)
    qs = set(int(i) for i in Q)
    if not ps <= qs:
        return False
    if not ps:
        return True
    low = min(term_key(Term(i, int(vec[i]))) for i in ps)
    for j in qs - ps:
        if term_key(Term(j, int(vec[j]))) > low:
            return False
    return True
