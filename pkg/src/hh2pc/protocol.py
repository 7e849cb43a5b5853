"""The two-party heavy hitters protocol, end to end.

A session always proceeds in this order:

1. exchange pseudorandom seed contributions in the clear; both parties derive
   the recovery matrix seed, the norm-estimation seed, and the padding seed;
2. inside SMC, recover from the combined recovery sketches a superset of the
   qualified index set at threshold theta/(1+eps), padded to exactly b_prime
   indices, output secret-shared;
3. fetch a secret sharing of the coefficient at each recovered index with
   Private Sample Sum (one batch, one round), and sort the shared terms
   decreasingly inside the functionality;
4. walk the sorted terms: estimate the residual norm, emit the term if its
   squared value clears theta times the squared estimate (equality emits;
   a zero coefficient never does), otherwise stop. The loop is evaluated
   obliviously: all b comparison rounds are charged whether or not the walk
   stopped early;
5. the two matrix seeds are attached to the output as auxiliary data.

The walk's threshold tests are exact rational comparisons. In ideal norm
mode the residual norms fed to the estimator are exact, so the emitted set
is a prefix of the qualified set at theta/(1+eps) whenever recovery
succeeded, which is what the privacy simulator reproduces.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .normest import (
    NormEstimate,
    estimate_norm,
    estimate_norm_sketch,
    norm_rows_per_rep,
)
from .params import ProtocolParams
from .runtime import (
    IdealFunctionality,
    Transcript,
    as_seed,
    derive_seed,
    pss_batch,
    reconstruct,
    share,
    smc_eval,
)
from .sketch import (
    MeasurementMatrix,
    Sketch,
    default_reps,
    gen_matrix,
    recover_superset,
    rows_per_rep_for,
    sketch_minus_terms,
    sketch_pair,
)
from .terms import Representation, Term, as_vector, norm_squared, term_key

logger = logging.getLogger(__name__)

SEED_MSG_BYTES = 32
COMPARE_GATES = 256
SORT_GATES_PER_COMPARE = 64


@dataclass
class LoopRecord:
    j: int
    index: int
    value: int
    shat_sq: Fraction
    emitted: bool


@dataclass
class HeavyHittersOutput:
    terms: Representation
    aux_seeds: dict[str, str]
    error_estimate: NormEstimate | None
    total_bytes: int
    rounds: int
    transcript: Transcript = field(repr=False)
    trace: list[LoopRecord] = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "terms": [[t.index, t.value] for t in self.terms],
            "auxSeeds": dict(self.aux_seeds),
            "errorEstimate": None if self.error_estimate is None else float(self.error_estimate.value),
            "bytes": self.total_bytes,
            "rounds": self.rounds,
        }


def pad_index_set(
    I: Sequence[int],
    b_prime: int,
    n: int,
    padding_seed: bytes,
    magnitudes: dict[int, int] | None = None,
) -> tuple[int, ...]:
    """Pad the recovered index set with pseudorandom distinct indices to
    exactly b_prime entries. If recovery overshot, keep the b_prime indices
    of largest estimated magnitude and warn."""
    idxs = [int(i) for i in I]
    if len(set(idxs)) != len(idxs):
        raise ValueError("recovered index set contains duplicates")
    if any(not 0 <= i < n for i in idxs):
        raise ValueError("recovered index out of range")
    if b_prime > n:
        raise ValueError("b_prime exceeds the universe size")
    if len(idxs) > b_prime:
        logger.warning("recovered %d indices > b_prime=%d; truncating", len(idxs), b_prime)
        if magnitudes:
            idxs = sorted(idxs, key=lambda i: abs(magnitudes.get(i, 0)), reverse=True)
        idxs = idxs[:b_prime]
    if len(idxs) == b_prime:
        return tuple(idxs)
    rng = np.random.Generator(np.random.Philox(key=int.from_bytes(padding_seed[:16], "little")))
    have = set(idxs)
    out = list(idxs)
    for i in rng.permutation(n).tolist():
        if len(out) == b_prime:
            break
        if i not in have:
            out.append(int(i))
            have.add(int(i))
    return tuple(out)


def _validate_inputs(a: np.ndarray, b: np.ndarray, params: ProtocolParams) -> None:
    if len(a) != params.n or len(b) != params.n:
        raise ValueError("input vectors must have length n")
    if int(np.abs(a).max(initial=0)) > params.m or int(np.abs(b).max(initial=0)) > params.m:
        raise ValueError(f"input values must lie in [-{params.m}, {params.m}]")


def _run(
    a,
    b,
    params: ProtocolParams,
    session_seed,
    norm_mode: str,
    with_error: bool,
) -> HeavyHittersOutput:
    if norm_mode not in ("ideal", "sketch"):
        raise ValueError("norm_mode must be 'ideal' or 'sketch'")
    va, vb = as_vector(a), as_vector(b)
    _validate_inputs(va, vb, params)
    seed = as_seed(session_seed)
    n, k, eps = params.n, params.k, params.epsilon
    transcript = Transcript()

    # Step 1: seed contributions in the clear; both sides derive shared
    # seeds. The exchanged seeds are public, so their hex form is logged.
    contrib_a = derive_seed(seed, "seed-share", "A")
    contrib_b = derive_seed(seed, "seed-share", "B")
    transcript.log("A→B", SEED_MSG_BYTES, f"seed-share:{contrib_a.hex()}")
    transcript.log("B→A", SEED_MSG_BYTES, f"seed-share:{contrib_b.hex()}")
    joint = derive_seed(contrib_a, "joint", contrib_b.hex())
    r1_seed = derive_seed(joint, "r1")
    r2_seed = derive_seed(joint, "r2")
    pad_seed = derive_seed(joint, "pad")

    r1 = gen_matrix(r1_seed, default_reps(k), rows_per_rep_for(params.b, eps), n)
    sk_a, sk_b = sketch_pair(r1, va, vb)

    rows2 = default_reps(k) * norm_rows_per_rep(eps)
    r2_matrices: list[MeasurementMatrix] = []
    r2_sketches: list[Sketch] = []
    if norm_mode == "sketch":
        for j in range(params.b):
            mj = gen_matrix(derive_seed(r2_seed, "norm-matrix", j), default_reps(k), norm_rows_per_rep(eps), n)
            sj_a, sj_b = sketch_pair(mj, va, vb)
            r2_matrices.append(mj)
            r2_sketches.append(Sketch(mj.seed, sj_a.values + sj_b.values))

    # Step 2: recovery of a superset of the qualified set, secret-shared and
    # padded to exactly b_prime indices.
    def recover_fn(in_a, in_b):
        combined = Sketch(r1.seed, np.asarray(in_a) + np.asarray(in_b))
        found = recover_superset(
            r1,
            combined,
            params.b,
            params.theta_recovery,
            k,
            max_size=params.b_prime,
            max_passes=params.pass_limit,
        )
        padded = pad_index_set(found, params.b_prime, n, pad_seed)
        shares = [share(i, derive_seed(seed, "idx-share", t)) for t, i in enumerate(padded)]
        return [s[0] for s in shares], [s[1] for s in shares]

    f_recover = IdealFunctionality(
        name="recover-superset",
        circuit_proxy=r1.rows * params.pass_limit + params.b_prime * max(1, n.bit_length()),
        fn=recover_fn,
    )
    idx_a, idx_b = smc_eval(f_recover, sk_a.values, sk_b.values, k, transcript)

    # Step 3: one PSS batch for the coefficients, then an in-functionality
    # sort of the secret-shared terms by decreasing term order.
    idx_share_pairs = list(zip(idx_a, idx_b))
    val_share_pairs = pss_batch(va, vb, idx_share_pairs, k, derive_seed(seed, "pss-batch"), transcript)

    def sort_fn(in_a, in_b):
        ia, va_sh = in_a
        ib, vb_sh = in_b
        terms = [
            Term(reconstruct(si, sj), reconstruct(ti, tj))
            for (si, sj), (ti, tj) in zip(zip(ia, ib), zip(va_sh, vb_sh))
        ]
        terms.sort(key=term_key, reverse=True)
        out = []
        for t, term in enumerate(terms):
            si = share(term.index, derive_seed(seed, "sorted-idx", t))
            sv = share(term.value, derive_seed(seed, "sorted-val", t))
            out.append((si, sv))
        return (
            [(si[0], sv[0]) for si, sv in out],
            [(si[1], sv[1]) for si, sv in out],
        )

    f_sort = IdealFunctionality(
        name="sort-terms",
        circuit_proxy=params.b_prime * max(1, math.ceil(math.log2(max(2, params.b_prime)))) * SORT_GATES_PER_COMPARE,
        fn=sort_fn,
    )
    sorted_a, sorted_b = smc_eval(
        f_sort,
        (idx_a, [v[0] for v in val_share_pairs]),
        (idx_b, [v[1] for v in val_share_pairs]),
        k,
        transcript,
    )

    sorted_terms = [
        Term(reconstruct(sa[0], sb[0]), reconstruct(sa[1], sb[1]))
        for sa, sb in zip(sorted_a, sorted_b)
    ]

    # Step 4: the output walk. All b comparison rounds are charged; emission
    # stops at the first failed threshold test or zero coefficient.
    c = va + vb
    c_norm_sq = norm_squared(c)
    emitted: list[Term] = []
    emitted_sq = 0
    trace: list[LoopRecord] = []
    halted = False
    break_estimate: NormEstimate | None = None
    theta = params.theta

    def norm_estimate_for(j: int) -> NormEstimate:
        if norm_mode == "ideal":
            return estimate_norm(c_norm_sq - emitted_sq, eps, derive_seed(r2_seed, "norm-draw", j))
        mj = r2_matrices[min(j, params.b - 1)]
        resid = sketch_minus_terms(mj, r2_sketches[min(j, params.b - 1)], emitted)
        return estimate_norm_sketch(resid, mj, eps, k)

    for j in range(params.b):
        term = sorted_terms[j]
        est_holder: list[NormEstimate] = []

        def compare_fn(in_a, in_b, _j=j, _term=term):
            est = norm_estimate_for(_j)
            est_holder.append(est)
            if halted:
                return None, None
            v_sq = _term.value * _term.value
            emit = _term.value != 0 and Fraction(v_sq) >= theta * est.squared
            return emit, emit

        f_cmp = IdealFunctionality(
            name=f"norm-compare-{j}",
            circuit_proxy=rows2 * 2 + COMPARE_GATES,
            fn=compare_fn,
        )
        emit, _ = smc_eval(
            f_cmp,
            sorted_a[j],
            sorted_b[j],
            k,
            transcript,
            declared_in=2 * 8 * rows2 + 4 * 8,
            declared_out=16,
        )
        if not halted:
            est = est_holder[0]
            trace.append(LoopRecord(j, term.index, term.value, est.squared, bool(emit)))
            if emit:
                emitted.append(term)
                emitted_sq += term.value * term.value
            else:
                halted = True
                break_estimate = est

    error_estimate: NormEstimate | None = None
    if with_error:
        # One unconditional extra estimate keeps the round pattern fixed; it
        # is the final-residual estimate when the walk exhausted all b slots,
        # and the breaking estimate already covers the early-exit case.
        def final_norm_fn(in_a, in_b):
            return norm_estimate_for(params.b), None

        f_fin = IdealFunctionality(name="norm-final", circuit_proxy=rows2 * 2 + COMPARE_GATES, fn=final_norm_fn)
        final_est, _ = smc_eval(
            f_fin,
            None,
            None,
            k,
            transcript,
            declared_in=2 * 8 * rows2,
            declared_out=16,
        )
        error_estimate = break_estimate if break_estimate is not None else final_est

    return HeavyHittersOutput(
        terms=tuple(emitted),
        aux_seeds={"r1": r1_seed.hex(), "r2": r2_seed.hex()},
        error_estimate=error_estimate,
        total_bytes=transcript.total_bytes,
        rounds=transcript.rounds,
        transcript=transcript,
        trace=trace,
    )


def run_heavy_hitters(a, b, params: ProtocolParams, session_seed, norm_mode: str = "ideal") -> HeavyHittersOutput:
    """Run the protocol; returns at most b terms in decreasing term order,
    plus the matrix seeds as auxiliary output."""
    return _run(a, b, params, session_seed, norm_mode, with_error=False)


def run_heavy_hitters_with_error(a, b, params: ProtocolParams, session_seed, norm_mode: str = "ideal") -> HeavyHittersOutput:
    """As run_heavy_hitters, additionally reporting a norm estimate of the final
    residual, within [||c - out||_2 / sqrt(1+eps), ||c - out||_2]."""
    return _run(a, b, params, session_seed, norm_mode, with_error=True)
