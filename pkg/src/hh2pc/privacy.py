"""Simulator, statistical-distance testing, and adversarial instance families.

The simulator receives only what the protocol is allowed to leak: the optimal
summary and the exact squared norm. It replays the output walk against
residual energies derived from the profile alone, drawing norm estimates
through the same ideal-mode map the protocol uses. In ideal mode the real
output distribution factors through the leakage profile, so real and
simulated outputs should be statistically indistinguishable; the harness
checks this with empirical total-variation distance.

The instance generators build the families behind the lower bounds: set
disjointness supports, and the two-case family whose optimal summaries agree
while the norms differ, which defeats any simulator denied the norm.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .normest import simulate_norm_estimate
from .params import ProtocolParams
from .protocol import run_heavy_hitters
from .runtime import as_seed, derive_seed, seed_to_int
from .terms import Representation, Term, as_vector, norm_squared, term_key, top_b


@dataclass(frozen=True)
class LeakageProfile:
    """What a protocol run is allowed to reveal about the sum vector."""

    top_terms: Representation
    squared_norm: int


def leakage_profile(c, b: int) -> LeakageProfile:
    vec = as_vector(c)
    return LeakageProfile(top_terms=top_b(vec, b), squared_norm=norm_squared(vec))


def simulate_heavy_hitters(
    profile: LeakageProfile,
    params: ProtocolParams,
    sim_seed,
) -> tuple[Representation, dict[str, str]]:
    """Sample from the simulated output distribution given only the profile.

    Walks the optimal terms in decreasing order; at step j the residual
    energy is E_j = ||c||^2 - sum of the emitted squares, the norm estimate
    is drawn through the ideal-mode map on a fresh seed, and the term is
    emitted iff its squared value clears theta times the estimate (zero
    coefficients never do). Returns the emitted terms and simulated seeds.
    """
    seed = as_seed(sim_seed)
    ordered = sorted(profile.top_terms, key=term_key, reverse=True)
    if len(ordered) > params.b:
        raise ValueError("profile has more than b terms")
    total = sum(t.value * t.value for t in ordered)
    if total > profile.squared_norm:
        raise ValueError("profile is inconsistent: summary energy exceeds the norm")
    r1_sim = derive_seed(seed, "r1")
    r2_sim = derive_seed(seed, "r2")
    emitted: list[Term] = []
    emitted_sq = 0
    theta = params.theta
    for j, term in enumerate(ordered):
        if term.value == 0:
            break
        e_j = profile.squared_norm - emitted_sq
        est, _ = simulate_norm_estimate(e_j, params.epsilon, derive_seed(r2_sim, "norm-draw", j))
        if Fraction(term.value * term.value) >= theta * est.squared:
            emitted.append(term)
            emitted_sq += term.value * term.value
        else:
            break
    return tuple(emitted), {"r1": r1_sim.hex(), "r2": r2_sim.hex()}


def norm_blind_profile(top_terms: Representation) -> LeakageProfile:
    """The baseline simulator's input when denied the norm: it has nothing
    better than a fixed guess derived from the summary itself."""
    guess = sum(t.value * t.value for t in top_terms)
    return LeakageProfile(top_terms=top_terms, squared_norm=guess)


def encode_terms(terms: Iterable[Term]) -> str:
    """Canonical serialization of a term list for distribution comparison."""
    return ";".join(f"{t.index}:{t.value}" for t in terms)


def tv_distance(
    sampler_p: Callable[[int], object],
    sampler_q: Callable[[int], object],
    trials: int,
) -> float:
    """Empirical total-variation distance between two samplers' outputs over
    `trials` draws each."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    cp = Counter(sampler_p(t) for t in range(trials))
    cq = Counter(sampler_q(t) for t in range(trials))
    keys = set(cp) | set(cq)
    return 0.5 * sum(abs(cp[x] - cq[x]) / trials for x in keys)


def real_output_counter(
    a,
    b,
    params: ProtocolParams,
    trials: int,
    master_seed,
    norm_mode: str = "ideal",
) -> Counter:
    seed = as_seed(master_seed)
    counts: Counter = Counter()
    for t in range(trials):
        out = run_heavy_hitters(a, b, params, derive_seed(seed, "real", t), norm_mode=norm_mode)
        counts[encode_terms(out.terms)] += 1
    return counts


def simulated_output_counter(
    profile: LeakageProfile,
    params: ProtocolParams,
    trials: int,
    master_seed,
) -> Counter:
    seed = as_seed(master_seed)
    counts: Counter = Counter()
    for t in range(trials):
        terms, _ = simulate_heavy_hitters(profile, params, derive_seed(seed, "sim", t))
        counts[encode_terms(terms)] += 1
    return counts


def tv_from_counters(cp: Counter, cq: Counter, trials: int) -> float:
    keys = set(cp) | set(cq)
    return 0.5 * sum(abs(cp[x] - cq[x]) / trials for x in keys)


def seed_uniformity_ok(seeds: Sequence[bytes], buckets: int = 16, alpha_chi2: float | None = None) -> bool:
    """Chi-square uniformity check on the first byte of each seed, at the 1%
    level for 15 degrees of freedom unless a custom critical value is given."""
    if not seeds:
        return False
    counts = np.zeros(buckets, dtype=np.int64)
    for s in seeds:
        counts[s[0] % buckets] += 1
    expected = len(seeds) / buckets
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    critical = alpha_chi2 if alpha_chi2 is not None else 30.58  # chi2_{0.99, df=15}
    return chi2 <= critical


def privacy_test(
    a,
    b,
    params: ProtocolParams,
    trials: int,
    master_seed=b"privacy-test",
    norm_mode: str = "ideal",
    tv_threshold: float = 0.05,
    blind: bool = False,
) -> dict:
    """Compare the real output distribution against the simulator's.

    Runs the protocol `trials` times on fresh session seeds and the simulator
    `trials` times on fresh simulation seeds, then reports the empirical TV
    distance of the term distributions. Seeds are checked separately for
    marginal uniformity. Only ideal norm mode is certifying.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    va, vb = as_vector(a), as_vector(b)
    c = va + vb
    profile = leakage_profile(c, params.b)
    if blind:
        profile = norm_blind_profile(profile.top_terms)
    seed = as_seed(master_seed)
    real_counts: Counter = Counter()
    real_seeds: list[bytes] = []
    for t in range(trials):
        out = run_heavy_hitters(va, vb, params, derive_seed(seed, "real", t), norm_mode=norm_mode)
        real_counts[encode_terms(out.terms)] += 1
        real_seeds.append(bytes.fromhex(out.aux_seeds["r2"]))
    sim_counts: Counter = Counter()
    sim_seeds: list[bytes] = []
    for t in range(trials):
        terms, seeds = simulate_heavy_hitters(profile, params, derive_seed(seed, "sim", t))
        sim_counts[encode_terms(terms)] += 1
        sim_seeds.append(bytes.fromhex(seeds["r2"]))
    tv = tv_from_counters(real_counts, sim_counts, trials)
    report = {
        "trials": trials,
        "tv": tv,
        "pass": tv <= tv_threshold,
        "norm_mode": norm_mode,
        "certifying": norm_mode == "ideal",
        "blind": blind,
        "seed_uniformity": seed_uniformity_ok(real_seeds) and seed_uniformity_ok(sim_seeds),
        "real_support": len(real_counts),
        "sim_support": len(sim_counts),
    }
    return report


def gen_disjointness_instance(n: int, intersecting: bool, seed) -> tuple[np.ndarray, np.ndarray]:
    """Set-disjointness supports: {0,1}-vectors with exactly n/4 ones each,
    disjoint or overlapping in exactly one index."""
    if n % 4 != 0:
        raise ValueError("n must be divisible by 4")
    rng = np.random.Generator(np.random.Philox(key=seed_to_int(as_seed(seed), 128)))
    quarter = n // 4
    perm = rng.permutation(n)
    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)
    a[perm[:quarter]] = 1
    if intersecting:
        b[perm[quarter - 1 : 2 * quarter - 1]] = 1
    else:
        b[perm[quarter : 2 * quarter]] = 1
    return a, b


def gen_leakage_instance(n: int, case_id: int, seed, m: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """The two-case family: one entry of 2n, then n/2 - 1 entries of 1
    (case 1) or of n (case 2), zero elsewhere, randomly permuted. Both cases
    share the same optimal 1-term summary. Returns an additive split of the
    permuted vector with parts bounded by m (default 2n)."""
    if n < 4 or n % 2 != 0:
        raise ValueError("n must be even and >= 4")
    if case_id not in (1, 2):
        raise ValueError("case_id must be 1 or 2")
    if m is None:
        m = 2 * n
    if m < 2 * n:
        raise ValueError("m must be at least 2n")
    rng = np.random.Generator(np.random.Philox(key=seed_to_int(as_seed(seed), 128)))
    fill = 1 if case_id == 1 else n
    base = np.zeros(n, dtype=np.int64)
    base[0] = 2 * n
    base[1 : n // 2] = fill
    perm = rng.permutation(n)
    c = np.zeros(n, dtype=np.int64)
    c[perm] = base  # same seed gives both cases the same permutation
    a, b = split_vector(c, m, derive_seed(as_seed(seed), "split"))
    return a, b


def split_vector(c, m: int, seed: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Uniform additive split of c into a + b with both parts in [-m, m]."""
    vec = as_vector(c)
    if int(np.abs(vec).max(initial=0)) > 2 * m:
        raise ValueError("vector entries exceed 2m; no valid split exists")
    rng = np.random.Generator(np.random.Philox(key=int.from_bytes(seed[:16], "little")))
    lo = np.maximum(-m, vec - m)
    hi = np.minimum(m, vec + m)
    a = rng.integers(lo, hi + 1, dtype=np.int64)
    return a, vec - a


def planted_instance(n: int, m: int, b: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """A random instance with planted heavy values over a light noise floor,
    split additively between the parties. Used by sweeps and the harness."""
    sd = as_seed(seed)
    rng = np.random.Generator(np.random.Philox(key=seed_to_int(sd, 128)))
    c = rng.integers(-max(1, m // 20), max(1, m // 20) + 1, size=n, dtype=np.int64)
    nheavy = int(rng.integers(0, b + 3))
    if nheavy:
        idx = rng.choice(n, size=nheavy, replace=False)
        mags = rng.integers(m // 2, m + 1, size=nheavy, dtype=np.int64)
        signs = rng.choice(np.array([-1, 1], dtype=np.int64), size=nheavy)
        c[idx] = mags * signs
    np.clip(c, -2 * m, 2 * m, out=c)
    return split_vector(c, m, derive_seed(sd, "split"))
