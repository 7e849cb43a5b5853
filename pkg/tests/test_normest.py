"""Norm approximation contract: ideal band, simulatability, sketch mode."""

import math
from fractions import Fraction

import numpy as np
import pytest

from hh2pc.normest import (
    NormEstimate,
    estimate_norm,
    estimate_norm_sketch,
    norm_rows_per_rep,
    norm_value_at_level,
    simulate_norm_estimate,
)
from hh2pc.runtime import as_seed, derive_seed
from hh2pc.sketch import default_reps, gen_matrix, sketch
from hh2pc.terms import norm_squared

SEED = as_seed(b"norm-tests")


def band_bucket(estimate_sq: Fraction, exact_sq: int, eps: Fraction, buckets: int = 16) -> int:
    """Coarse position of the estimate inside [E/(1+eps), E], for histogram
    comparison (the raw fixed-point support is too fine to compare at 10^4
    samples)."""
    if exact_sq == 0:
        return 0
    u = -math.log(float(estimate_sq) / exact_sq) / math.log1p(float(eps))
    return min(buckets - 1, max(0, int(u * buckets)))


class TestIdealMode:
    def test_zero(self):
        est = estimate_norm(0, Fraction(1, 4), SEED)
        assert est.value == 0 and est.squared == 0

    def test_zero_offset_grid_point(self):
        assert norm_value_at_level(100, Fraction(1, 4), 0) == 10

    def test_band_always(self):
        eps = Fraction(1, 4)
        lo = Fraction(100) / (1 + eps)
        for t in range(1000):
            est = estimate_norm(100, eps, derive_seed(SEED, "band", t))
            assert lo <= est.squared <= 100

    def test_negative_input_rejected(self):
        with pytest.raises(ValueError):
            estimate_norm(-1, Fraction(1), SEED)

    def test_deterministic_in_seed(self):
        s = derive_seed(SEED, "det")
        assert estimate_norm(12345, Fraction(1, 3), s) == estimate_norm(12345, Fraction(1, 3), s)

    def test_monotone_in_input_at_fixed_seed(self):
        s = derive_seed(SEED, "mono")
        last = Fraction(-1)
        for e in [0, 1, 5, 100, 101, 10_000, 123_456]:
            est = estimate_norm(e, Fraction(1, 2), s)
            assert est.squared >= last
            last = est.squared

    def test_factors_through_the_norm(self):
        # Two different vectors with equal squared norm and equal seed give
        # identical estimates: the map never sees the vector itself.
        v1 = [3, 4, 0, 0]
        v2 = [0, 0, 5, 0]
        s = derive_seed(SEED, "fact")
        e1 = estimate_norm(norm_squared(v1), Fraction(1, 2), s)
        e2 = estimate_norm(norm_squared(v2), Fraction(1, 2), s)
        assert e1 == e2

    def test_value_squared_consistency(self):
        est = estimate_norm(77, Fraction(2, 3), SEED)
        assert est.value * est.value == est.squared


class TestSimulator:
    def test_zero(self):
        est, seed = simulate_norm_estimate(0, Fraction(1), SEED)
        assert est.value == 0 and seed == SEED

    def test_same_seed_identical(self):
        s = derive_seed(SEED, "sim")
        real = estimate_norm(500, Fraction(1, 4), s)
        sim, _ = simulate_norm_estimate(500, Fraction(1, 4), s)
        assert sim == real

    def test_distribution_matches_bucketed(self):
        eps = Fraction(1, 4)
        n = 10_000
        buckets = 16
        hist_real = np.zeros(buckets)
        hist_sim = np.zeros(buckets)
        for t in range(n):
            r = estimate_norm(100, eps, derive_seed(SEED, "tv-real", t))
            s, _ = simulate_norm_estimate(100, eps, derive_seed(SEED, "tv-sim", t))
            hist_real[band_bucket(r.squared, 100, eps, buckets)] += 1
            hist_sim[band_bucket(s.squared, 100, eps, buckets)] += 1
        tv = 0.5 * float(np.abs(hist_real - hist_sim).sum()) / n
        assert tv <= 0.03


class TestSketchMode:
    def _matrix(self, n, eps, k, tag):
        return gen_matrix(derive_seed(SEED, tag), default_reps(k), norm_rows_per_rep(eps), n)

    def test_zero_sketch(self):
        m = self._matrix(8, Fraction(1, 2), 4, "zero")
        est = estimate_norm_sketch(sketch(m, np.zeros(8, dtype=np.int64)), m, Fraction(1, 2), 4)
        assert est.value == 0

    def test_band_rate(self):
        # c = (3, 4, 0, ...): exact squared norm 25; estimate lands in
        # [25/(1+eps), 25] in at least 99% of seeds.
        eps, k = Fraction(1, 2), 10
        c = np.zeros(8, dtype=np.int64)
        c[0], c[1] = 3, 4
        lo = Fraction(25) / (1 + eps)
        ok = 0
        trials = 1000
        for t in range(trials):
            m = gen_matrix(derive_seed(SEED, "rate", t), default_reps(k), norm_rows_per_rep(eps), 8)
            est = estimate_norm_sketch(sketch(m, c), m, eps, k)
            ok += lo <= est.squared <= 25
        assert ok / trials >= 0.99

    @pytest.mark.parametrize("k", [4, 8])
    def test_failure_rate_sweep(self, k):
        eps = Fraction(1, 2)
        rng = np.random.default_rng(k)
        c = rng.integers(-10, 11, size=16)
        exact = norm_squared(c)
        lo = Fraction(exact) / (1 + eps)
        bad = 0
        trials = 1000
        for t in range(trials):
            m = gen_matrix(derive_seed(SEED, "sweep", k, t), default_reps(k), norm_rows_per_rep(eps), 16)
            est = estimate_norm_sketch(sketch(m, c), m, eps, k)
            bad += not (lo <= est.squared <= exact)
        assert bad / trials <= 2.0 ** (-k) + 0.01

    def test_too_small_sketch_rejected(self):
        m = gen_matrix(SEED, 3, 4, 8)  # far fewer rows than 64/eps^2
        s = sketch(m, np.ones(8, dtype=np.int64))
        with pytest.raises(ValueError):
            estimate_norm_sketch(s, m, Fraction(1, 2), 4)

    def test_mode_field(self):
        m = self._matrix(8, Fraction(1), 4, "mode")
        est = estimate_norm_sketch(sketch(m, np.ones(8, dtype=np.int64)), m, Fraction(1), 4)
        assert est.mode == "sketch"


class TestNormEstimateType:
    def test_rejects_inconsistent_square(self):
        with pytest.raises(ValueError):
            NormEstimate(Fraction(2), Fraction(5), "ideal", SEED)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            NormEstimate(Fraction(-1), Fraction(1), "ideal", SEED)
