"""Seeded ±1 measurement matrices, linear sketches, and iterative recovery.

Matrix entries are the low bits of a keyed counter-mode block cipher
(Philox) driven by the matrix seed, so the whole matrix is reproducible from
32 bytes. Rows are grouped into independent repetitions, each its own keyed
stream: coefficients are estimated per repetition by correlating against a
column and averaging over the group's rows, and the final estimate is the
median across groups.

Geometry defaults: rows_per_rep = ceil(16 * B^2 / eps^2) gives per-group
failure <= 1/16 at accuracy (eps/B)*||c||_2 by Chebyshev, and the median over
an odd number of groups >= k + 1 pushes the failure below 2^-k (binomial
tail: C(m, m/2) * 16^(-m/2) <= 2^-m). Rows per repetition are rounded up to
a byte multiple so each column of a group occupies whole bytes of the
stream.

Only the packed pseudorandom bytes are kept per matrix (column-major within
a group). Full sign blocks are expanded one group at a time through a reused
scratch buffer, and operations that touch few columns (residual updates,
candidate re-estimation) expand just those columns' bytes, which keeps
repeated recovery passes cheap.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .params import ceil_frac
from .terms import Term, as_vector


_F32_EXACT_BOUND = 1 << 24
_F64_EXACT_BOUND = 1 << 53

# How many robust standard errors a stale estimate is trusted to within when
# deciding whether an index could still clear a later pass's threshold.
_POOL_SLACK_SIGMAS = 6.0
_MAD_TO_MEDIAN_STD = 1.4826 * 1.2533

# Byte value -> eight float32 signs (bit 1 maps to -1), msb first.
_LUT8 = np.array(
    [[-1.0 if (v >> (7 - b)) & 1 else 1.0 for b in range(8)] for v in range(256)],
    dtype=np.float32,
)

# Floats per expansion chunk (~0.5 MB of float32).
_CHUNK_FLOATS = 1 << 17

_scratch = threading.local()


def _scratch_buffer(shape: tuple[int, int]) -> np.ndarray:
    buffers = getattr(_scratch, "buffers", None)
    if buffers is None:
        buffers = _scratch.buffers = {}
    buf = buffers.get(shape)
    if buf is None:
        buf = buffers[shape] = np.empty(shape, dtype=np.float32)
    return buf


def default_reps(k: int) -> int:
    """Odd number of repetition groups sufficient for 2^-k median failure."""
    r = max(k + 1, 3)
    return r if r % 2 == 1 else r + 1


def rows_per_rep_for(b: int, epsilon: Fraction) -> int:
    """Rows per repetition for coefficient accuracy (eps/B)*||c||_2."""
    return ceil_frac(16 * b * b / (Fraction(epsilon) * Fraction(epsilon)))


def _philox_key(seed: bytes, group: int) -> int:
    h = hashlib.blake2b(seed, digest_size=16, person=b"hh2pc-mtx")
    h.update(group.to_bytes(4, "little"))
    return int.from_bytes(h.digest(), "little")


@dataclass
class MeasurementMatrix:
    """A reps x rows_per_rep block of pseudorandom ±1 rows over [0, cols)."""

    seed: bytes
    reps: int
    rows_per_rep: int
    cols: int
    _raw: list[np.ndarray] | None = field(default=None, repr=False, compare=False)
    _signs: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        # Whole bytes per column of each group's stream.
        self.rows_per_rep = ((self.rows_per_rep + 7) // 8) * 8

    @property
    def rows(self) -> int:
        return self.reps * self.rows_per_rep

    @property
    def _col_bytes(self) -> int:
        return self.rows_per_rep // 8

    def _raw_groups(self) -> list[np.ndarray]:
        if self._raw is None:
            nbytes = self.cols * self._col_bytes
            self._raw = [
                np.frombuffer(
                    np.random.Generator(np.random.Philox(key=_philox_key(self.seed, g))).bytes(nbytes),
                    dtype=np.uint8,
                )
                for g in range(self.reps)
            ]
        return self._raw

    def group_block_t(self, g: int, out: np.ndarray | None = None) -> np.ndarray:
        """One repetition group as a (cols, rows_per_rep) ±1 float32 block.

        Without `out`, a per-thread scratch buffer is returned whose contents
        are only valid until the next call on this thread.
        """
        if not 0 <= g < self.reps:
            raise IndexError("group index out of range")
        if out is None:
            out = _scratch_buffer((self.cols, self.rows_per_rep))
        raw = self._raw_groups()[g]
        np.take(_LUT8, raw, axis=0, out=out.reshape(-1, 8))
        return out

    @property
    def _chunk_cols(self) -> int:
        # Expansion chunks sized to stay cache-resident: the byte-to-sign
        # gather runs several times faster into a small hot buffer.
        return max(8, min(self.cols, _CHUNK_FLOATS // self.rows_per_rep))

    def iter_col_chunks(self, g: int):
        """Yield (column slice, expanded (chunk, rows_per_rep) ±1 block) over
        one group, through a reused scratch buffer."""
        step = self._chunk_cols
        cb = self._col_bytes
        raw = self._raw_groups()[g]
        buf = _scratch_buffer((step, self.rows_per_rep))
        for lo in range(0, self.cols, step):
            hi = min(lo + step, self.cols)
            chunk = buf[: hi - lo]
            np.take(_LUT8, raw[lo * cb : hi * cb], axis=0, out=chunk.reshape(-1, 8))
            yield slice(lo, hi), chunk

    def columns(self, g: int, idxs: Sequence[int]) -> np.ndarray:
        """Expand only the given columns of one group: (len(idxs), rows_per_rep)."""
        raw = self._raw_groups()[g].reshape(self.cols, self._col_bytes)
        return _LUT8[raw[list(idxs)]].reshape(len(idxs), self.rows_per_rep)

    def signs(self) -> np.ndarray:
        """The full ±1 matrix in row-major (rows, cols) form, materialized and
        cached; intended for small matrices and inspection."""
        if self._signs is None:
            full = np.empty((self.rows, self.cols), dtype=np.float32)
            rpr = self.rows_per_rep
            for g in range(self.reps):
                full[g * rpr : (g + 1) * rpr] = self.group_block_t(g).T
            self._signs = full
        return self._signs

    def entry(self, r: int, i: int) -> int:
        if not (0 <= r < self.rows and 0 <= i < self.cols):
            raise IndexError("matrix entry out of range")
        g, j = divmod(r, self.rows_per_rep)
        return int(self.columns(g, [i])[0, j])

    def drop_cache(self) -> None:
        self._signs = None
        self._raw = None


@dataclass(frozen=True)
class Sketch:
    """Exact integer image R*c of a vector under a measurement matrix."""

    matrix_seed: bytes
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.int64))


def gen_matrix(seed: bytes, reps: int, rows_per_rep: int, n: int) -> MeasurementMatrix:
    if reps < 1 or rows_per_rep < 1 or n < 1:
        raise ValueError("matrix dimensions must be >= 1")
    return MeasurementMatrix(seed=bytes(seed), reps=reps, rows_per_rep=rows_per_rep, cols=n)


def _stack_columns(vectors: Sequence[np.ndarray]) -> tuple[np.ndarray, bool]:
    bound = max(int(np.abs(v).sum()) for v in vectors)
    if bound < _F32_EXACT_BOUND:
        return np.stack(vectors, axis=1).astype(np.float32), True
    if bound < _F64_EXACT_BOUND:
        return np.stack(vectors, axis=1).astype(np.float64), False
    raise ValueError("vector magnitude outside the exact sketch envelope")


def _sketch_many(matrix: MeasurementMatrix, vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    cols, use_f32 = _stack_columns(vectors)
    rpr = matrix.rows_per_rep
    out = np.zeros((matrix.rows, cols.shape[1]), dtype=np.float64)
    for g in range(matrix.reps):
        acc = out[g * rpr : (g + 1) * rpr]
        for sl, chunk in matrix.iter_col_chunks(g):
            # Chunk partials are exact integers in either dtype; accumulating
            # them in float64 keeps the total exact.
            if use_f32:
                acc += chunk.T @ cols[sl]
            else:
                acc += chunk.T.astype(np.float64) @ cols[sl]
    ints = np.rint(out).astype(np.int64)
    return [ints[:, j] for j in range(ints.shape[1])]


def sketch(matrix: MeasurementMatrix, c) -> Sketch:
    vec = as_vector(c)
    if len(vec) != matrix.cols:
        raise ValueError(f"vector length {len(vec)} != matrix cols {matrix.cols}")
    return Sketch(matrix_seed=matrix.seed, values=_sketch_many(matrix, [vec])[0])


def sketch_pair(matrix: MeasurementMatrix, a, b) -> tuple[Sketch, Sketch]:
    """Both parties' sketches in a single pass over the matrix."""
    va, vb = as_vector(a), as_vector(b)
    if len(va) != matrix.cols or len(vb) != matrix.cols:
        raise ValueError("vector length does not match matrix cols")
    sa, sb = _sketch_many(matrix, [va, vb])
    return Sketch(matrix.seed, sa), Sketch(matrix.seed, sb)


def _subtract_terms(matrix: MeasurementMatrix, values: np.ndarray, idxs: list[int], vals: np.ndarray) -> None:
    """values -= R * (sparse vector), groupwise, exactly, in place."""
    rpr = matrix.rows_per_rep
    for g in range(matrix.reps):
        cols = matrix.columns(g, idxs).astype(np.float64)
        values[g * rpr : (g + 1) * rpr] -= vals @ cols


def sketch_minus_terms(matrix: MeasurementMatrix, sk: Sketch, terms: Sequence[Term]) -> Sketch:
    """Sketch of the residual: subtract the terms' contribution, exactly,
    without touching the underlying vector."""
    if sk.matrix_seed != matrix.seed:
        raise ValueError("sketch was not built from this matrix")
    if not terms:
        return sk
    idxs = [int(t[0]) for t in terms]
    vals = np.array([int(t[1]) for t in terms], dtype=np.float64)
    out = sk.values.astype(np.float64)
    _subtract_terms(matrix, out, idxs, vals)
    return Sketch(matrix_seed=matrix.seed, values=np.rint(out).astype(np.int64))


def estimate_coeff(matrix: MeasurementMatrix, sk: Sketch, i: int) -> Fraction:
    """Point estimate of c_i: median over repetition groups of the exact
    per-group correlation mean."""
    if sk.matrix_seed != matrix.seed:
        raise ValueError("sketch was not built from this matrix")
    if not 0 <= i < matrix.cols:
        raise IndexError("column index out of range")
    s = sk.values.astype(np.float64)
    rpr = matrix.rows_per_rep
    dots = []
    for g in range(matrix.reps):
        col = matrix.columns(g, [i])[0].astype(np.float64)
        dots.append(int(round(float(col @ s[g * rpr : (g + 1) * rpr]))))
    dots.sort()
    mid = len(dots) // 2
    if len(dots) % 2 == 1:
        return Fraction(dots[mid], rpr)
    return Fraction(dots[mid - 1] + dots[mid], 2 * rpr)


def _norm_sq_estimate(s: np.ndarray, reps: int, rpr: int) -> float:
    sq = np.square(s).reshape(reps, rpr)
    return float(np.median(sq.mean(axis=1)))


def recover_superset(
    matrix: MeasurementMatrix,
    sk: Sketch,
    b: int,
    theta: Fraction,
    k: int,
    max_size: int | None = None,
    max_passes: int | None = None,
) -> tuple[int, ...]:
    """Indices containing the (b, theta)-qualified set of the sketched vector,
    with probability >= 1 - 2^-k over the matrix seed.

    The first pass estimates every coefficient against the sketch (one full
    groupwise sweep), accepts indices whose squared estimate clears half the
    theta threshold (the slack absorbs estimation error), and subtracts the
    integer approximations from the sketch. Later passes rescan only the
    candidate pool: indices whose last estimate, padded by a robust spread
    bound taken across repetition groups, could still clear the shrunken
    threshold. The loop stops when nothing new clears the bar, the energy is
    exhausted, or the pass cap is reached.
    """
    if sk.matrix_seed != matrix.seed:
        raise ValueError("sketch was not built from this matrix")
    theta_f = float(theta)
    if theta_f <= 0:
        raise ValueError("theta must be positive")
    reps, rpr, n = matrix.reps, matrix.rows_per_rep, matrix.cols
    s = sk.values.astype(np.float64)
    per_pass_cap = ceil_frac(1 / Fraction(theta))
    approx: dict[int, int] = {}
    # Upper bound on each coefficient's current-residual magnitude: freshest
    # estimate plus a robust spread allowance (infinite until estimated).
    upper = np.full(n, np.inf)
    passes_done = 0
    while True:
        norm_est = _norm_sq_estimate(s, reps, rpr)
        if max_passes is None:
            max_passes = max(1, math.ceil(math.log2(max(2.0, 4.0 * norm_est + 1.0))))
        if norm_est < 0.25:
            break
        thresh = 0.5 * theta_f * norm_est
        scan_all = passes_done == 0
        if not scan_all:
            pool = np.flatnonzero(upper * upper >= thresh)
            if pool.size == 0:
                break
            if pool.size > n // 2:
                scan_all = True
        scanned = np.arange(n) if scan_all else pool
        per_rep = np.empty((reps, len(scanned)), dtype=np.float32)
        for g in range(reps):
            sg = s[g * rpr : (g + 1) * rpr]
            use_f32 = float(np.abs(sg).max(initial=0.0)) < _F32_EXACT_BOUND
            sgf = sg.astype(np.float32) if use_f32 else sg
            if scan_all:
                row = per_rep[g]
                for sl, chunk in matrix.iter_col_chunks(g):
                    row[sl] = chunk @ sgf
            else:
                per_rep[g] = matrix.columns(g, scanned.tolist()) @ sgf
        med32 = np.median(per_rep, axis=0)
        med = med32.astype(np.float64) / rpr
        mad = np.median(np.abs(per_rep - med32), axis=0).astype(np.float64) / rpr
        slack = _POOL_SLACK_SIGMAS * _MAD_TO_MEDIAN_STD * mad / math.sqrt(reps)
        upper[scanned] = np.abs(med) + slack
        passes_done += 1
        cand = np.flatnonzero(med * med >= thresh)
        if cand.size == 0:
            break
        order = cand[np.argsort(-np.abs(med[cand]), kind="stable")][:per_pass_cap]
        updates: list[tuple[int, int]] = []
        fresh = 0
        for pos in order.tolist():
            i = int(scanned[pos])
            v = int(round(float(med[pos])))
            if v == 0:
                continue
            if i not in approx:
                if max_size is not None and len(approx) + fresh >= max_size:
                    continue  # size budget spent; corrections still allowed
                fresh += 1
            updates.append((i, v))
        if not updates:
            break
        for i, v in updates:
            approx[i] = approx.get(i, 0) + v
            upper[i] = np.inf  # residual changes under the subtraction
        if passes_done >= max_passes:
            break
        _subtract_terms(matrix, s, [i for i, _ in updates], np.array([v for _, v in updates], dtype=np.float64))
    return tuple(sorted(approx))
