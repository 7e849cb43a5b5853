"""Two-party execution fabric.

Everything here is an in-process model: additive secret sharing over a
Mersenne prime, a transcript that charges bytes and rounds, Private Sample
Sum as an ideal functionality, and a generic SMC wrapper whose costs follow
the k * (|inputs| + |outputs| + circuit) accounting. Ideal functionalities
never place party data on the channel; the transcript records lengths and
tags only, which is what the logged-payload canary test relies on.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Mersenne prime: fast reduction and comfortably above 8 * M^2 * N for the
# supported envelope.
PRIME = (1 << 61) - 1

SEED_BYTES = 32


def as_seed(seed: int | str | bytes | tuple) -> bytes:
    """Normalize any seed-ish value (int, str, bytes, or a tuple of such)
    to 32 bytes."""
    if isinstance(seed, bytes):
        data = seed
    elif isinstance(seed, int):
        data = seed.to_bytes(32, "little", signed=True)
    elif isinstance(seed, str):
        data = seed.encode("utf-8")
    elif isinstance(seed, tuple):
        h = hashlib.blake2b(digest_size=SEED_BYTES)
        for part in seed:
            h.update(as_seed(part))
        data = h.digest()
    else:
        raise TypeError(f"cannot derive a seed from {type(seed)}")
    return hashlib.blake2b(data, digest_size=SEED_BYTES).digest()


def derive_seed(seed: bytes, *labels: object) -> bytes:
    """Deterministically derive an independent 32-byte seed for a sub-purpose."""
    h = hashlib.blake2b(key=seed[:32], digest_size=SEED_BYTES)
    for lab in labels:
        h.update(str(lab).encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


def seed_to_int(seed: bytes, nbits: int) -> int:
    """Integer uniform on [0, 2^nbits) derived from a seed (nbits <= 256)."""
    return int.from_bytes(hashlib.blake2b(seed, digest_size=32).digest(), "little") % (1 << nbits)


def uniform_mod(seed: bytes, modulus: int) -> int:
    # 256-bit reduction: bias below 2^-190 for any modulus in range here.
    return seed_to_int(seed, 256) % modulus


@dataclass(frozen=True)
class Share:
    value: int
    party: str  # "A" or "B"

    def __post_init__(self) -> None:
        if not 0 <= self.value < PRIME:
            raise ValueError("share value out of field range")
        if self.party not in ("A", "B"):
            raise ValueError("party must be 'A' or 'B'")


def share(x: int, randomness: bytes) -> tuple[Share, Share]:
    """Additively share x: Alice holds r, Bob holds x - r (mod p)."""
    if abs(x) >= PRIME // 2:
        raise ValueError("value out of range for sharing")
    r = uniform_mod(randomness, PRIME)
    return Share(r, "A"), Share((x - r) % PRIME, "B")


def reconstruct(sa: Share, sb: Share) -> int:
    """Recombine shares, mapping to the signed representative."""
    v = (sa.value + sb.value) % PRIME
    if v > PRIME // 2:
        v -= PRIME
    return v


@dataclass
class Message:
    round: int
    direction: str  # "A→B" or "B→A"
    nbytes: int
    tag: str


@dataclass
class Transcript:
    """Message log with byte and round accounting.

    Only (round, direction, byteLength, tag) is recorded per message; rounds
    count direction alternations between consecutive messages.
    """

    messages: list[Message] = field(default_factory=list)

    def log(self, direction: str, nbytes: int, tag: str) -> None:
        if direction not in ("A→B", "B→A"):
            raise ValueError("direction must be 'A→B' or 'B→A'")
        rnd = 0
        if self.messages:
            last = self.messages[-1]
            rnd = last.round + (1 if last.direction != direction else 0)
        self.messages.append(Message(rnd, direction, int(nbytes), tag))

    def exchange(self, nbytes_ab: int, nbytes_ba: int, tag: str) -> None:
        """One synchronous flight in each direction."""
        self.log("A→B", nbytes_ab, tag)
        self.log("B→A", nbytes_ba, tag)

    @property
    def total_bytes(self) -> int:
        return sum(m.nbytes for m in self.messages)

    @property
    def rounds(self) -> int:
        r = 0
        for prev, cur in zip(self.messages, self.messages[1:]):
            if prev.direction != cur.direction:
                r += 1
        return r

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"round": m.round, "dir": m.direction, "bytes": m.nbytes, "tag": m.tag})
            + "\n"
            for m in self.messages
        )


@dataclass(frozen=True)
class IdealFunctionality:
    """A jointly computed circuit with Yao-style cost accounting.

    Charged bytes are k * (inputBytes + outputBytes + circuitProxy), where
    circuitProxy is a declared per-functionality gate-count estimate.
    """

    name: str
    circuit_proxy: int
    fn: Callable


def _nbytes(obj) -> int:
    """Canonical byte size of a functionality input/output: 8 bytes per scalar."""
    if obj is None:
        return 0
    if isinstance(obj, (int, float, bool)):
        return 8
    if isinstance(obj, Share):
        return 8
    if isinstance(obj, bytes):
        return len(obj)
    if isinstance(obj, np.ndarray):
        return 8 * obj.size
    if isinstance(obj, (list, tuple)):
        return sum(_nbytes(x) for x in obj)
    if isinstance(obj, dict):
        return sum(_nbytes(v) for v in obj.values())
    raise TypeError(f"unsized functionality value: {type(obj)}")


def smc_eval(
    f: IdealFunctionality,
    inputs_a,
    inputs_b,
    k: int,
    transcript: Transcript | None = None,
    declared_in: int | None = None,
    declared_out: int | None = None,
):
    """Evaluate f on the joint inputs, charging one round and the cost model.

    Input bytes are summed over both parties; output bytes are the size of
    the (common or per-party) result, counted once. Callers may declare the
    sizes where the charged size is a parameter-derived constant rather than
    the in-process representation size.
    """
    out_a, out_b = f.fn(inputs_a, inputs_b)
    in_bytes = declared_in if declared_in is not None else _nbytes(inputs_a) + _nbytes(inputs_b)
    out_bytes = declared_out if declared_out is not None else max(_nbytes(out_a), _nbytes(out_b))
    total = k * (in_bytes + out_bytes + f.circuit_proxy)
    if transcript is not None:
        half = total // 2
        transcript.exchange(half, total - half, f"smc:{f.name}")
    return out_a, out_b


def pss_cost(n: int, k: int) -> int:
    """Charged bytes for one Private Sample Sum call."""
    return math.ceil(k * math.log2(n) * 32)


def pss(
    a: Sequence[int] | np.ndarray,
    b: Sequence[int] | np.ndarray,
    idx_shares: tuple[Share, Share],
    k: int,
    randomness: bytes,
    transcript: Transcript | None = None,
) -> tuple[Share, Share]:
    """Private Sample Sum: from a secret-shared index, produce a secret
    sharing of a_i + b_i. Modeled as an ideal functionality; neither the
    index nor the value appears on the channel."""
    n = len(a)
    i = reconstruct(*idx_shares)
    if not 0 <= i < n:
        raise ValueError(f"reconstructed index {i} out of range [0, {n})")
    value = int(a[i]) + int(b[i])
    out = share(value, randomness)
    if transcript is not None:
        cost = pss_cost(n, k)
        half = cost // 2
        transcript.exchange(half, cost - half, "pss")
    return out


def pss_batch(
    a,
    b,
    idx_shares_list: Sequence[tuple[Share, Share]],
    k: int,
    randomness: bytes,
    transcript: Transcript | None = None,
) -> list[tuple[Share, Share]]:
    """All Private Sample Sum fetches of one protocol step, run in parallel:
    bytes are charged per call, the batch occupies a single round."""
    n = len(a)
    out = []
    for t, idx_shares in enumerate(idx_shares_list):
        out.append(pss(a, b, idx_shares, k, derive_seed(randomness, "pss", t), None))
    if transcript is not None:
        cost = pss_cost(n, k) * max(1, len(idx_shares_list))
        half = cost // 2
        transcript.exchange(half, cost - half, "pss-batch")
    return out
