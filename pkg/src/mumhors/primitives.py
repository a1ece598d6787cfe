"""Deterministic hash primitives: message hashing, one-way function, PRF,
truncation and index splitting.

All three keyed/unkeyed hash roles are instantiated from Blake2b-256 and
separated by a fixed one-byte prefix tag, so their outputs never coincide:

    0x00  message hash
    0x01  one-way function applied to private key elements
    0x02  PRF for per-slot key derivation

Bit order is most-significant-bit first everywhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import ParameterError

DIGEST_BYTES = 32
DIGEST_BITS = DIGEST_BYTES * 8

_TAG_HASH = b"\x00"
_TAG_ONEWAY = b"\x01"
_TAG_PRF = b"\x02"

# Incremented on every primitive call; read by the bench command.
CALL_COUNTS = {"hash_message": 0, "one_way": 0, "prf": 0}


def reset_call_counts() -> None:
    for key in CALL_COUNTS:
        CALL_COUNTS[key] = 0


def hash_message(message: bytes) -> bytes:
    """32-byte digest of a message."""
    CALL_COUNTS["hash_message"] += 1
    return hashlib.blake2b(_TAG_HASH + message, digest_size=DIGEST_BYTES).digest()


def one_way(x: bytes) -> bytes:
    """32-byte one-way image of a private key element."""
    CALL_COUNTS["one_way"] += 1
    return hashlib.blake2b(_TAG_ONEWAY + x, digest_size=DIGEST_BYTES).digest()


def prf(msk: bytes, row: int, col: int) -> bytes:
    """Per-slot private key: PRF of the master key and a (row, column) pair.

    The encoding is fixed width (row as 4-byte BE, column as 2-byte BE), so
    distinct coordinate pairs can never collide at the input level.
    """
    if len(msk) != 16:
        raise ParameterError(f"msk must be 16 bytes, got {len(msk)}")
    if not 1 <= row <= 0xFFFFFFFF:
        raise ParameterError(f"row out of range: {row}")
    if not 1 <= col <= 0xFFFF:
        raise ParameterError(f"col out of range: {col}")
    CALL_COUNTS["prf"] += 1
    data = _TAG_PRF + msk + row.to_bytes(4, "big") + col.to_bytes(2, "big")
    return hashlib.blake2b(data, digest_size=DIGEST_BYTES).digest()


@dataclass(frozen=True)
class TruncatedHash:
    """A bit string of `nbits` bits, held MSB-first in an integer."""

    value: int
    nbits: int

    def __post_init__(self):
        if self.nbits <= 0:
            raise ParameterError("nbits must be positive")
        if self.value < 0 or self.value >> self.nbits:
            raise ParameterError("value does not fit in nbits")

    def xor(self, other: "TruncatedHash") -> "TruncatedHash":
        if other.nbits != self.nbits:
            raise ParameterError("width mismatch in xor")
        return TruncatedHash(self.value ^ other.value, self.nbits)

    def to_bytes(self) -> bytes:
        """Pack MSB-first; trailing bits of the last byte are zero."""
        nbytes = (self.nbits + 7) // 8
        return (self.value << (nbytes * 8 - self.nbits)).to_bytes(nbytes, "big")


def trunc(digest: bytes, nbits: int) -> TruncatedHash:
    """The first `nbits` bits of a 32-byte digest."""
    if nbits > DIGEST_BITS:
        raise ParameterError(f"cannot truncate {len(digest)*8} bits to {nbits}")
    if len(digest) != DIGEST_BYTES:
        raise ParameterError(f"digest must be {DIGEST_BYTES} bytes")
    return TruncatedHash(int.from_bytes(digest, "big") >> (DIGEST_BITS - nbits), nbits)


def expand_pad(pad: bytes, nbits: int) -> TruncatedHash:
    """Fit a 16-byte pad to `nbits` bits: truncate, or cycle it when the
    hash is wider than the pad."""
    reps = (nbits + len(pad) * 8 - 1) // (len(pad) * 8)
    whole = int.from_bytes(pad * reps, "big")
    return TruncatedHash(whole >> (reps * len(pad) * 8 - nbits), nbits)


def split_indices(h: TruncatedHash, t: int, k: int) -> tuple[int, ...]:
    """Split a k*log2(t)-bit hash into k integers in [0, t-1], MSB chunk first."""
    if t < 2 or t & (t - 1):
        raise ParameterError(f"t must be a power of two, got {t}")
    log_t = t.bit_length() - 1
    if h.nbits != k * log_t:
        raise ParameterError(f"hash is {h.nbits} bits, expected {k * log_t}")
    mask = t - 1
    return tuple((h.value >> (h.nbits - (j + 1) * log_t)) & mask for j in range(k))


def join_indices(indices, t: int) -> TruncatedHash:
    """Inverse of split_indices; used by round-trip checks."""
    log_t = t.bit_length() - 1
    value = 0
    for i in indices:
        value = (value << log_t) | i
    return TruncatedHash(value, len(indices) * log_t)


def has_collision(indices) -> bool:
    """True iff any two positions of the index vector hold equal values."""
    return len(set(indices)) != len(indices)
