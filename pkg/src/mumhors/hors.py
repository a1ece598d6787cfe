"""Baseline few-time HORS signature, used as a comparison target.

Key generation is deterministic from a 16-byte seed so test vectors are
reproducible; signing reveals the k secret elements selected by the message
hash with no collision handling, which is exactly the weak-message exposure
the multiple-time scheme mitigates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError
from .params import SchemeParams
from .primitives import hash_message, one_way, prf, split_indices, trunc


@dataclass(frozen=True)
class HorsKeyPair:
    params: SchemeParams
    sk: tuple[bytes, ...]  # sk[i] covers index value i
    pk: tuple[bytes, ...]


def hors_kg(params: SchemeParams, seed: bytes) -> HorsKeyPair:
    """t secret elements derived as prf(seed, 1, col), public images under
    the one-way function."""
    if len(seed) != 16:
        raise ParameterError("seed must be 16 bytes")
    sk = tuple(prf(seed, 1, col) for col in range(1, params.t + 1))
    pk = tuple(one_way(s) for s in sk)
    return HorsKeyPair(params, sk, pk)


def _indices(params: SchemeParams, message: bytes) -> tuple[int, ...]:
    h = trunc(hash_message(message), params.hash_bits)
    return split_indices(h, params.t, params.k)


def hors_sig(kp: HorsKeyPair, message: bytes) -> list[bytes]:
    return [kp.sk[i] for i in _indices(kp.params, message)]


def hors_ver(pk: tuple[bytes, ...], params: SchemeParams, message: bytes, sig) -> int:
    if len(sig) != params.k:
        return 0
    indices = _indices(params, message)
    for i, elem in zip(indices, sig):
        if pk[i] != one_way(elem):
            return 0
    return 1
