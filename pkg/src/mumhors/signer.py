"""Signer side: key generation, the weak-message index derivation pipeline,
signature emission, and the idle-time bitmap update.

Signing is split in two, mirroring the protocol's idle phase: ``mum_sig``
only reads the bitmap (all k lookups see the same snapshot), and
``post_sign`` afterwards consumes the revealed slots and refills the window.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
from dataclasses import dataclass

from .bitmap import dump_bitmap, load_bitmap, new_bitmap
from .errors import CapacityError, DerivationError, FormatError, ParameterError
from .params import SchemeParams
from .primitives import (
    TruncatedHash,
    expand_pad,
    hash_message,
    has_collision,
    prf,
    split_indices,
    trunc,
)

SIGNER_MAGIC = b"MSK1"
SIGNATURE_MAGIC = b"MSG1"

_KEYGEN_TAG = b"\x03"  # expansion tag for seed-derived key material
_CTR_LIMIT = 0xFFFFFFFF


@dataclass(frozen=True)
class IndexDerivation:
    """Collision-free index vector plus the exact pipeline stage that
    produced it, so signer and verifier can be compared transcript for
    transcript."""

    indices: tuple[int, ...]
    path: str  # direct | pad1 | pad2 | pad3 | counter
    ctr: int = 1


@dataclass(frozen=True)
class Signature:
    elems: tuple[bytes, ...]
    ctr: int


def _keygen_material(seed: int | None) -> tuple[bytes, tuple[bytes, bytes, bytes]]:
    if seed is None:
        parts = [secrets.token_bytes(16) for _ in range(4)]
    else:
        seed8 = seed.to_bytes(8, "big", signed=False)
        parts = [
            hashlib.blake2b(_KEYGEN_TAG + seed8 + bytes([i]), digest_size=16).digest()
            for i in range(4)
        ]
    msk, pads = parts[0], tuple(parts[1:])
    if len(set(pads)) != 3:
        raise ParameterError("pads must be pairwise distinct")
    return msk, pads


def derive_indices(message: bytes, pads, params: SchemeParams) -> IndexDerivation:
    """Derive k distinct indices from a message.

    Stages, first success wins:
      1. the truncated message hash itself;
      2. cumulative XOR with pads 1..3 (each pad fitted to the hash width);
      3. hash of (stage-2 output || counter) for counter = 1, 2, ...

    Pure function of (message, pads, params); the verifier reruns it verbatim.
    """
    t, k, nbits = params.t, params.k, params.hash_bits
    h = trunc(hash_message(message), nbits)
    return _derive_from_hash(h, pads, t, k)


def _derive_from_hash(h: TruncatedHash, pads, t: int, k: int) -> IndexDerivation:
    indices = split_indices(h, t, k)
    if not has_collision(indices):
        return IndexDerivation(indices, "direct")
    for i, pad in enumerate(pads, start=1):
        h = h.xor(expand_pad(pad, h.nbits))
        indices = split_indices(h, t, k)
        if not has_collision(indices):
            return IndexDerivation(indices, f"pad{i}")
    base = h.to_bytes()
    ctr = 1
    while ctr <= _CTR_LIMIT:
        salted = trunc(hash_message(base + struct.pack(">I", ctr)), h.nbits)
        indices = split_indices(salted, t, k)
        if not has_collision(indices):
            return IndexDerivation(indices, "counter", ctr)
        ctr += 1
    raise DerivationError("counter exhausted without distinct indices")


class SignerState:
    """Master key, the three pads, and the availability bitmap."""

    def __init__(self, params: SchemeParams, msk: bytes, pads, bm):
        if len(msk) != 16:
            raise ParameterError("msk must be 16 bytes")
        pads = tuple(pads)
        if len(pads) != 3 or any(len(p) != 16 for p in pads):
            raise ParameterError("need three 16-byte pads")
        if len(set(pads)) != 3:
            raise ParameterError("pads must be pairwise distinct")
        self.params = params
        self.msk = msk
        self.pads = pads
        self.bm = bm
        self._pending: IndexDerivation | None = None


def mum_kg(params: SchemeParams, seed: int | None = None, backend: str = "queue"):
    """Generate a signer state and the matching verifier-side key store.

    With a fixed integer seed the entire output is reproducible. The store
    derives public keys from the master key on demand; writing them out in
    full is the key-file exporter's job.
    """
    from .verifier import PublicKeyStore  # local import, verifier builds on us

    msk, pads = _keygen_material(seed)
    bm = new_bitmap(params, backend)
    store = PublicKeyStore.from_msk(params, msk, pads)
    return SignerState(params, msk, pads, bm), store


def mum_sig(state: SignerState, message: bytes) -> tuple[Signature, IndexDerivation]:
    """Sign a message against the current window.

    The k (row, column) lookups all observe the unmodified bitmap; call
    ``post_sign`` with the returned derivation to consume the slots.
    """
    bm = state.bm
    if bm.activebits < bm.window:
        raise CapacityError("no more private keys to sign")
    derivation = derive_indices(message, state.pads, state.params)
    elems = tuple(
        prf(state.msk, row, col)
        for row, col in (bm.get_row_column(i) for i in derivation.indices)
    )
    state._pending = derivation
    return Signature(elems, derivation.ctr), derivation


def post_sign(state: SignerState, derivation: IndexDerivation) -> bool:
    """Idle-time update: clear the revealed slots, then refill the window.

    Returns the refill verdict; False means the key supply is exhausted and
    no further message can be signed. Only accepts the derivation produced
    by the immediately preceding mum_sig (replay is a bug, not a retry).
    """
    if state._pending is not derivation:
        raise ParameterError("post_sign must follow its own mum_sig")
    state._pending = None
    state.bm.unset_indices(derivation.indices)
    return state.bm.extend(state.params.r)


# Wire and state-file formats ----------------------------------------------


def signature_to_bytes(sig: Signature) -> bytes:
    if any(len(e) != 32 for e in sig.elems):
        raise ParameterError("signature elements must be 32 bytes")
    return SIGNATURE_MAGIC + b"".join(sig.elems) + struct.pack(">I", sig.ctr)


def signature_from_bytes(data: bytes) -> Signature:
    if data[:4] != SIGNATURE_MAGIC:
        raise FormatError("bad signature magic")
    body = data[4:-4]
    if len(data) < 8 or len(body) % 32:
        raise FormatError("signature length is not 4 + 32k + 4 bytes")
    elems = tuple(body[i : i + 32] for i in range(0, len(body), 32))
    (ctr,) = struct.unpack(">I", data[-4:])
    return Signature(elems, ctr)


def dump_signer(state: SignerState) -> bytes:
    """Signer state file: magic, k, r, master key, pads, then the bitmap.
    t and rt travel inside the bitmap blob; l and kappa are fixed."""
    head = SIGNER_MAGIC + struct.pack(">HI", state.params.k, state.params.r)
    return head + state.msk + b"".join(state.pads) + dump_bitmap(state.bm)


def load_signer(data: bytes, backend: str = "queue") -> SignerState:
    if data[:4] != SIGNER_MAGIC:
        raise FormatError("bad signer state magic")
    if len(data) < 10 + 64:
        raise FormatError("truncated signer state")
    k, r = struct.unpack(">HI", data[4:10])
    msk = data[10:26]
    pads = (data[26:42], data[42:58], data[58:74])
    bm = load_bitmap(data[74:], backend)
    params = SchemeParams(t=bm.t, k=k, l=256, r=r, rt=bm.rt)
    return SignerState(params, msk, pads, bm)
