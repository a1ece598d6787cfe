"""Verifier side: the mirrored public key store, plain verification, and the
second-chance recovery path for desynchronized stores.

The store mirrors the signer bitmap's structural metadata. Each key slot is
LIVE, DOUBT, or DELETED; index resolution counts every non-deleted slot, so
a DOUBT slot keeps its place in the window until evidence settles it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import FormatError, ParameterError
from .params import SchemeParams
from .primitives import one_way, prf
from .signer import IndexDerivation, Signature, derive_indices

PUBKEY_MAGIC = b"MPK1"
STORESTATE_MAGIC = b"MVS1"

_PK_MODE_LAZY = 0
_PK_MODE_FULL = 1


class MskKeySource:
    """Regenerate any public key row from the master key (test/lazy mode)."""

    def __init__(self, params: SchemeParams, msk: bytes):
        self.params = params
        self.msk = msk

    def row_keys(self, num: int) -> list[bytes]:
        return [
            one_way(prf(self.msk, num, col)) for col in range(1, self.params.t + 1)
        ]


class FileKeySource:
    """Stream public key rows out of a full key file on demand."""

    def __init__(self, path: str, params: SchemeParams, header_len: int):
        self.path = path
        self.params = params
        self._header_len = header_len
        self._row_bytes = 4 + params.t * 32

    def row_keys(self, num: int) -> list[bytes]:
        if not 1 <= num <= self.params.r:
            raise ParameterError(f"row {num} outside [1, {self.params.r}]")
        with open(self.path, "rb") as fh:
            fh.seek(self._header_len + (num - 1) * self._row_bytes)
            blob = fh.read(self._row_bytes)
        if len(blob) != self._row_bytes:
            raise FormatError(f"key file truncated at row {num}")
        (got,) = struct.unpack(">I", blob[:4])
        if got != num:
            raise FormatError(f"key file row {got} where {num} expected")
        return [blob[4 + i * 32 : 4 + (i + 1) * 32] for i in range(self.params.t)]


class StoreRow:
    """One key row: non-deleted columns in ascending order, the subset of
    them currently in doubt, and the t key digests."""

    __slots__ = ("num", "keys", "cols", "doubt")

    def __init__(self, num: int, keys: list[bytes], cols: list[int], doubt: set[int]):
        self.num = num
        self.keys = keys
        self.cols = cols
        self.doubt = doubt

    @classmethod
    def fresh(cls, num: int, keys: list[bytes]) -> "StoreRow":
        return cls(num, keys, list(range(1, len(keys) + 1)), set())

    def counted(self) -> int:
        return len(self.cols)

    def adjusted(self) -> int:
        return len(self.cols) - len(self.doubt)


@dataclass
class VerifyOutcome:
    bit: int
    path: str = ""
    ctr: int = 0
    elem_ok: tuple[bool, ...] = ()
    reason: str = ""
    derivation: IndexDerivation | None = None
    extended: bool | None = None


class PublicKeyStore:
    """Sliding window of rt public key rows with per-slot lifecycle state."""

    def __init__(self, params: SchemeParams, pads, source):
        self.params = params
        self.pads = tuple(pads)
        self.source = source
        self.window = params.t
        self.rows: list[StoreRow] = []
        self.nextrow = 1
        self.activepks = 0
        self.keys_discarded = 0
        for _ in range(params.rt):
            self._append_fresh()

    @classmethod
    def from_msk(cls, params: SchemeParams, msk: bytes, pads) -> "PublicKeyStore":
        return cls(params, pads, MskKeySource(params, msk))

    @property
    def activerows(self) -> int:
        return len(self.rows)

    def _append_fresh(self) -> None:
        row = StoreRow.fresh(self.nextrow, self.source.row_keys(self.nextrow))
        self.rows.append(row)
        self.nextrow += 1
        self.activepks += row.counted()

    # Slot addressing --------------------------------------------------------

    def resolve(self, index: int) -> tuple[int, int]:
        """Row number and column of the (index+1)-th non-deleted slot."""
        if not 0 <= index < self.activepks:
            raise IndexError(f"index {index} not below activepks {self.activepks}")
        for row in self.rows:
            if index < len(row.cols):
                return row.num, row.cols[index]
            index -= len(row.cols)
        raise AssertionError("activepks out of sync with rows")

    def key(self, num: int, col: int) -> bytes:
        for row in self.rows:
            if row.num == num:
                return row.keys[col - 1]
        raise ParameterError(f"row {num} is not held")

    def counted_pairs(self) -> list[tuple[int, int]]:
        """All non-deleted slots (LIVE and DOUBT) in window order."""
        return [(row.num, col) for row in self.rows for col in row.cols]

    def live_pairs(self) -> list[tuple[int, int]]:
        return [
            (row.num, col)
            for row in self.rows
            for col in row.cols
            if col not in row.doubt
        ]

    def doubt_pairs(self) -> list[tuple[int, int]]:
        return [(row.num, col) for row in self.rows for col in sorted(row.doubt)]

    # Slot state changes ------------------------------------------------------

    def invalidate(self, indices) -> None:
        """Delete the slots picked by window indices; exact mirror of the
        bitmap's unset (validation, descending order)."""
        idx = list(indices)
        if len(set(idx)) != len(idx):
            raise ParameterError("indices must be distinct")
        for i in idx:
            if not 0 <= i < self.activepks:
                raise ParameterError(f"index {i} not below activepks {self.activepks}")
        for i in sorted(idx, reverse=True):
            for row in self.rows:
                n = len(row.cols)
                if i < n:
                    row.doubt.discard(row.cols[i])
                    del row.cols[i]
                    break
                i -= n
        self.activepks -= len(idx)

    def delete_at(self, num: int, col: int) -> None:
        for row in self.rows:
            if row.num == num:
                row.cols.remove(col)
                row.doubt.discard(col)
                self.activepks -= 1
                return
        raise ParameterError(f"row {num} is not held")

    def mark_doubt(self, num: int, col: int) -> None:
        for row in self.rows:
            if row.num == num:
                if col not in row.cols:
                    raise ParameterError(f"slot ({num},{col}) already deleted")
                row.doubt.add(col)
                return
        raise ParameterError(f"row {num} is not held")

    def restore(self, num: int, col: int) -> None:
        for row in self.rows:
            if row.num == num:
                row.doubt.discard(col)
                return

    # Window maintenance ------------------------------------------------------

    def cleanup(self, adjusted: bool = False) -> int:
        """Drop fully consumed rows. With `adjusted`, DOUBT slots count as
        consumed, matching what the signer's bitmap sees for them."""
        count = StoreRow.adjusted if adjusted else StoreRow.counted
        doomed = [row for row in self.rows if count(row) == 0]
        for row in doomed:
            self.activepks -= row.counted()
            self.rows.remove(row)
        return len(doomed)

    def extend(self, r: int, adjusted: bool = False) -> bool:
        """Mirror of the bitmap refill; must take the same decisions as the
        signer at the same point in the message stream."""
        count = StoreRow.adjusted if adjusted else StoreRow.counted
        active = sum(count(row) for row in self.rows)
        if active >= self.window:
            return True
        if self.nextrow > r:
            return False
        if self.cleanup(adjusted) == 0 and self.rows:
            victim = None
            for row in self.rows:
                if victim is None or count(row) < count(victim):
                    victim = row
            self.keys_discarded += count(victim)
            self.activepks -= victim.counted()
            self.rows.remove(victim)
        fill = min(self.params.rt - len(self.rows), r - self.nextrow + 1)
        for _ in range(fill):
            self._append_fresh()
        return True


def mum_ver(store: PublicKeyStore, message: bytes, sig: Signature) -> VerifyOutcome:
    """Verify a signature against the store. Read-only: accepted slots are
    consumed by a separate post_verify call, mirroring the signer's idle
    phase."""
    params = store.params
    if len(sig.elems) != params.k or any(len(e) != 32 for e in sig.elems):
        return VerifyOutcome(0, reason="malformed signature")
    derivation = derive_indices(message, store.pads, params)
    if sig.ctr != derivation.ctr:
        return VerifyOutcome(
            0, derivation.path, derivation.ctr, reason="ctr mismatch",
            derivation=derivation,
        )
    try:
        coords = [store.resolve(i) for i in derivation.indices]
    except IndexError:
        return VerifyOutcome(
            0, derivation.path, derivation.ctr, reason="index beyond window",
            derivation=derivation,
        )
    elem_ok = tuple(
        store.key(num, col) == one_way(elem)
        for (num, col), elem in zip(coords, sig.elems)
    )
    bit = 1 if all(elem_ok) else 0
    return VerifyOutcome(
        bit, derivation.path, derivation.ctr, elem_ok,
        "" if bit else "element mismatch", derivation,
    )


def post_verify(store: PublicKeyStore, indices) -> bool:
    """Idle-time update after an accepted signature: delete the revealed
    slots and refill the window. Returns the refill verdict."""
    store.invalidate(indices)
    return store.extend(store.params.r, adjusted=False)


def sca_verify(store: PublicKeyStore, message: bytes, sig: Signature) -> VerifyOutcome:
    """Verify with second chances, updating store state even on rejection.

    A slot whose key does not match is marked DOUBT rather than trusted or
    discarded: the mismatch may mean the slot was consumed by a signature
    this verifier never accepted (transit corruption), or that the message
    itself was corrupted and the slot is fine. Doubted slots stay positionally
    counted; each mismatched element gets a second chance against the next
    `doubt` non-deleted slots, where `doubt` counts DOUBT slots up to its
    resolution point. Verified neighbours then settle the doubts between
    them: if the gap holds exactly the expected number of slots the doubts
    were unfounded and return to LIVE; surplus slots are stale and are
    deleted, earliest first.

    Runs the window refill with DOUBT slots counted as consumed, which keeps
    row replacement in lockstep with the signer whenever the doubts really
    were consumed slots.
    """
    params = store.params
    k = params.k
    if len(sig.elems) != k or any(len(e) != 32 for e in sig.elems):
        return VerifyOutcome(0, reason="malformed signature")
    derivation = derive_indices(message, store.pads, params)
    if sig.ctr != derivation.ctr:
        return VerifyOutcome(
            0, derivation.path, derivation.ctr, reason="ctr mismatch",
            derivation=derivation,
        )

    snapshot = store.counted_pairs()
    doubt_set = set(store.doubt_pairs())
    prefix = []  # prefix[i]: DOUBT slots among snapshot[0..i]
    running = 0
    for pair in snapshot:
        running += pair in doubt_set
        prefix.append(running)

    claimed: set[int] = set()
    verified_at: dict[int, int] = {}
    for j in sorted(range(k), key=lambda j: derivation.indices[j]):
        i = derivation.indices[j]
        if i >= len(snapshot):
            continue
        target = one_way(sig.elems[j])
        found = None
        if i not in claimed and store.key(*snapshot[i]) == target:
            found = i
        else:
            budget = prefix[i]
            q, tried = i + 1, 0
            while tried < budget and q < len(snapshot):
                if q not in claimed:
                    tried += 1
                    if store.key(*snapshot[q]) == target:
                        found = q
                        break
                q += 1
        if found is not None:
            claimed.add(found)
            verified_at[j] = found

    bit = 1 if len(verified_at) == k else 0

    # Bookkeeping, applied whether or not the signature was accepted.
    for q in verified_at.values():
        store.delete_at(*snapshot[q])
    for j in range(k):
        if j not in verified_at:
            i = derivation.indices[j]
            if i < len(snapshot) and i not in claimed:
                store.mark_doubt(*snapshot[i])

    # Settle doubts between consecutive verified slots (window order); the
    # window start acts as the first anchor.
    anchors = sorted((derivation.indices[j], q) for j, q in verified_at.items())
    prev_i = prev_q = -1
    for i_cur, q_cur in anchors:
        extra = (q_cur - prev_q) - (i_cur - prev_i)
        gap = [
            o
            for o in range(prev_q + 1, q_cur)
            if o not in claimed and snapshot[o] in doubt_set
        ]
        if extra == 0:
            for o in gap:
                store.restore(*snapshot[o])
        elif extra > 0:
            for o in gap[:extra]:
                store.delete_at(*snapshot[o])
        prev_i, prev_q = i_cur, q_cur

    extended = store.extend(params.r, adjusted=True)
    elem_ok = tuple(j in verified_at for j in range(k))
    return VerifyOutcome(
        bit, derivation.path, derivation.ctr, elem_ok,
        "" if bit else "element mismatch", derivation, extended,
    )


def hard_reset(store: PublicKeyStore, signer_state, fresh_rownum: int) -> None:
    """Abandon both windows and restart signer and verifier from a fresh row
    number. The last-resort recovery once corruption outruns second chances."""
    bm = signer_state.bm
    if fresh_rownum <= bm.nextrow or fresh_rownum <= store.nextrow:
        raise ParameterError("fresh_rownum must exceed both nextrow values")
    params = signer_state.params
    if fresh_rownum > params.r:
        raise ParameterError("fresh_rownum exceeds the total row budget")
    count = min(params.rt, params.r - fresh_rownum + 1)

    doomed = {row.num for row in bm._row_list()}
    bm.bits_discarded += bm.activebits
    bm.activebits = 0
    if doomed:
        bm._remove_rows(doomed)
    bm.nextrow = fresh_rownum
    bm._fill_initial(count)
    signer_state._pending = None

    store.keys_discarded += sum(row.adjusted() for row in store.rows)
    store.rows.clear()
    store.activepks = 0
    store.nextrow = fresh_rownum
    for _ in range(count):
        store._append_fresh()


# Key file and store-state formats -------------------------------------------


def _pk_header(params: SchemeParams, pads) -> bytes:
    return PUBKEY_MAGIC + struct.pack(
        ">HHHIHH", params.t, params.k, params.l, params.r, params.rt, params.kappa
    ) + b"".join(pads)


_PK_HEADER_LEN = 4 + 14 + 48 + 1  # magic, params, pads, mode byte


def write_public_key_file(
    path: str, params: SchemeParams, msk: bytes, pads, full: bool
) -> None:
    """Write the verifier's key file.

    Full mode stores all r rows of one-way images (large: r*t*32 bytes).
    Lazy mode stores the master key instead and the verifier derives rows on
    demand; it stands in for full files in tests and desk runs.
    """
    source = MskKeySource(params, msk)
    with open(path, "wb") as fh:
        fh.write(_pk_header(params, pads))
        if not full:
            fh.write(bytes([_PK_MODE_LAZY]) + msk)
            return
        fh.write(bytes([_PK_MODE_FULL]))
        for num in range(1, params.r + 1):
            fh.write(struct.pack(">I", num))
            fh.write(b"".join(source.row_keys(num)))


def load_public_key_store(path: str) -> PublicKeyStore:
    with open(path, "rb") as fh:
        head = fh.read(_PK_HEADER_LEN)
    if len(head) != _PK_HEADER_LEN or head[:4] != PUBKEY_MAGIC:
        raise FormatError("bad public key file header")
    t, k, l, r, rt, kappa = struct.unpack(">HHHIHH", head[4:18])
    params = SchemeParams(t=t, k=k, l=l, r=r, rt=rt, kappa=kappa)
    pads = (head[18:34], head[34:50], head[50:66])
    mode = head[66]
    if mode == _PK_MODE_LAZY:
        with open(path, "rb") as fh:
            fh.seek(_PK_HEADER_LEN)
            msk = fh.read(16)
        if len(msk) != 16:
            raise FormatError("lazy key file is missing the master key")
        return PublicKeyStore(params, pads, MskKeySource(params, msk))
    if mode == _PK_MODE_FULL:
        return PublicKeyStore(params, pads, FileKeySource(path, params, _PK_HEADER_LEN))
    raise FormatError(f"unknown key file mode {mode}")


def dump_store_state(store: PublicKeyStore) -> bytes:
    """Liveness sidecar: which slots of which held rows remain non-deleted,
    and which of those are in doubt. Keys themselves stay in the key file."""
    t = store.params.t
    out = [
        STORESTATE_MAGIC,
        struct.pack(
            ">HHIH", t, store.params.rt, store.nextrow, len(store.rows)
        ),
    ]
    for row in store.rows:
        alive = bytearray(t // 8)
        doubt = bytearray(t // 8)
        for col in row.cols:
            alive[(col - 1) >> 3] |= 0x80 >> ((col - 1) & 7)
        for col in row.doubt:
            doubt[(col - 1) >> 3] |= 0x80 >> ((col - 1) & 7)
        out.append(struct.pack(">I", row.num) + bytes(alive) + bytes(doubt))
    return b"".join(out)


def apply_store_state(store: PublicKeyStore, data: bytes) -> None:
    """Replace the store's window with a previously dumped liveness state."""
    if data[:4] != STORESTATE_MAGIC:
        raise FormatError("bad store state magic")
    t, rt, nextrow, nrows = struct.unpack(">HHIH", data[4:14])
    if t != store.params.t or rt != store.params.rt:
        raise FormatError("store state was written for different parameters")
    offset = 14
    row_bytes = 4 + 2 * (t // 8)
    rows = []
    for _ in range(nrows):
        blob = data[offset : offset + row_bytes]
        if len(blob) != row_bytes:
            raise FormatError("truncated store state row")
        offset += row_bytes
        (num,) = struct.unpack(">I", blob[:4])
        alive = blob[4 : 4 + t // 8]
        doubtb = blob[4 + t // 8 :]
        cols = [
            c + 1 for c in range(t) if alive[c >> 3] & (0x80 >> (c & 7))
        ]
        doubt = {
            c + 1 for c in range(t) if doubtb[c >> 3] & (0x80 >> (c & 7))
        }
        if not doubt <= set(cols):
            raise FormatError("doubt bits must be a subset of alive bits")
        rows.append(StoreRow(num, store.source.row_keys(num), cols, doubt))
    if offset != len(data):
        raise FormatError("trailing bytes after store state rows")
    store.rows = rows
    store.nextrow = nextrow
    store.activepks = sum(row.counted() for row in rows)
