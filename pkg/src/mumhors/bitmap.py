"""Two-dimensional key-availability bitmap.

The signer holds up to `rt` rows of `t` bits; set bits mark unused private
key slots. The first `window` (== t) set bits, counted from the head row,
form the pool a signature draws from. Depleted rows are dropped and replaced
with freshly numbered rows until `r` rows have been issued in total.

Two interchangeable backends implement the row container:

* ``CircularQueueBitmap``: a fixed ring of rt cells with middle-node removal
  by shifting from whichever end is nearer.
* ``LinkedListBitmap``: singly linked rows with head/tail pointers.

``FlatOracle`` is a deliberately naive third implementation (plain bit lists,
full rescans) used as the ground truth in equivalence tests.
"""

from __future__ import annotations

import struct

from .errors import FormatError, ParameterError
from .params import SchemeParams

BITMAP_MAGIC = b"MBM1"


class BitmapRow:
    """One row: a global row number and the ascending list of live columns
    (1-based). The t-bit vector view is materialized only for serialization."""

    __slots__ = ("num", "cols")

    def __init__(self, num: int, cols: list[int]):
        self.num = num
        self.cols = cols

    @classmethod
    def fresh(cls, num: int, t: int) -> "BitmapRow":
        return cls(num, list(range(1, t + 1)))

    @property
    def activebits(self) -> int:
        return len(self.cols)

    def bits_bytes(self, t: int) -> bytes:
        out = bytearray(t // 8)
        for col in self.cols:
            out[(col - 1) >> 3] |= 0x80 >> ((col - 1) & 7)
        return bytes(out)

    @classmethod
    def from_bits(cls, num: int, data: bytes, t: int) -> "BitmapRow":
        if len(data) != t // 8:
            raise FormatError("row bit vector has the wrong length")
        cols = [
            byte_i * 8 + bit_i + 1
            for byte_i, byte in enumerate(data)
            for bit_i in range(8)
            if byte & (0x80 >> bit_i)
        ]
        return cls(num, cols)


class _BitmapBase:
    """Window arithmetic shared by both row containers."""

    backend = "?"

    def __init__(self, t: int, rt: int):
        if t < 8 or t & (t - 1):
            raise ParameterError(f"t must be a power of two >= 8, got {t}")
        if rt < 1:
            raise ParameterError(f"rt must be at least 1, got {rt}")
        self.t = t
        self.rt = rt
        self.window = t
        self.nextrow = 1
        self.activerows = 0
        self.activebits = 0
        self.bits_discarded = 0

    # Container hooks -----------------------------------------------------

    def _row_list(self) -> list[BitmapRow]:
        raise NotImplementedError

    def _append(self, row: BitmapRow) -> None:
        """Attach a row at the tail and bump activerows."""
        raise NotImplementedError

    def _remove_rows(self, doomed: set[int]) -> None:
        """Detach the rows whose numbers are in `doomed`; adjusts activerows
        but not activebits (callers account for any lost bits)."""
        raise NotImplementedError

    # Shared operations ----------------------------------------------------

    def _fill_initial(self, count: int) -> None:
        for _ in range(count):
            self._append(BitmapRow.fresh(self.nextrow, self.t))
            self.nextrow += 1
            self.activebits += self.t

    def get_row_column(self, index: int) -> tuple[int, int]:
        """Row number and 1-based column of the (index+1)-th set bit,
        counting head to tail. Read-only."""
        if not 0 <= index < self.activebits:
            raise IndexError(f"index {index} not below activebits {self.activebits}")
        for row in self._row_list():
            if index < len(row.cols):
                return row.num, row.cols[index]
            index -= len(row.cols)
        raise AssertionError("activebits out of sync with rows")

    def unset_indices(self, indices) -> None:
        """Clear the set bits selected by window indices.

        All indices address the same pre-call snapshot; deletes run in
        descending order so earlier clears cannot shift later positions.
        """
        idx = sorted(indices)
        if len(set(idx)) != len(idx):
            raise ParameterError("indices must be distinct")
        if idx and (idx[0] < 0 or idx[-1] >= self.activebits):
            raise ParameterError(
                f"indices must lie below activebits {self.activebits}"
            )
        # One ascending pass locates every (row, in-row rank) pair.
        rows = iter(self._row_list())
        located = []
        row = next(rows, None)
        base = 0
        for i in idx:
            while i - base >= len(row.cols):
                base += len(row.cols)
                row = next(rows)
            located.append((row, i - base))
        for row, rank in reversed(located):
            del row.cols[rank]
        self.activebits -= len(idx)

    def cleanup(self) -> int:
        """Drop every row whose bits are all used; returns how many."""
        doomed = {row.num for row in self._row_list() if not row.cols}
        if doomed:
            self._remove_rows(doomed)
        return len(doomed)

    def extend(self, r: int) -> bool:
        """Refill the window after signing.

        No-op while at least `window` bits remain. Returns False once all r
        rows have been issued and the window can no longer be refilled; that
        verdict is permanent. Otherwise drops empty rows (or, if none are
        empty, sacrifices the row with the fewest live bits) and appends
        fresh rows numbered from `nextrow`.
        """
        if self.activebits >= self.window:
            return True
        if self.nextrow > r:
            return False
        if self.cleanup() == 0 and self.activerows > 0:
            victim = None
            for row in self._row_list():
                if victim is None or len(row.cols) < len(victim.cols):
                    victim = row
            self.bits_discarded += len(victim.cols)
            self.activebits -= len(victim.cols)
            self._remove_rows({victim.num})
        fill = min(self.rt - self.activerows, r - self.nextrow + 1)
        self._fill_initial(fill)
        return True

    def live_pairs(self) -> list[tuple[int, int]]:
        """All set bits as (row number, column), head to tail."""
        return [(row.num, col) for row in self._row_list() for col in row.cols]

    def metadata(self) -> tuple[int, int, int, int, int]:
        return (
            self.activebits,
            self.activerows,
            self.nextrow,
            self.bits_discarded,
            self.window,
        )


class CircularQueueBitmap(_BitmapBase):
    """Ring of rt cells with head/tail indices; interior removals shift rows
    from the nearer end (ties shift from the head)."""

    backend = "queue"

    def __init__(self, t: int, rt: int):
        super().__init__(t, rt)
        self.cells: list[BitmapRow | None] = [None] * rt
        self.head = 0
        self.tail = rt - 1  # (head - 1) % rt while empty

    def _row_list(self) -> list[BitmapRow]:
        head, rt, cells = self.head, self.rt, self.cells
        return [cells[(head + i) % rt] for i in range(self.activerows)]

    def _append(self, row: BitmapRow) -> None:
        if self.activerows >= self.rt:
            raise ParameterError("ring is full")
        self.tail = (self.tail + 1) % self.rt
        self.cells[self.tail] = row
        self.activerows += 1

    def remove_at(self, cell: int) -> None:
        """Remove the row held in ring cell `cell` (the REMOVE_ROW step)."""
        rt = self.rt
        if not 0 <= cell < rt or self.cells[cell] is None:
            raise ParameterError(f"cell {cell} holds no row")
        offset = (cell - self.head) % rt
        if offset >= self.activerows:
            raise ParameterError(f"cell {cell} is outside the active span")
        if cell == self.head:
            self.cells[self.head] = None
            self.head = (self.head + 1) % rt
        elif cell == self.tail:
            self.cells[self.tail] = None
            self.tail = (self.tail - 1) % rt
        else:
            dist_head = offset
            dist_tail = (self.tail - cell) % rt
            if dist_head <= dist_tail:
                for i in range(dist_head, 0, -1):
                    self.cells[(self.head + i) % rt] = self.cells[
                        (self.head + i - 1) % rt
                    ]
                self.cells[self.head] = None
                self.head = (self.head + 1) % rt
            else:
                for i in range(dist_tail, 0, -1):
                    self.cells[(self.tail - i) % rt] = self.cells[
                        (self.tail - i + 1) % rt
                    ]
                self.cells[self.tail] = None
                self.tail = (self.tail - 1) % rt
        self.activerows -= 1

    def _remove_rows(self, doomed: set[int]) -> None:
        # One at a time: every removal reshuffles the cells.
        for num in sorted(doomed):
            for i in range(self.activerows):
                cell = (self.head + i) % self.rt
                if self.cells[cell].num == num:
                    self.remove_at(cell)
                    break
            else:
                raise AssertionError(f"row {num} not found")


class _ListNode:
    __slots__ = ("row", "next")

    def __init__(self, row: BitmapRow):
        self.row = row
        self.next: "_ListNode | None" = None


class LinkedListBitmap(_BitmapBase):
    """Singly linked rows; removal relinks the predecessor."""

    backend = "list"

    def __init__(self, t: int, rt: int):
        super().__init__(t, rt)
        self.head: _ListNode | None = None
        self.tail: _ListNode | None = None

    def _row_list(self) -> list[BitmapRow]:
        out = []
        node = self.head
        while node is not None:
            out.append(node.row)
            node = node.next
        return out

    def _append(self, row: BitmapRow) -> None:
        if self.activerows >= self.rt:
            raise ParameterError("row list is full")
        node = _ListNode(row)
        if self.tail is None:
            self.head = self.tail = node
        else:
            self.tail.next = node
            self.tail = node
        self.activerows += 1

    def _remove_rows(self, doomed: set[int]) -> None:
        prev = None
        node = self.head
        while node is not None:
            if node.row.num in doomed:
                if prev is None:
                    self.head = node.next
                else:
                    prev.next = node.next
                if node is self.tail:
                    self.tail = prev
                self.activerows -= 1
            else:
                prev = node
            node = node.next


class FlatOracle:
    """Brute-force reference: rows as plain 0/1 lists, every operation a
    rescan. Kept intentionally dumb and separate from the real backends."""

    backend = "oracle"

    def __init__(self, t: int, rt: int):
        self.t = t
        self.rt = rt
        self.window = t
        self.nextrow = 1
        self.rows: list[list] = []  # [num, [0/1]*t]
        self.bits_discarded = 0

    @property
    def activerows(self) -> int:
        return len(self.rows)

    @property
    def activebits(self) -> int:
        return sum(sum(bits) for _, bits in self.rows)

    def _fill_initial(self, count: int) -> None:
        for _ in range(count):
            self.rows.append([self.nextrow, [1] * self.t])
            self.nextrow += 1

    def live_pairs(self) -> list[tuple[int, int]]:
        return [
            (num, c + 1) for num, bits in self.rows for c, b in enumerate(bits) if b
        ]

    def get_row_column(self, index: int) -> tuple[int, int]:
        pairs = self.live_pairs()
        if not 0 <= index < len(pairs):
            raise IndexError(f"index {index} not below activebits {len(pairs)}")
        return pairs[index]

    def unset_indices(self, indices) -> None:
        idx = list(indices)
        if len(set(idx)) != len(idx):
            raise ParameterError("indices must be distinct")
        for i in idx:
            if not 0 <= i < self.activebits:
                raise ParameterError(
                    f"index {i} not below activebits {self.activebits}"
                )
        for i in sorted(idx, reverse=True):
            num, col = self.live_pairs()[i]
            for row_num, bits in self.rows:
                if row_num == num:
                    bits[col - 1] = 0
                    break

    def cleanup(self) -> int:
        kept = [row for row in self.rows if sum(row[1]) > 0]
        removed = len(self.rows) - len(kept)
        self.rows = kept
        return removed

    def extend(self, r: int) -> bool:
        if self.activebits >= self.window:
            return True
        if self.nextrow > r:
            return False
        if self.cleanup() == 0 and self.rows:
            victim = min(self.rows, key=lambda row: sum(row[1]))
            self.bits_discarded += sum(victim[1])
            self.rows.remove(victim)
        fill = min(self.rt - len(self.rows), r - self.nextrow + 1)
        self._fill_initial(fill)
        return True

    def metadata(self) -> tuple[int, int, int, int, int]:
        return (
            self.activebits,
            self.activerows,
            self.nextrow,
            self.bits_discarded,
            self.window,
        )


BACKENDS = {
    "queue": CircularQueueBitmap,
    "list": LinkedListBitmap,
    "oracle": FlatOracle,
}


def new_bitmap(params: SchemeParams, backend: str = "queue"):
    """Fresh bitmap per the key generation step: rt all-set rows numbered
    1..rt, nextrow = rt+1."""
    if params.rt > params.r:
        raise ParameterError("rt exceeds the total row budget r")
    try:
        cls = BACKENDS[backend]
    except KeyError:
        raise ParameterError(f"unknown backend {backend!r}") from None
    bm = cls(params.t, params.rt)
    bm._fill_initial(params.rt)
    if bm.nextrow != params.rt + 1:
        raise AssertionError("initial fill out of sync")
    return bm


def oracle_equivalent(bm, oracle) -> bool:
    """True iff the bitmap's set-bit enumeration matches the oracle's."""
    return bm.live_pairs() == oracle.live_pairs()


def dump_bitmap(bm) -> bytes:
    """Serialize: magic, t, rt, nextrow, activerows, then each held row in
    traversal order as (num, activebits, t-bit vector MSB first)."""
    out = [
        BITMAP_MAGIC,
        struct.pack(">HHIH", bm.t, bm.rt, bm.nextrow, bm.activerows),
    ]
    if bm.backend == "oracle":
        rows = [BitmapRow(num, [c + 1 for c, b in enumerate(bits) if b])
                for num, bits in bm.rows]
    else:
        rows = bm._row_list()
    for row in rows:
        out.append(struct.pack(">IH", row.num, row.activebits))
        out.append(row.bits_bytes(bm.t))
    return b"".join(out)


def load_bitmap(data: bytes, backend: str = "queue"):
    """Inverse of dump_bitmap. The ring positions are not part of the
    format; only traversal order is, so a reloaded ring starts unwrapped."""
    if data[:4] != BITMAP_MAGIC:
        raise FormatError("bad bitmap magic")
    if len(data) < 14:
        raise FormatError("truncated bitmap header")
    t, rt, nextrow, activerows = struct.unpack(">HHIH", data[4:14])
    try:
        cls = BACKENDS[backend]
    except KeyError:
        raise ParameterError(f"unknown backend {backend!r}") from None
    bm = cls(t, rt)
    offset = 14
    row_bytes = t // 8
    prev_num = 0
    for _ in range(activerows):
        if offset + 6 + row_bytes > len(data):
            raise FormatError("truncated bitmap row")
        num, activebits = struct.unpack(">IH", data[offset : offset + 6])
        offset += 6
        row = BitmapRow.from_bits(num, data[offset : offset + row_bytes], t)
        offset += row_bytes
        if row.activebits != activebits:
            raise FormatError(f"row {num}: popcount does not match activebits")
        if num <= prev_num:
            raise FormatError("row numbers must increase head to tail")
        prev_num = num
        if bm.backend == "oracle":
            bits = [0] * t
            for col in row.cols:
                bits[col - 1] = 1
            bm.rows.append([num, bits])
        else:
            bm._append(row)
            bm.activebits += row.activebits
    if offset != len(data):
        raise FormatError("trailing bytes after bitmap rows")
    if nextrow <= prev_num:
        raise FormatError("nextrow must exceed every held row number")
    bm.nextrow = nextrow
    return bm
