"""Cross-implementation equivalence: circular queue, linked list, and the
flat oracle must agree on every observable after every operation."""

from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, rule

from mumhors.bitmap import CircularQueueBitmap, new_bitmap
from mumhors.harness import fuzz_bitmap
from mumhors.params import SchemeParams

SMALL = SchemeParams(t=8, k=2, l=256, r=12, rt=3)


class BackendEquivalence(RuleBasedStateMachine):
    def __init__(self):
        super().__init__()
        self.impls = [new_bitmap(SMALL, b) for b in ("queue", "list", "oracle")]
        self.retired = set()  # (num, col) pairs that left the live set
        self.extend_failed = False

    @property
    def active(self):
        return self.impls[0].activebits

    @rule(data=st.data())
    def unset(self, data):
        if not self.active:
            return
        count = data.draw(st.integers(1, min(4, self.active)))
        batch = data.draw(
            st.lists(
                st.integers(0, self.active - 1),
                min_size=count, max_size=count, unique=True,
            )
        )
        doomed = {self.impls[0].get_row_column(i) for i in batch}
        for bm in self.impls:
            bm.unset_indices(batch)
        self.retired |= doomed

    @rule(data=st.data())
    def get(self, data):
        if not self.active:
            return
        index = data.draw(st.integers(0, self.active - 1))
        results = {bm.get_row_column(index) for bm in self.impls}
        assert len(results) == 1

    @rule()
    def cleanup(self):
        counts = {bm.cleanup() for bm in self.impls}
        assert len(counts) == 1

    @rule()
    def extend(self):
        lost_before = {
            (row.num, col)
            for bm in self.impls[:1]
            for row in bm._row_list()
            for col in row.cols
        }
        results = {bm.extend(SMALL.r) for bm in self.impls}
        assert len(results) == 1
        verdict = results.pop()
        if self.extend_failed and self.active < self.impls[0].window:
            assert verdict is False  # exhaustion never un-happens
        if not verdict:
            self.extend_failed = True
        # Bits in removed rows are retired forever.
        self.retired |= lost_before - set(self.impls[0].live_pairs())

    @invariant()
    def enumerations_agree(self):
        pairs = [tuple(bm.live_pairs()) for bm in self.impls]
        assert pairs[0] == pairs[1] == pairs[2]

    @invariant()
    def metadata_agrees(self):
        metas = {bm.metadata() for bm in self.impls}
        assert len(metas) == 1

    @invariant()
    def row_counters_consistent(self):
        for bm in self.impls[:2]:
            rows = bm._row_list()
            assert bm.activebits == sum(row.activebits for row in rows)
            assert bm.activerows == len(rows)
            assert bm.activerows <= SMALL.rt
            for row in rows:
                packed = row.bits_bytes(SMALL.t)
                popcount = sum(bin(b).count("1") for b in packed)
                assert popcount == row.activebits

    @invariant()
    def row_numbers_strictly_increase(self):
        nums = [row.num for row in self.impls[0]._row_list()]
        assert nums == sorted(set(nums))
        if nums:
            assert self.impls[0].nextrow > nums[-1]

    @invariant()
    def no_resurrection(self):
        assert not (self.retired & set(self.impls[0].live_pairs()))


BackendEquivalence.TestCase.settings = settings(
    max_examples=60, stateful_step_count=60, deadline=None
)
TestBackendEquivalence = BackendEquivalence.TestCase


def test_fuzz_smoke_many_seeds():
    for seed in range(25):
        verdict = fuzz_bitmap(seed, 2000, SMALL)
        assert verdict.ok, (seed, verdict.detail, verdict.minimized)


def test_fuzz_zero_ops_trivially_agree():
    assert fuzz_bitmap(0, 0, SMALL).ok


class OffByOneQueue(CircularQueueBitmap):
    """Mutant: rank resolution is shifted by one inside later rows."""

    def get_row_column(self, index):
        if not 0 <= index < self.activebits:
            raise IndexError(index)
        for pos, row in enumerate(self._row_list()):
            if index < len(row.cols):
                shifted = min(index + (pos > 0), len(row.cols) - 1)
                return row.num, row.cols[shifted]
            index -= len(row.cols)
        raise AssertionError


def test_fuzzer_detects_injected_mutant(monkeypatch):
    import mumhors.bitmap as bitmap_mod

    monkeypatch.setitem(bitmap_mod.BACKENDS, "queue", OffByOneQueue)
    found = None
    for seed in range(20):
        verdict = fuzz_bitmap(seed, 1000, SMALL)
        if not verdict.ok:
            found = verdict
            break
    assert found is not None, "mutant survived the fuzzer"
    assert found.divergence_step is not None and found.steps <= 1000
    assert found.minimized  # a reduced reproducer is reported
    assert len(found.minimized) <= len(found.trace)
