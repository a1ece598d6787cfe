"""Simulation rigs.

* ``simulate_utilization``: drives the real bitmap and index derivation over
  a seeded workload without ever materializing keys, to measure how many
  messages a parameter set actually signs and how many bits row replacement
  throws away.
* ``simulate_channel``: pumps sign/verify traffic through a corrupting
  channel to exercise the plain and second-chance verifiers.
* ``fuzz_bitmap``: random op interleavings applied to both bitmap backends
  and the flat oracle, with divergence-trace minimization.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .bitmap import new_bitmap
from .errors import ParameterError
from .params import SchemeParams, message_capacity
from .signer import _keygen_material, derive_indices, mum_kg, mum_sig, post_sign
from .verifier import mum_ver, post_verify, sca_verify

_WORKLOAD_TAG = b"\x04"


def workload_message(seed: int, ordinal: int) -> bytes:
    """Deterministic 32-byte message: hash of the workload seed and a counter."""
    data = _WORKLOAD_TAG + seed.to_bytes(8, "big") + ordinal.to_bytes(8, "big")
    return hashlib.blake2b(data, digest_size=32).digest()


# Utilization ----------------------------------------------------------------


@dataclass(frozen=True)
class ExtensionEvent:
    ordinal: int  # message after which the extension ran
    bits_lost: int
    rows_added: int


@dataclass(frozen=True)
class UtilizationReport:
    t: int
    k: int
    r: int
    rt: int
    seed: int
    messages_signed: int
    bits_lost: int
    residual_bits: int
    capacity: int
    utilization_pct: float
    events: tuple[ExtensionEvent, ...]


def simulate_utilization(
    params: SchemeParams,
    rt_override: int | None = None,
    workload_seed: int = 0,
    backend: str = "queue",
) -> UtilizationReport:
    """Run the signer's bookkeeping to exhaustion over seeded messages.

    Keys are never derived: each message costs one index derivation, one
    batch of bit clears, and one window refill, so full-scale runs finish
    in minutes.
    """
    if rt_override is not None:
        params = SchemeParams(params.t, params.k, params.l, params.r, rt_override)
    _, pads = _keygen_material(workload_seed)
    bm = new_bitmap(params, backend)
    r = params.r
    events: list[ExtensionEvent] = []
    messages = 0
    while bm.activebits >= bm.window:
        message = workload_message(workload_seed, messages)
        derivation = derive_indices(message, pads, params)
        messages += 1
        lost_before = bm.bits_discarded
        next_before = bm.nextrow
        bm.unset_indices(derivation.indices)
        alive = bm.extend(r)
        if bm.bits_discarded != lost_before or bm.nextrow != next_before:
            events.append(
                ExtensionEvent(
                    messages, bm.bits_discarded - lost_before, bm.nextrow - next_before
                )
            )
        if not alive:
            break
    capacity = message_capacity(params.t, params.k, r)
    residual = bm.activebits
    if params.k * messages + bm.bits_discarded + residual != r * params.t:
        raise AssertionError("bit conservation violated")
    return UtilizationReport(
        t=params.t,
        k=params.k,
        r=r,
        rt=params.rt,
        seed=workload_seed,
        messages_signed=messages,
        bits_lost=bm.bits_discarded,
        residual_bits=residual,
        capacity=capacity,
        utilization_pct=100.0 * messages / capacity,
        events=tuple(events),
    )


# Lossy channel ---------------------------------------------------------------

CORRUPTION_KINDS = ("flip-sig", "flip-msg", "drop")


@dataclass(frozen=True)
class ChannelModel:
    """Corruption schedule: (message ordinal, kind) with ordinals strictly
    increasing; ordinals count from 1."""

    schedule: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        ordinals = [o for o, _ in self.schedule]
        if ordinals != sorted(set(ordinals)):
            raise ParameterError("schedule ordinals must be strictly increasing")
        for _, kind in self.schedule:
            if kind not in CORRUPTION_KINDS:
                raise ParameterError(f"unknown corruption kind {kind!r}")

    def kind_for(self, ordinal: int) -> str | None:
        for o, kind in self.schedule:
            if o == ordinal:
                return kind
        return None


@dataclass(frozen=True)
class ChannelEvent:
    ordinal: int
    corruption: str | None
    delivered: bool
    accepted: bool | None  # None when nothing reached the verifier
    reason: str = ""


@dataclass
class ChannelTranscript:
    mode: str
    seed: int
    events: list[ChannelEvent]
    final_sync: bool
    final_doubts: int
    signer: object
    store: object

    def accepted_ordinals(self) -> list[int]:
        return [e.ordinal for e in self.events if e.accepted]

    def rejected_ordinals(self) -> list[int]:
        return [e.ordinal for e in self.events if e.accepted is False]


def _flip_bit(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(out)


def simulate_channel(
    params: SchemeParams,
    mode: str,
    channel: ChannelModel,
    n_messages: int,
    seed: int = 0,
    backend: str = "queue",
) -> ChannelTranscript:
    """Pump n messages through sign -> channel -> verify.

    ``plain`` models an acknowledged link: the signer commits its bitmap only
    once the verifier accepts, so a corrupted or dropped exchange is voided
    and retried state-free (the elements it exposed are wasted, not reused
    against a live verifier window).

    ``sca`` models the store-and-forward signer the scheme targets: the
    signer always commits, the verifier absorbs losses with second chances.
    """
    if mode not in ("plain", "sca"):
        raise ParameterError(f"unknown verifier mode {mode!r}")
    rng = random.Random(seed)
    signer, store = mum_kg(params, seed, backend)
    events: list[ChannelEvent] = []
    exhausted = False
    for ordinal in range(1, n_messages + 1):
        if exhausted or signer.bm.activebits < signer.bm.window:
            break
        message = workload_message(seed, ordinal)
        sig, derivation = mum_sig(signer, message)
        if mode == "sca":
            exhausted = not post_sign(signer, derivation)
        kind = channel.kind_for(ordinal)
        delivered_msg, delivered_sig = message, sig
        if kind == "drop":
            events.append(ChannelEvent(ordinal, kind, False, None, "dropped"))
            continue
        if kind == "flip-sig":
            j = rng.randrange(len(sig.elems))
            bit = rng.randrange(256)
            elems = list(sig.elems)
            elems[j] = _flip_bit(elems[j], bit)
            delivered_sig = type(sig)(tuple(elems), sig.ctr)
        elif kind == "flip-msg":
            delivered_msg = _flip_bit(message, rng.randrange(len(message) * 8))
        if mode == "plain":
            outcome = mum_ver(store, delivered_msg, delivered_sig)
            if outcome.bit:
                exhausted = not post_sign(signer, derivation)
                post_verify(store, outcome.derivation.indices)
        else:
            outcome = sca_verify(store, delivered_msg, delivered_sig)
        events.append(
            ChannelEvent(ordinal, kind, True, bool(outcome.bit), outcome.reason)
        )
    doubts = len(store.doubt_pairs())
    sync = signer.bm.live_pairs() == store.live_pairs() and doubts == 0
    return ChannelTranscript(mode, seed, events, sync, doubts, signer, store)


# Backend equivalence fuzzing --------------------------------------------------


@dataclass(frozen=True)
class FuzzVerdict:
    ok: bool
    steps: int
    divergence_step: int | None = None
    trace: tuple = ()
    minimized: tuple = ()
    detail: str = ""


def _fresh_impls(params: SchemeParams):
    return [new_bitmap(params, b) for b in ("queue", "list", "oracle")]


def _apply(bm, op) -> tuple:
    """Run one op, capturing the result or the error type."""
    name, arg = op
    try:
        if name == "unset":
            bm.unset_indices(arg)
            return ("ok", None)
        if name == "get":
            return ("ok", bm.get_row_column(arg))
        if name == "cleanup":
            return ("ok", bm.cleanup())
        if name == "extend":
            return ("ok", bm.extend(arg))
        raise AssertionError(f"unknown op {name}")
    except (ParameterError, IndexError) as exc:
        return ("err", type(exc).__name__)


def _step_divergence(impls, op) -> str | None:
    results = [_apply(bm, op) for bm in impls]
    if len(set(results)) != 1:
        return f"op {op}: results {results}"
    states = [(bm.live_pairs(), bm.metadata()) for bm in impls]
    if states[0] != states[1] or states[0] != states[2]:
        return f"op {op}: states diverge"
    return None


def _replay_diverges(params: SchemeParams, trace) -> int | None:
    impls = _fresh_impls(params)
    for step, op in enumerate(trace):
        if _step_divergence(impls, op) is not None:
            return step
    return None


def fuzz_bitmap(
    seed: int, n_ops: int, params: SchemeParams, unset_max: int = 4
) -> FuzzVerdict:
    """Random interleavings of unset/get/cleanup/extend on all three
    implementations; every step compares results, enumerations and metadata.
    The first divergence is reported with a greedily minimized trace."""
    rng = random.Random(seed)
    impls = _fresh_impls(params)
    trace: list[tuple] = []
    for step in range(n_ops):
        active = impls[0].activebits
        choice = rng.random()
        if choice < 0.55 and active:
            count = rng.randint(1, min(unset_max, active))
            op = ("unset", tuple(rng.sample(range(active), count)))
        elif choice < 0.70 and active:
            op = ("get", rng.randrange(active))
        elif choice < 0.85:
            op = ("cleanup", None)
        else:
            op = ("extend", params.r)
        trace.append(op)
        detail = _step_divergence(impls, op)
        if detail is not None:
            minimized = list(trace)
            i = 0
            while i < len(minimized):
                candidate = minimized[:i] + minimized[i + 1 :]
                if _replay_diverges(params, candidate) is not None:
                    minimized = candidate
                else:
                    i += 1
            return FuzzVerdict(
                False, step + 1, step, tuple(trace), tuple(minimized), detail
            )
    return FuzzVerdict(True, n_ops)
