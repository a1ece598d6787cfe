import pytest

from mumhors.errors import ParameterError
from mumhors.harness import (
    ChannelModel,
    fuzz_bitmap,
    simulate_channel,
    simulate_utilization,
    workload_message,
)
from mumhors.params import message_capacity

from conftest import DESK_LOSSLESS_SEED


def test_workload_messages_deterministic():
    assert workload_message(1, 5) == workload_message(1, 5)
    assert workload_message(1, 5) != workload_message(1, 6)
    assert workload_message(2, 5) != workload_message(1, 5)
    assert len(workload_message(0, 0)) == 32


# Utilization -----------------------------------------------------------------


def test_utilization_conservation_and_determinism(desk):
    a = simulate_utilization(desk, workload_seed=3)
    b = simulate_utilization(desk, workload_seed=3)
    assert a == b
    total = desk.r * desk.t
    assert desk.k * a.messages_signed + a.bits_lost + a.residual_bits == total


def test_utilization_lossless_seed_reaches_capacity(desk):
    rep = simulate_utilization(desk, workload_seed=DESK_LOSSLESS_SEED)
    assert rep.bits_lost == 0
    assert rep.messages_signed == rep.capacity
    assert rep.capacity == message_capacity(desk.t, desk.k, desk.r)
    assert rep.utilization_pct == 100.0


def test_utilization_monotone_in_rt(desk):
    signed = [
        simulate_utilization(desk, rt_override=rt, workload_seed=2).messages_signed
        for rt in range(1, 15)
    ]
    assert signed == sorted(signed)


def test_utilization_rt1_strictly_worse(desk):
    low = simulate_utilization(desk, rt_override=1, workload_seed=2)
    high = simulate_utilization(desk, rt_override=11, workload_seed=2)
    assert low.bits_lost > 0
    assert low.messages_signed < high.messages_signed


def test_utilization_events_account_for_losses(desk):
    rep = simulate_utilization(desk, rt_override=2, workload_seed=2)
    assert sum(e.bits_lost for e in rep.events) == rep.bits_lost
    assert sum(e.rows_added for e in rep.events) == desk.r - rep.rt


# Channel ---------------------------------------------------------------------


def test_channel_model_validates_schedule():
    with pytest.raises(ParameterError):
        ChannelModel(((5, "flip-sig"), (5, "drop")))
    with pytest.raises(ParameterError):
        ChannelModel(((2, "melt"),))


@pytest.mark.parametrize("mode", ["plain", "sca"])
def test_clean_channel_all_accepted(desk, mode):
    transcript = simulate_channel(desk, mode, ChannelModel(), 25, seed=1)
    assert all(e.accepted for e in transcript.events)
    assert transcript.final_sync
    assert transcript.final_doubts == 0


def test_channel_deterministic(desk):
    channel = ChannelModel(((4, "flip-sig"), (9, "drop")))
    a = simulate_channel(desk, "sca", channel, 20, seed=5)
    b = simulate_channel(desk, "sca", channel, 20, seed=5)
    assert a.events == b.events
    assert a.final_sync == b.final_sync


def test_single_sig_flip_sca_recovers(desk):
    channel = ChannelModel(((5, "flip-sig"),))
    transcript = simulate_channel(desk, "sca", channel, 40, seed=6)
    assert transcript.rejected_ordinals() == [5]
    assert transcript.accepted_ordinals() == [i for i in range(1, 41) if i != 5]
    assert transcript.final_sync


def test_single_flip_plain_mode_voids_exchange(desk):
    # The acknowledged-link model: a rejected exchange leaves the signer
    # uncommitted, so traffic continues from the unchanged window.
    channel = ChannelModel(((5, "flip-sig"),))
    transcript = simulate_channel(desk, "plain", channel, 30, seed=6)
    assert transcript.rejected_ordinals() == [5]
    assert transcript.accepted_ordinals() == [i for i in range(1, 31) if i != 5]
    assert transcript.final_sync


def test_flip_msg_corruption_rejected(desk):
    channel = ChannelModel(((3, "flip-msg"),))
    transcript = simulate_channel(desk, "plain", channel, 10, seed=7)
    assert transcript.rejected_ordinals() == [3]
    assert transcript.final_sync


@pytest.mark.parametrize("seed", [6, 11, 19])
def test_two_separated_flips_sca_recovers(desk, seed):
    # Doubts from the first corruption settle before the second arrives.
    channel = ChannelModel(((5, "flip-sig"), (15, "flip-sig")))
    transcript = simulate_channel(desk, "sca", channel, 40, seed=seed)
    assert transcript.rejected_ordinals() == [5, 15]
    assert transcript.final_sync


def test_drop_burst_sca_not_recovered(desk):
    channel = ChannelModel(((5, "drop"), (6, "drop"), (7, "drop")))
    transcript = simulate_channel(desk, "sca", channel, 20, seed=8)
    delivered_after = [e for e in transcript.events if e.ordinal > 7]
    assert all(e.accepted is False for e in delivered_after)
    assert not transcript.final_sync


def test_drop_in_plain_mode_is_silent(desk):
    channel = ChannelModel(((4, "drop"),))
    transcript = simulate_channel(desk, "plain", channel, 12, seed=9)
    lost = [e for e in transcript.events if e.accepted is None]
    assert [e.ordinal for e in lost] == [4]
    assert transcript.final_sync


# Fuzzer ----------------------------------------------------------------------


def test_fuzz_reports_ok(small):
    verdict = fuzz_bitmap(0, 3000, small)
    assert verdict.ok
    assert verdict.steps == 3000
    assert verdict.divergence_step is None
