import random

import pytest

from mumhors.bitmap import dump_bitmap
from mumhors.errors import CapacityError, FormatError, ParameterError
from mumhors.params import SchemeParams, message_capacity, default_params
from mumhors.primitives import TruncatedHash, one_way, prf
from mumhors.signer import (
    IndexDerivation,
    Signature,
    _derive_from_hash,
    _keygen_material,
    derive_indices,
    dump_signer,
    load_signer,
    mum_kg,
    mum_sig,
    post_sign,
    signature_from_bytes,
    signature_to_bytes,
)
from mumhors.verifier import mum_ver, post_verify

from conftest import DESK_LOSSLESS_SEED


def test_kg_deterministic(desk):
    a_signer, a_store = mum_kg(desk, seed=7)
    b_signer, b_store = mum_kg(desk, seed=7)
    assert dump_signer(a_signer) == dump_signer(b_signer)
    assert a_store.source.row_keys(5) == b_store.source.row_keys(5)
    c_signer, _ = mum_kg(desk, seed=8)
    assert dump_signer(c_signer) != dump_signer(a_signer)


def test_kg_random_without_seed(desk):
    a_signer, _ = mum_kg(desk)
    b_signer, _ = mum_kg(desk)
    assert a_signer.msk != b_signer.msk


def test_kg_store_holds_one_way_images_exhaustively(desk, desk_pair):
    signer, store = desk_pair
    for num in range(1, desk.r + 1):
        keys = store.source.row_keys(num)
        assert keys == [
            one_way(prf(signer.msk, num, col)) for col in range(1, desk.t + 1)
        ]
    assert store.activepks == desk.rt * desk.t
    assert store.nextrow == desk.rt + 1


def test_kg_pads_distinct(desk, desk_pair):
    signer, _ = desk_pair
    assert len(set(signer.pads)) == 3
    assert all(len(p) == 16 for p in signer.pads)


def test_full_scale_key_count_is_arithmetic_only():
    p = default_params()
    assert p.r * p.t == 26_215_424
    # 25600 full rows plus the k keys the final signature can reveal
    usable = (p.r - 1) * p.t + p.k
    assert round(usable * 32 / 2**20, 5) == 800.00076


# Index derivation -----------------------------------------------------------


def test_derivation_direct_path_common(desk):
    _, pads = _keygen_material(0)
    derivation = derive_indices(b"plain message", pads, desk)
    assert len(derivation.indices) == desk.k
    assert len(set(derivation.indices)) == desk.k
    assert derivation.ctr == 1


def test_derivation_forced_collision_walks_pads(desk):
    _, pads = _keygen_material(0)
    h0 = TruncatedHash(0, desk.hash_bits)  # all-zero hash: full collision
    derivation = _derive_from_hash(h0, pads, desk.t, desk.k)
    assert derivation.path != "direct"
    assert len(set(derivation.indices)) == desk.k


def test_derivation_counter_path_reachable():
    # k == t forces frequent collisions, so the counter stage gets exercised.
    p = SchemeParams(t=8, k=8, l=256, r=4, rt=2)
    _, pads = _keygen_material(1)
    seen = set()
    for i in range(4000):
        derivation = derive_indices(b"probe %d" % i, pads, p)
        seen.add(derivation.path)
        assert sorted(derivation.indices) == list(range(8))
        if derivation.path == "counter" and derivation.ctr > 1:
            break
    assert "counter" in seen


def test_derivation_deterministic_for_verifier(desk):
    _, pads = _keygen_material(3)
    rng = random.Random(6)
    for _ in range(1000):
        m = rng.randbytes(32)
        a = derive_indices(m, pads, desk)
        b = derive_indices(m, pads, desk)
        assert a == b
        assert len(set(a.indices)) == desk.k


def test_derivation_ctr_always_transmitted(desk, desk_pair):
    signer, _ = desk_pair
    sig, derivation = mum_sig(signer, b"any")
    assert sig.ctr == derivation.ctr >= 1


# Signing --------------------------------------------------------------------


def test_sign_leaves_bitmap_untouched(desk_pair):
    signer, _ = desk_pair
    before = dump_bitmap(signer.bm)
    mum_sig(signer, b"snapshot check")
    assert dump_bitmap(signer.bm) == before


def test_sign_then_post_sign_consumes_k_bits(desk, desk_pair):
    signer, _ = desk_pair
    sig, derivation = mum_sig(signer, b"m1")
    assert post_sign(signer, derivation) is True
    assert signer.bm.activebits == desk.rt * desk.t - desk.k


def test_signing_same_message_twice_reveals_disjoint_slots(desk, desk_pair):
    signer, _ = desk_pair
    coords = []
    for _ in range(2):
        sig, derivation = mum_sig(signer, b"repeated message")
        coords.append(
            {signer.bm.get_row_column(i) for i in derivation.indices}
        )
        post_sign(signer, derivation)
    assert not (coords[0] & coords[1])


def test_post_sign_replay_guard(desk_pair):
    signer, _ = desk_pair
    _, derivation = mum_sig(signer, b"m")
    assert post_sign(signer, derivation) is True
    with pytest.raises(ParameterError):
        post_sign(signer, derivation)
    stale = IndexDerivation(derivation.indices, derivation.path, derivation.ctr)
    mum_sig(signer, b"m2")
    with pytest.raises(ParameterError):
        post_sign(signer, stale)


def test_exhaustion_drive_reaches_capacity(desk):
    signer, store = mum_kg(desk, seed=DESK_LOSSLESS_SEED)
    from mumhors.harness import workload_message

    capacity = message_capacity(desk.t, desk.k, desk.r)
    signed = 0
    alive = True
    while alive:
        message = workload_message(DESK_LOSSLESS_SEED, signed)
        sig, derivation = mum_sig(signer, message)
        signed += 1
        alive = post_sign(signer, derivation)
    assert signed == capacity
    with pytest.raises(CapacityError):
        mum_sig(signer, b"one too many")
    assert signer.bm.bits_discarded == 0


def test_one_time_use_over_full_lifetime(desk):
    # Weaker rt than the lossless run: losses happen, reuse still must not.
    p = SchemeParams(t=16, k=4, l=256, r=24, rt=2)
    signer, _ = mum_kg(p, seed=3)
    revealed = []
    n = 0
    alive = True
    while alive:
        sig, derivation = mum_sig(signer, b"lifetime %d" % n)
        revealed.extend(signer.bm.get_row_column(i) for i in derivation.indices)
        alive = post_sign(signer, derivation)
        n += 1
    assert len(revealed) == len(set(revealed))
    assert n < message_capacity(p.t, p.k, p.r)  # rt=2 cannot reach capacity


# Wire formats ---------------------------------------------------------------


def test_signature_wire_round_trip():
    rng = random.Random(8)
    sig = Signature(tuple(rng.randbytes(32) for _ in range(25)), ctr=7)
    blob = signature_to_bytes(sig)
    assert len(blob) == 4 + 25 * 32 + 4  # 808 bytes at the 128-bit setting
    assert signature_from_bytes(blob) == sig


def test_signature_wire_rejects_garbage():
    with pytest.raises(FormatError):
        signature_from_bytes(b"MSGX" + bytes(36))
    with pytest.raises(FormatError):
        signature_from_bytes(b"MSG1" + bytes(37))


def test_signer_state_round_trip(desk_pair):
    signer, _ = desk_pair
    sig, derivation = mum_sig(signer, b"persist me")
    post_sign(signer, derivation)
    blob = dump_signer(signer)
    loaded = load_signer(blob)
    assert loaded.msk == signer.msk
    assert loaded.pads == signer.pads
    assert loaded.params == signer.params
    assert loaded.bm.live_pairs() == signer.bm.live_pairs()
    assert dump_signer(loaded) == blob


def test_signer_state_rejects_bad_magic(desk_pair):
    signer, _ = desk_pair
    blob = dump_signer(signer)
    with pytest.raises(FormatError):
        load_signer(b"XXXX" + blob[4:])


def test_loaded_signer_continues_correctly(desk, desk_pair):
    signer, store = desk_pair
    for i in range(5):
        sig, derivation = mum_sig(signer, b"pre %d" % i)
        post_sign(signer, derivation)
        post_verify(store, derivation.indices)
    reloaded = load_signer(dump_signer(signer))
    sig, derivation = mum_sig(reloaded, b"after reload")
    outcome = mum_ver(store, b"after reload", sig)
    assert outcome.bit == 1
