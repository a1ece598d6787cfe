"""Command line front end.

Exit codes: 0 success/accept, 1 verification reject, 2 usage or parse error,
3 signing capacity exhausted, 4 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import harness, params as params_mod, primitives
from .errors import CapacityError, FormatError, MumhorsError, ParameterError
from .harness import ChannelModel, fuzz_bitmap, simulate_channel, simulate_utilization
from .params import (
    EnergyModel,
    RowThresholdQuery,
    SchemeParams,
    bitmap_size_bits,
    energy_estimate,
    eucma_bound,
    message_capacity,
    public_key_store_bytes,
    solve_row_threshold,
)
from .signer import (
    dump_signer,
    load_signer,
    mum_kg,
    mum_sig,
    post_sign,
    signature_from_bytes,
    signature_to_bytes,
)
from .verifier import (
    apply_store_state,
    dump_store_state,
    load_public_key_store,
    mum_ver,
    post_verify,
    sca_verify,
    write_public_key_file,
)

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_INTERNAL = 4

SEED_ENV = "MUMHORS_SEED"

# Key files above this size need an explicit opt-in.
FULL_PK_WARN_BYTES = 64 * 1024 * 1024


def _atomic_write(path: str, data: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _seed_from(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    return int(env) if env else None


def _params_from(args) -> SchemeParams:
    return SchemeParams(t=args.t, k=args.k, l=args.l, r=args.r, rt=args.rt)


def _add_param_flags(sub) -> None:
    sub.add_argument("--t", type=int, default=params_mod.DEFAULT_T)
    sub.add_argument("--k", type=int, default=params_mod.DEFAULT_K)
    sub.add_argument("--l", type=int, default=params_mod.DEFAULT_L)
    sub.add_argument("--r", type=int, default=params_mod.DEFAULT_R)
    sub.add_argument("--rt", type=int, default=params_mod.DEFAULT_RT)


class _SignerLock:
    """Advisory lock so two signers cannot share one state file."""

    def __init__(self, state_path: str):
        self.path = state_path + ".lock"
        self.fd = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise MumhorsError(
                f"state file is locked by another signer ({self.path})"
            ) from None
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            os.unlink(self.path)


def cmd_keygen(args) -> int:
    params = _params_from(args)
    seed = _seed_from(args)
    signer, _ = mum_kg(params, seed, backend=args.backend)
    os.makedirs(args.out_dir, exist_ok=True)
    state_path = os.path.join(args.out_dir, "signer.key")
    pk_path = os.path.join(args.out_dir, "public.key")

    full = True
    pk_bytes = public_key_store_bytes(params.t, params.k, params.r)
    if pk_bytes > FULL_PK_WARN_BYTES and not args.full_pk:
        print(
            f"note: full key file would be {pk_bytes / 2**20:.2f} MiB; "
            "writing lazy key file (pass --full-pk to materialize)",
            file=sys.stderr,
        )
        full = False
    _atomic_write(state_path, dump_signer(signer))
    write_public_key_file(pk_path, params, signer.msk, signer.pads, full=full)
    print(f"wrote {state_path}")
    print(f"wrote {pk_path} ({'full' if full else 'lazy'})")
    print(
        f"capacity: {message_capacity(params.t, params.k, params.r)} messages, "
        f"bitmap {bitmap_size_bits(params.t, params.r, params.rt)} bits"
    )
    return EXIT_OK


def cmd_sign(args) -> int:
    with open(args.state, "rb") as fh:
        state = load_signer(fh.read(), backend=args.backend)
    with open(args.message, "rb") as fh:
        message = fh.read()
    with _SignerLock(args.state):
        try:
            sig, derivation = mum_sig(state, message)
        except CapacityError:
            print("no more private keys to sign", file=sys.stderr)
            return EXIT_CAPACITY
        alive = post_sign(state, derivation)
        # State is persisted before the signature leaves the process: a
        # crash in between wastes keys but can never reuse them.
        _atomic_write(args.state, dump_signer(state))
        _atomic_write(args.out, signature_to_bytes(sig))
    print(f"wrote {args.out} (path={derivation.path}, ctr={derivation.ctr})")
    if not alive:
        print("note: key supply exhausted; this was the final signature",
              file=sys.stderr)
    return EXIT_OK


def _store_state_path(args) -> str:
    return args.store_state or args.pk + ".state"


def cmd_verify(args) -> int:
    store = load_public_key_store(args.pk)
    state_path = _store_state_path(args)
    if os.path.exists(state_path):
        with open(state_path, "rb") as fh:
            apply_store_state(store, fh.read())
    with open(args.message, "rb") as fh:
        message = fh.read()
    with open(args.sig, "rb") as fh:
        sig = signature_from_bytes(fh.read())

    if args.mode == "plain":
        outcome = mum_ver(store, message, sig)
        if outcome.bit:
            post_verify(store, outcome.derivation.indices)
            _atomic_write(state_path, dump_store_state(store))
    else:
        outcome = sca_verify(store, message, sig)
        _atomic_write(state_path, dump_store_state(store))
    if outcome.bit:
        print(f"accepted (path={outcome.path}, ctr={outcome.ctr})")
        return EXIT_OK
    print(f"rejected ({outcome.reason})")
    return EXIT_REJECT


def cmd_solve_rt(args) -> int:
    for label, load in (("t-k", args.t - args.k), ("t", args.t)):
        res = solve_row_threshold(
            RowThresholdQuery(t=args.t, k=args.k, alpha=args.alpha, load_max=load)
        )
        print(f"load_max={label}: rt = {res.rt:.3f}")
    res = solve_row_threshold(RowThresholdQuery(t=args.t, k=args.k, alpha=args.alpha))
    verdict = "holds" if res.regime_ok else "DOES NOT hold"
    print(
        f"regime condition rt*t - t >> rt*(log2 rt)^3 {verdict} "
        f"(ratio {res.regime_ratio:.1f}x)"
    )
    return EXIT_OK


def cmd_bound(args) -> int:
    value = eucma_bound(args.t, args.k, args.bits)
    print(f"log2 forgery bound: {value:.3f}")
    return EXIT_OK


def cmd_energy(args) -> int:
    tx_bits = args.kb * 1024 * 8 if args.kb is not None else args.bits
    model = EnergyModel()
    sign_mj, tx_mj, total_mj = energy_estimate(args.cycles, tx_bits, model)
    print(f"cycles={args.cycles} tx_bits={tx_bits:.0f}")
    print(
        f"sign={sign_mj:.3f} mJ  tx={tx_mj:.3f} mJ  total={total_mj:.3f} mJ"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _params_from(args)
    seed = _seed_from(args) or 0
    rts = args.rt_list or [params.rt]
    reports = []
    for rt in rts:
        rep = simulate_utilization(params, rt_override=rt, workload_seed=seed)
        reports.append(rep)
        print(
            f"rt={rt} messages_signed={rep.messages_signed} "
            f"bits_lost={rep.bits_lost} residual={rep.residual_bits} "
            f"utilization={rep.utilization_pct:.4f}%"
        )
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        csv_path = os.path.join(args.out_dir, "utilization.csv")
        with open(csv_path, "w") as fh:
            fh.write("rt,messages_signed,bits_lost,utilization_pct\n")
            for rep in reports:
                fh.write(
                    f"{rep.rt},{rep.messages_signed},{rep.bits_lost},"
                    f"{rep.utilization_pct:.4f}\n"
                )
        from .plots import render_utilization

        png_path = os.path.join(args.out_dir, "utilization.png")
        render_utilization(reports, png_path)
        print(f"wrote {csv_path}")
        print(f"wrote {png_path}")
    return EXIT_OK


def _parse_corruptions(items) -> ChannelModel:
    schedule = []
    for item in items or ():
        try:
            ordinal, kind = item.split(":", 1)
            schedule.append((int(ordinal), kind))
        except ValueError:
            raise ParameterError(
                f"corruption must look like ORDINAL:KIND, got {item!r}"
            ) from None
    return ChannelModel(tuple(schedule))


def cmd_desync_sim(args) -> int:
    params = _params_from(args)
    seed = _seed_from(args) or 0
    channel = _parse_corruptions(args.corrupt)
    transcript = simulate_channel(
        params, args.mode, channel, args.messages, seed=seed, backend=args.backend
    )
    lines = []
    for event in transcript.events:
        status = (
            "accepted" if event.accepted
            else "rejected" if event.accepted is False
            else "lost"
        )
        tag = f" corruption={event.corruption}" if event.corruption else ""
        lines.append(f"message {event.ordinal}: {status}{tag}")
    lines.append(
        f"final sync: {transcript.final_sync} "
        f"(doubted slots: {transcript.final_doubts})"
    )
    print("\n".join(lines))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        txt_path = os.path.join(args.out_dir, "transcript.txt")
        with open(txt_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        from .plots import render_channel

        png_path = os.path.join(args.out_dir, "timeline.png")
        render_channel(transcript, png_path)
        print(f"wrote {txt_path}")
        print(f"wrote {png_path}")
    return EXIT_OK


def cmd_fuzz_bitmap(args) -> int:
    params = SchemeParams(t=args.t, k=args.k, l=256, r=args.r, rt=args.rt)
    for seed in range(args.start_seed, args.start_seed + args.seeds):
        verdict = fuzz_bitmap(seed, args.ops, params)
        if not verdict.ok:
            print(f"seed {seed}: DIVERGENCE at step {verdict.divergence_step}")
            print(f"  {verdict.detail}")
            print(f"  minimized trace ({len(verdict.minimized)} ops):")
            for op in verdict.minimized:
                print(f"    {op}")
            return EXIT_INTERNAL
        print(f"seed {seed}: {verdict.steps} ops, backends agree")
    return EXIT_OK


def cmd_bench(args) -> int:
    params = _params_from(args)
    seed = _seed_from(args) or 0
    signer, store = mum_kg(params, seed)
    messages = [harness.workload_message(seed, i) for i in range(args.messages)]

    primitives.reset_call_counts()
    t0 = time.perf_counter()
    signed = []
    for message in messages:
        sig, derivation = mum_sig(signer, message)
        post_sign(signer, derivation)
        signed.append(sig)
    sign_dt = time.perf_counter() - t0
    sign_calls = dict(primitives.CALL_COUNTS)

    primitives.reset_call_counts()
    t0 = time.perf_counter()
    for message, sig in zip(messages, signed):
        outcome = mum_ver(store, message, sig)
        if not outcome.bit:
            raise MumhorsError("bench roundtrip failed to verify")
        post_verify(store, outcome.derivation.indices)
    verify_dt = time.perf_counter() - t0
    verify_calls = dict(primitives.CALL_COUNTS)

    n = len(messages)
    print(f"params: t={params.t} k={params.k} r={params.r} rt={params.rt}")
    print(
        f"sign:   {1e6 * sign_dt / n:8.1f} us/msg  hash calls/msg: "
        f"{ {key: round(value / n, 2) for key, value in sign_calls.items()} }"
    )
    print(
        f"verify: {1e6 * verify_dt / n:8.1f} us/msg  hash calls/msg: "
        f"{ {key: round(value / n, 2) for key, value in verify_calls.items()} }"
    )
    print("timings are informational; they depend entirely on this host")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mumhors",
        description="Multiple-time HORS signatures with bitmap key management",
        epilog=(
            "exit codes: 0 success/accept, 1 reject, 2 usage, 3 capacity "
            f"exhausted, 4 internal. {SEED_ENV} overrides --seed."
        ),
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("keygen", help="generate signer state and key file")
    _add_param_flags(sub)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out-dir", required=True)
    sub.add_argument("--full-pk", action="store_true",
                     help="materialize the full key file even when large")
    sub.add_argument("--backend", choices=("queue", "list"), default="queue")
    sub.set_defaults(func=cmd_keygen)

    sub = subs.add_parser("sign", help="sign a message file")
    sub.add_argument("--state", required=True)
    sub.add_argument("--message", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--backend", choices=("queue", "list"), default="queue")
    sub.set_defaults(func=cmd_sign)

    sub = subs.add_parser("verify", help="verify a signature file")
    sub.add_argument("--pk", required=True)
    sub.add_argument("--message", required=True)
    sub.add_argument("--sig", required=True)
    sub.add_argument("--mode", choices=("plain", "sca"), default="plain")
    sub.add_argument("--store-state",
                     help="liveness sidecar path (default: <pk>.state)")
    sub.set_defaults(func=cmd_verify)

    sub = subs.add_parser("solve-rt", help="row threshold solver")
    sub.add_argument("--t", type=int, default=params_mod.DEFAULT_T)
    sub.add_argument("--k", type=int, default=params_mod.DEFAULT_K)
    sub.add_argument("--alpha", type=float, default=0.999)
    sub.set_defaults(func=cmd_solve_rt)

    sub = subs.add_parser("bound", help="log2 forgery bound")
    sub.add_argument("--t", type=int, default=params_mod.DEFAULT_T)
    sub.add_argument("--k", type=int, default=params_mod.DEFAULT_K)
    sub.add_argument("--bits", type=int, default=256, help="one-way output bits")
    sub.set_defaults(func=cmd_bound)

    sub = subs.add_parser("energy", help="energy cost estimate")
    sub.add_argument("--cycles", type=int, required=True)
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--kb", type=float, help="transmitted size in KB")
    group.add_argument("--bits", type=float, help="transmitted size in bits")
    sub.set_defaults(func=cmd_energy)

    sub = subs.add_parser("simulate", help="keyless utilization simulation")
    _add_param_flags(sub)
    sub.add_argument("--rt-list", type=int, action="append", metavar="RT",
                     help="simulate this rt (repeatable; default: --rt)")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out-dir", help="write CSV and figure here")
    sub.set_defaults(func=cmd_simulate)

    sub = subs.add_parser("desync-sim", help="lossy channel simulation")
    _add_param_flags(sub)
    sub.add_argument("--mode", choices=("plain", "sca"), default="sca")
    sub.add_argument("--messages", type=int, default=20)
    sub.add_argument("--corrupt", action="append", metavar="ORDINAL:KIND",
                     help="kinds: flip-sig, flip-msg, drop (repeatable)")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out-dir", help="write transcript and figure here")
    sub.add_argument("--backend", choices=("queue", "list"), default="queue")
    sub.set_defaults(func=cmd_desync_sim)

    sub = subs.add_parser("fuzz-bitmap", help="backend equivalence fuzzing")
    sub.add_argument("--t", type=int, default=8)
    sub.add_argument("--k", type=int, default=2)
    sub.add_argument("--r", type=int, default=12)
    sub.add_argument("--rt", type=int, default=3)
    sub.add_argument("--ops", type=int, default=10000)
    sub.add_argument("--seeds", type=int, default=1)
    sub.add_argument("--start-seed", type=int, default=0)
    sub.set_defaults(func=cmd_fuzz_bitmap)

    sub = subs.add_parser("bench", help="informational sign/verify timing")
    _add_param_flags(sub)
    sub.add_argument("--messages", type=int, default=50)
    sub.add_argument("--seed", type=int)
    sub.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (MumhorsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
