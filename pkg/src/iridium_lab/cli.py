"""iridium-lab command line.

Exit status: 0 success, 1 operational error, 2 usage error.
"""

import argparse
import os
import pathlib
import sys
import time

import numpy as np

SEED_ENV = "IRIDIUM_LAB_SEED"


class UsageError(Exception):
    pass


def _default_seed():
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _open_lines(path):
    if path == "-":
        return sys.stdin.read().splitlines()
    return pathlib.Path(path).read_text().splitlines()


def _emit(text, out):
    if out:
        pathlib.Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(header, rows, csv):
    if csv:
        return "\n".join([",".join(header)] + [",".join(str(c) for c in r) for r in rows]) + "\n"
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


# --- subcommands -----------------------------------------------------------

def cmd_crack(args):
    from .ki_extraction import CrackConfig, format_transcript, recover_key
    from .sim_card import ReaderTransport, SimProfile, SubscriberIdentity

    cfg = CrackConfig(budget_per_pair=args.budget, schedule=args.schedule, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    rows = []
    transcripts = []
    failures = 0
    for i in range(args.keys):
        if args.oracle == "simulated":
            ki = rng.integers(0, 256, 16, dtype=np.uint8).tobytes()
            card = SimProfile(SubscriberIdentity(f"9010300000{i:05d}", ki))
            oracle = ReaderTransport("simulated", card)
        else:
            ki = None
            oracle = ReaderTransport.from_pcsc(args.reader)
        start = time.perf_counter()
        found, state = recover_key(oracle, cfg)
        elapsed = time.perf_counter() - start
        ok = ki is None or found == ki
        failures += not ok
        rows.append((i, state.query_count, "yes" if ok else "no", found.hex(), f"{elapsed:.2f}"))
        transcripts.append(f"# key {i}\n" + format_transcript(state))
    text = _table(("key", "queries", "recovered", "ki", "seconds"), rows, args.csv)
    if not args.csv:
        q = [r[1] for r in rows]
        text += f"{args.keys - failures}/{args.keys} recovered, median queries {int(np.median(q))}\n"
    _emit(text, args.out)
    if args.transcript:
        pathlib.Path(args.transcript).write_text("".join(transcripts))
    return 1 if failures else 0


def cmd_parse(args):
    from collections import Counter

    from .frame_codec import classify_frame, read_ibr

    records = read_ibr(_open_lines(args.input))
    counts = Counter(classify_frame(r).value for r in records)
    rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    _emit(_table(("category", "frames"), rows, args.csv), args.out)
    return 0


def cmd_stats(args):
    from .frame_codec import read_ibr
    from .traffic import privacy_stats, reconstruct, render_entropy_table, render_frame_table, stats_csv

    if args.no_privacy and not args.i_understand_payload_retention:
        raise UsageError("--no-privacy requires --i-understand-payload-retention")
    if args.dump_payloads and not args.no_privacy:
        raise UsageError("--dump-payloads is only allowed with --no-privacy")
    records = read_ibr(_open_lines(args.input))
    sessions = reconstruct(records)
    stats = privacy_stats(sessions, records)
    if args.csv:
        text = stats_csv(stats)
    else:
        text = render_frame_table(stats) + "\n" + render_entropy_table(stats)
        complete = sum(s.complete for s in sessions)
        text += f"\n{len(sessions)} lanes, {complete} complete sessions\n"
    _emit(text, args.out)
    if args.dump_payloads:
        out = pathlib.Path(args.dump_payloads)
        out.mkdir(parents=True, exist_ok=True)
        for i, s in enumerate(sessions):
            (out / f"session_{i:05d}.bin").write_bytes(s.payload)
    return 0


def cmd_jam_curve(args):
    from .jamming import jam_curve, js_for_prr

    if args.step <= 0:
        raise UsageError("--step must be positive")
    if args.trials and args.trials < 10_000:
        raise UsageError("--trials must be 0 or at least 10000")
    rows = jam_curve(args.from_db, args.to_db, args.step, trials=args.trials, seed=args.seed)
    out = [(f"{db:.2f}", f"{a:.6f}", f"{e:.6f}", f"{s:.6f}") for db, a, e, s in rows]
    text = _table(("js_db", "analytic_prr", "empirical_prr", "sigma"), out, args.csv)
    if not args.csv:
        text += f"PRR 50% at J/S = {js_for_prr(0.5).db:.3f} dB\n"
    _emit(text, args.out)
    return 0


def cmd_simulate(args):
    from .link_sim import ScenarioConfig, run_scenario

    cfg = ScenarioConfig.from_text(pathlib.Path(args.config).read_text()) if args.config else ScenarioConfig()
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        cfg.update(item)
    outcome = run_scenario(args.scenario, cfg, seed=args.seed)
    _emit(outcome.transcript, args.out)
    print(f"{outcome.name} seed={args.seed} state={outcome.final_state.value} verdict={outcome.verdict.value}",
          file=sys.stderr)
    return 0


def cmd_encode(args):
    from .frame_codec import (
        BurstRecord, Lcw, RingAlertFrame, encode_lcw, encode_position_frame, encode_ring_alert,
        geodetic_to_report, serialize_ibr,
    )

    if args.frame == "ring-alert":
        bits = encode_ring_alert(RingAlertFrame(args.beam, args.sat, args.page))
    elif args.frame == "position":
        bits = encode_position_frame(geodetic_to_report(args.lat, args.lon))
    else:
        packed = encode_lcw(Lcw(args.payload_type, args.lcw_type, args.lcw_code, args.metadata))
        print(format(packed, "030b"))
        return 0
    print(serialize_ibr(BurstRecord(args.timestamp, args.freq, args.snr, 100, bits)))
    return 0


def cmd_modulate(args):
    from .frame_codec import modulate, read_ibr, write_recording
    from .frame_codec.modem import sigmf_metadata

    if args.bits:
        bursts = [args.bits]
    else:
        bursts = [r.bits for r in read_ibr(_open_lines(args.input))]
    gap = np.zeros(int(args.sample_rate * args.gap_ms / 1000), dtype=np.complex64)
    pieces, notes, pos = [], [], 0
    for bits in bursts:
        iq, _ = modulate(bits, args.center_freq, args.sample_rate, args.amplitude)
        notes.append((pos, len(iq), f"burst {len(notes)} ({len(bits)} bits)"))
        pieces += [iq, gap]
        pos += len(iq) + len(gap)
    iq = np.concatenate(pieces) if pieces else np.zeros(0, np.complex64)
    meta = sigmf_metadata(args.sample_rate, args.center_freq, notes)
    data_path, meta_path = write_recording(args.out, iq, meta)
    print(f"wrote {len(iq)} samples to {data_path} and {meta_path}")
    return 0


def cmd_synth(args):
    from .frame_codec import serialize_ibr
    from .traffic import synthetic_trace

    records, _ = synthetic_trace(args.sessions, seed=args.seed, loss=args.loss)
    _emit("".join(serialize_ibr(r) + "\n" for r in records), args.out)
    return 0


# --- argument parsing ------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="iridium-lab", description="Iridium security testbed.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=None, help=f"default from ${SEED_ENV} or 0")
        sp.add_argument("--csv", action="store_true", help="machine-readable CSV output")
        sp.add_argument("-o", "--out", help="write the report here instead of stdout")

    s = sub.add_parser("crack", help="recover Ki from a SIM by chosen-challenge collisions")
    common(s)
    s.add_argument("--oracle", choices=("simulated", "external"), default="simulated")
    s.add_argument("--keys", type=int, default=1)
    s.add_argument("--reader", type=int, default=0, help="PC/SC reader index for --oracle external")
    s.add_argument("--budget", type=int, default=1 << 17, help="query cap per byte pair")
    s.add_argument("--schedule", choices=("prepared", "random"), default="prepared")
    s.add_argument("--transcript", help="write the per-pair crack log here")
    s.set_defaults(func=cmd_crack)

    s = sub.add_parser("parse", help="validate and classify an IBR file")
    common(s, seed=False)
    s.add_argument("input", help="IBR file or - for stdin")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("stats", help="aggregate traffic statistics (no payloads kept)")
    common(s, seed=False)
    s.add_argument("input")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--privacy", dest="no_privacy", action="store_false", help="default")
    g.add_argument("--no-privacy", dest="no_privacy", action="store_true")
    s.add_argument("--i-understand-payload-retention", action="store_true")
    s.add_argument("--dump-payloads", help="directory for reassembled payloads (needs --no-privacy)")
    s.set_defaults(func=cmd_stats, no_privacy=False)

    s = sub.add_parser("jam-curve", help="analytic and Monte-Carlo PRR versus J/S")
    common(s)
    s.add_argument("--from", dest="from_db", type=float, default=-10.0)
    s.add_argument("--to", dest="to_db", type=float, default=5.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--trials", type=int, default=100_000, help="0 skips Monte-Carlo")
    s.set_defaults(func=cmd_jam_curve)

    s = sub.add_parser("simulate", help="run an attack scenario")
    common(s)
    s.add_argument("scenario", choices=("eavesdrop", "clone_auth", "spoof_ring_alert", "replay_auth",
                                        "jam_registration", "track_position"))
    s.add_argument("--config", help="key = value scenario config file")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("encode", help="build a frame")
    s.add_argument("frame", choices=("ring-alert", "position", "lcw"))
    s.add_argument("--beam", type=int, default=0)
    s.add_argument("--sat", type=int, default=0)
    s.add_argument("--page", type=int, default=None)
    s.add_argument("--lat", type=float, default=0.0)
    s.add_argument("--lon", type=float, default=0.0)
    s.add_argument("--payload-type", type=int, default=0)
    s.add_argument("--lcw-type", type=int, default=0)
    s.add_argument("--lcw-code", type=int, default=0)
    s.add_argument("--metadata", type=int, default=0)
    s.add_argument("--timestamp", type=int, default=0)
    s.add_argument("--freq", type=int, default=1_626_270_833)
    s.add_argument("--snr", type=float, default=20.0)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("modulate", help="DQPSK IQ recording from bits")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--bits")
    src.add_argument("--input", help="IBR file")
    s.add_argument("--out", required=True, help="output stem (.sigmf-data/.sigmf-meta added)")
    s.add_argument("--sample-rate", type=int, default=250_000)
    s.add_argument("--center-freq", type=float, default=1_626_270_833)
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--gap-ms", type=float, default=1.0)
    s.set_defaults(func=cmd_modulate)

    s = sub.add_parser("synth", help="write a synthetic IBR trace")
    common(s)
    s.add_argument("--sessions", type=int, default=10)
    s.add_argument("--loss", type=float, default=0.0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"iridium-lab: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # operational failures: bad input files, locked cards, ...
        if args.verbose:
            raise
        print(f"iridium-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
