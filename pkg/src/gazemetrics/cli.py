"""Command-line interface.

Subcommands: serve, replay, simulate, oracle, compare, bench, export.
Exit codes: 0 ok, 1 assertion failed (e.g. latency budget exceeded),
2 input error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
import tempfile
from pathlib import Path

from .bench import DEFAULT_BUDGET_US, run_bench
from .compare import compare
from .gazelog import GazeLogError, read_gaze_log, write_gaze_log
from .ivt import IvtConfig
from .manifest import load_manifest, make_grid_manifest, save_manifest
from .metrics import metrics_csv
from .oracle import oracle_from_log, oracle_metrics
from .replay import replay
from .session import FlushPolicy, SessionConfig, export_loaded_metrics, load_session
from .simulate import ReadingProfile, simulate
from .types import GazeError, ScreenModel

OK, ASSERTION_FAILED, INPUT_ERROR = 0, 1, 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file mirroring the server flags")
    p.add_argument("--threshold", type=float, help="I-VT velocity threshold in deg/s (default 30)")
    p.add_argument("--window", type=int, help="velocity window in samples (default 2)")
    p.add_argument("--first-pass-mode", choices=("strict", "first_visit"))
    p.add_argument("--flush-interval", type=float, help="persistence cadence in seconds (default 5)")


def build_config(args: argparse.Namespace) -> SessionConfig:
    base = SessionConfig().to_dict()
    if getattr(args, "config", None):
        base_update = json.loads(Path(args.config).read_text(encoding="utf-8"))
        for key, value in base_update.items():
            if isinstance(value, dict) and key in base:
                base[key].update(value)
            else:
                base[key] = value
    if getattr(args, "threshold", None) is not None:
        base["ivt"]["threshold_dps"] = args.threshold
    if getattr(args, "window", None) is not None:
        base["ivt"]["window_samples"] = args.window
    if getattr(args, "first_pass_mode", None) is not None:
        base["first_pass_mode"] = args.first_pass_mode
    if getattr(args, "flush_interval", None) is not None:
        base["flush"]["interval_us"] = int(args.flush_interval * 1_000_000)
    return SessionConfig.from_dict(base)


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import GazeServer

    config = build_config(args)
    server = GazeServer(host=args.host, port=args.port, config=config, store_dir=args.store)

    async def run() -> None:
        port = await server.start()
        print(f"listening on ws://{args.host}:{port} (store: {args.store})")
        await asyncio.Event().wait()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    return OK


def _cmd_replay(args: argparse.Namespace) -> int:
    samples = read_gaze_log(args.log)
    manifest = load_manifest(args.manifest)
    result = replay(
        samples,
        manifest,
        target=args.target,
        speed=args.speed,
        session=args.session,
        participant=args.participant,
    )
    print(f"sent {result.samples_sent} samples in {result.wall_seconds:.3f}s")
    return OK


def _profile_from_args(args: argparse.Namespace) -> ReadingProfile:
    return ReadingProfile(
        rate_hz=args.rate,
        fixation_mean_ms=args.fix_mean_ms,
        fixation_sd_ms=args.fix_sd_ms,
        fixation_min_ms=args.fix_min_ms,
        p_skip=args.p_skip,
        p_regress=args.p_regress,
        regress_max_back=args.regress_max_back,
        noise_px=args.noise_px,
        passes=args.passes,
        seed=args.seed,
    )


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.manifest:
        manifest = load_manifest(args.manifest)
    else:
        manifest = make_grid_manifest(args.words)
    if args.manifest_out:
        save_manifest(manifest, args.manifest_out)
    samples = simulate(manifest, _profile_from_args(args))
    n = write_gaze_log(samples, args.out)
    print(f"wrote {n} samples to {args.out}")
    return OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    if args.session:
        if not args.store:
            print("oracle --session requires --store", file=sys.stderr)
            return INPUT_ERROR
        loaded = load_session(args.store, args.session)
        recorded = loaded.config
        if args.threshold is not None and args.threshold != recorded.ivt.threshold_dps:
            print("config mismatch: recorded threshold differs", file=sys.stderr)
            return INPUT_ERROR
        if args.window is not None and args.window != recorded.ivt.window_samples:
            print("config mismatch: recorded window differs", file=sys.stderr)
            return INPUT_ERROR
        if args.first_pass_mode is not None and args.first_pass_mode != recorded.first_pass_mode:
            print("config mismatch: recorded first-pass mode differs", file=sys.stderr)
            return INPUT_ERROR
        if loaded.manifest is None:
            print("session has no manifest; nothing to export", file=sys.stderr)
            return INPUT_ERROR
        from .oracle import assign_groups, brute_word_metrics

        fixations = assign_groups(loaded.fixations)
        start = loaded.session_start_us or 0
        onset = loaded.stimulus_onset_us if loaded.stimulus_onset_us is not None else start
        rows = [
            brute_word_metrics(w.word_index, fixations, recorded.first_pass_mode, start, onset)
            for w in loaded.manifest.words
        ]
        text = metrics_csv(loaded.manifest, rows)
    else:
        if not (args.log and args.manifest):
            print("oracle needs --session/--store or --log/--manifest", file=sys.stderr)
            return INPUT_ERROR
        samples = read_gaze_log(args.log)
        manifest = load_manifest(args.manifest)
        config = build_config(args)
        rows = oracle_from_log(
            samples, manifest, config.ivt, config.screen, config.first_pass_mode
        )
        text = metrics_csv(manifest, rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return OK


def _cmd_compare(args: argparse.Namespace) -> int:
    report = compare(args.a, args.b)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.render())
    return OK


def _cmd_bench(args: argparse.Namespace) -> int:
    config = build_config(args)
    if args.log and args.manifest:
        samples = read_gaze_log(args.log)
        manifest = load_manifest(args.manifest)
    else:
        manifest = make_grid_manifest(args.words)
        profile = ReadingProfile(rate_hz=args.rate, noise_px=2.0, seed=7, passes=args.passes)
        samples = simulate(manifest, profile)
        while len(samples) < args.samples:
            profile = ReadingProfile(
                rate_hz=args.rate, noise_px=2.0, seed=7, passes=profile.passes + 1
            )
            samples = simulate(manifest, profile)
    samples = samples[: args.samples] if args.samples and len(samples) > args.samples else samples
    with tempfile.TemporaryDirectory() as tmp:
        report = run_bench(samples, manifest, config, budget_us=args.budget_us, store_dir=tmp)
    print(report.render())
    return OK if report.passed else ASSERTION_FAILED


def _cmd_export(args: argparse.Namespace) -> int:
    loaded = load_session(args.store, args.session)
    text = export_loaded_metrics(loaded)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazemetrics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the streaming engine socket server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--store", default="./sessions")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("replay", help="stream a recorded gaze log to a server")
    p.add_argument("--log", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--target", default="ws://127.0.0.1:8787")
    p.add_argument("--speed", type=float, default=1.0, help="time scale; 0 = as fast as possible")
    p.add_argument("--session", default="replay")
    p.add_argument("--participant", default="")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("simulate", help="generate a synthetic reading gaze log")
    p.add_argument("--manifest", help="layout manifest to read; omit to use a synthetic grid")
    p.add_argument("--words", type=int, default=100, help="grid manifest size when no --manifest")
    p.add_argument("--manifest-out", help="write the manifest used to this path")
    p.add_argument("--out", required=True, help="gaze log CSV to write")
    p.add_argument("--rate", type=float, default=300.0)
    p.add_argument("--fix-mean-ms", type=float, default=200.0)
    p.add_argument("--fix-sd-ms", type=float, default=40.0)
    p.add_argument("--fix-min-ms", type=float, default=80.0)
    p.add_argument("--p-skip", type=float, default=0.0)
    p.add_argument("--p-regress", type=float, default=0.0)
    p.add_argument("--regress-max-back", type=int, default=3)
    p.add_argument("--noise-px", type=float, default=0.0)
    p.add_argument("--passes", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("oracle", help="brute-force reference metrics computation")
    p.add_argument("--log")
    p.add_argument("--manifest")
    p.add_argument("--store", help="session store dir (with --session)")
    p.add_argument("--session", help="recompute from a recorded session")
    p.add_argument("--out")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("compare", help="Pearson/MAE comparison of two metric exports")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("bench", help="latency benchmark over the full pipeline")
    p.add_argument("--log")
    p.add_argument("--manifest")
    p.add_argument("--samples", type=int, default=150_000)
    p.add_argument("--words", type=int, default=1000)
    p.add_argument("--rate", type=float, default=300.0)
    p.add_argument("--passes", type=int, default=3)
    p.add_argument("--budget-us", type=float, default=DEFAULT_BUDGET_US)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("export", help="re-export metrics CSV from a stored session")
    p.add_argument("--store", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GazeLogError, GazeError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except ConnectionError as exc:
        print(f"connection error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
