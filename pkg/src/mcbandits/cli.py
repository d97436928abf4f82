"""Command-line interface.

Subcommands: run, sweep, verify, estimate-m, replay.
Exit codes: 0 success, 1 usage, 2 validation, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import analysis, harness
from .engine import replay_diff, run_game
from .env import ConfigError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _parser():
    p = argparse.ArgumentParser(
        prog="mcbandits",
        description="Multiplayer bandit simulation harness (collision model).",
    )
    sub = p.add_subparsers(dest="command")

    run = sub.add_parser("run", help="execute one experiment spec")
    run.add_argument("--config", required=True, help="TOML experiment spec")
    run.add_argument("--seed", type=int, help="override base seed")
    run.add_argument("--out", help="output directory for CSV/JSON")
    run.add_argument("--workers", type=int, default=None)

    sweep = sub.add_parser("sweep", help="vary one parameter over a list")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", required=True,
                       help="dotted key, e.g. environment.horizon")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--out", help="output directory")
    sweep.add_argument("--workers", type=int, default=None)

    verify = sub.add_parser("verify", help="run the analysis oracles")
    verify.add_argument("--oracle", required=True,
                        choices=["nash", "interval-grid", "positive-probability"])
    verify.add_argument("--assignment", help="comma-separated actions (nash)")
    verify.add_argument("--means", help="semicolon-separated rows of means (nash)")
    verify.add_argument("--eps", type=float, default=0.1)
    verify.add_argument("--p", type=float, default=1.25, help="ratio base (grid)")
    verify.add_argument("--points", type=int, default=10_000)
    verify.add_argument("--width-exponent", type=float, default=0.4)
    verify.add_argument("--mu", type=float, default=0.5)
    verify.add_argument("--sigma", type=float, default=1.0)
    verify.add_argument("--samples", type=int, default=10**6)

    est = sub.add_parser("estimate-m", help="run the player-count estimator")
    est.add_argument("--config", required=True)
    est.add_argument("--seed", type=int, help="override base seed")

    replay = sub.add_parser(
        "replay", help="re-derive a trace from (spec, seed) and diff a stored one"
    )
    replay.add_argument("--config", required=True)
    replay.add_argument("--seed", type=int, required=True)
    replay.add_argument("--trace", required=True, help="stored full-fidelity CSV")
    return p


def _load_spec(path, seed=None):
    spec = harness.ExperimentSpec.from_toml(path)
    if seed is not None:
        spec = dataclasses.replace(spec, base_seed=seed)
    return spec


def _cmd_run(args):
    spec = _load_spec(args.config, args.seed)
    result = harness.run_experiment(spec, out_dir=args.out, workers=args.workers)
    print(json.dumps(result.aggregates, indent=2, default=str))
    return EXIT_OK


def _set_dotted(data, key, value):
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _parse_value(text):
    try:
        f = float(text)
        return int(f) if f.is_integer() and "." not in text and "e" not in text.lower() else f
    except ValueError:
        return text


def _cmd_sweep(args):
    from .harness import tomli

    with open(args.config, "rb") as fh:
        base = tomli.load(fh)
    rows = []
    for raw in args.values.split(","):
        value = _parse_value(raw.strip())
        data = json.loads(json.dumps(base))  # deep copy
        _set_dotted(data, args.param, value)
        spec = harness.ExperimentSpec.from_dict(data)
        result = harness.run_experiment(spec, workers=args.workers)
        agg = result.aggregates
        agg[args.param] = value
        rows.append(agg)
    print(json.dumps(rows, indent=2, default=str))
    if args.out:
        import csv as _csv
        import os

        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "sweep.csv")
        with open(path, "w", newline="") as fh:
            w = _csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            w.writeheader()
            for r in rows:
                w.writerow({k: r.get(k) for k in rows[0]})
    return EXIT_OK


def _cmd_verify(args):
    if args.oracle == "nash":
        if not args.assignment or not args.means:
            print("verify nash needs --assignment and --means", file=sys.stderr)
            return EXIT_USAGE
        assignment = [int(x) for x in args.assignment.split(",")]
        rows = [
            [float(v) for v in row.split(",")] for row in args.means.split(";")
        ]
        report = analysis.verify_nash(assignment, rows, args.eps)
        print(json.dumps(dataclasses.asdict(report), default=str, indent=2))
        return EXIT_OK if report.is_eps_nash else EXIT_RUNTIME
    if args.oracle == "interval-grid":
        report = analysis.verify_lemma4_grid(
            args.p, {"points": args.points, "width_exponent": args.width_exponent}
        )
        print(json.dumps(dataclasses.asdict(report), default=str, indent=2))
        return EXIT_OK if report.passed else EXIT_RUNTIME
    report = analysis.check_lemma5_bound(args.mu, args.sigma, args.samples)
    print(json.dumps(dataclasses.asdict(report), default=str, indent=2))
    return EXIT_OK if report.passed else EXIT_RUNTIME


def _cmd_estimate_m(args):
    spec = _load_spec(args.config, args.seed)
    if spec.algorithm.get("name") != "estimate_m":
        print("config must select algorithm name = 'estimate_m'", file=sys.stderr)
        return EXIT_VALIDATION
    seed = spec.seeds()[0]
    trace, players = harness.run_replication(spec, seed)
    out = {
        "seed": seed,
        "m_out": [p.m_out for p in players],
        "rounds_consumed": [
            p.explore_rounds + p.probes_used * p.block_len for p in players
        ],
        "true_m": spec.environment["m"],
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK if all(v == out["true_m"] for v in out["m_out"]) else EXIT_RUNTIME


def _read_trace_csv(path):
    import csv as _csv

    from .engine import RoundRecord

    rows = {}
    with open(path, newline="") as fh:
        for rec in _csv.DictReader(fh):
            rows.setdefault(int(rec["t"]), []).append(rec)
    records = []
    for t in sorted(rows):
        entries = sorted(rows[t], key=lambda r: int(r["player"]))
        records.append(
            RoundRecord(
                t,
                tuple(int(r["action"]) for r in entries),
                tuple(float(r["reward"]) for r in entries),
                tuple(bool(int(r["collided"])) for r in entries),
            )
        )
    return records


def _cmd_replay(args):
    spec = _load_spec(args.config, args.seed)
    config = spec.config(args.seed)
    players = harness.build_players(spec, config)
    trace = run_game(
        config, players, regret_mode=spec.regret_mode, record_rounds=True, bulk=False
    )
    stored = _read_trace_csv(args.trace)
    diff = replay_diff(trace.records, stored)
    if diff is None:
        print(json.dumps({"divergence": None, "rounds": len(stored)}))
        return EXIT_OK
    t, player, fld = diff
    print(json.dumps({"divergence": {"t": t, "player": player, "field": fld}}))
    return EXIT_RUNTIME


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    handler = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "verify": _cmd_verify,
        "estimate-m": _cmd_estimate_m,
        "replay": _cmd_replay,
    }[args.command]
    try:
        return handler(args)
    except (harness.SpecValidationError, ConfigError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
