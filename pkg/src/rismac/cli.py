"""Command line interface: single runs, parameter sweeps and trace replay.

Results go to CSV with a fixed column order; traces to JSON for offline
metric re-derivation via `replay`.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

from .config import ScenarioConfig, parse_scenario
from .errors import ConfigError
from .metrics import recompute_from_trace
from .simulate import metrics_row, run_scenario, run_sweep

CSV_COLUMNS = ["scenario", "protocol", "ai", "K", "num_ris", "seed",
               "throughput_bps", "ee_bits_per_joule", "collisions",
               "jain_index", "mean_delay_s", "frames"]


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(rows, out_path=None) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in CSV_COLUMNS))
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    return text


def _load_config(args) -> ScenarioConfig:
    cfg = parse_scenario(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "protocol", None) and "," not in args.protocol:
        overrides["protocol"] = args.protocol
    if getattr(args, "ai", None) is not None:
        overrides["ai"] = args.ai
    if getattr(args, "horizon", None) is not None:
        overrides["horizon_s"] = args.horizon
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg.validate()


def cmd_run(args) -> int:
    cfg = _load_config(args)
    metrics, trace = run_scenario(cfg, keep_trace=bool(args.trace))
    text = write_rows([metrics_row(cfg, metrics)], args.out)
    if not args.out:
        sys.stdout.write(text)
    if args.trace:
        payload = {"config": dataclasses.asdict(cfg),
                   "elapsed_s": metrics.elapsed_s,
                   "records": trace}
        with open(args.trace, "w") as fh:
            json.dump(payload, fh)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    values = [_numeric(v) for v in args.values.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    protocols = args.protocol.split(",") if args.protocol else None
    rows = run_sweep(cfg, args.variable, values, seeds, protocols)
    text = write_rows(rows, args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_replay(args) -> int:
    with open(args.trace) as fh:
        payload = json.load(fh)
    cfg = ScenarioConfig(**payload["config"]).validate()
    metrics = recompute_from_trace(payload["records"], payload["elapsed_s"])
    text = write_rows([metrics_row(cfg, metrics)], args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def _numeric(text: str):
    value = float(text)
    return int(value) if value == int(value) else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rismac",
        description="Simulate centralized/distributed/hybrid MAC protocols "
                    "in RIS-aided uplink networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario")
    sweep_p = sub.add_parser("sweep", help="sweep a numeric key")
    replay_p = sub.add_parser("replay", help="re-derive metrics from a trace")

    for p in (run_p, sweep_p):
        p.add_argument("--config", help="scenario file (key = value sections)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--ai", action=argparse.BooleanOptionalAction,
                       default=None, help="enable/disable the AI cost model")
        p.add_argument("--horizon", type=float, help="simulated seconds")
        p.add_argument("--out", help="output CSV path (default: stdout)")
    run_p.add_argument("--protocol", help="protocol name")
    run_p.add_argument("--trace", help="write the event trace as JSON")
    sweep_p.add_argument("--protocol",
                         help="protocol name or comma-separated list")
    sweep_p.add_argument("--variable", required=True,
                         help="numeric config key to sweep")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated values")
    sweep_p.add_argument("--seeds", default="1",
                         help="comma-separated master seeds")

    replay_p.add_argument("--trace", required=True, help="trace JSON path")
    replay_p.add_argument("--out", help="output CSV path (default: stdout)")

    run_p.set_defaults(func=cmd_run)
    sweep_p.set_defaults(func=cmd_sweep)
    replay_p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
