"""Command line entry point: ``auvtrack run|sweep|validate``.

Log verbosity comes from the ``AUVTRACK_LOG`` environment variable
(``WARNING`` by default); nothing else is read from the environment.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config, scenario_path, validate
from .sim import horizon_sweep, run_scenario

EXIT_CONFIG = 2


def _load(name: str):
    try:
        return load_config(scenario_path(name))
    except FileNotFoundError as e:
        raise ConfigError([str(e)]) from e


def _cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(json.dumps({"ok": True, "name": cfg.name, "agents": cfg.n_agents}))
    return 0


def _cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    log = run_scenario(cfg)
    summary = log.summary()
    if args.out:
        csv_path, json_path = log.write(args.out)
        summary["csv"], summary["json"] = str(csv_path), str(json_path)
    print(json.dumps(summary, default=float, sort_keys=True))
    return 0


def _parse_horizons(text: str) -> list[int]:
    try:
        hs = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad horizon list {text!r}") from None
    if not hs or min(hs) < 1:
        raise argparse.ArgumentTypeError("horizons must be positive integers")
    return hs


def _cmd_sweep(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    errors = []
    for H in args.horizons:
        sub = cfg.with_overrides(planner_horizon=H)
        errors += sub.planner.validate() + validate(sub)
    if errors:
        raise ConfigError(errors)
    rows = horizon_sweep(cfg, args.horizons, args.seeds)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["horizon,mean_error"] + [f"{r['horizon']},{r['mean_error']:.10g}" for r in rows]
        (out / f"{cfg.name}_sweep.csv").write_text("\n".join(lines) + "\n")
    print(json.dumps(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="auvtrack", description="Cooperative bearing-only tracking simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("config", help="YAML file or built-in scenario name")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for the CSV log and JSON summary")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="tracking error versus planning horizon")
    p.add_argument("config")
    p.add_argument("--horizons", type=_parse_horizons, default=[1, 2, 3, 4])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, help="first seed (defaults to the config seed)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="check a config and report every violation")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)
    return ap


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("AUVTRACK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(json.dumps({"ok": False, "errors": e.errors}))
        return EXIT_CONFIG
    except ValueError as e:
        # e.g. a sweep with fewer than two seeds
        print(json.dumps({"ok": False, "errors": [str(e)]}))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
