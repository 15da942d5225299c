"""``carnot-heat`` command line: ``run --config`` and ``verify --suite``."""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import CarnotHeatError, UnknownGroupError
from ..group_core import available_groups
from .config import PROFILES, SUITES, ExperimentConfig, load_config
from .report import run_all

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="base RNG seed")
    p.add_argument("--out-dir", default=None, help="directory for report.json and CSVs")
    p.add_argument("--group", default=None, help=f"group override ({', '.join(available_groups())})")
    p.add_argument("--profile", choices=PROFILES, default=None, help="problem sizes (default: full)")
    p.add_argument("--workers", type=int, default=None, help="process pool size for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carnot-heat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the suites listed in a config file")
    run.add_argument("--config", required=True, help="path to a .toml or .json config")
    _common(run)
    ver = sub.add_parser("verify", help="run one verification suite (or all)")
    ver.add_argument("--suite", required=True, choices=SUITES + ("all",))
    _common(ver)
    return parser


def _error(kind: str, message: str, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True), file=sys.stderr)
    return EXIT_USAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.group is not None and args.group not in available_groups():
            raise UnknownGroupError(args.group, available_groups())
        cfg = load_config(args.config) if args.command == "run" else ExperimentConfig(suites=[args.suite])
        for key in ("seed", "out_dir", "group", "profile", "workers"):
            val = getattr(args, key)
            if val is not None:
                setattr(cfg, key, val)
        cfg = ExperimentConfig(**cfg.to_dict())  # revalidate overrides
    except UnknownGroupError as e:
        return _error("unknown_group", str(e), group=e.name, available=e.available)
    except FileNotFoundError as e:
        return _error("config_not_found", str(e))
    except (CarnotHeatError, ValueError, TypeError) as e:
        return _error("invalid_config", str(e))
    status, _ = run_all(cfg)
    print(f"{'ALL PASS' if status == EXIT_OK else 'FAILURES'}: bundle written to {cfg.out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
