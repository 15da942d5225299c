"""Deterministic result bundle: report.json, summary.csv and one CSV per suite."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from .._kernels import BACKEND
from .config import ExperimentConfig
from .suites import SuiteResult, run_suite

SUMMARY_COLUMNS = ("suite", "check", "value", "op", "threshold", "passed")
# modelling substitutions behind every number in the bundle
SURROGATES = {
    "domain": "periodic box; compactly supported data kept away from the boundary",
    "derivatives": "strong-form centered finite differences",
    "coefficient_paths": "equal-length pieces, uniform spectrum in [nu, 1/nu], Haar rotations",
    "seminorm_increments": "only h whose translates stay in the safe region",
    "constants": "unquantified constants checked as bounded ratios",
}


def jsonable(obj):
    """Recursively convert numpy scalars, tuples, dataclasses and tuple keys to JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(obj.to_dict() if hasattr(obj, "to_dict") else asdict(obj))
    if isinstance(obj, dict):
        return {(",".join(map(str, k)) if isinstance(k, tuple) else str(k)): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _cell(v):
    v = jsonable(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    if isinstance(v, float):
        return repr(v)
    return v


def write_rows(path: Path, rows: list) -> None:
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})


def build_report(cfg: ExperimentConfig, results: list) -> dict:
    checks = [c for r in results for c in r.checks]
    return jsonable({
        "package_version": __version__,
        "backend": BACKEND,
        "config": cfg.identity(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "surrogates": SURROGATES,
        "passed": all(c.passed for c in checks),
        "n_checks": len(checks),
        "failures": [f"{c.suite}.{c.name}" for c in checks if not c.passed],
        "suites": {r.name: {"passed": r.passed, "checks": [asdict(c) for c in r.checks], "data": r.data}
                   for r in results},
    })


def write_bundle(cfg: ExperimentConfig, results: list, out_dir=None) -> Path:
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(cfg, results)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    summary = [{"suite": c.suite, "check": c.name, "value": c.value, "op": c.op,
                "threshold": c.threshold, "passed": c.passed} for r in results for c in r.checks]
    write_rows(out / "summary.csv", summary)
    for r in results:
        write_rows(out / f"{r.name}.csv", r.rows)
    return out


def _echo(line: str) -> None:
    print(line, flush=True)


def run_all(cfg: ExperimentConfig, out_dir=None, echo=_echo) -> tuple[int, list]:
    """Run the selected suites, write the bundle, return ``(exit_status, results)``."""
    results: list[SuiteResult] = []
    for name in cfg.selected_suites:
        res = run_suite(name, cfg)
        results.append(res)
        if echo:
            for c in res.checks:
                echo(c.line())
    write_bundle(cfg, results, out_dir)
    return (0 if all(r.passed for r in results) else 1), results
