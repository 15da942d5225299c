"""Verification suites: run studies at profile-dependent sizes and grade them."""

from __future__ import annotations

import math
import operator
from dataclasses import asdict, dataclass, field

import numpy as np

from ..difference import equivalence_ratio
from ..errors import DomainError
from ..group_core import available_groups, get_group, measure_norm_constants
from ..lattice import Lattice
from ..solver import random_coefficient_path
from . import studies as S
from .config import ExperimentConfig
from .synthetic import localized_field

OPS = {"<=": operator.le, ">=": operator.ge, "==": operator.eq}


@dataclass
class Check:
    suite: str
    name: str
    value: float
    op: str
    threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        v = self.value
        self.passed = bool(v == v and OPS[self.op](v, self.threshold))  # NaN fails

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.suite}.{self.name}: {self.value:.6g} {self.op} {self.threshold:g}"


@dataclass
class SuiteResult:
    name: str
    checks: list
    rows: list
    data: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# Profile-dependent defaults ------------------------------------------------------------

DEFAULTS = {
    "group": {"full": {"n_samples": 10_000}, "quick": {"n_samples": 2_000}},
    "fields": {
        "full": {"hormander_points": 100, "ibp_ladder": [16, 32, 64], "comm_ladder": [32, 64, 128],
                 "moll_lattices": [[24, 24, 48], [32, 32, 64], [48, 48, 96]], "eps_ladder": [0.42, 0.5, 0.6],
                 "moll_T": 0.2, "moll_M": 8},
        "quick": {"hormander_points": 20, "ibp_ladder": [16, 32, 64], "comm_ladder": [32, 64, 128],
                  "moll_lattices": [[16, 16, 32], [32, 32, 64]], "eps_ladder": [0.5, 0.6],
                  "moll_T": 0.05, "moll_M": 2},
    },
    "seminorm": {
        "full": {"gain_samples": 10, "gain_n": 48, "equiv_samples": 20, "equiv_n": 24},
        "quick": {"gain_samples": 2, "gain_n": 24, "equiv_samples": 2, "equiv_n": 16},
    },
    "energy": {
        "full": {"trials": 20, "n": 32, "T": 0.5, "M": 64, "pieces": 64,
                 "transfer_trials": 10, "transfer_ladder": [16, 24, 32]},
        "quick": {"trials": 2, "n": 16, "T": 0.25, "M": 16, "pieces": 16,
                  "transfer_trials": 2, "transfer_ladder": [16, 24]},
    },
    "holder": {
        "full": {"paths": 20, "n": 24, "T": 0.25, "dt_ladder": [1 / 64, 1 / 128, 1 / 256], "pieces": 16},
        "quick": {"paths": 2, "n": 12, "T": 0.25, "dt_ladder": [1 / 32, 1 / 64], "pieces": 8},
    },
    "counterexample": {
        "full": {"alphas": [0.55, 0.75, 1.0], "T": 0.05, "M_ladder": [128, 256, 512], "n": 64, "pieces": 16},
        "quick": {"alphas": [0.75], "T": 0.05, "M_ladder": [64, 128], "n": 32, "pieces": 8},
    },
}


def params(cfg: ExperimentConfig, suite: str) -> dict:
    p = dict(DEFAULTS[suite][cfg.profile])
    if cfg.nu is not None:
        p["nu"] = cfg.nu
    if cfg.T is not None and "T" in p:
        p["T"] = cfg.T
    p.update(cfg.study(suite))
    return p


def _group(cfg: ExperimentConfig, default: str = "heis") -> str:
    return cfg.group or default


# Suites -------------------------------------------------------------------------------

def suite_group(cfg: ExperimentConfig) -> SuiteResult:
    p = params(cfg, "group")
    names = [cfg.group] if cfg.group else available_groups()
    res = S.run_group_axioms(names, n_samples=p["n_samples"], seed=cfg.seed)
    checks, rows = [], []
    for g, d in res.items():
        for axiom, v in d.items():
            checks.append(Check("group", f"{g}.{axiom}", v, "<=", 1e-9))
            rows.append({"group": g, "axiom": axiom, "residual": v})
        consts = measure_norm_constants(get_group(g), n_samples=p["n_samples"], seed=cfg.seed)
        rows.append({"group": g, "axiom": "norm_constants", "c_inverse": consts["c_inverse"],
                     "c_triangle": consts["c_triangle"]})
    return SuiteResult("group", checks, rows, {"axioms": res})


def suite_fields(cfg: ExperimentConfig) -> SuiteResult:
    p = params(cfg, "fields")
    spec = get_group(_group(cfg))
    checks, rows = [], []
    hr = S.run_hormander(spec, p["hormander_points"], seed=cfg.seed)
    checks.append(Check("fields", "hormander.depth1_rank_mismatches",
                        sum(r != spec.q for r in hr["depth1"]), "==", 0))
    checks.append(Check("fields", f"hormander.depth{spec.s}_rank_mismatches",
                        sum(r != spec.N for r in (hr["depth2"] if spec.s >= 2 else hr["depth1"])), "==", 0))
    ibp = S.run_ibp_refinement(spec, ladder=p["ibp_ladder"])
    for i, s in ibp["slope"].items():
        checks.append(Check("fields", f"ibp.X{i}.slope", s, ">=", 1.9))
        checks.append(Check("fields", f"ibp.X{i}.discrete_max", max(ibp["discrete"][i]), "<=", 1e-12))
        for h, r, d in zip(ibp["h"], ibp["residual"][i], ibp["discrete"][i]):
            rows.append({"study": "ibp", "field": i, "h": h, "residual": r, "discrete": d})
    com = S.run_commutation_refinement(spec, ladder=p["comm_ladder"])
    for pair, r in com["residual"].items():
        tag = f"commutation.X{pair[0]}_XR{pair[1]}"
        if pair in com["slope"]:
            checks.append(Check("fields", tag + ".slope", com["slope"][pair], ">=", 1.9))
        else:
            checks.append(Check("fields", tag + ".max", max(r), "<=", 1e-12))
        for h, v in zip(com["h"], r):
            rows.append({"study": "commutation", "pair": f"{pair[0]}-{pair[1]}", "h": h, "residual": v})
    if spec.N == 3:
        lattices, box = p["moll_lattices"], 2.0
    else:
        lattices, box = [[n[0]] * spec.N for n in p["moll_lattices"]], 2.0
    mc = S.run_mollifier_commutation(spec, lattices, p["eps_ladder"], box=box, T=p["moll_T"],
                                     M=p["moll_M"], seed=cfg.seed)
    rows += [dict(study="mollifier", **{k: (str(v) if k == "n" else v) for k, v in r.items()})
             for r in mc["rows"]]
    by_lat = {}
    for r in mc["rows"]:
        by_lat.setdefault(tuple(r["n"]), {})[r["eps"]] = r["residual"]
    lats = list(by_lat)
    for n in lats:
        checks.append(Check("fields", f"mollifier.eps_variation.n{'x'.join(map(str, n))}",
                            S.variation(list(by_lat[n].values())), "<=", 0.2))
    for eps in p["eps_ladder"]:
        coarse, fine = by_lat[lats[0]][eps], by_lat[lats[-1]][eps]
        checks.append(Check("fields", f"mollifier.shrink.eps{eps}", coarse / fine if fine > 0 else math.inf,
                            ">=", 3.0))
    return SuiteResult("fields", checks, rows, {"hormander": hr, "mollifier": mc})


def suite_seminorm(cfg: ExperimentConfig) -> SuiteResult:
    p = params(cfg, "seminorm")
    name = _group(cfg)
    spec = get_group(name)
    checks, rows = [], []
    if spec.s > 1:
        gain = S.run_gain_exponent(name, n=p["gain_n"], samples=p["gain_samples"], seed=cfg.seed)
        for g in gain:
            rows.append({"study": "gain", "sample": g["sample"], "min_slope": g["min_slope"],
                         "gain_constant": g["gain_constant"]})
        checks.append(Check("seminorm", "gain.min_slope", min(g["min_slope"] for g in gain),
                            ">=", 1.0 / spec.s - 0.05))
    lat = Lattice((2.0,) * spec.N, (p["equiv_n"],) * spec.N)
    worst_lo, worst_hi = math.inf, 0.0
    for k in range(p["equiv_samples"]):
        rng = np.random.default_rng(cfg.seed * 1000 + k)
        u = localized_field(spec, lat, rng, 0.3, 0.9)
        for side in ("left", "right"):
            er = equivalence_ratio(side, spec, 1, u)
            rows.append({"study": "equivalence", "sample": k, "side": side,
                         "seminorm_ratio": er.seminorm_ratio, "gradient_ratio": er.gradient_ratio})
            worst_lo = min(worst_lo, er.seminorm_ratio, er.gradient_ratio)
            worst_hi = max(worst_hi, er.seminorm_ratio, er.gradient_ratio)
    checks.append(Check("seminorm", "equivalence.min_ratio", worst_lo, ">=", 1 / 50))
    checks.append(Check("seminorm", "equivalence.max_ratio", worst_hi, "<=", 50.0))
    return SuiteResult("seminorm", checks, rows, {})


def suite_energy(cfg: ExperimentConfig) -> SuiteResult:
    p = params(cfg, "energy")
    name = _group(cfg)
    nu = p.get("nu", 0.25)
    trials = S.run_energy_trials(name, trials=p["trials"], n=p["n"], T=p["T"], M=p["M"], nu=nu,
                                 pieces=p["pieces"], seed=cfg.seed, workers=cfg.workers)
    rows = [dict(study="energy", **asdict(t)) for t in trials]
    checks = [
        Check("energy", "estimate.max_ratio", max(t.ratio for t in trials), "<=", 1.05),
        Check("energy", "estimate.degenerate_trials", sum(t.degenerate for t in trials), "==", 0),
        Check("energy", "quadratic_form.min_margin", min(t.quad_form_margin for t in trials), ">=", 0.0),
    ]
    tr = S.run_regularity_transfer(name, k=1, ladder=cfg.lattice_sizes or p["transfer_ladder"], nu=nu,
                                   trials=p["transfer_trials"], seed=cfg.seed, workers=cfg.workers)
    rows += [dict(study="transfer", **r) for r in tr["rows"]]
    checks.append(Check("energy", "transfer.k1.variation", S.variation(list(tr["max_ratio"].values())),
                        "<=", 0.2))
    return SuiteResult("energy", checks, rows, {"transfer_max_ratio": tr["max_ratio"]})


def suite_holder(cfg: ExperimentConfig) -> SuiteResult:
    p = params(cfg, "holder")
    name = _group(cfg)
    ladder = cfg.dt_ladder or p["dt_ladder"]
    out = S.run_holder_modulus(name, n=p["n"], T=p["T"], dt_ladder=ladder, nu=p.get("nu", 0.25),
                               paths=p["paths"], pieces=p["pieces"], seed=cfg.seed, workers=cfg.workers)
    checks, rows = [], []
    reps = out["reports"]
    for rep in reps:
        rows.append({"derivative": "".join(map(str, rep.derivative)), "dt": rep.dt, "modulus": rep.modulus,
                     "zero_trace": rep.zero_trace, "exponent": rep.exponent, "r2": rep.r2})
    derivs = sorted({rep.derivative for rep in reps})
    for a in derivs:
        sel = [r for r in reps if r.derivative == a]
        tag = "d" + "".join(map(str, a))
        finite = all(math.isfinite(r.modulus) and math.isfinite(r.zero_trace) for r in sel)
        checks.append(Check("holder", f"{tag}.finite", float(finite), "==", 1.0))
        checks.append(Check("holder", f"{tag}.modulus_variation", S.variation([r.modulus for r in sel]), "<=", 0.5))
        checks.append(Check("holder", f"{tag}.zero_trace_variation",
                            S.variation([r.zero_trace for r in sel]), "<=", 0.5))
        exps = [r.exponent for r in sel if math.isfinite(r.exponent)]
        if exps:
            checks.append(Check("holder", f"{tag}.min_exponent", min(exps), ">=", 0.45))
    return SuiteResult("holder", checks, rows, {"reports": [r.to_dict() for r in reps]})


def suite_counterexample(cfg: ExperimentConfig) -> SuiteResult:
    p = params(cfg, "counterexample")
    T = p["T"]
    paths = {"constant": None,
             "rough": random_coefficient_path(1, 0.25, p["pieces"], cfg.seed, T=T)}
    checks, rows, reports = [], [], []
    for alpha in p["alphas"]:
        for kind, path in paths.items():
            ladder = [S.run_counterexample(alpha, path, T=T, M=M, n=p["n"]) for M in p["M_ladder"]]
            for M, rep in zip(p["M_ladder"], ladder):
                rows.append({"alpha": alpha, "path": kind, "M": M, "exponent": rep.exponent, "r2": rep.r2,
                             "error_l2": rep.extra["error_l2"]})
            fin = ladder[-1]
            reports.append(fin.to_dict())
            tag = f"alpha{alpha}.{kind}"
            checks.append(Check("counterexample", f"{tag}.exponent_error", abs(fin.exponent - alpha), "<=", 0.03))
            checks.append(Check("counterexample", f"{tag}.r2", fin.r2, ">=", 0.99))
            checks.append(Check("counterexample", f"{tag}.error_l2", fin.extra["error_l2"], "<=", 1e-3))
    mods = [S.half_modulus_closed_form(0.55, T, M) for M in p["M_ladder"]]
    rows.append({"alpha": 0.55, "path": "closed_form", "half_modulus": mods[-1]})
    checks.append(Check("counterexample", "alpha0.55.half_modulus_variation", S.variation(mods), "<=", 0.5))
    return SuiteResult("counterexample", checks, rows, {"reports": reports})


SUITE_FUNCS = {
    "group": suite_group,
    "fields": suite_fields,
    "seminorm": suite_seminorm,
    "energy": suite_energy,
    "holder": suite_holder,
    "counterexample": suite_counterexample,
}


def run_suite(name: str, cfg: ExperimentConfig) -> SuiteResult:
    if name not in SUITE_FUNCS:
        raise DomainError(f"unknown suite {name!r}")
    return SUITE_FUNCS[name](cfg)
