"""Time the compiled and pure-Python lattice kernels on the same inputs.

Usage: python benchmarks/bench_kernels.py [--n 32] [--repeat 5] [--json out.json]
"""

import argparse
import json
import timeit

import numpy as np

from carnot_heat import _kernels
from carnot_heat.group_core import get_group, inverse
from carnot_heat.lattice import Lattice, _law_tables


def cases(n: int, rng: np.random.Generator) -> dict:
    spec = get_group("heis")
    lat = Lattice((2.0,) * 3, (n, n, 2 * n))
    v = np.ascontiguousarray(rng.standard_normal(lat.shape3))
    coef = np.ascontiguousarray(rng.standard_normal((3,) + lat.shape3))
    pts = np.ascontiguousarray(rng.uniform(-2, 2, size=(v.size, 3)))
    nodes = rng.uniform(-0.3, 0.3, size=(27, 3))
    yinv = np.ascontiguousarray(inverse(spec, nodes))
    w = np.full(27, 1 / 27)
    exps, coeffs, offsets = _law_tables(spec)
    return {
        "interp_periodic": lambda b: b.interp_periodic(v, lat.lo3, lat.h3, pts),
        "apply_field_o2": lambda b: b.apply_field(v, coef, (True, True, True), lat.h3, 2),
        "apply_field_o4": lambda b: b.apply_field(v, coef, (True, True, True), lat.h3, 4),
        "convolve_group": lambda b: b.convolve_group(v, lat.lo3, lat.h3, lat.flat_points, yinv, w,
                                                     exps, coeffs, offsets),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32, help="points per horizontal axis")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", default=None, help="also write results here")
    args = ap.parse_args(argv)
    backends = _kernels.backends()
    results = []
    for name, fn in cases(args.n, np.random.default_rng(args.seed)).items():
        row = {"kernel": name}
        outs = {}
        for bname, mod in backends.items():
            outs[bname] = fn(mod)
            row[bname] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        if len(outs) == 2:
            row["max_abs_diff"] = float(np.max(np.abs(outs["cython"] - outs["python"])))
            row["speedup"] = row["python"] / row["cython"]
        results.append(row)
    print(f"active backend: {_kernels.BACKEND}; lattice {args.n}x{args.n}x{2 * args.n}")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>11}")
    for r in results:
        line = f"{r['kernel']:<18}" + "".join(f"{r[b] * 1e3:>10.2f}ms" for b in backends)
        if "speedup" in r:
            line += f"{r['speedup']:>9.1f}x{r['max_abs_diff']:>11.1e}"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
