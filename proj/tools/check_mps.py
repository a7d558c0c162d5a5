#!/usr/bin/env python3
"""Cross-validates exported MPS instances against an external MILP solver.

Generates a seeded data set, solves one day with the evagg CLI while dumping
the per-vehicle MILPs as MPS, re-solves every dumped instance with
scipy.optimize.milp (HiGHS) and compares the summed objectives with the
objective reported in solve_summary.json.

Usage: check_mps.py --evagg <path-to-evagg-binary> [--workdir DIR]
"""

import argparse
import json
import math
import pathlib
import subprocess
import sys
import tempfile

import numpy as np
from scipy.optimize import LinearConstraint, Bounds, milp

INF = float("inf")


def parse_mps(path):
    rows = []  # (name, sense)
    row_index = {}
    objective_row = None
    cols = {}
    col_order = []
    integer_cols = set()
    rhs = {}
    lo = {}
    hi = {}

    section = None
    in_integer = False
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("*"):
                continue
            tok = line.split()
            if not line.startswith(" "):
                section = tok[0]
                if section == "ENDATA":
                    break
                continue
            if section == "ROWS":
                kind, name = tok
                if kind == "N":
                    if objective_row is None:
                        objective_row = name
                else:
                    row_index[name] = len(rows)
                    rows.append((name, kind))
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_integer = tok[-1] == "'INTORG'"
                    continue
                col = tok[0]
                if col not in cols:
                    cols[col] = {}
                    col_order.append(col)
                    if in_integer:
                        integer_cols.add(col)
                        lo[col], hi[col] = 0.0, 1.0
                for q in range(1, len(tok) - 1, 2):
                    cols[col][tok[q]] = cols[col].get(tok[q], 0.0) + float(tok[q + 1])
            elif section == "RHS":
                for q in range(1, len(tok) - 1, 2):
                    rhs[tok[q]] = float(tok[q + 1])
            elif section == "BOUNDS":
                kind, _, col = tok[0], tok[1], tok[2]
                value = float(tok[3]) if len(tok) > 3 else 0.0
                if kind == "UP":
                    hi[col] = value
                elif kind == "LO":
                    lo[col] = value
                elif kind == "FX":
                    lo[col] = hi[col] = value
                elif kind == "FR":
                    lo[col], hi[col] = -INF, INF
                elif kind == "MI":
                    lo[col] = -INF
                elif kind == "PL":
                    hi[col] = INF
                elif kind == "BV":
                    lo[col], hi[col] = 0.0, 1.0
                    integer_cols.add(col)

    n = len(col_order)
    c = np.zeros(n)
    a = np.zeros((len(rows), n))
    for j, col in enumerate(col_order):
        for row, coeff in cols[col].items():
            if row == objective_row:
                c[j] = coeff
            else:
                a[row_index[row], j] = coeff
    lb = np.array([rhs.get(name, 0.0) if kind in ("G", "E") else -INF
                   for name, kind in rows])
    ub = np.array([rhs.get(name, 0.0) if kind in ("L", "E") else INF
                   for name, kind in rows])
    vlo = np.array([lo.get(col, 0.0) for col in col_order])
    vhi = np.array([hi.get(col, INF) for col in col_order])
    integrality = np.array([1 if col in integer_cols else 0 for col in col_order])
    return c, a, lb, ub, vlo, vhi, integrality


def solve_mps(path):
    c, a, lb, ub, vlo, vhi, integrality = parse_mps(path)
    res = milp(c=c, constraints=LinearConstraint(a, lb, ub),
               bounds=Bounds(vlo, vhi), integrality=integrality,
               options={"mip_rel_gap": 0.0})
    if not res.success:
        raise RuntimeError(f"{path}: external solver failed: {res.message}")
    return res.fun


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--evagg", required=True, help="path to the evagg binary")
    ap.add_argument("--workdir", default=None)
    ap.add_argument("--tol", type=float, default=1e-5)
    args = ap.parse_args()

    workdir = pathlib.Path(args.workdir or tempfile.mkdtemp(prefix="evagg_mps_"))
    workdir.mkdir(parents=True, exist_ok=True)
    cfg = workdir / "gen.cfg"
    cfg.write_text("seed = 21\nn_vehicles = 5\nn_days = 30\nn_periods = 96\n")

    def run(*argv):
        subprocess.run([args.evagg, *argv], check=True, cwd=workdir,
                       stdout=subprocess.PIPE)

    run("generate", "--config", str(cfg), "--out", str(workdir))
    run("solve", "--config", str(cfg), "--out", str(workdir),
        "--method", "robust", "--dump-mps", str(workdir / "mps"))

    summary = json.loads((workdir / "solve_summary.json").read_text())
    expected = summary["robust"]["objective_eur"]

    mps_files = sorted((workdir / "mps" / "robust").glob("vehicle_*.mps"))
    if not mps_files:
        raise RuntimeError("no MPS files were dumped")
    total = sum(solve_mps(p) for p in mps_files)

    gap = abs(total - expected)
    print(f"external solver total: {total:.9f}  evagg: {expected:.9f}  gap: {gap:.2e}")
    if not (gap <= args.tol * (1.0 + abs(expected))):
        print("MISMATCH against the external solver", file=sys.stderr)
        return 1
    print(f"{len(mps_files)} instance(s) accepted and matched by the external solver")
    return 0


if __name__ == "__main__":
    sys.exit(main())
