"""Operator entanglement of the evolved projector (1/2 - S^z) on open proxy chains.

    python3 scripts/osee_growth.py --L 8 10 12 --out results/osee
"""

import argparse
from pathlib import Path

import numpy as np

from lipatov_chain import chain, quench as qu
from lipatov_chain.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, nargs="+", default=[8, 10, 12])
    ap.add_argument("--t-max", type=float, default=6.0)
    ap.add_argument("--dt", type=float, default=0.5)
    ap.add_argument("--out", type=Path, default=Path("results/osee"))
    args = ap.parse_args()

    times = np.arange(0.0, args.t_max + args.dt / 2, args.dt)
    rows = []
    for L in args.L:
        ev = qu.OperatorEvolver(chain.heisenberg_proxy(L, False), qu.projector_down(L // 2, L))
        vals = [qu.osee(ev(t), L // 2) for t in times]
        fit = qu.fit_log_growth(qu.EntropyTrace(times, np.array(vals), L // 2), (1.0, args.t_max))
        rows += [(L, t, v) for t, v in zip(times, vals)]
        print(f"L={L:3d} prefactor of ln t: {fit.slope:.3f}  (window [1, {args.t_max:g}])")
    write_csv(args.out / "osee.csv", ["L", "t", "osee"], rows)


if __name__ == "__main__":
    main()
