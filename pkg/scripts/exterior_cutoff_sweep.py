"""Exterior (|λ| > q) sea: particle density and Fermi-point search as the cutoff grows.

The density grows without bound, and at moderate field no Fermi point
survives. This is why the interior sea is the default sector.

    python3 scripts/exterior_cutoff_sweep.py --out results/exterior
"""

import argparse
from pathlib import Path

from lipatov_chain import thermo
from lipatov_chain.errors import SolverError
from lipatov_chain.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--h", type=float, default=0.5)
    ap.add_argument("--cutoffs", type=float, nargs="+", default=[1e1, 1e2, 1e3, 1e4, 1e5, 1e6])
    ap.add_argument("--out", type=Path, default=Path("results/exterior"))
    args = ap.parse_args()

    rows = []
    for cut in args.cutoffs:
        dens = thermo.solve_density(args.q, 48, "exterior", cutoff=cut)
        try:
            qf = thermo.find_fermi_point(args.h, 32, "exterior", cutoff=cut)
        except SolverError:
            qf = float("nan")
        rows.append((cut, dens.density, dens.condition, qf))
        print(f"cutoff {cut:8.0e}  density {dens.density:12.4f}  cond {dens.condition:.1e}  q_F {qf:.4f}")
    write_csv(args.out / "cutoff_sweep.csv", ["cutoff", "density", "condition", "fermi_point"], rows)


if __name__ == "__main__":
    main()
