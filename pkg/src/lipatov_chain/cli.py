"""Command-line entry point.

    lipatov-chain <subcommand> --config run.toml --out results/ [--threads N] [--format csv|json|both]

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bethe, chain, dis, finite_size, quench, thermo
from .config import ConfigError, RunConfig, load_config
from .errors import LipatovError
from .io import write_csv, write_json

SUBCOMMANDS = ("bethe", "thermo", "central-charge", "quench", "osee", "dis", "pipeline")


class StageError(Exception):
    def __init__(self, stage, exc):
        self.stage = stage
        self.exc = exc
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")


class Output:
    """Collects tables and summaries of one run, then writes them."""

    def __init__(self, out_dir: Path, fmt: str):
        self.out = out_dir
        self.fmt = fmt
        self.files = {}
        self.results = {}

    def table(self, name, header, rows):
        rows = [list(r) for r in rows]
        paths = []
        if self.fmt in ("csv", "both"):
            write_csv(self.out / f"{name}.csv", header, rows)
            paths.append(f"{name}.csv")
        if self.fmt in ("json", "both"):
            write_json(self.out / f"{name}.json", [dict(zip(header, r)) for r in rows])
            paths.append(f"{name}.json")
        self.files[name] = paths

    def summary(self, stage, record):
        self.results[stage] = record
        write_json(self.out / f"{stage}_summary.json", record)
        self.files[f"{stage}_summary"] = [f"{stage}_summary.json"]


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (LipatovError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


# --- stages ---------------------------------------------------------------

def run_bethe(cfg: RunConfig, out: Output, threads=1):
    b = cfg.require("bethe")
    params = bethe.ModelParams(b.L, b.N, b.kappa, b.delta, b.convention)
    if b.qn is None:
        st = bethe.ground_state(b.L, b.N, b.sector, params=params, tol=b.tol)
    else:
        st = bethe.solve_bethe(params, b.qn, tol=b.tol)
    rec = st.to_record()
    rec.update(
        energy=bethe.energy(st),
        tq_residual=bethe.tq_polynomiality_residual(st),
        tolerance_met=st.tolerance,
    )
    out.table("bethe_roots", ["k", "qn", "root"],
              [(k, q, r) for k, (q, r) in enumerate(zip(st.qn, st.roots))])
    out.summary("bethe", rec)
    return rec


def run_thermo(cfg: RunConfig, out: Output, threads=1):
    t = cfg.require("thermo")
    q = t.q if t.q is not None else thermo.find_fermi_point(t.h, t.resolution, t.sector, t.cutoff)
    dens = thermo.solve_density(q, t.resolution, t.sector, t.cutoff)
    eps = thermo.solve_dressed_energy(q, t.h, t.resolution, t.sector, t.cutoff)
    rec = {
        "h": t.h,
        "q": q,
        "sector": t.sector,
        "resolution": t.resolution,
        "cutoff": t.cutoff if t.sector == "exterior" else None,
        "density": dens.density,
        "v_F": thermo.fermi_velocity(q, t.h, t.resolution, t.sector, t.cutoff),
        "eps_inf": thermo.bulk_energy_density(q, t.h, t.resolution, t.sector, t.cutoff),
        "eps_at_q": float(eps(q)[0]),
        "density_residual": dens.residual,
        "dressed_residual": eps.residual,
        "condition": dens.condition,
    }
    g = dens.grid
    out.table("density", ["lambda", "weight", "rho_p"], zip(g.nodes, g.weights, dens.rho_p))
    out.table("dressed_energy", ["lambda", "weight", "eps"], zip(g.nodes, g.weights, eps.eps))
    out.summary("thermo", rec)
    return rec


def run_central_charge(cfg: RunConfig, out: Output, threads=1):
    s = cfg.require("scaling")
    series = finite_size.ground_energy_series(
        s.h, s.L_list, s.sector, s.resolution, s.refine, threads
    )
    est = finite_size.extract_central_charge(
        series, tuple(s.window) if s.window else None, s.nuisance
    )
    out.table(
        "scaling_series",
        ["L", "N", "E", "F", "E_over_L"],
        [(e.L, e.N, e.E, e.F, e.E / e.L) for e in series.entries],
    )
    rec = est.to_record()
    rec.update(h=s.h, sector=s.sector, v_F=series.v_F, eps_inf=series.eps_inf,
               density=series.density, refined=series.refined)
    out.summary("central_charge", rec)
    return rec


def run_quench(cfg: RunConfig, out: Output, threads=1):
    qc = cfg.require("quench")
    cut = qc.cut if qc.cut is not None else qc.L // 2
    res = quench.local_quench(qc.L, qc.periodic, qc.t_max, qc.dt, cuts=[cut], tol=qc.tol)
    tr = res["traces"][cut]
    window = tuple(qc.window) if qc.window else tr.metadata["window"]
    endpoints = 2 if (qc.periodic and cut == qc.L // 2) else 1
    fit = quench.fit_log_growth(tr, window, smooth=qc.smooth, endpoints=endpoints)
    smooth_vals = quench.running_mean(tr.times, tr.values)
    out.table("quench_trace", ["t", "S", "S_running_mean"], zip(tr.times, tr.values, smooth_vals))
    rec = {
        "L": qc.L, "periodic": qc.periodic, "cut": cut, "protocol": "join-halves",
        "endpoints": endpoints, "smooth": qc.smooth, "fit": fit.to_record(),
        "norm_drift": res["norm_drift"], "energy_drift": res["energy_drift"],
        "linear_envelope_excess": quench.linear_envelope_excess(tr, window),
    }
    out.summary("quench", rec)
    return rec


def run_osee(cfg: RunConfig, out: Output, threads=1):
    oc = cfg.require("osee")
    L = oc.L
    site = oc.site if oc.site is not None else L // 2
    cut = oc.cut if oc.cut is not None else L // 2
    H = chain.heisenberg_proxy(L, oc.periodic)
    if oc.operator == "identity":
        import scipy.sparse as sp
        O = sp.identity(2**L, format="csr")
    else:
        O = quench.projector_down(site, L)
    ev = quench.OperatorEvolver(H, O)
    times = np.round(np.arange(0.0, oc.t_max + oc.dt / 2, oc.dt), 12)
    vals = np.array([quench.osee(ev(t), cut) for t in times])
    tr = quench.EntropyTrace(times, vals, cut, {"L": L, "operator": oc.operator})
    window = tuple(oc.window) if oc.window else (times[1], times[-1])
    rec = {"L": L, "operator": oc.operator, "site": site, "cut": cut}
    try:
        rec["fit"] = quench.fit_log_growth(tr, window).to_record()
    except LipatovError as exc:
        rec["fit"] = None
        rec["fit_note"] = str(exc)
    rec["monotone"] = bool(np.all(np.diff(vals) >= -1e-12))
    out.table("osee_trace", ["t", "osee"], zip(times, vals))
    out.summary("osee", rec)
    return rec


def _dis_tables(out, d, c):
    k = dis.DISKinematics(d.m, d.x, d.Q)
    pred = dis.predict(k, c)
    delta, note = dis.structure_function_exponent(c)
    xs = np.geomspace(d.x, 1.0, d.curve_points)
    out.table("entropy_vs_x", ["x", "S"], [(x, dis.entropy_at_x(c, x)) for x in xs])
    ts = np.geomspace(1.0 / d.m, 2.0 * pred.t_c, d.curve_points)
    out.table("entropy_vs_time", ["t_GeV_inv", "t_fm", "S"],
              [(t, dis.to_fm(t), dis.entropy_vs_time(c, d.m, t, d.x)) for t in ts])
    rec = pred.to_record()
    rec.update(c=c, m=d.m, x=d.x, Q=d.Q, ell_fm=dis.to_fm(pred.ell),
               experimental_delta=dis.EXPERIMENTAL_DELTA, comparison=note, delta=delta)
    return rec


def run_dis(cfg: RunConfig, out: Output, threads=1):
    d = cfg.require("dis")
    c = d.c if d.c is not None else 1.0
    rec = _dis_tables(out, d, c)
    out.summary("dis", rec)
    return rec


def run_pipeline(cfg: RunConfig, out: Output, threads=1):
    cc = _stage("central-charge", run_central_charge, cfg, out, threads)
    d = cfg.require("dis")
    rec = _stage("dis", _dis_tables, out, d, cc["c"])
    rec["c_source"] = "central_charge_summary.json"
    rec["delta_stderr"] = cc["stderr"] / 3
    out.summary("dis", rec)
    return {"central_charge": cc, "dis": rec}


RUNNERS = {
    "bethe": run_bethe,
    "thermo": run_thermo,
    "central-charge": run_central_charge,
    "quench": run_quench,
    "osee": run_osee,
    "dis": run_dis,
    "pipeline": run_pipeline,
}


def run(subcommand, config_path, out_dir, threads=1, fmt="both"):
    """Run one subcommand; returns ``(exit_code, manifest_or_message)``."""
    if subcommand not in RUNNERS:
        return 2, f"unknown subcommand {subcommand!r}"
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        return 2, f"config error at {exc}"
    out = Output(Path(out_dir), fmt)
    t0 = time.perf_counter()
    try:
        _stage(subcommand, RUNNERS[subcommand], cfg, out, threads)
    except ConfigError as exc:
        return 2, f"config error at {exc}"
    except StageError as exc:
        if isinstance(exc.exc, ConfigError):
            return 2, f"config error at {exc.exc}"
        return 3, str(exc)
    manifest = {
        "artifact_version": __version__,
        "subcommand": subcommand,
        "config": cfg.echo(),
        "format": fmt,
        "outputs": out.files,
        "results": out.results,
    }
    write_json(out.out / "manifest.json", manifest)
    # wall-clock numbers vary run to run, so they stay out of the manifest
    write_json(out.out / "timings.json", {"wall_seconds": time.perf_counter() - t0})
    return 0, manifest


def build_parser():
    p = argparse.ArgumentParser(prog="lipatov-chain", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("config error at --threads: must be at least 1", file=sys.stderr)
        return 2
    code, payload = run(args.subcommand, args.config, args.out, args.threads, args.format)
    if code:
        print(payload, file=sys.stderr)
    else:
        print(f"wrote {Path(args.out) / 'manifest.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
