"""Finite-size ground-state energies and central-charge extraction.

The sector functional ``F(L) = σ(E - hN)`` of the ground state behaves as::

    F(L) = L·f_inf - c·π·v_F/(6L) + a/L² + ...

with ``f_inf`` and ``v_F`` from :mod:`lipatov_chain.thermo`. At fixed ``L``
the particle number is an integer, so ``F`` also carries a term
``∝ (N - L·D)²/L`` that oscillates with ``L``. By default each entry uses the
vertex of the parabola through ``F(N0 - 2), F(N0), F(N0 + 2)``, where ``N0``
is ``L·D`` rounded to an even integer. This removes that term exactly at
quadratic order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bethe, thermo
from .errors import DomainError, SolverError


@dataclass(frozen=True)
class ScalingEntry:
    L: int
    N: int
    E: float  # grand-canonical E - hN of the N-root ground state
    F: float  # value entering the fit: σ(E - hN), vertex-refined if enabled
    residual: float


@dataclass(frozen=True)
class ScalingSeries:
    h: float
    sector: str
    entries: tuple
    v_F: float
    eps_inf: float
    density: float = float("nan")
    refined: bool = True

    def __post_init__(self):
        Ls = [e.L for e in self.entries]
        if any(b <= a for a, b in zip(Ls, Ls[1:])):
            raise DomainError("series L values must be strictly increasing")

    @property
    def L(self):
        return np.array([e.L for e in self.entries], dtype=float)

    @property
    def F(self):
        return np.array([e.F for e in self.entries])


@dataclass(frozen=True)
class CentralChargeEstimate:
    c: float
    stderr: float
    fit_window: tuple
    residuals: np.ndarray = field(repr=False)
    nuisance: bool = True

    def to_record(self):
        return {
            "c": self.c,
            "stderr": self.stderr,
            "window": list(self.fit_window),
            "nuisance": self.nuisance,
            "residuals": [float(r) for r in self.residuals],
        }


def _ground_F(L, N, h, sector, tol):
    st = bethe.ground_state(L, N, sector, tol=tol)
    grand = bethe.energy(st) - h * N
    return grand, bethe.sector_sign(sector) * grand, st.residual_norm


def filling(L, density):
    """``L·D`` rounded to the nearest even integer."""
    return int(2 * round(L * density / 2))


def series_entry(L, h, density, sector="interior", refine=True, tol=bethe.DEFAULT_TOL):
    if L % 2:
        raise DomainError(f"L={L} must be even")
    N0 = filling(L, density)
    try:
        E0, F0, r0 = _ground_F(L, N0, h, sector, tol)
        if not refine or N0 < 2:
            return ScalingEntry(L, N0, E0, F0, r0)
        _, Fm, rm = _ground_F(L, N0 - 2, h, sector, tol)
        _, Fp, rp = _ground_F(L, N0 + 2, h, sector, tol)
    except SolverError as exc:
        raise SolverError(f"L={L}: {exc}", residual=exc.residual) from exc
    curv = Fp - 2 * F0 + Fm
    if curv <= 0:
        raise SolverError(f"L={L}: F(N) not convex around N={N0}; cannot refine")
    slope = (Fp - Fm) / 4  # dF/dN at N0, step 2
    vertex = F0 - 2 * slope**2 / curv
    return ScalingEntry(L, N0, E0, vertex, max(r0, rm, rp))


def ground_energy_series(
    h,
    L_list,
    sector="interior",
    resolution=64,
    refine=True,
    threads=1,
    thermo_state=None,
) -> ScalingSeries:
    L_list = sorted(int(L) for L in L_list)
    if h >= 2 and sector == "interior":
        entries = tuple(ScalingEntry(L, 0, 0.0, 0.0, 0.0) for L in L_list)
        return ScalingSeries(h, sector, entries, float("nan"), 0.0, 0.0, False)
    th = thermo_state or thermo.thermodynamics(h, resolution, sector)

    def work(L):
        return series_entry(L, h, th.density, sector, refine)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = tuple(pool.map(work, L_list))
    else:
        entries = tuple(work(L) for L in L_list)
    return ScalingSeries(h, sector, entries, th.v_F, th.eps_inf, th.density, refine)


def extract_central_charge(
    series: ScalingSeries,
    window=None,
    nuisance=True,
    free_bulk=False,
    max_condition=1e12,
) -> CentralChargeEstimate:
    """Least-squares fit of ``F - f_inf·L = -c·π·v_F/(6L) [+ a/L²]``.

    ``free_bulk`` also fits the linear coefficient instead of fixing it.
    """
    L, F = series.L, series.F
    if window is not None:
        lo, hi = window
        sel = (L >= lo) & (L <= hi)
        L, F = L[sel], F[sel]
    if L.size < 4:
        raise DomainError(f"need at least 4 points in the fit window, got {L.size}")
    if not np.isfinite(series.v_F) or series.v_F <= 0:
        raise DomainError("series lacks a positive Fermi velocity")
    cols = [-np.pi * series.v_F / (6 * L)]
    y = F.copy()
    if free_bulk:
        cols.append(L)
    else:
        y = y - series.eps_inf * L
    if nuisance:
        cols.append(1.0 / L**2)
    X = np.column_stack(cols)
    scale = np.linalg.norm(X, axis=0)
    Xs = X / scale
    if np.linalg.cond(Xs) > max_condition:
        raise DomainError("fit matrix ill-conditioned; widen the L range")
    coef, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    resid = y - Xs @ coef
    dof = L.size - X.shape[1]
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(Xs.T @ Xs)
        stderr = float(np.sqrt(max(cov[0, 0], 0.0)) / scale[0])
    else:
        stderr = 0.0
    return CentralChargeEstimate(
        float(coef[0] / scale[0]), stderr, (int(L.min()), int(L.max())), resid, nuisance
    )


def synthetic_series(c, v_F, eps_inf, L_list, a=0.0, h=0.5):
    """Series generated exactly from the scaling form (for testing the fit)."""
    entries = tuple(
        ScalingEntry(int(L), 0, float("nan"), eps_inf * L - c * np.pi * v_F / (6 * L) + a / L**2, 0.0)
        for L in sorted(L_list)
    )
    return ScalingSeries(h, "interior", entries, v_F, eps_inf)
