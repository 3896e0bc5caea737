"""Linear integral equations of the thermodynamic limit.

Both equations share the operator ``(2π - K̂)`` restricted to the occupied
rapidity set::

    2π ρ_p(λ) = K(λ) + ∫_occ K(λ, μ) ρ_p(μ) dμ
    e(λ)      = σ ε0(λ) + (1/2π) ∫_occ K(λ, μ) e(μ) dμ,    ε0 = 2/(1+λ²) - h

Two occupied sets are supported:

``exterior``
    ``|λ| ≥ q`` with ``σ = +1``. The integrals are truncated at ``|λ| =
    cutoff``. The solution depends on the cutoff (see ``scripts/``).
``interior``
    ``|λ| ≤ q`` with ``σ = -1``. This is the orientation whose ground state
    is a proper Fermi sea, and it is used for the central charge.

In both sectors ``e < 0`` on occupied rapidities and ``e(±q) = 0`` at the
Fermi point.

Discretisation: composite Gauss-Legendre panels on the positive half of
the occupied set, mirrored by evenness. Panels wider than the kernel use
product integration near the target: a graded Gauss rule around ``λ_i``
applied to the panel's Lagrange basis. This keeps the Nyström matrix
spectrally accurate on the wide geometric panels of the exterior tails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .bethe import sector_sign
from .errors import DegenerateError, DomainError, SolverError

Q_MIN = 1e-3
DEFAULT_CUTOFF = 1e4
MIN_RESOLUTION = 8
_SUB_ORDER = 20
_COND_LIMIT = 1e12


def kernel(lam, mu=0.0):
    return 2.0 / (1.0 + (np.asarray(lam) - np.asarray(mu)) ** 2)


def kernel_dlam(lam, mu=0.0):
    d = np.asarray(lam) - np.asarray(mu)
    return -4.0 * d / (1.0 + d**2) ** 2


def bare_energy(lam, h):
    return 2.0 / (1.0 + np.asarray(lam) ** 2) - h


def bare_energy_dlam(lam):
    lam = np.asarray(lam)
    return -4.0 * lam / (1.0 + lam**2) ** 2


@lru_cache(maxsize=None)
def _gauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    # barycentric weights of the Legendre nodes
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    bw /= np.max(np.abs(bw))
    return x, w, bw


def _lagrange(t, order):
    """Values of the panel's Lagrange basis at reference points ``t``."""
    x, _, bw = _gauss(order)
    d = t[:, None] - x[None, :]
    hit = np.abs(d) < 1e-14
    d[hit] = 1.0
    tmp = bw[None, :] / d
    out = tmp / tmp.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    out[rows] = hit[rows].astype(float)
    return out


@dataclass(frozen=True)
class Grid:
    """Composite Gauss grid on the positive half of the occupied set.

    ``nodes``/``weights`` cover the full (mirrored) domain; the solvers work
    with ``half_nodes`` because every function involved is even.
    """

    sector: str
    q: float
    order: int
    breaks: np.ndarray
    cutoff: float | None = None
    half_nodes: np.ndarray = field(init=False, repr=False)
    half_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x, w, _ = _gauss(self.order)
        a, b = self.breaks[:-1], self.breaks[1:]
        c, hw = (a + b) / 2, (b - a) / 2
        object.__setattr__(self, "half_nodes", (c[:, None] + hw[:, None] * x).ravel())
        object.__setattr__(self, "half_weights", (hw[:, None] * w).ravel())

    @property
    def nodes(self):
        return np.concatenate([-self.half_nodes[::-1], self.half_nodes])

    @property
    def weights(self):
        return np.concatenate([self.half_weights[::-1], self.half_weights])

    @property
    def panels(self):
        return list(zip(self.breaks[:-1], self.breaks[1:]))

    def integrate_even(self, half_values) -> float:
        """Integral over the whole occupied set of an even function."""
        return 2.0 * float(np.sum(self.half_weights * half_values))


def make_grid(q, resolution, sector="interior", cutoff=DEFAULT_CUTOFF, ratio=2.0) -> Grid:
    """Grid for Fermi point ``q``; ``resolution`` is the Gauss order per panel."""
    sector_sign(sector)
    if resolution < MIN_RESOLUTION:
        raise DomainError(f"resolution must be at least {MIN_RESOLUTION}")
    if sector == "exterior":
        if not q > Q_MIN:
            raise DomainError(
                f"q={q} is at or below q_min={Q_MIN}; the full-line equation has "
                "no normalizable solution"
            )
        if not cutoff > q:
            raise DomainError("cutoff must exceed q")
        # geometric grading towards both ends: the truncation at the cutoff
        # creates unit-scale structure there just as the Fermi edge does
        half = (cutoff - q) / 2
        off = [0.0]
        while off[-1] < half:
            off.append(min(half, off[-1] + max(1.0, (ratio - 1.0) * off[-1])))
        off = np.array(off)
        br = np.concatenate([q + off, (cutoff - off[:-1])[::-1]])
        return Grid(sector, float(q), int(resolution), br, float(cutoff))
    if not q > 0:
        raise DomainError("interior Fermi point must be positive")
    npan = max(1, int(np.ceil(q / 4.0)))
    return Grid(sector, float(q), int(resolution), np.linspace(0.0, q, npan + 1))


def exterior_grid(q, resolution=64, cutoff=DEFAULT_CUTOFF) -> Grid:
    return make_grid(q, resolution, "exterior", cutoff)


def _graded_rule(x, a, b):
    """Composite Gauss rule on [a, b] graded geometrically around ``x``."""
    span = (b - a) + abs(x) + 1.0
    off = [0.0]
    s = 0.25
    while s < span:
        off.append(s)
        s *= 2
    off = np.array(off)
    br = np.unique(np.clip(np.concatenate([x - off, x + off, [a, b]]), a, b))
    lo, hi = br[:-1], br[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    gx, gw, _ = _gauss(_SUB_ORDER)
    pts = ((hi - lo)[:, None] * (gx + 1) / 2 + lo[:, None]).ravel()
    wts = ((hi - lo)[:, None] * gw / 2).ravel()
    return pts, wts


def integration_rows(grid: Grid, xs, kern=kernel) -> np.ndarray:
    """Matrix R with ``R @ f_half ≈ ∫_occ kern(x, μ) f(μ) dμ`` for even ``f``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    order = grid.order
    R = np.zeros((xs.size, grid.half_nodes.size))
    for m, (a, b) in enumerate(grid.panels):
        sl = slice(m * order, (m + 1) * order)
        c, hw = (a + b) / 2, (b - a) / 2
        for sign in (1.0, -1.0):
            pa, pb = (a, b) if sign > 0 else (-b, -a)
            src = sign * grid.half_nodes[sl]
            dist = np.maximum(0.0, np.maximum(pa - xs, xs - pb))
            near = dist < max(2.0 * hw, 2.0)
            far = ~near
            if far.any():
                R[far, sl] += kern(xs[far][:, None], src[None, :]) * grid.half_weights[sl]
            for i in np.flatnonzero(near):
                pts, wts = _graded_rule(xs[i], pa, pb)
                basis = _lagrange((sign * pts - c) / hw, order)
                R[i, sl] += (wts * kern(xs[i], pts)) @ basis
    return R


@dataclass
class _System:
    grid: Grid
    lu: tuple
    rcond: float

    @classmethod
    def build(cls, grid: Grid):
        A = integration_rows(grid, grid.half_nodes)
        M = 2 * np.pi * np.eye(A.shape[0]) - A
        lu = sla.lu_factor(M, check_finite=True)
        anorm = np.max(np.sum(np.abs(M), axis=0))
        rcond, info = sla.lapack.dgecon(lu[0], anorm, norm="1")
        if info != 0 or rcond * _COND_LIMIT < 1.0:
            raise SolverError(
                f"Nyström system ill-conditioned (condition estimate {1 / max(rcond, 1e-300):.3e})"
            )
        return cls(grid, lu, float(rcond))

    def solve(self, rhs):
        return sla.lu_solve(self.lu, rhs)


_SYSTEMS: dict = {}


def _system(grid: Grid) -> _System:
    key = (grid.sector, grid.q, grid.order, grid.cutoff)
    sys_ = _SYSTEMS.get(key)
    if sys_ is None:
        if len(_SYSTEMS) > 32:
            _SYSTEMS.clear()
        sys_ = _SYSTEMS[key] = _System.build(grid)
    return sys_


@dataclass(frozen=True)
class DensitySolution:
    grid: Grid
    rho_half: np.ndarray
    residual: float
    condition: float
    h: float | None = None

    @property
    def rho_p(self):
        return np.concatenate([self.rho_half[::-1], self.rho_half])

    @property
    def rho_h(self):
        return np.zeros_like(self.rho_p)

    @property
    def density(self) -> float:
        """Particle number per site, ``∫_occ ρ_p``."""
        return self.grid.integrate_even(self.rho_half)


@dataclass(frozen=True)
class DressedEnergySolution:
    grid: Grid
    eps_half: np.ndarray
    h: float
    q: float
    residual: float
    condition: float

    @property
    def sector(self):
        return self.grid.sector

    @property
    def eps(self):
        return np.concatenate([self.eps_half[::-1], self.eps_half])

    def driving(self, lam):
        return sector_sign(self.sector) * bare_energy(lam, self.h)

    def __call__(self, lam):
        """Nyström interpolant of the dressed energy."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        R = integration_rows(self.grid, lam)
        return self.driving(lam) + R @ self.eps_half / (2 * np.pi)

    def derivative(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        R = integration_rows(self.grid, lam, kernel_dlam)
        sign = sector_sign(self.sector)
        return sign * bare_energy_dlam(lam) + R @ self.eps_half / (2 * np.pi)


def _residual(grid, sol, rhs):
    A = integration_rows(grid, grid.half_nodes)
    return float(np.max(np.abs(2 * np.pi * sol - A @ sol - rhs)))


def solve_density(q, resolution=64, sector="interior", cutoff=DEFAULT_CUTOFF, h=None):
    grid = make_grid(q, resolution, sector, cutoff)
    system = _system(grid)
    rhs = kernel(grid.half_nodes)
    rho = system.solve(rhs)
    return DensitySolution(grid, rho, _residual(grid, rho, rhs), 1 / system.rcond, h)


def solve_dressed_energy(q, h, resolution=64, sector="interior", cutoff=DEFAULT_CUTOFF):
    grid = make_grid(q, resolution, sector, cutoff)
    system = _system(grid)
    rhs = 2 * np.pi * sector_sign(sector) * bare_energy(grid.half_nodes, h)
    eps = system.solve(rhs)
    return DressedEnergySolution(
        grid, eps, float(h), float(q), _residual(grid, eps, rhs), 1 / system.rcond
    )


def vacancy_density(dens: DensitySolution, lam):
    """ρ_t(λ) for any real λ, on or off the occupied set."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    R = integration_rows(dens.grid, lam)
    out = (kernel(lam) + R @ dens.rho_half) / (2 * np.pi)
    return out if out.size > 1 else float(out[0])


def _fermi_residual(q, h, resolution, sector, cutoff):
    return float(solve_dressed_energy(q, h, resolution, sector, cutoff)(q)[0])


def find_fermi_point(
    h,
    resolution=64,
    sector="interior",
    cutoff=DEFAULT_CUTOFF,
    q_max=None,
    tol=1e-10,
):
    """Fermi point ``q`` with ``e(±q) = 0``, by bracketing then Brent's method."""
    if not 0 < h < 2:
        raise DomainError(f"h={h} outside (0, 2): no Fermi point")
    q_lo = Q_MIN * 1.01 if sector == "exterior" else 1e-3
    if q_max is None:
        q_max = min(cutoff / 4, 1e4) if sector == "exterior" else 200.0
    scan = [q_lo]
    f_prev = _fermi_residual(q_lo, h, resolution, sector, cutoff)
    bracket = None
    q = q_lo
    while q < q_max:
        q_new = min(q * 1.5 if q >= 1 else q + max(q, 0.05), q_max)
        f_new = _fermi_residual(q_new, h, resolution, sector, cutoff)
        scan.append(q_new)
        if np.sign(f_new) != np.sign(f_prev):
            bracket = (q, q_new)
            break
        q, f_prev = q_new, f_new
    if bracket is None:
        raise SolverError(
            f"no sign change of e(q) for h={h} in the {sector} sector over "
            f"q in [{scan[0]:.3g}, {scan[-1]:.3g}]"
        )
    qf = brentq(
        _fermi_residual, *bracket, args=(h, resolution, sector, cutoff), xtol=1e-14, rtol=1e-15
    )
    val = _fermi_residual(qf, h, resolution, sector, cutoff)
    if abs(val) > tol:
        raise SolverError(f"|e(q)| = {abs(val):.3e} exceeds {tol:g} after root finding")
    return float(qf)


def fermi_velocity(q, h, resolution=64, sector="interior", cutoff=DEFAULT_CUTOFF):
    """``|e'(q)| / (2π ρ_t(q))`` with ``e'`` from the differentiated interpolant."""
    dens = solve_density(q, resolution, sector, cutoff)
    rho_t = vacancy_density(dens, q)
    if rho_t < 1e-12:
        raise DegenerateError(f"ρ_t(q) = {rho_t:.3e} too small for a Fermi velocity")
    eps = solve_dressed_energy(q, h, resolution, sector, cutoff)
    return float(abs(eps.derivative(q)[0]) / (2 * np.pi * rho_t))


def bulk_energy_density(
    q, h, resolution=64, sector="interior", cutoff=DEFAULT_CUTOFF, route="direct"
):
    """Energy per site ``∫_occ σ ε0 ρ_p`` of the sector functional ``σ(E - hN)``.

    ``route="dual"`` evaluates the same number as ``(1/2π)∫_occ e K``.
    """
    if route == "direct":
        dens = solve_density(q, resolution, sector, cutoff)
        g = dens.grid
        return sector_sign(sector) * g.integrate_even(
            bare_energy(g.half_nodes, h) * dens.rho_half
        )
    if route == "dual":
        eps = solve_dressed_energy(q, h, resolution, sector, cutoff)
        g = eps.grid
        return g.integrate_even(eps.eps_half * kernel(g.half_nodes)) / (2 * np.pi)
    raise DomainError(f"unknown route {route!r}")


@dataclass(frozen=True)
class Thermodynamics:
    h: float
    sector: str
    resolution: int
    q: float
    density: float
    v_F: float
    eps_inf: float

    def to_record(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def thermodynamics(h, resolution=64, sector="interior", cutoff=DEFAULT_CUTOFF) -> Thermodynamics:
    q = find_fermi_point(h, resolution, sector, cutoff)
    dens = solve_density(q, resolution, sector, cutoff)
    return Thermodynamics(
        h=float(h),
        sector=sector,
        resolution=int(resolution),
        q=q,
        density=dens.density,
        v_F=fermi_velocity(q, h, resolution, sector, cutoff),
        eps_inf=bulk_energy_density(q, h, resolution, sector, cutoff),
    )
