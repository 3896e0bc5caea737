"""Bethe equations of the s = -1 / lattice NLS chain.

Conventions
-----------
With ``a = λΔ/2`` the Bethe equations read::

    ((a - i)/(a + i))^L = σ_L · Π_{j≠k} (λ_k - λ_j + iκ)/(λ_k - λ_j - iκ)

with ``σ_L = 1`` for the ``"qcd"`` form and ``σ_L = (-1)^L`` for the ``"nls"``
form. Taking logarithms with the principal branch of ``atan`` gives the
counting function::

    Z(λ) = 2L·atan(λΔ/2) + Σ_j 2·atan((λ - λ_j)/κ)
    Z(λ_k) = 2π I_k

The quantum numbers ``I_k`` are centred. They lie in ``Z + (L+N-1)/2`` for
``"qcd"`` and in ``Z + (N-1)/2`` for ``"nls"``, and in both cases satisfy
``|I_k| < (L+N-1)/2``. For ``N = 1`` with the QCD preset the branch label
``n = I + L/2`` runs over ``1..L-1`` and ``λ = -cot(πn/L)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateError, DomainError, SolverError

CONVENTIONS = ("qcd", "nls")
DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Chain length, root count and couplings.

    The spin is not a free field: ``s = -2/(κΔ)``. The QCD preset is
    ``κ = 1, Δ = 2`` (``s = -1``).
    """

    L: int
    N: int = 0
    kappa: float = 1.0
    delta: float = 2.0
    convention: str = "qcd"

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise DomainError(f"L must be a positive integer, got {self.L}")
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"N must be a nonnegative integer, got {self.N}")
        if not (self.kappa > 0 and self.delta > 0):
            raise DomainError("kappa and delta must be positive")
        if self.convention not in CONVENTIONS:
            raise DomainError(f"convention must be one of {CONVENTIONS}")

    @property
    def s(self) -> float:
        return -2.0 / (self.kappa * self.delta)

    def with_N(self, N: int) -> "ModelParams":
        return ModelParams(self.L, N, self.kappa, self.delta, self.convention)


def qcd_preset(L: int, N: int = 0) -> ModelParams:
    return ModelParams(L, N, 1.0, 2.0, "qcd")


def _parity_offset(params: ModelParams) -> Fraction:
    """Fractional part (0 or 1/2) shared by all admissible quantum numbers."""
    L, N = params.L, params.N
    twice = (L + N - 1) if params.convention == "qcd" else (N - 1)
    return Fraction(twice % 2, 2)


def vacancies(params: ModelParams) -> np.ndarray:
    """All admissible quantum numbers for ``params`` in ascending order."""
    bound = Fraction(params.L + params.N - 1, 2)
    off = _parity_offset(params)
    # largest value of the parity class strictly below the bound
    top = bound - 1 if (bound - off).denominator == 1 else bound - Fraction(1, 2)
    count = int(2 * top) + 1 if top >= 0 else 0
    vals = [float(-top + k) for k in range(count)]
    return np.array([v for v in vals if (Fraction(v) - off).denominator == 1])


def check_quantum_numbers(params: ModelParams, qn) -> np.ndarray:
    qn = np.asarray(qn, dtype=float)
    if qn.shape != (params.N,):
        raise DomainError(f"expected {params.N} quantum numbers, got {qn.size}")
    if params.N == 0:
        return qn
    if np.any(np.diff(qn) <= 0):
        raise DomainError("quantum numbers must be distinct and sorted ascending")
    allowed = set(vacancies(params).tolist())
    bad = [x for x in qn.tolist() if x not in allowed]
    if bad:
        raise DomainError(
            f"quantum numbers {bad} violate parity or range for L={params.L}, N={params.N}"
        )
    return qn


def branch_to_quantum_number(L: int, n: int) -> float:
    """Map the single-root branch label ``n`` (``0 < n < L``) to a centred value."""
    return n - L / 2


@dataclass(frozen=True)
class BetheState:
    params: ModelParams
    qn: np.ndarray
    roots: np.ndarray
    residual_norm: float = 0.0
    iterations: int = 0
    converged: bool = True
    tolerance: float = DEFAULT_TOL

    def to_record(self) -> dict:
        p = self.params
        return {
            "L": p.L,
            "N": p.N,
            "s": p.s,
            "kappa": p.kappa,
            "delta": p.delta,
            "convention": p.convention,
            "qn": [float(x) for x in self.qn],
            "roots": [float(x) for x in self.roots],
            "residual": float(self.residual_norm),
            "iterations": int(self.iterations),
        }


def _check_roots(roots: np.ndarray):
    if not np.all(np.isfinite(roots)):
        raise DomainError("non-finite Bethe root")
    if roots.size > 1:
        srt = np.sort(roots)
        if np.any(np.diff(srt) == 0):
            raise DegenerateError("coincident Bethe roots")


def counting_function(params: ModelParams, roots, at=None) -> np.ndarray:
    """Z evaluated at ``at`` (defaults to the roots themselves)."""
    roots = np.asarray(roots, dtype=float)
    x = roots if at is None else np.asarray(at, dtype=float)
    kin = 2 * params.L * np.arctan(x * params.delta / 2)
    inter = 2 * np.arctan((x[:, None] - roots[None, :]) / params.kappa).sum(axis=1)
    return kin + inter


def _residual(params, qn, roots):
    return counting_function(params, roots) - 2 * np.pi * qn


def log_bethe_residual(state: BetheState) -> np.ndarray:
    roots = np.asarray(state.roots, dtype=float)
    _check_roots(roots)
    if roots.size == 0:
        return np.zeros(0)
    return _residual(state.params, np.asarray(state.qn, float), roots)


def _jacobian(params, roots):
    """dZ_k/dλ_j; symmetric and diagonally dominant (positive definite)."""
    d = roots[:, None] - roots[None, :]
    kap = params.kappa
    off = 2 * kap / (kap**2 + d**2)
    a = roots * params.delta / 2
    J = -off
    np.fill_diagonal(J, 0.0)
    diag = params.L * params.delta / (1 + a**2) + off.sum(axis=1) - 2 / kap
    np.fill_diagonal(J, diag)
    return J


def closed_form_single_root(L: int, n: int) -> float:
    """Root of ((λ-i)/(λ+i))^L = 1 on branch ``n``."""
    if n % L == 0:
        raise DomainError(f"branch n={n} puts the root at infinity for L={L}")
    if not 0 < n < L:
        raise DomainError(f"branch must satisfy 0 < n < L, got n={n}, L={L}")
    return -1.0 / np.tan(np.pi * n / L)


def _roundoff_floor(params: ModelParams) -> float:
    # Z sums O(L+N) terms of size O(π); below this the residual is noise.
    return 64 * np.finfo(float).eps * np.pi * (params.L + params.N)


def solve_bethe(
    params: ModelParams,
    qn,
    guess=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = 200,
) -> BetheState:
    """Damped Newton solve of the logarithmic Bethe equations.

    Newton runs in ``θ = atan(λΔ/2)``, which keeps roots finite. The default
    starting point ``θ_k = π I_k/(L+N-1)`` is the decoupled single-root
    solution when ``N = 1``. If roundoff stalls the iteration above ``tol``
    the state is still accepted when the residual is below
    ``64·eps·π·(L+N)``; ``state.tolerance`` records the bound that was met.
    """
    qn = check_quantum_numbers(params, qn)
    N = params.N
    if N == 0:
        return BetheState(params, qn, np.zeros(0), 0.0, 0, True, tol)
    half = params.delta / 2
    if guess is None:
        theta = np.pi * qn / (params.L + N - 1)
    else:
        g = np.asarray(guess, dtype=float)
        if g.shape != (N,):
            raise DomainError("guess has wrong length")
        theta = np.arctan(g * half)
    lam = np.tan(theta) / half
    floor = max(tol, _roundoff_floor(params))
    r = _residual(params, qn, lam)
    history = []
    for it in range(max_iter + 1):
        rmax = float(np.max(np.abs(r)))
        history.append(rmax)
        if rmax <= tol:
            return BetheState(params, qn, lam, rmax, it, True, tol)
        if it == max_iter:
            break
        J = _jacobian(params, lam) * ((1 + (lam * half) ** 2) / half)[None, :]
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                "singular Bethe Jacobian; retry with a perturbed guess",
                residual=rmax,
                history=history,
            ) from exc
        merit = float(r @ r)
        alpha = 1.0
        accepted = False
        while alpha >= 2.0**-30:
            t_new = theta + alpha * step
            if np.all(np.abs(t_new) < np.pi / 2):
                lam_new = np.tan(t_new) / half
                r_new = _residual(params, qn, lam_new)
                if float(r_new @ r_new) < (1 - 1e-4 * alpha) * merit:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            if rmax <= floor:
                return BetheState(params, qn, lam, rmax, it, True, floor)
            raise SolverError(
                f"line search failed at residual {rmax:.3e}",
                residual=rmax,
                history=history,
            )
        theta, lam, r = t_new, lam_new, r_new
    rmax = float(np.max(np.abs(r)))
    if rmax <= floor:
        return BetheState(params, qn, lam, rmax, max_iter, True, floor)
    raise SolverError(
        f"no convergence after {max_iter} iterations (residual {rmax:.3e})",
        residual=rmax,
        history=history,
    )


def single_site_energy(params: ModelParams, lam):
    """Energy carried by one root; ``2/(1+λ²)`` for the QCD preset."""
    a = np.asarray(lam, dtype=float) * params.delta / 2
    return params.delta / (1 + a**2)


def energy(state: BetheState) -> float:
    if len(state.roots) == 0:
        return 0.0
    return float(np.sum(np.sort(single_site_energy(state.params, state.roots))))


def tq_polynomiality_residual(state: BetheState) -> float:
    """Largest scaled pole residue of the T-Q expression at the roots.

    The residue of ``T`` at ``λ_k`` is ``(A_k + B_k)/Q'(λ_k)`` with
    ``A_k = σ_L (λ_k - 2i/Δ)^L Q(λ_k - iκ)`` and
    ``B_k = (λ_k + 2i/Δ)^L Q(λ_k + iκ)``. We return ``max_k |1 + A_k/B_k|``;
    every factor of ``A_k/B_k`` has unit modulus, so nothing overflows.
    This path uses complex arithmetic only and never touches ``atan``.
    """
    roots = np.asarray(state.roots, dtype=float)
    _check_roots(roots)
    if roots.size == 0:
        return 0.0
    p = state.params
    w = 2.0 / p.delta
    ratio = ((roots - 1j * w) / (roots + 1j * w)) ** p.L
    d = roots[:, None] - roots[None, :]
    pair = (d - 1j * p.kappa) / (d + 1j * p.kappa)
    ratio = ratio * np.prod(pair, axis=1)
    if p.convention == "nls" and p.L % 2:
        ratio = -ratio
    return float(np.max(np.abs(1 + ratio)))


def transfer_eigenvalue(state: BetheState, lam) -> complex:
    """T(λ) from the T-Q form, for evaluation away from the roots."""
    p = state.params
    w = 2.0 / p.delta
    roots = np.asarray(state.roots, dtype=float)
    lam = complex(lam)

    def Q(x):
        return np.prod(x - roots) if roots.size else 1.0

    sign = -1.0 if (p.convention == "nls" and p.L % 2) else 1.0
    q0 = Q(lam)
    return sign * (lam - 1j * w) ** p.L * Q(lam - 1j * p.kappa) / q0 + (
        lam + 1j * w
    ) ** p.L * Q(lam + 1j * p.kappa) / q0


def enumerate_configurations(params: ModelParams):
    """Every admissible quantum-number tuple (exhaustive; small systems only)."""
    vac = vacancies(params)
    for combo in itertools.combinations(vac.tolist(), params.N):
        yield np.array(combo)


SECTORS = ("exterior", "interior")


def sector_sign(sector: str) -> int:
    """+1 for the exterior sea (minimise E - hN), -1 for the interior one."""
    if sector not in SECTORS:
        raise DomainError(f"sector must be one of {SECTORS}, got {sector!r}")
    return 1 if sector == "exterior" else -1


def _exterior_candidates(params):
    vac = vacancies(params)
    N = params.N
    splits = range(N + 1) if N <= 16 else sorted({N // 2, (N + 1) // 2})
    for lo in splits:
        yield np.concatenate([vac[:lo], vac[len(vac) - (N - lo):]])


def _interior_candidates(params):
    vac = vacancies(params)
    N = params.N
    mid = (len(vac) - N) / 2
    for start in sorted({int(np.floor(mid)), int(np.ceil(mid))}):
        yield vac[start:start + N]


def ground_state(
    L: int,
    N: int,
    sector: str = "exterior",
    params: ModelParams | None = None,
    max_roots: int | None = None,
    tol: float = DEFAULT_TOL,
) -> BetheState:
    """Ground state of the requested Fermi-sea sector.

    ``exterior``: two blocks of consecutive quantum numbers pushed to both
    edges of the vacancy range; every split of ``N`` between them is tried
    (only the near-symmetric splits once ``N > 16``) and the lowest energy
    wins. ``interior``: one contiguous block centred in the vacancy range,
    selected by highest energy, i.e. the ground state of ``-H``.
    Ties go to the first candidate in the order tried.
    """
    params = (params or qcd_preset(L)).with_N(N)
    if params.L != L:
        raise DomainError("L disagrees with params.L")
    limit = max_roots if max_roots is not None else 16 * L
    if N > limit:
        raise DomainError(f"N={N} exceeds configured maximum filling {limit}")
    sign = sector_sign(sector)
    if N == 0:
        return solve_bethe(params, np.zeros(0), tol=tol)
    cands = _exterior_candidates(params) if sign > 0 else _interior_candidates(params)
    best, best_val, tried = None, None, []
    for qn in cands:
        tried.append(qn.tolist())
        try:
            st = solve_bethe(params, qn, tol=tol)
        except SolverError:
            continue
        val = sign * energy(st)
        if best_val is None or val < best_val - 1e-12 * max(1.0, abs(val)):
            best, best_val = st, val
    if best is None:
        raise SolverError(f"no candidate configuration converged; tried {tried}")
    return best


def ground_state_quantum_numbers(L: int, N: int, sector: str = "exterior", **kw) -> np.ndarray:
    """Quantum numbers of :func:`ground_state`."""
    return ground_state(L, N, sector, **kw).qn
