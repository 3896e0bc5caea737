"""Many-body Hamiltonians on a tensor-product basis.

Basis convention: site 0 is the most significant digit, so a full-space
index is ``Σ_i n_i d^(L-1-i)``. This matches ``np.kron`` ordering, and a cut
at bond ``b`` reshapes amplitudes to ``(d^b, d^(L-b))``. The digit sum
``Σ_i n_i`` is conserved by both models here: it is the total boson number,
or the number of down spins for the spin-1/2 chain. Hamiltonians can be
restricted to one value of it.

The s = -1 two-site term
------------------------
``M = 2 S_1·S_2`` conserves the pair occupation ``k = n_1 + n_2``. For
``k ≤ n_max`` its block is exact, with ``J(J+1) = (2+n)(1+n)`` and
``J = -2-n`` for ``n = 0..k``. Each such ``J`` sits on a pole of
``ψ(J+1)``. By the reflection formula, ``ψ(J+1)`` equals ``ψ(-J)`` up to a
``π cot(πJ)`` term that diverges. The ``"finite_part"`` regularization drops
that term, which gives ``h(J) = 2ψ(-J) - 2ψ(1)``. Chain energies then equal
the Bethe energies ``Σ 2/(1+λ²)`` plus ``2`` per bond. The ``"project"``
option removes pole eigenvectors instead. Blocks with ``k > n_max`` are cut
by the truncation and are always removed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import digamma

from .errors import DomainError, SolverError

POLE_GUARD = 1e-6
DEFAULT_NMAX = 8
MEMORY_BUDGET = 2 * 1024**3


@dataclass(frozen=True)
class BosonSiteRep:
    kappa: float
    delta: float
    n_max: int
    psi: np.ndarray
    psi_dag: np.ndarray
    rho: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def s(self):
        return -2.0 / (self.kappa * self.delta)

    @property
    def dim(self):
        return self.n_max + 1

    @property
    def casimir(self):
        return self.sx @ self.sx + self.sy @ self.sy + self.sz @ self.sz


def boson_spin_operators(kappa=1.0, delta=2.0, n_max=DEFAULT_NMAX) -> BosonSiteRep:
    if not (kappa > 0 and delta > 0):
        raise DomainError("kappa and delta must be positive")
    if int(n_max) != n_max or n_max < 2:
        raise DomainError("n_max must be an integer ≥ 2")
    n = np.arange(n_max + 1, dtype=float)
    psi = np.diag(np.sqrt(n[1:]), 1).astype(complex)
    psi_dag = psi.conj().T
    kd = kappa * delta
    rho = np.diag(np.sqrt(1 + kd * n / 4)).astype(complex)
    sx = (1j / np.sqrt(kd)) * (psi_dag @ rho + rho @ psi)
    sy = (1 / np.sqrt(kd)) * (rho @ psi - psi_dag @ rho)
    sz = np.diag(-2 / kd * (1 + kd * n / 2)).astype(complex)
    return BosonSiteRep(kappa, delta, int(n_max), psi, psi_dag, rho, sx, sy, sz)


@dataclass(frozen=True)
class TwoSiteOperator:
    matrix: np.ndarray
    local_dim: int
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TwoSiteJ:
    """Eigen-decomposition of ``M = 2 S_1·S_2`` with the matching ``J``."""

    rep: BosonSiteRep
    M: np.ndarray
    eigvals: np.ndarray  # eigenvalues of M
    eigvecs: np.ndarray  # orthonormal columns
    J: np.ndarray
    pair_occupation: np.ndarray  # k of each eigenvector
    truncated: np.ndarray  # k > n_max
    pathological: np.ndarray  # M + 2s(s+1) + 1/4 < 0

    @property
    def reliable(self):
        return ~(self.truncated | self.pathological)


def two_site_J(rep: BosonSiteRep) -> TwoSiteJ:
    """``J = -1/2 - sqrt(M + 2s(s+1) + 1/4)``, diagonalised block by block in k."""
    d = rep.dim
    M = 2 * (np.kron(rep.sx, rep.sx) + np.kron(rep.sy, rep.sy) + np.kron(rep.sz, rep.sz))
    herm = np.max(np.abs(M - M.conj().T))
    if herm > 1e-10 * max(1.0, np.max(np.abs(M))):
        raise SolverError(f"two-site operator not Hermitian (deviation {herm:.2e})")
    M = (M + M.conj().T) / 2
    n1, n2 = np.divmod(np.arange(d * d), d)
    k = n1 + n2
    vals = np.empty(d * d)
    vecs = np.zeros((d * d, d * d), dtype=complex)
    kk = np.empty(d * d, dtype=int)
    col = 0
    for kv in range(2 * d - 1):
        idx = np.flatnonzero(k == kv)
        w, v = np.linalg.eigh(M[np.ix_(idx, idx)])
        sl = slice(col, col + idx.size)
        vals[sl] = w
        vecs[idx, sl] = v
        kk[sl] = kv
        col += idx.size
    shift = 2 * rep.s * (rep.s + 1) + 0.25
    disc = vals + shift
    patho = disc < 0
    J = -0.5 - np.sqrt(np.where(patho, 0.0, disc))
    trunc = kk > rep.n_max
    if np.all(patho | trunc):
        raise SolverError("every two-site eigenvalue is a truncation artifact; raise n_max")
    return TwoSiteJ(rep, M, vals, vecs, J, kk, trunc, patho)


def j_ladder_deviation(tj: TwoSiteJ, count=8):
    """Worst distance from the ladder ``-2, -3, ..., -1-count`` to the computed J.

    Every eigenvalue counts, truncated ones included, so the number measures
    how far the cutoff still is from resolving the first ``count`` rungs.
    """
    rungs = -2.0 - np.arange(count)
    return float(max(np.min(np.abs(tj.J - r)) for r in rungs))


def _near_nonpositive_int(x, guard):
    r = np.round(x)
    return (r <= 0) & (np.abs(x - r) < guard)


def local_hamiltonian_s_minus1(
    rep: BosonSiteRep, regularization="finite_part", guard=POLE_GUARD
) -> TwoSiteOperator:
    """``ψ(-J) + ψ(J+1) - 2ψ(1)`` by functional calculus on ``M``."""
    if regularization not in ("finite_part", "project"):
        raise DomainError(f"unknown regularization {regularization!r}")
    tj = two_site_J(rep)
    J = tj.J
    pole = _near_nonpositive_int(J + 1, guard) | _near_nonpositive_int(-J, guard)
    drop = tj.truncated | tj.pathological
    h = np.zeros_like(J)
    regular = ~(pole | drop)
    h[regular] = digamma(-J[regular]) + digamma(J[regular] + 1) - 2 * digamma(1.0)
    fin = pole & ~drop
    if regularization == "finite_part":
        # reflection formula with the divergent cot term removed
        h[fin] = 2 * digamma(-J[fin]) - 2 * digamma(1.0)
    else:
        drop = drop | pole
    h[drop] = 0.0
    V = tj.eigvecs
    H = (V * h) @ V.conj().T
    H = (H + H.conj().T) / 2
    meta = {
        "n_max": rep.n_max,
        "regularization": regularization,
        "pole_sectors": int(np.count_nonzero(pole & ~tj.truncated)),
        "truncated_sectors": int(np.count_nonzero(tj.truncated)),
        "pathological": int(np.count_nonzero(tj.pathological)),
        "projected_out": int(np.count_nonzero(drop)),
    }
    return TwoSiteOperator(H, rep.dim, meta)


def heisenberg_bond() -> TwoSiteOperator:
    """``S_1·S_2 - 1/4`` for spin 1/2, basis ``|↑↑>, |↑↓>, |↓↑>, |↓↓>``."""
    H = np.array(
        [[0, 0, 0, 0], [0, -0.5, 0.5, 0], [0, 0.5, -0.5, 0], [0, 0, 0, 0]], dtype=float
    )
    return TwoSiteOperator(H, 2, {"model": "xxx-1/2"})


@dataclass(frozen=True)
class ChainHamiltonian:
    L: int
    local_dim: int
    matrix: sp.csr_matrix
    periodic: bool
    basis: np.ndarray | None = None  # sorted full-space indices, None = full space
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def charges(self):
        idx = self.basis if self.basis is not None else np.arange(self.local_dim**self.L)
        return digit_sum(idx, self.local_dim, self.L)

    def hermiticity_error(self):
        D = self.matrix - self.matrix.conj().T
        return float(np.max(np.abs(D.data))) if D.nnz else 0.0

    def to_coo_text(self):
        """Lines ``row col re im`` of the nonzero entries."""
        m = self.matrix.tocoo()
        order = np.lexsort((m.col, m.row))
        return "".join(
            f"{r} {c} {v.real:.17g} {v.imag:.17g}\n"
            for r, c, v in zip(m.row[order], m.col[order], np.asarray(m.data, complex)[order])
        )


def digit_sum(indices, d, L):
    idx = np.asarray(indices, dtype=np.int64)
    total = np.zeros_like(idx)
    for _ in range(L):
        idx, r = np.divmod(idx, d)
        total += r
    return total


def charge_basis(L, d, charge):
    """Sorted full-space indices with digit sum equal to ``charge``."""
    idx = np.arange(d**L, dtype=np.int64)
    return idx[digit_sum(idx, d, L) == charge]


def _estimate_bytes(dim, nnz_per_row):
    return dim * nnz_per_row * 16 + dim * 8


def assemble_chain(
    local: TwoSiteOperator, L: int, periodic: bool, charge: int | None = None,
    budget: int = MEMORY_BUDGET,
) -> ChainHamiltonian:
    """``Σ_k local_{k,k+1}`` (plus the ``(L-1, 0)`` bond if periodic)."""
    d = local.local_dim
    if local.matrix.shape != (d * d, d * d):
        raise DomainError(
            f"local operator shape {local.matrix.shape} does not match local_dim {d}"
        )
    if L < 2:
        raise DomainError("need at least two sites")
    bonds = [(i, i + 1) for i in range(L - 1)]
    if periodic and L > 2:
        bonds.append((L - 1, 0))
    elif periodic and L == 2:
        bonds.append((1, 0))
    basis = None if charge is None else charge_basis(L, d, charge)
    states = np.arange(d**L, dtype=np.int64) if basis is None else basis
    loc = np.asarray(local.matrix)
    nz_rows, nz_cols = np.nonzero(np.abs(loc) > 0)
    est = _estimate_bytes(states.size, len(bonds) * max(1, len(nz_rows)) / d**2 + 1)
    if est > budget:
        raise DomainError(f"chain needs about {est / 1e9:.2f} GB, above the budget")
    digits = [(states // d ** (L - 1 - i)) % d for i in range(L)]
    rows, cols, vals = [], [], []
    for i, j in bonds:
        pi, pj = d ** (L - 1 - i), d ** (L - 1 - j)
        pair = digits[i] * d + digits[j]
        for r, c in zip(nz_rows, nz_cols):
            src = np.flatnonzero(pair == c)
            if src.size == 0:
                continue
            a2, b2 = divmod(r, d)
            a, b = divmod(c, d)
            new = states[src] + (a2 - a) * pi + (b2 - b) * pj
            if basis is None:
                pos = new
            else:
                pos = np.searchsorted(basis, new)
                if np.any(pos >= basis.size) or np.any(basis[np.minimum(pos, basis.size - 1)] != new):
                    raise DomainError("local operator does not conserve the digit sum")
            rows.append(pos)
            cols.append(src)
            vals.append(np.full(src.size, loc[r, c]))
    n = states.size
    if rows:
        data = np.concatenate(vals)
        H = sp.csr_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    else:
        H = sp.csr_matrix((n, n), dtype=loc.dtype)
    if np.iscomplexobj(H.data) and np.all(H.data.imag == 0):
        H = H.real.tocsr()
    H.sum_duplicates()
    H.eliminate_zeros()
    return ChainHamiltonian(L, d, H, bool(periodic), basis, dict(local.metadata))


def heisenberg_proxy(L: int, periodic: bool, charge: int | None = None, max_L: int = 24):
    """Spin-1/2 XXX chain ``Σ (S_k·S_{k+1} - 1/4)``; ``charge`` = number of down spins."""
    if L < 2 or L > max_L:
        dim = 2.0**L
        raise DomainError(
            f"L={L} outside [2, {max_L}] (full space {dim:.3g} states, "
            f"about {dim * (L + 1) * 16 / 1e9:.2f} GB sparse)"
        )
    return assemble_chain(heisenberg_bond(), L, periodic, charge)


def lipatov_chain(L: int, periodic: bool = True, n_max: int = DEFAULT_NMAX,
                  charge: int | None = None, regularization="finite_part"):
    rep = boson_spin_operators(1.0, 2.0, n_max)
    local = local_hamiltonian_s_minus1(rep, regularization)
    return assemble_chain(local, L, periodic, charge)


def bond_count(L, periodic):
    return L if (periodic and L > 2) else (L - 1 if not periodic else 2)


def bethe_offset(L, periodic=True):
    """Constant separating finite-part chain energies from ``Σ 2/(1+λ²)``."""
    return 2.0 * bond_count(L, periodic)


def bethe_sector_levels(L, K):
    """Bethe energies of the periodic chain in the sector of total occupation K.

    A sector holds highest-weight states with N roots for every N ≤ K (the rest
    are descendants), so all configurations with N = 0..K are included. The
    chain offset is added.
    """
    from . import bethe

    levels = []
    for N in range(K + 1):
        p = bethe.qcd_preset(L, N)
        for qn in bethe.enumerate_configurations(p):
            levels.append(bethe.energy(bethe.solve_bethe(p, qn)))
    return np.sort(levels) + bethe_offset(L, True)


def chain_bethe_deviation(L, K_max, n_max):
    """Largest gap between truncated-chain and Bethe levels over sectors K ≤ K_max.

    Sectors are compared level by level from the bottom, over the shorter of
    the two lists (a coarse cutoff can hold fewer states than the sector has).
    """
    worst = 0.0
    for K in range(K_max + 1):
        H = lipatov_chain(L, True, n_max, charge=K)
        ev = np.sort(np.linalg.eigvalsh(H.matrix.toarray()))
        b = bethe_sector_levels(L, K)
        m = min(ev.size, b.size)
        worst = max(worst, float(np.max(np.abs(ev[:m] - b[:m]))))
    return worst
