"""Shared oracles: dense Kronecker-product constructions independent of the package."""

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


def dense_chain(bond, d, L, periodic):
    """Sum of ``bond`` on neighbouring sites built with explicit kron products."""
    H = np.zeros((d**L, d**L), dtype=complex)
    pairs = [(i, i + 1) for i in range(L - 1)]
    if periodic:
        pairs.append((L - 1, 0))
    for i, j in pairs:
        if j == i + 1:
            H += np.kron(np.kron(np.eye(d**i), bond), np.eye(d ** (L - j - 1)))
        else:
            # wrap-around bond: permute site L-1 next to site 0 by a swap network
            P = _cyclic_shift(d, L)
            Hb = np.kron(bond, np.eye(d ** (L - 2)))
            H += P.conj().T @ Hb @ P
    return H


def _cyclic_shift(d, L):
    """Permutation sending site L-1 to position 0 and site 0 to position 1."""
    n = d**L
    P = np.zeros((n, n))
    for idx in range(n):
        digits = np.unravel_index(idx, (d,) * L)
        new = (digits[-1],) + digits[:-1]
        P[np.ravel_multi_index(new, (d,) * L), idx] = 1
    return P


SX = np.array([[0, 1], [1, 0]]) / 2
SY = np.array([[0, -1j], [1j, 0]]) / 2
SZ = np.array([[1, 0], [0, -1]]) / 2
XXX_BOND = (np.kron(SX, SX) + np.kron(SY, SY) + np.kron(SZ, SZ)).real - 0.25 * np.eye(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
