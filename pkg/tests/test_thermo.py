import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.special import roots_legendre

from lipatov_chain import thermo
from lipatov_chain.errors import DomainError, SolverError


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_kernel_is_symmetric_and_positive(a, b):
    assert thermo.kernel(a, b) == pytest.approx(thermo.kernel(b, a))
    assert thermo.kernel(a, b) > 0


def test_kernel_normalisation():
    val, _ = quad(lambda x: float(thermo.kernel(x)), -np.inf, np.inf)
    assert val == pytest.approx(2 * np.pi, rel=1e-12)


# --- quadrature -----------------------------------------------------------

@pytest.mark.parametrize("q", [0.3, 1.0, 7.0])
def test_exterior_grid_integrates_lorentzian_tail(q):
    g = thermo.make_grid(q, 64, "exterior", cutoff=1e12)
    one_tail = np.sum(g.half_weights * 2 / (1 + g.half_nodes**2))
    assert abs(one_tail - (np.pi - 2 * np.arctan(q))) <= 1e-10


@pytest.mark.parametrize("q", [0.2, 3.3, 11.0])
def test_interior_grid_integrates_lorentzian(q):
    g = thermo.make_grid(q, 32, "interior")
    assert g.integrate_even(2 / (1 + g.half_nodes**2)) == pytest.approx(4 * np.arctan(q), abs=1e-13)


# --- Nyström solutions -----------------------------------------------------

def _plain_nystrom_density(q, n=400):
    """Single-panel Gauss-Legendre Nyström solve of 2πρ - ∫Kρ = K on [-q, q]."""
    x, w = roots_legendre(n)
    x, w = q * x, q * w
    A = 2 * np.pi * np.eye(n) - thermo.kernel(x[:, None], x[None, :]) * w[None, :]
    rho = np.linalg.solve(A, thermo.kernel(x))
    return float(w @ rho)


@pytest.mark.parametrize("q", [0.5, 1.0, 3.0])
def test_interior_density_matches_plain_nystrom(q):
    assert thermo.solve_density(q, 48).density == pytest.approx(_plain_nystrom_density(q), abs=1e-11)


def test_outer_integral_by_adaptive_quadrature():
    dens = thermo.solve_density(2.0, 64)
    val, _ = quad(lambda x: float(thermo.vacancy_density(dens, x)), 0, 2.0, epsabs=1e-13)
    assert 2 * val == pytest.approx(dens.density, abs=1e-11)


@pytest.mark.parametrize("sector,cutoff", [("interior", None), ("exterior", 1e4)])
def test_self_convergence_under_resolution_doubling(sector, cutoff):
    kw = {} if cutoff is None else {"cutoff": cutoff}
    probe = np.array([0.0, 0.5, 1.7, 3.0])
    lo = thermo.solve_density(1.0, 32, sector, **kw)
    hi = thermo.solve_density(1.0, 64, sector, **kw)
    assert abs(lo.density - hi.density) <= 1e-8 * max(1.0, hi.density)
    diff = np.abs(thermo.vacancy_density(lo, probe) - thermo.vacancy_density(hi, probe))
    assert np.max(diff) <= 1e-8


def test_solutions_are_even():
    dens = thermo.solve_density(1.5, 32)
    assert np.allclose(dens.rho_p, dens.rho_p[::-1], atol=0)
    eps = thermo.solve_dressed_energy(1.5, 0.5, 32)
    x = np.array([0.1, 0.9, 2.4])
    assert np.allclose(eps(x), eps(-x), atol=1e-13)


def test_far_tail_density_is_near_free_value():
    dens = thermo.solve_density(50.0, 64, "exterior")
    # the sea starts at |λ|=50, so at λ=0 only the bare term survives to O(1e-4)
    assert thermo.vacancy_density(dens, 0.0) == pytest.approx(1 / np.pi, abs=1e-3)


# --- Fermi point ----------------------------------------------------------

@pytest.mark.parametrize("h", [0.5, 1.0, 1.5])
def test_dressed_energy_vanishes_at_fermi_points(h):
    q = thermo.find_fermi_point(h)
    eps = thermo.solve_dressed_energy(q, h)
    assert np.max(np.abs(eps(np.array([q, -q])))) <= 1e-10


def test_exterior_fermi_point_with_finite_cutoff():
    q = thermo.find_fermi_point(0.5, 64, "exterior", cutoff=10.0)
    eps = thermo.solve_dressed_energy(q, 0.5, 64, "exterior", cutoff=10.0)
    assert np.max(np.abs(eps(np.array([q, -q])))) <= 1e-10


def test_exterior_sea_has_no_fermi_point_at_large_cutoff():
    with pytest.raises(SolverError, match="no sign change"):
        thermo.find_fermi_point(0.5, 32, "exterior", cutoff=1e4)


@pytest.mark.parametrize("h", [0.0, 2.0, 2.5, -1.0])
def test_field_outside_band_is_rejected(h):
    with pytest.raises(DomainError):
        thermo.find_fermi_point(h)


def test_small_q_rejected_for_exterior():
    with pytest.raises(DomainError):
        thermo.make_grid(1e-4, 32, "exterior")


def test_fermi_point_approaches_bare_value_near_band_edge():
    errs = []
    for h in (1.99, 1.999):
        q = thermo.find_fermi_point(h)
        bare = np.sqrt(2 / h - 1)
        errs.append(abs(q / bare - 1))
    assert errs[1] < errs[0] < 0.05


def test_fermi_velocity_small_q_limit():
    errs = []
    for h in (1.99, 1.999):
        q = thermo.find_fermi_point(h)
        v = thermo.fermi_velocity(q, h)
        errs.append(abs(v / (2 * q / (1 + q * q)) - 1))
    assert errs[1] < errs[0] < 0.06


# --- bulk quantities -------------------------------------------------------

def test_interior_reference_point():
    th = thermo.thermodynamics(0.5)
    assert th.q == pytest.approx(3.2917990217943, abs=1e-9)
    assert th.density == pytest.approx(3.315922159178637, abs=1e-9)
    assert th.v_F > 0
    th2 = thermo.thermodynamics(0.5, resolution=96)
    assert abs(th2.eps_inf - th.eps_inf) <= 1e-10
    assert abs(th2.v_F - th.v_F) <= 1e-9


def test_dual_energy_route_agrees():
    q, h = thermo.find_fermi_point(0.8), 0.8
    a = thermo.bulk_energy_density(q, h, route="direct")
    b = thermo.bulk_energy_density(q, h, route="dual")
    assert a == pytest.approx(b, abs=1e-11)


def test_energy_derivative_equals_density():
    def f(h):
        return thermo.bulk_energy_density(thermo.find_fermi_point(h), h)

    h, dh = 0.7, 1e-4
    deriv = (f(h + dh) - f(h - dh)) / (2 * dh)
    D = thermo.solve_density(thermo.find_fermi_point(h)).density
    assert deriv == pytest.approx(D, rel=1e-6)


def test_exterior_density_grows_with_cutoff():
    vals = [thermo.solve_density(1.0, 32, "exterior", cutoff=c).density for c in (1e2, 1e3, 1e4)]
    assert vals[0] < vals[1] < vals[2]
