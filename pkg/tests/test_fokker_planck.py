"""Spectral propagation, finite differences and moment-level checks."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relbrownian.continuation import effective_diffusion
from relbrownian.ensemble import SimulationConfig
from relbrownian.errors import ConfigurationError, DomainError, InstabilityError, InsufficientDataError
from relbrownian.fokker_planck import (
    SpectralField,
    bin_masses,
    diffusion_tensor,
    explicit_fd_evolve,
    gaussian_density,
    histogram_masses,
    kg_mode_residual,
    l1_distance,
    moment_ode_check,
    read_density_csv,
    real_sector_fd_solve,
    spectral_evolve,
    stable_dtau,
    write_density_csv,
)
from relbrownian.minkowski import MOSTLY_PLUS, Boost, boost_vector
from relbrownian.process import evolve_ensemble
from relbrownian.sampler import Family

DB = effective_diffusion(1.0)
A_ETA = DB * MOSTLY_PLUS.metric(2)  # diag(-Db, +Db)


def _mode(n, h, kt_idx, kx_idx):
    t = np.arange(n) * h
    tt, xx = np.meshgrid(t, t, indexing="ij")
    L = n * h
    return np.cos(2 * np.pi * (kt_idx * tt + kx_idx * xx) / L), 2 * np.pi / L


def test_lightlike_mode_unchanged():
    f, dk = _mode(32, 0.25, 3, 3)
    out = spectral_evolve(SpectralField.from_values(f, 0.25), A_ETA, tau=2.0)
    np.testing.assert_allclose(out.values(), f, atol=1e-12)
    assert not out.unstable


def test_spatial_mode_decays():
    f, dk = _mode(32, 0.25, 0, 2)
    tau = 0.7
    out = spectral_evolve(SpectralField.from_values(f, 0.25), A_ETA, tau=tau)
    np.testing.assert_allclose(out.values(), f * math.exp(-DB * (2 * dk) ** 2 * tau), atol=1e-12)
    # finite-difference solver on the same grid: a Fourier mode is an eigenvector
    # of the scheme with factor (1 - a k_h^2 h) per Euler step, k_h the
    # central-difference wavenumber
    a_fd = np.array([[0.0, 0.0], [0.0, DB]])
    fd = explicit_fd_evolve(f, 0.25, a_fd, tau)
    n = math.ceil(tau / stable_dtau(a_fd, 0.25))
    kh2 = (2 * math.sin(2 * dk * 0.25 / 2) / 0.25) ** 2
    np.testing.assert_allclose(fd, f * (1 - DB * kh2 * tau / n) ** n, atol=1e-12)
    # and the continuum decay within the scheme's discretisation error
    np.testing.assert_allclose(fd, out.values(), atol=2e-2)


def test_temporal_mode_grows_and_flags():
    f, dk = _mode(32, 0.25, 2, 0)
    out = spectral_evolve(SpectralField.from_values(f, 0.25), A_ETA, tau=0.5)
    np.testing.assert_allclose(out.values(), f * math.exp(DB * (2 * dk) ** 2 * 0.5), atol=1e-11)
    assert out.unstable
    with pytest.raises(InstabilityError):
        spectral_evolve(SpectralField.from_values(f, 0.25), A_ETA, tau=1e4)


def test_drift_translates():
    f, _ = _mode(32, 0.25, 0, 1)
    out = spectral_evolve(SpectralField.from_values(f, 0.25), np.zeros((2, 2)), drift=[0.0, 0.5], tau=1.0)
    shifted, _ = _mode(32, 0.25, 0, 1)
    x = np.arange(32) * 0.25
    np.testing.assert_allclose(out.values(), np.cos(2 * np.pi * (x[None, :] - 0.5) / 8.0) * np.ones((32, 1)), atol=1e-12)


@given(st.floats(0, 1), st.floats(0, 1))
def test_spectral_composition(t1, t2):
    rng = np.random.default_rng(0)
    f = SpectralField.from_values(rng.normal(size=(16, 16)), 0.5, cutoff=3.0)
    a = np.array([[-0.1, 0.02], [0.02, 0.2]])
    two = spectral_evolve(spectral_evolve(f, a, tau=t1), a, tau=t2)
    one = spectral_evolve(f, a, tau=t1 + t2)
    scale = np.max(np.abs(one.modes)) + 1
    np.testing.assert_allclose(two.modes, one.modes, atol=1e-12 * scale)


def test_band_limit_and_real_field():
    rng = np.random.default_rng(1)
    f = SpectralField.from_values(rng.normal(size=(16, 16)), 0.5, cutoff=2.0)
    k = np.linalg.norm(f.wavevectors(), axis=-1)
    assert np.all(f.modes[k > 2.0] == 0)
    back = np.fft.ifftn(f.modes)
    assert np.max(np.abs(back.imag)) < 1e-12


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_eta_propagator_boost_invariant(kt, kx, chi):
    # a k k for a ∝ eta equals the invariant contraction, unchanged by boosting k
    k = np.array([kt, kx])
    kb = boost_vector(k, Boost.along(chi, 2))
    assert k @ A_ETA @ k == pytest.approx(kb @ A_ETA @ kb, abs=1e-10 * (1 + k @ k) * math.cosh(chi) ** 2)


def test_spectral_shape_error():
    with pytest.raises(ConfigurationError):
        spectral_evolve(SpectralField.from_values(np.zeros((4, 4)), 1.0), np.eye(3))


# --- finite differences --------------------------------------------------------


def test_fd_zero_tensor_returns_initial():
    u = np.random.default_rng(2).random((10, 10))
    np.testing.assert_array_equal(real_sector_fd_solve(u, 0.1, np.zeros((2, 2)), 1.0), u)


def test_fd_isotropic_gaussian_width():
    h = 0.05
    c = np.arange(-5, 5 + h / 2, h)
    s0 = 0.2 * np.eye(2)
    a = 0.3 * np.eye(2)
    u = real_sector_fd_solve(gaussian_density([c, c], [0, 0], s0), h, a, 0.5)
    mass = u.sum() * h * h
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert np.min(u) >= 0
    tt, xx = np.meshgrid(c, c, indexing="ij")
    var_t = (u * tt**2).sum() * h * h
    assert var_t == pytest.approx(0.2 + 2 * 0.3 * 0.5, rel=1e-3)


def test_fd_anisotropic_matches_exact():
    h = 0.05
    c = np.arange(-4, 4 + h / 2, h)
    s0 = 0.05 * np.eye(2)
    a = np.array([[0.3, 0.1], [0.1, 0.2]])
    u = real_sector_fd_solve(gaussian_density([c, c], [0, 0], s0), h, a, 0.5)
    exact = gaussian_density([c, c], [0, 0], s0 + 2 * a * 0.5)
    edges = [np.linspace(-3, 3, 13)] * 2
    assert l1_distance(bin_masses(u, [c, c], edges), bin_masses(exact, [c, c], edges)) < 2e-3


def test_fd_errors():
    u = np.zeros((8, 8))
    with pytest.raises(ConfigurationError):
        real_sector_fd_solve(u, 0.1, np.array([[1.0, 0], [0, -1.0]]), 1.0)
    with pytest.raises(ConfigurationError):
        real_sector_fd_solve(u, 0.1, np.array([[1.0, 0.5], [0, 1.0]]), 1.0)
    with pytest.raises(ConfigurationError):
        explicit_fd_evolve(u, 0.1, np.eye(2), 1.0, dtau=1.0)
    with pytest.raises(ConfigurationError):
        explicit_fd_evolve(u, 0.1, np.eye(3), 1.0)
    assert stable_dtau(np.eye(2), 0.1) == pytest.approx(0.25 * 0.01)
    assert stable_dtau(np.zeros((2, 2)), 0.1) == math.inf


def test_bin_masses_exact_on_uniform_density():
    h = 0.1
    c = np.arange(0.05, 1.0, h)  # cells tile [0, 1]
    u = np.ones((10, 10))
    edges = [np.array([0.0, 0.33, 1.0])] * 2
    m = bin_masses(u, [c, c], edges)
    np.testing.assert_allclose(m, np.outer([0.33, 0.67], [0.33, 0.67]), rtol=1e-12)


def test_histogram_masses():
    pts = np.array([[0.1, 0.1], [0.6, 0.6], [2.0, 2.0]])
    m = histogram_masses(pts, [np.array([0, 0.5, 1.0])] * 2)
    np.testing.assert_allclose(m, [[1 / 3, 0], [0, 1 / 3]])


def test_density_csv_round_trip(tmp_path):
    c = [np.linspace(-1, 1, 5), np.linspace(0, 2, 3)]
    u = np.arange(15, dtype=float).reshape(5, 3) / 7
    path = tmp_path / "d.csv"
    write_density_csv(path, u, c)
    assert path.read_text().startswith("# axis 0: start=-1.0 stop=1.0 step=0.5 n=5")
    back, coords = read_density_csv(path)
    np.testing.assert_array_equal(back, u)
    for a, b in zip(coords, c):
        np.testing.assert_allclose(a, b, atol=1e-15)


# --- moment level ---------------------------------------------------------------


def test_diffusion_tensor():
    np.testing.assert_array_equal(diffusion_tensor(np.eye(2), 0.5), np.eye(2))
    with pytest.raises(DomainError):
        diffusion_tensor(np.eye(2), 0.0)


def test_moment_ode_check_4d_critical():
    cfg = SimulationConfig(Family.GAUSSIAN_4D, dtau=0.05, n=100_000, seed=3)
    mc = evolve_ensemble(cfg, checkpoints=[0.25, 0.5])
    a = DB * np.diag([1.0, -1, -1, -1]) / 2  # C / (2 dtau) with C = Db dtau diag(1, -1, -1, -1)
    assert moment_ode_check(mc, a) < 4
    assert moment_ode_check(mc, 1.3 * a) > 4


def test_moment_ode_check_constant_drift():
    from relbrownian.process import DriftField

    cfg = SimulationConfig(Family.HYPERBOLIC_11, dtau=0.05, n=50_000, seed=4)
    beta = np.array([0.4, -0.2])
    mc = evolve_ensemble(cfg, checkpoints=[0.5, 1.0], drift=DriftField.constant(beta))
    # equal scales, equal mix, lam = 1: C = (D dtau / 2) diag(1, -1)
    a = diffusion_tensor(0.5 * cfg.D * cfg.dtau * np.diag([1.0, -1.0]), cfg.dtau)
    assert moment_ode_check(mc, a, drift=beta) < 4
    with pytest.raises(InsufficientDataError):
        moment_ode_check(evolve_ensemble(cfg.replace(n=10), checkpoints=[0.5]), a)


def test_kg_mode_residual():
    k = np.array([1.3, 1.3])
    assert kg_mode_residual(k, 0.0, A_ETA) < 1e-15
    rng = np.random.default_rng(5)
    eta = MOSTLY_PLUS.metric(4)
    a = DB * eta
    for k in rng.normal(size=(20, 4)):
        assert kg_mode_residual(k, DB * (k @ eta @ k), a) < 1e-12
    k = np.array([2.0, 0.5])
    kappa = -(k @ A_ETA @ k)  # wrong sign for a timelike k
    assert kg_mode_residual(k, kappa, A_ETA) == pytest.approx(2 * abs(kappa))
