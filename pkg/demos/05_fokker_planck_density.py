"""
Monte Carlo density against the Fokker-Planck solution
======================================================

With only physical (timelike) jumps the 1+1 process has a real density.
Its diffusion tensor ``a = C / (2 dtau)`` is anisotropic; the
finite-difference solution of ``dP/dtau = a^{mu nu} d_mu d_nu P`` from a
Gaussian start is binned and compared with a walker histogram.
"""

import numpy as np

from relbrownian import SimulationConfig
from relbrownian.cli import exact_moments
from relbrownian.fokker_planck import (
    bin_masses,
    diffusion_tensor,
    gaussian_density,
    histogram_masses,
    l1_distance,
    real_sector_fd_solve,
)
from relbrownian.process import evolve_ensemble

cfg = SimulationConfig(family="hyperbolic-1+1", lam=1.0, sector_mix=1.0, dtau=0.01, n=300_000, seed=6)
tau = 1.0
a = diffusion_tensor(exact_moments(cfg), cfg.dtau)
print("diffusion tensor a:\n", a)

s0 = 0.05 * np.eye(2)
mc = evolve_ensemble(
    cfg,
    checkpoints=[tau],
    initial=lambda size, rng: rng.multivariate_normal(np.zeros(2), s0, size=size),
    keep_positions=True,
)

sd = np.sqrt(np.diag(s0 + 2 * a * tau))
ext = 6 * sd.max()
h = 2 * ext / 240
coords = [np.arange(-ext, ext + h / 2, h)] * 2
u = real_sector_fd_solve(gaussian_density(coords, np.zeros(2), s0), h, a, tau)
edges = [np.linspace(-4 * s, 4 * s, 17) for s in sd]
print("walker covariance:\n", np.cov(mc.positions.T))
print("predicted covariance:\n", s0 + 2 * a * tau)
print("L1 distance of 16x16 bin masses:", l1_distance(histogram_masses(mc.positions, edges), bin_masses(u, coords, edges)))
