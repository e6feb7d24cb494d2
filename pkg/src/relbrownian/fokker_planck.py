"""Covariant Fokker-Planck equation and its Monte Carlo cross-checks.

The equation is

    d rho / d tau = -d_mu (beta^mu rho) + a^{mu nu} d_mu d_nu rho

with a constant diffusion tensor ``a``.  When ``a`` is proportional to the
metric it is anti-diffusive along one direction, so the initial value
problem is ill-posed for generic data.  Two solvers are provided:

* :func:`spectral_evolve` propagates a band-limited field exactly, mode by
  mode, and flags growing modes;
* :func:`explicit_fd_evolve` / :func:`real_sector_fd_solve` is a plain
  explicit finite-difference scheme used for positive semidefinite ``a``,
  where ``rho`` is a genuine probability density.

Wave vectors are covariant (lower index): a mode is ``exp(i k_mu x^mu)``
and contractions are plain sums, ``k.beta = k_mu beta^mu`` and
``a^{mu nu} k_mu k_nu``.  The diffusion tensor relates to the per-step
jump second moments ``C dtau`` by ``a = C / 2``.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError, InstabilityError, InsufficientDataError
from .stats import deviation, report

OVERFLOW_GROWTH = 1e12
CFL_LIMIT = 0.25
ROUNDOFF_FLOOR = 1e-12


def diffusion_tensor(moments, dtau: float) -> np.ndarray:
    """Fokker-Planck tensor from single-jump weighted second moments."""
    if not dtau > 0:
        raise DomainError("dtau must be positive")
    return np.asarray(moments, dtype=float) / (2.0 * dtau)


@dataclass(frozen=True)
class SpectralField:
    """Real field on a periodic grid stored by its Fourier modes.

    ``modes`` follows the ``numpy.fft.fftn`` layout.  ``cutoff`` bounds the
    Euclidean norm of wave vectors carrying amplitude.
    """

    spacing: tuple
    modes: np.ndarray
    cutoff: float = np.inf
    max_growth: float = 1.0

    @classmethod
    def from_values(cls, values, spacing, cutoff: float = np.inf) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        spacing = tuple(float(h) for h in np.broadcast_to(spacing, (values.ndim,)))
        modes = np.fft.fftn(values)
        # transform round-off on empty modes would otherwise count as populated
        # and be amplified by anti-diffusive directions
        floor = ROUNDOFF_FLOOR * np.max(np.abs(modes), initial=0.0)
        modes = np.where(np.abs(modes) > floor, modes, 0)
        return cls(spacing, modes, cutoff).band_limited()

    @property
    def shape(self) -> tuple:
        return self.modes.shape

    def wavevectors(self) -> np.ndarray:
        """Array of shape ``shape + (ndim,)`` with the covariant ``k`` of every mode."""
        axes = [2 * np.pi * np.fft.fftfreq(n, h) for n, h in zip(self.shape, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def band_limited(self) -> "SpectralField":
        if np.isinf(self.cutoff):
            return self
        k = np.linalg.norm(self.wavevectors(), axis=-1)
        return replace(self, modes=np.where(k <= self.cutoff, self.modes, 0))

    def values(self) -> np.ndarray:
        return np.real(np.fft.ifftn(self.modes))

    def coordinates(self) -> list:
        return [np.arange(n) * h for n, h in zip(self.shape, self.spacing)]

    @property
    def unstable(self) -> bool:
        return self.max_growth > 1.0 + 1e-12


def spectral_evolve(f: SpectralField, a, drift=None, tau: float = 1.0, overflow: float = OVERFLOW_GROWTH) -> SpectralField:
    """Exact propagation: each mode is multiplied by ``exp[(-i k.beta - a k k) tau]``.

    The largest amplitude growth among populated modes is stored on the
    result (``unstable`` is set when it exceeds 1).  Growth beyond
    ``overflow`` raises :class:`InstabilityError`.
    """
    a = np.asarray(a, dtype=float)
    nd = len(f.shape)
    if a.shape != (nd, nd):
        raise ConfigurationError(f"diffusion tensor must be {nd}x{nd}")
    beta = np.zeros(nd) if drift is None else np.asarray(drift, dtype=float)
    k = f.wavevectors()
    akk = np.einsum("...m,mn,...n->...", k, a, k)
    rate = -akk * tau
    populated = f.modes != 0
    log_growth = float(rate[populated].max()) if np.any(populated) else 0.0
    if log_growth > math.log(overflow):
        raise InstabilityError(f"mode growth exp({log_growth:.3g}) exceeds {overflow:.3g}")
    growth = math.exp(log_growth)
    factor = np.exp(rate - 1j * (k @ beta) * tau)
    return replace(f, modes=np.where(populated, f.modes * factor, 0), max_growth=max(f.max_growth, growth))


def _shift(u, offsets, periodic):
    if periodic:
        return np.roll(u, shift=[-o for o in offsets], axis=list(range(u.ndim)))
    out = np.zeros_like(u)
    src, dst = [], []
    for o, n in zip(offsets, u.shape):
        if o >= 0:
            src.append(slice(o, n))
            dst.append(slice(0, n - o))
        else:
            src.append(slice(0, n + o))
            dst.append(slice(-o, n))
    out[tuple(dst)] = u[tuple(src)]
    return out


def fd_rhs(u, spacing, a, drift=None, periodic: bool = True) -> np.ndarray:
    """Central-difference right-hand side ``a^{mn} d_m d_n u - beta . grad u``."""
    nd = u.ndim
    e = np.eye(nd, dtype=int)
    out = np.zeros_like(u)
    for m in range(nd):
        plus, minus = _shift(u, e[m], periodic), _shift(u, -e[m], periodic)
        out += a[m, m] * (plus - 2 * u + minus) / spacing[m] ** 2
        if drift is not None and drift[m] != 0:
            out -= drift[m] * (plus - minus) / (2 * spacing[m])
        for n in range(m + 1, nd):
            if a[m, n] == 0 and a[n, m] == 0:
                continue
            pp = _shift(u, e[m] + e[n], periodic)
            pm = _shift(u, e[m] - e[n], periodic)
            mp = _shift(u, -e[m] + e[n], periodic)
            mm = _shift(u, -e[m] - e[n], periodic)
            out += (a[m, n] + a[n, m]) * (pp - pm - mp + mm) / (4 * spacing[m] * spacing[n])
    return out


def stable_dtau(a, spacing) -> float:
    """Largest explicit step with ``max|a| dtau / h_min^2 <= 1/4``."""
    amax = float(np.max(np.abs(a)))
    if amax == 0:
        return np.inf
    return CFL_LIMIT * float(np.min(spacing)) ** 2 / amax


def explicit_fd_evolve(u0, spacing, a, tau: float, dtau: float | None = None, drift=None, periodic: bool = True) -> np.ndarray:
    """Explicit Euler in ``tau`` with second-order central differences.

    No definiteness requirement on ``a``; the CFL bound is enforced.
    """
    u = np.array(u0, dtype=float)
    a = np.asarray(a, dtype=float)
    spacing = tuple(float(h) for h in np.broadcast_to(spacing, (u.ndim,)))
    if a.shape != (u.ndim, u.ndim):
        raise ConfigurationError(f"diffusion tensor must be {u.ndim}x{u.ndim}")
    if tau < 0:
        raise ConfigurationError("tau must be non-negative")
    if tau == 0 or (not np.any(a) and drift is None):
        return u
    limit = stable_dtau(a, spacing)
    if dtau is None:
        n = max(1, int(np.ceil(tau / min(limit, tau))))
    else:
        if np.max(np.abs(a)) * dtau / min(spacing) ** 2 > CFL_LIMIT + 1e-12:
            raise ConfigurationError(f"dtau={dtau} violates the CFL bound (max {limit:.3g})")
        n = max(1, int(round(tau / dtau)))
    h = tau / n
    for _ in range(n):
        u = u + h * fd_rhs(u, spacing, a, drift, periodic)
    return u


def real_sector_fd_solve(initial, spacing, a, tau: float, dtau: float | None = None, periodic: bool = True) -> np.ndarray:
    """Anisotropic diffusion of a density under a positive semidefinite tensor.

    Mass is conserved exactly on a periodic grid (to round-off otherwise,
    as long as the density stays away from the boundary).
    """
    a = np.asarray(a, dtype=float)
    if not np.allclose(a, a.T):
        raise ConfigurationError("diffusion tensor must be symmetric")
    if np.min(np.linalg.eigvalsh(a)) < -1e-12 * max(1.0, np.max(np.abs(a))):
        raise ConfigurationError("real-sector diffusion tensor must be positive semidefinite")
    return explicit_fd_evolve(initial, spacing, a, tau, dtau, None, periodic)


def gaussian_density(coords, mean, cov) -> np.ndarray:
    """Normal density evaluated on the tensor grid ``coords``."""
    grids = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1)
    diff = grids - np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    inv = np.linalg.inv(cov)
    q = np.einsum("...m,mn,...n->...", diff, inv, diff)
    norm = np.sqrt((2 * np.pi) ** len(coords) * np.linalg.det(cov))
    return np.exp(-0.5 * q) / norm


def _overlap(centres, edges) -> np.ndarray:
    """Length of each grid cell ``[c - h/2, c + h/2]`` inside each bin, ``(cells, bins)``."""
    c = np.asarray(centres, dtype=float)
    e = np.asarray(edges, dtype=float)
    h = c[1] - c[0]
    lo = np.maximum(c[:, None] - h / 2, e[None, :-1])
    hi = np.minimum(c[:, None] + h / 2, e[None, 1:])
    return np.clip(hi - lo, 0.0, None)


def bin_masses(density, coords, edges) -> np.ndarray:
    """Integrate a gridded density over histogram bins.

    Each grid value is spread uniformly over its cell and split between
    bins by overlap length, so bin edges need not align with the grid.
    """
    out = np.asarray(density, dtype=float)
    for axis, (c, e) in enumerate(zip(coords, edges)):
        out = np.moveaxis(np.tensordot(out, _overlap(c, e), axes=([axis], [0])), -1, axis)
    return out


def histogram_masses(points, edges) -> np.ndarray:
    """Fraction of ``points`` per bin (points outside the edges count as lost mass)."""
    counts, _ = np.histogramdd(points, bins=edges)
    return counts / len(points)


def l1_distance(p, q) -> float:
    return float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def moment_ode_check(mc, a, drift=None, x0=None) -> float:
    """Compare finite-difference slopes of track moments with the Fokker-Planck law.

    ``mc`` is a :class:`~relbrownian.process.CheckpointMoments`.  Between
    checkpoints the mean must advance with slope ``beta`` and the second
    moment with ``2 a`` plus the drift term ``d(m m^T)/dtau``.  Returns the
    largest deviation in units of the slope's standard error.
    """
    if len(mc.taus) < 2:
        raise InsufficientDataError("need at least two checkpoints")
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    beta = np.zeros(d) if drift is None else np.asarray(drift, dtype=float)
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    worst = 0.0
    for i, acc in enumerate(mc.slopes):
        r = report(acc)
        t0, t1 = mc.taus[i], mc.taus[i + 1]
        m0, m1 = x0 + beta * t0, x0 + beta * t1
        expected = 2 * a + (np.outer(m1, m1) - np.outer(m0, m0)) / (t1 - t0)
        worst = max(worst, deviation(r.cov, r.cov_stderr, expected))
        worst = max(worst, deviation(r.mean.real, r.mean_stderr, beta))
    return worst


def kg_mode_residual(k, kappa: float, a) -> float:
    """Residual of ``exp(-kappa tau + i k.x)`` in the drift-free equation.

    Zero on the shell ``kappa = a^{mu nu} k_mu k_nu``.
    """
    k = np.asarray(k, dtype=float)
    return float(abs(-kappa + k @ np.asarray(a, dtype=float) @ k))


def write_density_csv(path, values, coords) -> None:
    """Gridded density as CSV with a commented header of axis extents and spacing.

    Header lines read ``# axis <i>: start=<x0> stop=<x_last> step=<h> n=<count>``,
    followed by one row per grid point: the coordinates then the density.
    """
    values = np.asarray(values, dtype=float)
    with open(path, "w") as fh:
        for i, c in enumerate(coords):
            step = float(c[1] - c[0]) if len(c) > 1 else 0.0
            fh.write(f"# axis {i}: start={float(c[0])!r} stop={float(c[-1])!r} step={step!r} n={len(c)}\n")
        names = [f"x{i}" for i in range(len(coords))]
        fh.write(",".join(names + ["density"]) + "\n")
        grids = np.meshgrid(*coords, indexing="ij")
        for idx in np.ndindex(values.shape):
            row = [repr(float(g[idx])) for g in grids] + [repr(float(values[idx]))]
            fh.write(",".join(row) + "\n")


def read_density_csv(path):
    """Inverse of :func:`write_density_csv`; returns ``(values, coords)``."""
    coords = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# axis"):
            fields = dict(kv.split("=") for kv in line.split(":", 1)[1].split())
            start, step, n = float(fields["start"]), float(fields["step"]), int(fields["n"])
            coords.append(start + step * np.arange(n))
        elif line and not line.startswith("#"):
            body.append(line)
    data = np.loadtxt(body[1:], delimiter=",", ndmin=2)
    shape = tuple(len(c) for c in coords)
    return data[:, -1].reshape(shape), coords
