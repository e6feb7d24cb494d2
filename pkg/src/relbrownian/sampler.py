"""Single-step Brownian jump generators.

Four families are available:

``hyperbolic-1+1``
    Jumps on hyperbolae of fixed invariant interval.  Spacelike jumps are
    ``(mu sinh a, +-mu cosh a)``, timelike ones ``(+-sig cosh a, sig sinh a)``,
    with the hyperbolic angle ``a`` uniform on ``[-L, L]`` and the radial
    variable half-Gaussian, density ``~ exp(-r^2 / (2 D dtau))``.
``hyperbolic-3+1``
    The same in 3+1 dimensions with an isotropic spatial direction and
    radial density ``~ r^3 exp(-r^2 / (2 D dtau))``.
``gaussian-2d`` / ``gaussian-4d``
    Independent components of variance ``D dtau``; the sector is read off
    the sampled vector.

Timelike radial draws use the diffusion scale ``timelike_scale * D``, so
``timelike_scale`` is the ratio of the timelike to the spacelike mean
squared interval.  Batch sampling (:func:`sample_jumps`) is the workhorse;
the single-jump functions wrap it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .minkowski import LIGHTLIKE_TOL, MOSTLY_PLUS, Sector, as_sector, sector_codes


class Family(str, enum.Enum):
    HYPERBOLIC_11 = "hyperbolic-1+1"
    HYPERBOLIC_31 = "hyperbolic-3+1"
    GAUSSIAN_2D = "gaussian-2d"
    GAUSSIAN_4D = "gaussian-4d"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ConfigurationError(f"unknown family {value!r}; expected one of {names}") from None

    @property
    def dim(self) -> int:
        return 2 if self in (Family.HYPERBOLIC_11, Family.GAUSSIAN_2D) else 4

    @property
    def hyperbolic(self) -> bool:
        return self in (Family.HYPERBOLIC_11, Family.HYPERBOLIC_31)


@dataclass(frozen=True)
class JumpDistributionConfig:
    """Parameters of a jump distribution.

    ``sector_mix`` is the probability of a timelike draw and
    ``forward_only`` pins the time orientation of timelike jumps to
    ``+1``; both apply to the hyperbolic families only.
    """

    family: Family = Family.GAUSSIAN_4D
    D: float = 1.0
    dtau: float = 1.0
    L: float = 1.0
    sector_mix: float = 0.5
    timelike_scale: float = 1.0
    forward_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if not (self.D > 0 and np.isfinite(self.D)):
            raise ConfigurationError(f"D must be positive, got {self.D}")
        if not (self.dtau > 0 and np.isfinite(self.dtau)):
            raise ConfigurationError(f"dtau must be positive, got {self.dtau}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ConfigurationError(f"cutoff L must be positive, got {self.L}")
        if not 0.0 <= self.sector_mix <= 1.0:
            raise ConfigurationError(f"sector_mix must lie in [0, 1], got {self.sector_mix}")
        if not (self.timelike_scale > 0 and np.isfinite(self.timelike_scale)):
            raise ConfigurationError("timelike_scale must be positive")

    @property
    def dim(self) -> int:
        return self.family.dim

    def with_dtau(self, dtau: float) -> "JumpDistributionConfig":
        return replace(self, dtau=dtau)


@dataclass(frozen=True)
class HyperbolicCoords:
    """Hyperbolic coordinates of a jump.

    ``theta`` and ``phi`` are ``None`` in 1+1 dimensions.  ``sign`` is the
    branch: it multiplies the spatial component of a 1+1 spacelike jump
    and the time component of a timelike jump.
    """

    radial: float
    alpha: float
    theta: float | None = None
    phi: float | None = None
    sign: int = 1

    @property
    def dim(self) -> int:
        return 2 if self.theta is None else 4


@dataclass(frozen=True)
class Jump:
    vector: np.ndarray
    sector: Sector
    coords: HyperbolicCoords | None = None


@dataclass
class JumpBatch:
    """``n`` jumps stored column-wise.  Coordinate arrays may be ``None``."""

    vectors: np.ndarray
    sectors: np.ndarray
    radial: np.ndarray | None = None
    alpha: np.ndarray | None = None
    theta: np.ndarray | None = None
    phi: np.ndarray | None = None
    sign: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, i: int) -> Jump:
        coords = None
        if self.radial is not None:
            coords = HyperbolicCoords(
                float(self.radial[i]),
                float(self.alpha[i]),
                None if self.theta is None else float(self.theta[i]),
                None if self.phi is None else float(self.phi[i]),
                int(self.sign[i]),
            )
        return Jump(self.vectors[i].copy(), Sector(int(self.sectors[i])), coords)


def _unit_vectors(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _assemble(sectors, radial, alpha, theta, phi, sign):
    """Vectors from hyperbolic coordinates (vectorised inverse map)."""
    timelike = sectors == Sector.TIMELIKE
    ch, sh = np.cosh(alpha), np.sinh(alpha)
    # time part / "length" part of each jump
    along_t = np.where(timelike, sign * ch, sh)
    along_x = np.where(timelike, sh, ch)
    if theta is None:
        along_x = np.where(timelike, along_x, sign * along_x)
        return radial[:, None] * np.stack([along_t, along_x], axis=-1)
    n = _unit_vectors(theta, phi)
    out = np.empty((len(radial), 4))
    out[:, 0] = radial * along_t
    out[:, 1:] = (radial * along_x)[:, None] * n
    return out


def _radial_draw(rng, size, dof):
    """Unit-scale radial variable with density ~ r^(dof-1) exp(-r^2 / 2)."""
    if dof == 1:
        r = np.abs(rng.standard_normal(size))
    else:
        r = np.sqrt(rng.gamma(dof / 2.0, 2.0, size))
    # r == 0 would be lightlike; redraw (probability zero in exact arithmetic)
    bad = r == 0
    while np.any(bad):
        r[bad] = _radial_draw(rng, int(bad.sum()), dof)
        bad = r == 0
    return r


def _sample_hyperbolic(cfg, n, rng, sector):
    three = cfg.family is Family.HYPERBOLIC_31
    if sector is None and 0.0 < cfg.sector_mix < 1.0:
        timelike = rng.random(n) < cfg.sector_mix
    elif sector is None:
        timelike = np.full(n, cfg.sector_mix == 1.0)
    else:
        sector = as_sector(sector)
        if sector is Sector.LIGHTLIKE:
            raise DomainError("cannot sample lightlike jumps")
        timelike = np.full(n, sector is Sector.TIMELIKE)
    sectors = np.where(timelike, Sector.TIMELIKE, Sector.SPACELIKE).astype(np.int8)

    alpha = rng.uniform(-cfg.L, cfg.L, n)
    sign = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    if cfg.forward_only:
        sign = np.where(timelike, 1, sign).astype(np.int8)
    if three:
        # uniform on the sphere: cos(theta) uniform on [-1, 1]
        theta = np.arccos(rng.uniform(-1.0, 1.0, n))
        phi = rng.uniform(0.0, 2 * np.pi, n)
        # the spacelike 3+1 map has no separate branch
        sign = np.where(timelike, sign, 1).astype(np.int8)
    else:
        theta = phi = None

    dof = 4 if three else 1
    base = cfg.D * cfg.dtau
    scale = np.sqrt(np.where(timelike, base * cfg.timelike_scale, base))
    radial = _radial_draw(rng, n, dof) * scale
    vectors = _assemble(sectors, radial, alpha, theta, phi, sign)
    return JumpBatch(vectors, sectors, radial, alpha, theta, phi, sign)


def recover_coords(vectors, sectors):
    """Hyperbolic coordinates of arbitrary timelike/spacelike vectors.

    For 3+1 timelike vectors the pair ``(alpha, direction)`` is only
    defined up to a simultaneous sign flip; ``alpha >= 0`` is chosen.
    """
    v = np.asarray(vectors, dtype=float)
    sectors = np.asarray(sectors)
    if np.any(sectors == Sector.LIGHTLIKE):
        raise DomainError("lightlike vectors have no hyperbolic coordinates")
    timelike = sectors == Sector.TIMELIKE
    t = v[:, 0]
    spatial = v[:, 1:]
    if v.shape[1] == 2:
        x = spatial[:, 0]
        radial = np.sqrt(np.abs(t * t - x * x))
        alpha = np.where(timelike, np.arcsinh(x / radial), np.arcsinh(t / radial))
        sign = np.where(timelike, np.sign(t), np.sign(x)).astype(np.int8)
        return radial, alpha, None, None, sign
    length = np.linalg.norm(spatial, axis=1)
    radial = np.sqrt(np.abs(t * t - length * length))
    alpha = np.where(timelike, np.arcsinh(length / radial), np.arcsinh(t / radial))
    sign = np.where(timelike, np.sign(t), 1).astype(np.int8)
    safe = np.where(length > 0, length, 1.0)
    theta = np.where(length > 0, np.arccos(np.clip(spatial[:, 2] / safe, -1.0, 1.0)), 0.0)
    phi = np.mod(np.arctan2(spatial[:, 1], spatial[:, 0]), 2 * np.pi)
    return radial, alpha, theta, phi, sign


def _sample_gaussian(cfg, n, rng):
    scale = np.sqrt(cfg.D * cfg.dtau)
    vectors = rng.standard_normal((n, cfg.dim)) * scale
    sectors = sector_codes(vectors, MOSTLY_PLUS, LIGHTLIKE_TOL * cfg.D * cfg.dtau)
    bad = sectors == Sector.LIGHTLIKE
    while np.any(bad):
        vectors[bad] = rng.standard_normal((int(bad.sum()), cfg.dim)) * scale
        sectors = sector_codes(vectors, MOSTLY_PLUS, LIGHTLIKE_TOL * cfg.D * cfg.dtau)
        bad = sectors == Sector.LIGHTLIKE
    radial, alpha, theta, phi, sign = recover_coords(vectors, sectors)
    return JumpBatch(vectors, sectors, radial, alpha, theta, phi, sign)


def sample_jumps(cfg: JumpDistributionConfig, n: int, rng: np.random.Generator, sector=None) -> JumpBatch:
    """Draw ``n`` independent jumps.

    ``sector`` forces every jump of a hyperbolic family into one sector;
    it is not accepted for the Gaussian families, whose sector follows
    from the sampled vector.
    """
    if n < 0:
        raise ConfigurationError("n must be non-negative")
    if cfg.family.hyperbolic:
        return _sample_hyperbolic(cfg, n, rng, sector)
    if sector is not None:
        raise ConfigurationError("Gaussian families do not take a forced sector")
    return _sample_gaussian(cfg, n, rng)


def _require(cfg, *families):
    if cfg.family not in families:
        raise ConfigurationError(f"{cfg.family.value} config passed to a {families[0].value} sampler")


def sample_hyperbolic_11(cfg: JumpDistributionConfig, sector, rng: np.random.Generator) -> Jump:
    _require(cfg, Family.HYPERBOLIC_11)
    return _sample_hyperbolic(cfg, 1, rng, sector)[0]


def sample_hyperbolic_31(cfg: JumpDistributionConfig, sector, rng: np.random.Generator) -> Jump:
    _require(cfg, Family.HYPERBOLIC_31)
    return _sample_hyperbolic(cfg, 1, rng, sector)[0]


def sample_gaussian(cfg: JumpDistributionConfig, rng: np.random.Generator) -> Jump:
    _require(cfg, Family.GAUSSIAN_2D, Family.GAUSSIAN_4D)
    return _sample_gaussian(cfg, 1, rng)[0]


def reconstruct(coords: HyperbolicCoords, sector) -> np.ndarray:
    """Vector with the given hyperbolic coordinates in ``sector``."""
    sector = as_sector(sector)
    if coords.radial < 0:
        raise DomainError(f"radial coordinate must be >= 0, got {coords.radial}")
    if sector is Sector.LIGHTLIKE:
        raise DomainError("lightlike vectors have no hyperbolic coordinates")
    one = lambda x: None if x is None else np.array([x], dtype=float)  # noqa: E731
    v = _assemble(
        np.array([sector], dtype=np.int8),
        np.array([coords.radial], dtype=float),
        np.array([coords.alpha], dtype=float),
        one(coords.theta),
        one(coords.phi if coords.phi is not None or coords.theta is None else 0.0),
        np.array([coords.sign]),
    )
    return v[0]
