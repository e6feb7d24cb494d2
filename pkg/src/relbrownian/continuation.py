"""Complex weighting of jumps from the unphysical sector.

One sector is declared physical and enters the averages unchanged; a jump
from the other sector is represented as ``i * lam`` times its real
increment.  In second moments this contributes with weight
``(i lam)^2 = -lam^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .minkowski import Sector, as_sector


@dataclass(frozen=True)
class ContinuationRule:
    physical_sector: Sector = Sector.TIMELIKE
    lam: float = 1.0

    def __post_init__(self):
        sector = as_sector(self.physical_sector)
        if sector is Sector.LIGHTLIKE:
            raise DomainError("physical sector must be timelike or spacelike")
        object.__setattr__(self, "physical_sector", sector)
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise DomainError(f"lambda must be finite and >= 0, got {self.lam}")

    def first_factor(self, sector) -> complex:
        """Factor multiplying a jump of ``sector`` in first moments."""
        sector = as_sector(sector)
        if sector is Sector.LIGHTLIKE:
            raise DomainError("lightlike jump cannot be weighted")
        return 1.0 + 0j if sector is self.physical_sector else 1j * self.lam

    def first_factors(self, codes) -> np.ndarray:
        """Vectorised :meth:`first_factor` over ``int8`` sector codes."""
        codes = np.asarray(codes)
        if np.any(codes == Sector.LIGHTLIKE):
            raise DomainError("lightlike jump cannot be weighted")
        return np.where(codes == self.physical_sector, 1.0 + 0j, 1j * self.lam)

    def second_factors(self, codes) -> np.ndarray:
        codes = np.asarray(codes)
        if np.any(codes == Sector.LIGHTLIKE):
            raise DomainError("lightlike jump cannot be weighted")
        return np.where(codes == self.physical_sector, 1.0, -self.lam**2)

    def swapped(self) -> "ContinuationRule":
        return ContinuationRule(self.physical_sector.other, self.lam)


def weight_jump(j, rule: ContinuationRule) -> np.ndarray:
    """Complex representation of a single jump."""
    return rule.first_factor(j.sector) * np.asarray(j.vector, dtype=float)


def second_moment_weight(sector, rule: ContinuationRule) -> float:
    """``+1`` for the physical sector, ``-lam^2`` otherwise."""
    sector = as_sector(sector)
    if sector is Sector.LIGHTLIKE:
        raise DomainError("lightlike jump cannot be weighted")
    return 1.0 if sector is rule.physical_sector else -rule.lam**2


def lambda_squared_critical(physical_sector=Sector.TIMELIKE) -> float:
    """Weight that makes the 4D Gaussian second moments proportional to the metric.

    With timelike physical jumps this is ``(3 pi - 4) / (3 pi + 4)``; with
    spacelike physical jumps the roles of the sectors swap and the
    reciprocal is returned.
    """
    value = (3 * math.pi - 4) / (3 * math.pi + 4)
    return value if as_sector(physical_sector) is Sector.TIMELIKE else 1.0 / value


def lambda_critical(physical_sector=Sector.TIMELIKE) -> float:
    return math.sqrt(lambda_squared_critical(physical_sector))


def effective_diffusion(D: float) -> float:
    """Coefficient of ``eta dtau`` in the critical 4D Gaussian moments, ``4D / (3 pi + 4)``."""
    if not D > 0:
        raise DomainError(f"D must be positive, got {D}")
    return 4.0 * D / (3 * math.pi + 4)


def ratio_3plus1(gamma: float) -> float:
    """Isotropy condition of the 3+1 hyperbolic process.

    Ratio of the continued-sector to the physical-sector mean squared
    interval, ``(1 + 4 gamma) / (3 + 4 gamma)``, where ``gamma`` is the
    mean of ``sinh^2`` of the hyperbolic angle.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if math.isinf(gamma):
        return 1.0
    return (1 + 4 * gamma) / (3 + 4 * gamma)


def isotropic_timelike_scale(gamma: float, rule: ContinuationRule, sector_mix: float = 0.5) -> float:
    """``timelike_scale`` that satisfies the 3+1 isotropy condition.

    Generalises :func:`ratio_3plus1` to arbitrary sector mix and weight:
    the condition is ``p_t <sig^2> / (lam^2 p_s <mu^2>) = R`` for timelike
    physical jumps and ``lam^2 p_t <sig^2> / (p_s <mu^2>) = R`` for
    spacelike physical jumps.
    """
    if not 0 < sector_mix < 1:
        raise DomainError("sector_mix must lie strictly between 0 and 1")
    r = ratio_3plus1(gamma) * (1 - sector_mix) / sector_mix
    lam2 = rule.lam**2
    if lam2 == 0:
        raise DomainError("lambda = 0 removes the continued sector entirely")
    return r * lam2 if rule.physical_sector is Sector.TIMELIKE else r / lam2
