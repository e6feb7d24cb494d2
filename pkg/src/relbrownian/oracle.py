"""Closed forms and independent quadrature for the process integrals.

Everything here is deterministic and is what the Monte Carlo estimators
are tested against.  Two routes are kept apart on purpose:

* :func:`predicted_moments` evaluates the closed-form second moments
  obtained by integrating the Gaussian densities in hyperbolic
  coordinates (radial integral first, then the hyperbolic angle);
* :func:`sampled_moments` integrates the sampled distribution directly in
  Cartesian form, with no reference to the hyperbolic decomposition.

The two agree for the 4D Gaussian and both hyperbolic families.  For the
2D Gaussian the hyperbolic-coordinate closed form (``D dtau / pi``) covers
only one of the two branches of each sector and is half of what the
sampled distribution gives (``2 D dtau / pi``); see
:func:`gaussian_branch_factor`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .continuation import ContinuationRule
from .errors import ConfigurationError, DomainError, NumericalError
from .minkowski import Sector
from .sampler import Family

REL_TOL = 1e-10
ALPHA_WINDOW = 30.0


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = REL_TOL
    alpha_window: float = ALPHA_WINDOW

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if not self.alpha_window > 0:
            raise DomainError("alpha_window must be positive")


def _quad(f, a, b, spec: QuadratureSpec, points=None):
    value, err = integrate.quad(
        f, a, b, epsabs=0.0, epsrel=spec.rel_tol * 1e-2, limit=500, points=points
    )
    if not np.isfinite(value) or err > spec.rel_tol * max(abs(value), 1e-300):
        raise NumericalError(f"quadrature did not converge (value={value}, err={err})")
    return value


def gaussian_radial_integral(n: int, a: float) -> float:
    """``int_0^inf r^n exp(-a r^2) dr = Gamma((n+1)/2) / (2 a^((n+1)/2))``."""
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a non-negative integer, got {n}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    return math.gamma((n + 1) / 2) / (2 * a ** ((n + 1) / 2))


def gaussian_radial_quadrature(n: int, a: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    return _quad(lambda r: r**n * math.exp(-a * r * r), 0.0, np.inf, spec)


@dataclass(frozen=True)
class HyperbolicIntegrals:
    """``I_p = int dalpha / cosh^p(2 alpha)`` for ``p = 1, 2, 3``."""

    I1: float
    I2: float
    I3: float
    I1_quad: float
    I2_quad: float
    I3_quad: float

    def max_rel_error(self) -> float:
        pairs = [(self.I1, self.I1_quad), (self.I2, self.I2_quad), (self.I3, self.I3_quad)]
        return max(abs(q - c) / abs(c) for c, q in pairs)


def sech_power_integral(p: int, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Quadrature of ``1 / cosh^p(2 alpha)`` over ``|alpha| <= alpha_window``.

    The integrand is even and the neglected tail is below
    ``2^p exp(-2 p W) / p``.
    """
    w = spec.alpha_window
    return 2.0 * _quad(lambda a: math.cosh(2 * a) ** -p, 0.0, w, spec)


def hyperbolic_integrals(spec: QuadratureSpec = QuadratureSpec()) -> HyperbolicIntegrals:
    return HyperbolicIntegrals(
        math.pi / 2,
        1.0,
        math.pi / 4,
        sech_power_integral(1, spec),
        sech_power_integral(2, spec),
        sech_power_integral(3, spec),
    )


def gamma_order(L: float) -> float:
    """Mean of ``sinh^2 alpha`` for ``alpha`` uniform on ``[-L, L]``."""
    if not L > 0:
        raise DomainError(f"L must be positive, got {L}")
    if L < 1e-4:
        # series avoids cancellation in sinh(2L)/(2L) - 1
        return L * L / 3 + L**4 / 15
    return (math.sinh(2 * L) / (2 * L) - 1) / 2


def gamma_order_quadrature(L: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    if not L > 0:
        raise DomainError(f"L must be positive, got {L}")
    return _quad(lambda a: math.sinh(a) ** 2, 0.0, L, spec) / L


# --- sector moments -------------------------------------------------------
#
# Per-sector second moments, in units of D dtau, as the tuple
# (time-time timelike, time-time spacelike, spatial timelike, spatial spacelike).
# "Spatial" is a single spatial diagonal entry.


def _hyperbolic_sector_moments_paper(dim: int) -> tuple:
    """Hyperbolic-coordinate integrals over one branch of each sector."""
    i1, i2, i3 = math.pi / 2, 1.0, math.pi / 4
    if dim == 2:
        # (1 / 2 pi) * 2 * int (cosh^2 or sinh^2) / cosh^2(2a) da
        c = 1 / math.pi
        return (c * (i1 + i2) / 2, c * (i1 - i2) / 2, c * (i1 - i2) / 2, c * (i1 + i2) / 2)
    # (8 / pi) int cosh^2 sinh^2 / cosh^3(2a) and (8 / 3 pi) int sinh^4 or cosh^4 / cosh^3(2a)
    tt = 8 / math.pi * (i1 - i3) / 4
    xt = 8 / (3 * math.pi) * (i1 - 2 * i2 + i3) / 4
    xs = 8 / (3 * math.pi) * (i1 + 2 * i2 + i3) / 4
    return (tt, tt, xt, xs)


def gaussian_sector_moments(dim: int, spec: QuadratureSpec = QuadratureSpec()) -> tuple:
    """Sector moments of the standard ``dim``-variate normal, by quadrature.

    Uses only Cartesian facts: the squared spatial length ``q`` is
    chi-squared with ``k = dim - 1`` degrees of freedom and
    ``E[q; q < u] = k F_{k+2}(u)``.
    """
    k = dim - 1
    phi = stats.norm.pdf
    tt = 2 * _quad(lambda x: x * x * phi(x) * stats.chi2.cdf(x * x, k), 0.0, 40.0, spec)
    qt = 2 * _quad(lambda x: phi(x) * k * stats.chi2.cdf(x * x, k + 2), 0.0, 40.0, spec)
    xt = qt / k
    return (tt, 1.0 - tt, xt, 1.0 - xt)


def gaussian_branch_factor(dim: int) -> float:
    """Ratio sampled / hyperbolic-closed-form for the Gaussian families (2 in 2D, 1 in 4D)."""
    sampled = gaussian_sector_moments(dim)
    closed = _hyperbolic_sector_moments_paper(dim)
    return sampled[0] / closed[0]


def _combine(sector_moments, dim, rule, p_t=1.0, p_s=1.0, m_t=1.0, m_s=1.0):
    tt_t, tt_s, xx_t, xx_s = sector_moments
    w_t = 1.0 if rule.physical_sector is Sector.TIMELIKE else -rule.lam**2
    w_s = 1.0 if rule.physical_sector is Sector.SPACELIKE else -rule.lam**2
    out = np.zeros((dim, dim))
    out[0, 0] = p_t * w_t * m_t * tt_t + p_s * w_s * m_s * tt_s
    spatial = p_t * w_t * m_t * xx_t + p_s * w_s * m_s * xx_s
    out[np.arange(1, dim), np.arange(1, dim)] = spatial
    return out


def _hyperbolic_moments(family, D, dtau, rule, L, sector_mix, timelike_scale):
    g = gamma_order(L)
    k = family.dim - 1
    m_s = (1.0 if k == 1 else 4.0) * D * dtau
    m_t = timelike_scale * m_s
    # per unit mean squared interval: time gets cosh^2 (timelike) or sinh^2
    sector = (1 + g, g, g / k, (1 + g) / k)
    return _combine(sector, family.dim, rule, sector_mix, 1 - sector_mix, m_t, m_s)


def _rule_or_default(family, rule):
    if rule is not None:
        return rule
    from .continuation import lambda_critical

    lam = lambda_critical() if family is Family.GAUSSIAN_4D else 1.0
    return ContinuationRule(Sector.TIMELIKE, lam)


def predicted_moments(
    family,
    D: float = 1.0,
    dtau: float = 1.0,
    rule: ContinuationRule | None = None,
    *,
    L: float = 1.0,
    sector_mix: float = 0.5,
    timelike_scale: float = 1.0,
) -> np.ndarray:
    """Closed-form weighted second-moment tensor of a single jump.

    Gaussian families use the hyperbolic-coordinate integrals; at
    ``lam = 1`` the 2D result is ``diag(1, -1) D dtau / pi`` and the 4D
    time-time entry vanishes, while at the critical weight the 4D tensor
    is ``diag(1, -1, -1, -1) * 4 D dtau / (3 pi + 4)`` (timelike physical).
    Hyperbolic families use the sector mix, radial scales and the cutoff
    ``L`` through ``gamma_order(L)``.
    """
    family = Family.parse(family)
    if not (D > 0 and dtau > 0):
        raise DomainError("D and dtau must be positive")
    rule = _rule_or_default(family, rule)
    if family.hyperbolic:
        return _hyperbolic_moments(family, D, dtau, rule, L, sector_mix, timelike_scale)
    if family in (Family.GAUSSIAN_2D, Family.GAUSSIAN_4D):
        return D * dtau * _combine(_hyperbolic_sector_moments_paper(family.dim), family.dim, rule)
    raise ConfigurationError(f"unsupported family {family}")


def sampled_moments(
    family,
    D: float = 1.0,
    dtau: float = 1.0,
    rule: ContinuationRule | None = None,
    *,
    L: float = 1.0,
    sector_mix: float = 0.5,
    timelike_scale: float = 1.0,
) -> np.ndarray:
    """Weighted second-moment tensor of the distribution the samplers draw from.

    Gaussian families are integrated in Cartesian form
    (:func:`gaussian_sector_moments`); hyperbolic families have no branch
    ambiguity and coincide with :func:`predicted_moments`.
    """
    family = Family.parse(family)
    rule = _rule_or_default(family, rule)
    if family.hyperbolic:
        return predicted_moments(
            family, D, dtau, rule, L=L, sector_mix=sector_mix, timelike_scale=timelike_scale
        )
    return D * dtau * _combine(gaussian_sector_moments(family.dim), family.dim, rule)


def sampled_config_moments(cfg, rule: ContinuationRule | None = None) -> np.ndarray:
    """:func:`sampled_moments` for a :class:`~relbrownian.sampler.JumpDistributionConfig`."""
    return sampled_moments(
        cfg.family,
        cfg.D,
        cfg.dtau,
        rule,
        L=cfg.L,
        sector_mix=cfg.sector_mix,
        timelike_scale=cfg.timelike_scale,
    )


def timelike_probability(dim: int) -> float:
    """Probability that an isotropic Gaussian jump is timelike.

    ``t^2 / (q / k)`` is F(1, k)-distributed, so the probability is
    ``P(F(1, k) > k)``; 1/2 in 2D and about 0.1817 in 4D.
    """
    k = dim - 1
    return float(stats.f.sf(k, 1, k))


def tau_marginal_kernel(dx: float, dt: float) -> float:
    """Unnormalised ``1 / (dx^2 + dt^2)``.

    Up to a constant this is the 4D Gaussian transition density integrated
    over all ``tau``; it is not integrable over spacetime and therefore
    does not define a probability density.
    """
    r2 = dx * dx + dt * dt
    if r2 == 0:
        raise DomainError("kernel is singular at the origin")
    return 1.0 / r2


def tau_integrated_gaussian(w, D: float = 1.0, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Quadrature of the 4D Gaussian transition density over ``tau in (0, inf)``.

    Equals ``1 / (2 pi^2 D |w|^2)`` with ``|w|`` the Euclidean length.
    """
    w = np.asarray(w, dtype=float)
    r2 = float(w @ w)
    if r2 == 0:
        raise DomainError("integral diverges at the origin")
    dens = lambda t: math.exp(-r2 / (2 * D * t)) / (4 * math.pi**2 * D**2 * t * t)  # noqa: E731
    # substitute t = r2 / (2 D s) to map the peak near s ~ 1
    scale = r2 / (2 * D)
    return _quad(lambda s: dens(scale / s) * scale / (s * s), 0.0, np.inf, spec)


@dataclass(frozen=True)
class ProperTimeReport:
    """Mismatch between ``ds^2`` and a diffusion law ``sigma^2 ds``."""

    steps: tuple
    sigma2: float
    lhs: tuple
    rhs: tuple
    ratios: tuple
    contradiction: bool


def proper_time_inconsistency_demo(sigma2: float = 1.0, steps=(0.01, 0.0001)) -> ProperTimeReport:
    """Show that a proper-time-parametrised diffusion is inconsistent.

    The interval of a step is ``ds^2`` by definition while the Brownian
    law demands it be proportional to ``ds``; the ratio of the two is
    ``ds / sigma^2`` and cannot stay 1 as ``ds -> 0``.  With
    ``sigma2 == 0`` there is no diffusion and no contradiction.
    """
    steps = tuple(float(s) for s in steps)
    lhs = tuple(s * s for s in steps)
    rhs = tuple(sigma2 * s for s in steps)
    if sigma2 == 0:
        return ProperTimeReport(steps, sigma2, lhs, rhs, tuple(math.nan for _ in steps), False)
    ratios = tuple(l / r for l, r in zip(lhs, rhs))
    contradiction = any(not math.isclose(r, 1.0) for r in ratios) and len(set(ratios)) > 1
    return ProperTimeReport(steps, sigma2, lhs, rhs, ratios, contradiction)


def closed_form_constants() -> dict:
    """Closed forms checked by ``verify-integrals``."""
    from .continuation import effective_diffusion, lambda_squared_critical

    return {
        "I1": math.pi / 2,
        "I2": 1.0,
        "I3": math.pi / 4,
        "lambda_sq": lambda_squared_critical(),
        "Dbreve_over_D": effective_diffusion(1.0),
    }


def quadrature_constants(spec: QuadratureSpec = QuadratureSpec()) -> dict:
    """Independent numerical evaluation of :func:`closed_form_constants`.

    The weight and effective diffusion come from solving the isotropy
    condition with sector moments obtained by quadrature of the
    hyperbolic-angle integrands.
    """
    hi = hyperbolic_integrals(spec)
    w = spec.alpha_window

    def alpha_int(f):
        return 2.0 * _quad(lambda a: f(a) / math.cosh(2 * a) ** 3, 0.0, w, spec)

    tt = 8 / math.pi * alpha_int(lambda a: math.cosh(a) ** 2 * math.sinh(a) ** 2)
    xt = 8 / (3 * math.pi) * alpha_int(lambda a: math.sinh(a) ** 4)
    xs = 8 / (3 * math.pi) * alpha_int(lambda a: math.cosh(a) ** 4)
    # tt*(1 - l2) = -(xt - l2*xs)  ->  l2 = (tt + xt) / (tt + xs)
    lam2 = (tt + xt) / (tt + xs)
    return {
        "I1": hi.I1_quad,
        "I2": hi.I2_quad,
        "I3": hi.I3_quad,
        "lambda_sq": lam2,
        "Dbreve_over_D": tt * (1 - lam2),
    }
