"""Monte Carlo simulation of relativistically covariant Brownian motion.

Events evolve in an invariant parameter ``tau`` through jumps split into
timelike and spacelike sectors.  One sector is taken as physical; jumps
from the other carry the imaginary weight ``i lam``, so the averaged
second-order operator becomes a d'Alembertian.  The package provides the
jump samplers, the weighting and moment estimators, closed-form and
quadrature oracles, worldline evolution, and a covariant Fokker-Planck
solver to check them against.
"""

from .continuation import (
    ContinuationRule,
    effective_diffusion,
    isotropic_timelike_scale,
    lambda_critical,
    lambda_squared_critical,
    ratio_3plus1,
    second_moment_weight,
    weight_jump,
)
from .ensemble import SimulationConfig, jump_accumulator, jump_moments, map_chunks, sample_ensemble
from .errors import (
    ConfigurationError,
    DomainError,
    InstabilityError,
    InsufficientDataError,
    NumericalError,
    RelBrownianError,
)
from .minkowski import MOSTLY_MINUS, MOSTLY_PLUS, Boost, Sector, Signature, boost_tensor, boost_vector, classify, norm_squared
from .oracle import gamma_order, hyperbolic_integrals, predicted_moments, sampled_moments
from .process import DriftField, JumpSchedule, WorldlineRecord, evolve, evolve_ensemble, segment_worldline
from .sampler import Family, Jump, JumpBatch, JumpDistributionConfig, sample_jumps
from .stats import ComplexMomentAccumulator, MomentReport, merge, report

__version__ = "0.1.0"

__all__ = [
    "Boost",
    "ComplexMomentAccumulator",
    "ConfigurationError",
    "ContinuationRule",
    "DomainError",
    "DriftField",
    "Family",
    "InstabilityError",
    "InsufficientDataError",
    "Jump",
    "JumpBatch",
    "JumpDistributionConfig",
    "JumpSchedule",
    "MOSTLY_MINUS",
    "MOSTLY_PLUS",
    "MomentReport",
    "NumericalError",
    "RelBrownianError",
    "Sector",
    "Signature",
    "SimulationConfig",
    "WorldlineRecord",
    "boost_tensor",
    "boost_vector",
    "classify",
    "effective_diffusion",
    "evolve",
    "evolve_ensemble",
    "gamma_order",
    "hyperbolic_integrals",
    "isotropic_timelike_scale",
    "jump_accumulator",
    "jump_moments",
    "lambda_critical",
    "lambda_squared_critical",
    "map_chunks",
    "merge",
    "norm_squared",
    "predicted_moments",
    "ratio_3plus1",
    "report",
    "sample_ensemble",
    "sample_jumps",
    "sampled_moments",
    "second_moment_weight",
    "segment_worldline",
    "weight_jump",
]
