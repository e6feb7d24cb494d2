"""Reproducible chunked ensembles.

An ensemble of ``n`` samples is cut into chunks of ``chunk_size``.  Chunk
``i`` draws from a Philox generator keyed by ``(seed, stream, i)``, so its
output depends only on the seed and its index, never on which thread ran
it.  Results are merged in chunk order, which makes every estimate
bit-identical for a fixed ``(seed, chunk_size)`` regardless of ``threads``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .continuation import ContinuationRule, isotropic_timelike_scale, lambda_critical
from .errors import ConfigurationError
from .minkowski import MOSTLY_PLUS, Boost, Sector, Signature, as_sector, as_signature, boost_vector
from .oracle import gamma_order
from .sampler import Family, JumpDistributionConfig, sample_jumps
from .stats import ComplexMomentAccumulator, merge_all, report

DEFAULT_CHUNK = 100_000

# stream ids keep unrelated uses of one seed apart
STREAM_JUMPS = 0
STREAM_WALKERS = 1
STREAM_INITIAL = 2


def chunk_rng(seed: int, chunk: int, stream: int = STREAM_JUMPS) -> np.random.Generator:
    """Counter-based generator for one chunk."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(n: int, chunk_size: int = DEFAULT_CHUNK) -> list[int]:
    if n < 0:
        raise ConfigurationError("ensemble size must be non-negative")
    if chunk_size <= 0:
        raise ConfigurationError("chunk_size must be positive")
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(fn, n: int, seed: int, *, chunk_size: int = DEFAULT_CHUNK, threads: int = 1, stream: int = STREAM_JUMPS):
    """Call ``fn(size, rng, index)`` for every chunk; results in chunk order."""
    sizes = chunk_sizes(n, chunk_size)
    tasks = [(size, i) for i, size in enumerate(sizes)]

    def run(task):
        size, i = task
        return fn(size, chunk_rng(seed, i, stream), i)

    if threads <= 1 or len(tasks) <= 1:
        return [run(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, tasks))


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to reproduce a run.

    ``lam=None`` selects the family default (the critical weight for
    ``gaussian-4d``, 1 otherwise).  ``timelike_scale=None`` selects the
    value satisfying the isotropy condition for the hyperbolic families
    and 1 for the Gaussian ones.
    """

    family: Family = Family.GAUSSIAN_4D
    physical_sector: Sector = Sector.TIMELIKE
    lam: float | None = None
    D: float = 1.0
    dtau: float = 1.0
    L: float = 1.0
    n: int = 100_000
    seed: int = 0
    signature: Signature = MOSTLY_PLUS
    sector_mix: float = 0.5
    timelike_scale: float | None = None
    steps: int = 1
    tau_J: float | None = None
    chunk_size: int = DEFAULT_CHUNK
    threads: int = 1
    forward_only: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "physical_sector", as_sector(self.physical_sector))
        object.__setattr__(self, "signature", as_signature(self.signature))
        if self.n < 0 or self.steps < 0:
            raise ConfigurationError("n and steps must be non-negative")
        if self.tau_J is not None and not self.tau_J > 0:
            raise ConfigurationError("tau_J must be positive")

    @property
    def dim(self) -> int:
        return self.family.dim

    @property
    def resolved_lam(self) -> float:
        if self.lam is not None:
            return float(self.lam)
        if self.family is Family.GAUSSIAN_4D:
            return lambda_critical(self.physical_sector)
        return 1.0

    @property
    def rule(self) -> ContinuationRule:
        return ContinuationRule(self.physical_sector, self.resolved_lam)

    @property
    def resolved_timelike_scale(self) -> float:
        if self.timelike_scale is not None:
            return float(self.timelike_scale)
        if self.family is Family.HYPERBOLIC_31 and 0 < self.sector_mix < 1:
            return isotropic_timelike_scale(gamma_order(self.L), self.rule, self.sector_mix)
        if self.family is Family.HYPERBOLIC_11 and 0 < self.sector_mix < 1:
            lam2 = self.resolved_lam**2
            r = (1 - self.sector_mix) / self.sector_mix
            return r * lam2 if self.physical_sector is Sector.TIMELIKE else r / lam2
        return 1.0

    def jump_config(self, dtau: float | None = None) -> JumpDistributionConfig:
        return JumpDistributionConfig(
            self.family,
            self.D,
            self.dtau if dtau is None else dtau,
            self.L,
            self.sector_mix,
            self.resolved_timelike_scale,
            self.forward_only,
        )

    def replace(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["family"] = self.family.value
        out["physical_sector"] = self.physical_sector.name.lower()
        out["signature"] = self.signature.value
        out["lam_resolved"] = self.resolved_lam
        out["timelike_scale_resolved"] = self.resolved_timelike_scale
        return out


def jump_chunks(cfg: SimulationConfig, fn, *, stream: int = STREAM_JUMPS):
    """Sample ``cfg.n`` jumps chunk by chunk and apply ``fn(batch, index)``."""
    jcfg = cfg.jump_config()
    return map_chunks(
        lambda size, rng, i: fn(sample_jumps(jcfg, size, rng), i),
        cfg.n,
        cfg.seed,
        chunk_size=cfg.chunk_size,
        threads=cfg.threads,
        stream=stream,
    )


def jump_accumulator(cfg: SimulationConfig, boost: Boost | None = None) -> ComplexMomentAccumulator:
    """Weighted single-jump moments of ``cfg.n`` jumps, optionally boosted first."""
    rule = cfg.rule

    def fill(batch, i):
        vectors = batch.vectors if boost is None else boost_vector(batch.vectors, boost)
        return ComplexMomentAccumulator(cfg.dim, rule).add_vectors(vectors, batch.sectors)

    acc = merge_all(jump_chunks(cfg, fill))
    acc.meta.update(family=cfg.family.value, D=cfg.D, dtau=cfg.dtau)
    return acc


def jump_moments(cfg: SimulationConfig, boost: Boost | None = None):
    """:class:`~relbrownian.stats.MomentReport` of single-jump moments."""
    return report(jump_accumulator(cfg, boost), cfg.signature)


def sample_ensemble(cfg: SimulationConfig):
    """All ``cfg.n`` jumps as one ``(vectors, codes)`` pair, in chunk order."""
    parts = jump_chunks(cfg, lambda batch, i: (batch.vectors, batch.sectors))
    if not parts:
        return np.zeros((0, cfg.dim)), np.zeros(0, dtype=np.int8)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
