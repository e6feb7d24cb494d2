"""Worldline evolution in invariant time ``tau``.

Positions follow ``x -> x + beta(x) dtau + dw`` and always stay real.  The
complex sector weight of each jump is stored next to it on the record and
enters only the *track*

    z(tau) = x0 + sum(drift increments) + sum(weight_k * dw_k),

whose products ``Re(z z^T)`` estimate the weighted second moments of the
displacement.  Cross terms between different jumps average to zero, so
the weighted moments are additive over sub-steps.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import ContinuationRule
from .ensemble import STREAM_WALKERS, SimulationConfig, map_chunks
from .errors import ConfigurationError, DomainError, NumericalError
from .minkowski import MOSTLY_PLUS, Sector, Signature, sector_codes
from .sampler import JumpDistributionConfig, sample_jumps
from .stats import ComplexMomentAccumulator, merge_all, report

# sector code for a drift-only step without a jump
NO_JUMP = -1


class DriftKind(str, enum.Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    LINEAR = "linear"


@dataclass(frozen=True)
class DriftField:
    """Deterministic drift ``beta(x)``: zero, constant, or ``A @ x``."""

    kind: DriftKind = DriftKind.ZERO
    params: np.ndarray | None = None

    def __post_init__(self):
        kind = DriftKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is DriftKind.ZERO:
            return
        p = np.asarray(self.params, dtype=float)
        if kind is DriftKind.CONSTANT and p.ndim != 1:
            raise ConfigurationError("constant drift needs a vector")
        if kind is DriftKind.LINEAR and (p.ndim != 2 or p.shape[0] != p.shape[1]):
            raise ConfigurationError("linear drift needs a square matrix")
        if not np.all(np.isfinite(p)):
            raise ConfigurationError("drift parameters must be finite")
        object.__setattr__(self, "params", p)

    @classmethod
    def constant(cls, beta) -> "DriftField":
        return cls(DriftKind.CONSTANT, beta)

    @classmethod
    def linear(cls, A) -> "DriftField":
        return cls(DriftKind.LINEAR, A)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is DriftKind.ZERO:
            return np.zeros_like(x)
        if self.kind is DriftKind.CONSTANT:
            return np.broadcast_to(self.params, x.shape).copy()
        return x @ self.params.T


class ScheduleKind(str, enum.Enum):
    EVERY_STEP = "every-step"
    ORDERED_PERIOD = "ordered-period"


@dataclass(frozen=True)
class JumpSchedule:
    """When jumps happen: once per step, or exactly every ``tau_J``."""

    kind: ScheduleKind = ScheduleKind.EVERY_STEP
    tau_J: float | None = None

    def __post_init__(self):
        kind = ScheduleKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ScheduleKind.ORDERED_PERIOD and not (self.tau_J is not None and self.tau_J > 0):
            raise ConfigurationError("ordered-period schedule needs tau_J > 0")

    @classmethod
    def ordered(cls, tau_J: float) -> "JumpSchedule":
        return cls(ScheduleKind.ORDERED_PERIOD, tau_J)

    def period(self, cfg: JumpDistributionConfig) -> float:
        return cfg.dtau if self.kind is ScheduleKind.EVERY_STEP else self.tau_J

    def jump_config(self, cfg: JumpDistributionConfig) -> JumpDistributionConfig:
        return cfg if self.kind is ScheduleKind.EVERY_STEP else cfg.with_dtau(self.tau_J)


EVERY_STEP = JumpSchedule()


def jumps_before(tau: float, period: float) -> int:
    """Number of jump instants ``k * period`` (k >= 1) not after ``tau``."""
    return int(math.floor(tau / period + 1e-9))


def _plan(period: float, checkpoints, every_step: bool):
    """Sequence of ``(drift_time, has_jump, checkpoint_index)`` events."""
    events = []
    t, k = 0.0, 0
    for ci, c in enumerate(checkpoints):
        if c < t - 1e-12:
            raise ConfigurationError("checkpoints must be non-decreasing")
        target = jumps_before(c, period)
        while k < target:
            k += 1
            events.append((k * period - t, True, None))
            t = k * period
        rem = c - t
        if rem > 1e-9 * max(1.0, c):
            if every_step:
                raise ConfigurationError(f"checkpoint {c} is not a multiple of dtau={period}")
            events.append((rem, False, ci))
            t = c
        else:
            events.append((0.0, False, ci))
    return events


@dataclass
class WorldlineRecord:
    """One evolved worldline.

    ``sectors``, ``weights`` and ``jumps`` describe the step that *arrives*
    at the corresponding point, so they have one entry fewer than
    ``points``.
    """

    taus: np.ndarray
    points: np.ndarray
    jumps: np.ndarray
    sectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.points = np.asarray(self.points)
        self.jumps = np.asarray(self.jumps, dtype=float)
        self.sectors = np.asarray(self.sectors, dtype=np.int8)
        self.weights = np.asarray(self.weights, dtype=complex)
        m = len(self.taus) - 1
        if self.points.shape[0] != m + 1:
            raise DomainError("points and taus differ in length")
        if not (len(self.sectors) == len(self.weights) == len(self.jumps) == m):
            raise DomainError("per-step arrays must have len(taus) - 1 entries")
        if np.iscomplexobj(self.points):
            raise DomainError("worldline positions must be real")
        if m and not np.all(np.diff(self.taus) > 0):
            raise DomainError("tau must be strictly increasing")

    @classmethod
    def from_points(cls, taus, points, rule: ContinuationRule | None = None, sig: Signature = MOSTLY_PLUS):
        """Record for a prescribed path; each increment is treated as a jump."""
        points = np.asarray(points, dtype=float)
        jumps = np.diff(points, axis=0)
        sectors = sector_codes(jumps, sig, 0.0) if len(jumps) else np.zeros(0, dtype=np.int8)
        if rule is None:
            weights = np.ones(len(jumps), dtype=complex)
        else:
            weights = np.where(sectors == Sector.LIGHTLIKE, 1.0 + 0j, 0j)
            ok = sectors != Sector.LIGHTLIKE
            weights[ok] = rule.first_factors(sectors[ok])
        return cls(taus, points, jumps, sectors, weights)

    def __len__(self) -> int:
        return len(self.sectors)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def track(self) -> np.ndarray:
        """Complex track ``z`` at every recorded ``tau``."""
        drift = np.diff(self.points, axis=0) - self.jumps
        incr = drift + self.weights[:, None] * self.jumps
        z = np.empty(self.points.shape, dtype=complex)
        z[0] = self.points[0]
        z[1:] = self.points[0] + np.cumsum(incr, axis=0)
        return z

    @property
    def weight_product(self) -> complex:
        """Product of the per-jump phases (no probabilistic meaning attached)."""
        return complex(np.prod(self.weights)) if len(self.weights) else 1.0 + 0j

    def to_csv(self, path) -> None:
        """Columns ``tau, w0..w3, sector, weight_re, weight_im``; 1+1 pads with zeros."""
        names = {int(s): s.name.lower() for s in Sector}
        names[NO_JUMP] = "none"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "w0", "w1", "w2", "w3", "sector", "weight_re", "weight_im"])
            for k, tau in enumerate(self.taus):
                x = list(self.points[k]) + [0.0] * (4 - self.dim)
                if k == 0:
                    sector, wt = "start", 1.0 + 0j
                else:
                    sector, wt = names[int(self.sectors[k - 1])], self.weights[k - 1]
                w.writerow([repr(float(tau))] + [repr(float(v)) for v in x] + [sector, repr(float(wt.real)), repr(float(wt.imag))])


def read_worldline_csv(path, dim: int = 4):
    """Read ``(taus, points, sector names, weights)`` written by :meth:`WorldlineRecord.to_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    taus = np.array([float(r["tau"]) for r in rows])
    points = np.array([[float(r[f"w{i}"]) for i in range(dim)] for r in rows])
    sectors = [r["sector"] for r in rows]
    weights = np.array([complex(float(r["weight_re"]), float(r["weight_im"])) for r in rows])
    return taus, points, sectors, weights


def step(x, drift: DriftField, j, dtau: float) -> np.ndarray:
    """Single Euler step ``x + beta(x) dtau + dw`` (jump may be a vector or a :class:`Jump`)."""
    if not dtau > 0:
        raise ConfigurationError("dtau must be positive")
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        beta = drift(x)
    if not np.all(np.isfinite(beta)):
        raise NumericalError("drift evaluated to a non-finite value")
    dw = np.asarray(getattr(j, "vector", j), dtype=float)
    return x + beta * dtau + dw


def evolve(
    x0,
    drift: DriftField,
    cfg: JumpDistributionConfig,
    schedule: JumpSchedule = EVERY_STEP,
    n_steps: int | None = None,
    total_tau: float | None = None,
    rng: np.random.Generator | None = None,
    rule: ContinuationRule | None = None,
) -> WorldlineRecord:
    """Evolve a single worldline.

    Give either ``n_steps`` (number of jumps) or ``total_tau``.  Under an
    ordered-period schedule a final drift-only step covers the remainder
    of ``total_tau`` after the last jump; its sector code is ``NO_JUMP``.
    """
    rng = np.random.default_rng() if rng is None else rng
    rule = ContinuationRule() if rule is None else rule
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (cfg.dim,):
        raise ConfigurationError(f"x0 must have {cfg.dim} components")
    period = schedule.period(cfg)
    if (n_steps is None) == (total_tau is None):
        raise ConfigurationError("give exactly one of n_steps and total_tau")
    if n_steps is not None:
        if n_steps < 0:
            raise ConfigurationError("n_steps must be >= 0")
        total_tau = n_steps * period
    if total_tau < 0:
        raise ConfigurationError("total_tau must be >= 0")
    events = [e for e in _plan(period, [total_tau], schedule.kind is ScheduleKind.EVERY_STEP) if e[0] > 0]
    n_jumps = sum(1 for e in events if e[1])
    batch = sample_jumps(schedule.jump_config(cfg), n_jumps, rng)

    taus, points, jumps, sectors, weights = [0.0], [x0], [], [], []
    x, tau, k = x0, 0.0, 0
    for h, has_jump, _ in events:
        if has_jump:
            j = batch.vectors[k]
            code = int(batch.sectors[k])
            wt = rule.first_factor(code)
            k += 1
        else:
            j, code, wt = np.zeros(cfg.dim), NO_JUMP, 1.0 + 0j
        x = step(x, drift, j, h)
        tau += h
        taus.append(tau)
        points.append(x)
        jumps.append(j)
        sectors.append(code)
        weights.append(wt)
    return WorldlineRecord(
        np.array(taus),
        np.array(points),
        np.array(jumps).reshape(-1, cfg.dim),
        np.array(sectors, dtype=np.int8),
        np.array(weights, dtype=complex),
    )


# --- ensembles --------------------------------------------------------------


@dataclass
class CheckpointMoments:
    """Track moments at several ``tau`` checkpoints.

    ``states[i]`` accumulates ``z`` and ``Re(z z^T)`` at ``taus[i]``;
    ``slopes[i]`` accumulates the per-walker finite differences between
    checkpoints ``i`` and ``i + 1`` divided by the ``tau`` gap, so its
    standard errors account for the correlation between checkpoints.
    """

    taus: np.ndarray
    states: list
    slopes: list
    positions: np.ndarray | None = None
    monotonic: np.ndarray | None = None

    def reports(self, sig: Signature = MOSTLY_PLUS):
        return [report(a, sig) for a in self.states]

    def slope_reports(self, sig: Signature = MOSTLY_PLUS):
        return [report(a, sig) for a in self.slopes]


def _walker_chunk(size, rng, cfg, jcfg, rule, events, checkpoints, x0, drift, initial, keep_positions):
    d = cfg.dim
    if initial is None:
        x = np.tile(np.asarray(x0, dtype=float), (size, 1))
    else:
        x = np.asarray(initial(size, rng), dtype=float)
    z = x.astype(complex)
    mono_up = np.ones(size, dtype=bool)
    mono_down = np.ones(size, dtype=bool)
    saved = [None] * len(checkpoints)
    for h, has_jump, ci in events:
        t_before = x[:, 0].copy()
        if h > 0 and drift.kind is not DriftKind.ZERO:
            b = drift(x) * h
            x = x + b
            z = z + b
        if has_jump:
            batch = sample_jumps(jcfg, size, rng)
            x = x + batch.vectors
            z = z + rule.first_factors(batch.sectors)[:, None] * batch.vectors
        if h > 0 or has_jump:
            dt = x[:, 0] - t_before
            mono_up &= dt > 0
            mono_down &= dt < 0
        if ci is not None:
            saved[ci] = z.copy()

    states, slopes = [], []
    for i, zi in enumerate(saved):
        second = np.real(zi[:, :, None] * zi[:, None, :])
        states.append(ComplexMomentAccumulator(d, rule).add_samples(zi, second))
        if i:
            zp = saved[i - 1]
            gap = checkpoints[i] - checkpoints[i - 1]
            prev = np.real(zp[:, :, None] * zp[:, None, :])
            slopes.append(ComplexMomentAccumulator(d, rule).add_samples((zi - zp) / gap, (second - prev) / gap))
    positions = x if keep_positions else None
    return states, slopes, positions, mono_up | mono_down


def evolve_ensemble(
    cfg: SimulationConfig,
    schedule: JumpSchedule = EVERY_STEP,
    checkpoints=None,
    *,
    x0=None,
    drift: DriftField | None = None,
    initial=None,
    keep_positions: bool = False,
) -> CheckpointMoments:
    """Evolve ``cfg.n`` independent walkers and collect track moments.

    ``checkpoints`` are ``tau`` values measured from the start (default:
    ``cfg.steps`` jump periods).  With an every-step schedule they must be
    multiples of ``cfg.dtau``.  ``initial(size, rng)`` may draw per-walker
    starting points instead of the common ``x0``.  With
    ``keep_positions`` the real positions at the last checkpoint are
    returned as well.
    """
    jcfg = schedule.jump_config(cfg.jump_config())
    period = schedule.period(cfg.jump_config())
    if checkpoints is None:
        checkpoints = [cfg.steps * period]
    checkpoints = [float(c) for c in checkpoints]
    if not checkpoints:
        raise ConfigurationError("need at least one checkpoint")
    if any(c < 0 for c in checkpoints) or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ConfigurationError("checkpoints must be non-negative and strictly increasing")
    events = _plan(period, checkpoints, schedule.kind is ScheduleKind.EVERY_STEP)
    drift = DriftField() if drift is None else drift
    x0 = np.zeros(cfg.dim) if x0 is None else np.asarray(x0, dtype=float)
    rule = cfg.rule

    parts = map_chunks(
        lambda size, rng, i: _walker_chunk(
            size, rng, cfg, jcfg, rule, events, checkpoints, x0, drift, initial, keep_positions
        ),
        cfg.n,
        cfg.seed,
        chunk_size=cfg.chunk_size,
        threads=cfg.threads,
        stream=STREAM_WALKERS,
    )
    if not parts:
        raise ConfigurationError("ensemble is empty")
    states = [merge_all(p[0][i] for p in parts) for i in range(len(checkpoints))]
    slopes = [merge_all(p[1][i] for p in parts) for i in range(len(checkpoints) - 1)]
    positions = np.concatenate([p[2] for p in parts]) if keep_positions else None
    monotonic = np.concatenate([p[3] for p in parts])
    return CheckpointMoments(np.array(checkpoints), states, slopes, positions, monotonic)


# --- worldline structure -----------------------------------------------------


@dataclass(frozen=True)
class Segment:
    kind: str
    tau_start: float
    tau_end: float
    t_start: float
    t_end: float
    first_step: int
    last_step: int


@dataclass(frozen=True)
class TurningPoint:
    kind: str
    tau: float
    t: float
    index: int


@dataclass
class Segmentation:
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def kinds(self) -> list:
        return [s.kind for s in self.segments]


def _step_kinds(rec: WorldlineRecord, sig: Signature):
    dt = np.diff(rec.points[:, 0])
    codes = rec.sectors.copy()
    missing = codes == NO_JUMP
    if np.any(missing):
        codes[missing] = sector_codes(np.diff(rec.points, axis=0)[missing], sig, 0.0)
    kinds = []
    prev = "particle"
    for code, d in zip(codes, dt):
        if code == Sector.SPACELIKE:
            kind = "tachyonic"
        elif d > 0:
            kind = "particle"
        elif d < 0:
            kind = "antiparticle"
        else:
            kind = prev
        kinds.append(kind)
        prev = kind
    return kinds, dt


def segment_worldline(rec: WorldlineRecord, sig: Signature = MOSTLY_PLUS) -> Segmentation:
    """Split a worldline into particle, antiparticle and tachyonic pieces.

    A step is tachyonic if its incoming jump is spacelike, otherwise it is
    a particle (``t`` increasing) or antiparticle (``t`` decreasing) step.
    Runs of equal kind are merged.  Maxima of ``t(tau)`` are reported as
    annihilation events and minima as creation events.
    """
    if len(rec.taus) < 2:
        raise DomainError("segmentation needs at least two points")
    kinds, dt = _step_kinds(rec, sig)
    out = Segmentation()
    start = 0
    for k in range(1, len(kinds) + 1):
        if k == len(kinds) or kinds[k] != kinds[start]:
            out.segments.append(
                Segment(
                    kinds[start],
                    float(rec.taus[start]),
                    float(rec.taus[k]),
                    float(rec.points[start, 0]),
                    float(rec.points[k, 0]),
                    start,
                    k - 1,
                )
            )
            start = k
    last_sign = 0
    for k, d in enumerate(dt):
        s = int(np.sign(d))
        if s == 0:
            continue
        if last_sign and s != last_sign:
            kind = "annihilation" if last_sign > 0 else "creation"
            out.events.append(TurningPoint(kind, float(rec.taus[k]), float(rec.points[k, 0]), k))
        last_sign = s
    return out


def is_monotonic(rec: WorldlineRecord) -> bool:
    dt = np.diff(rec.points[:, 0])
    return bool(np.all(dt > 0) or np.all(dt < 0))


def filter_monotonic(records):
    """Keep worldlines whose ``t`` is strictly monotonic in ``tau``.

    Returns ``(kept, fraction_retained)``.
    """
    records = list(records)
    kept = [r for r in records if is_monotonic(r)]
    fraction = len(kept) / len(records) if records else 1.0
    return kept, fraction
