"""Ensemble moment estimation with complex sector weights.

:class:`ComplexMomentAccumulator` keeps running sums that can be merged
across independently filled chunks.  First moments are complex; second
moments are real because the weight of an unphysical jump enters squared,
``(i lam)^2 = -lam^2``.  Standard errors use the per-entry sample
variance, so every comparison is expressed in units of stderr.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .continuation import ContinuationRule
from .errors import ConfigurationError, DomainError, InsufficientDataError
from .minkowski import MOSTLY_PLUS, Boost, Signature, Sector, boost_tensor, boost_vector, sector_codes

STDERR_THRESHOLD = 4.0


@dataclass
class ComplexMomentAccumulator:
    dim: int
    rule: ContinuationRule
    n: int = 0
    first: np.ndarray = None
    first_sq: np.ndarray = None
    second: np.ndarray = None
    second_sq: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.dim
        if self.first is None:
            self.first = np.zeros(d, dtype=complex)
        if self.first_sq is None:
            self.first_sq = np.zeros(d)
        if self.second is None:
            self.second = np.zeros((d, d))
        if self.second_sq is None:
            self.second_sq = np.zeros((d, d))

    def add_samples(self, first: np.ndarray, second: np.ndarray) -> "ComplexMomentAccumulator":
        """Add per-sample first-moment vectors ``(n, d)`` and second-moment tensors ``(n, d, d)``."""
        first = np.asarray(first)
        second = np.asarray(second, dtype=float)
        if first.ndim != 2 or first.shape[1] != self.dim or second.shape != (len(first), self.dim, self.dim):
            raise ConfigurationError("sample shapes do not match accumulator dimension")
        self.n += len(first)
        self.first += first.sum(axis=0)
        self.first_sq += (np.abs(first) ** 2).sum(axis=0)
        self.second += second.sum(axis=0)
        self.second_sq += (second**2).sum(axis=0)
        return self

    def add_vectors(self, vectors, codes) -> "ComplexMomentAccumulator":
        """Add real jumps with their sector codes, applying the continuation rule."""
        vectors = np.asarray(vectors, dtype=float)
        c1 = self.rule.first_factors(codes)
        c2 = self.rule.second_factors(codes)
        outer = vectors[:, :, None] * vectors[:, None, :]
        return self.add_samples(c1[:, None] * vectors, c2[:, None, None] * outer)

    def add_batch(self, batch) -> "ComplexMomentAccumulator":
        return self.add_vectors(batch.vectors, batch.sectors)

    def copy(self) -> "ComplexMomentAccumulator":
        return ComplexMomentAccumulator(
            self.dim,
            self.rule,
            self.n,
            self.first.copy(),
            self.first_sq.copy(),
            self.second.copy(),
            self.second_sq.copy(),
            dict(self.meta),
        )


def accumulate(acc: ComplexMomentAccumulator, j, rule: ContinuationRule) -> ComplexMomentAccumulator:
    """Add a single jump; returns ``acc`` for chaining."""
    if rule != acc.rule:
        raise ConfigurationError("rule differs from the accumulator's rule")
    if Sector(j.sector) is Sector.LIGHTLIKE:
        raise DomainError("lightlike jump cannot be accumulated")
    v = np.asarray(j.vector, dtype=float)[None, :]
    return acc.add_vectors(v, np.array([j.sector], dtype=np.int8))


def merge(a: ComplexMomentAccumulator, b: ComplexMomentAccumulator) -> ComplexMomentAccumulator:
    """Combine two accumulators filled under the same configuration."""
    if a.dim != b.dim or a.rule != b.rule:
        raise ConfigurationError("cannot merge accumulators with different configuration")
    return ComplexMomentAccumulator(
        a.dim,
        a.rule,
        a.n + b.n,
        a.first + b.first,
        a.first_sq + b.first_sq,
        a.second + b.second,
        a.second_sq + b.second_sq,
        {**b.meta, **a.meta},
    )


def merge_all(accs) -> ComplexMomentAccumulator:
    """Left fold of :func:`merge` in the given order."""
    accs = list(accs)
    if not accs:
        raise InsufficientDataError("nothing to merge")
    out = accs[0]
    for acc in accs[1:]:
        out = merge(out, acc)
    return out


@dataclass(frozen=True)
class MomentReport:
    n: int
    mean: np.ndarray
    mean_stderr: np.ndarray
    cov: np.ndarray
    cov_stderr: np.ndarray
    scale: float
    isotropy_deviation: float
    signature: Signature
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_re": self.mean.real.tolist(),
            "mean_im": self.mean.imag.tolist(),
            "mean_stderr": self.mean_stderr.tolist(),
            "cov": self.cov.tolist(),
            "cov_stderr": self.cov_stderr.tolist(),
            "scale": self.scale,
            "isotropy_deviation": self.isotropy_deviation,
            "signature": self.signature.value,
            **{k: v for k, v in self.meta.items()},
        }

    def first_moment_deviation(self) -> float:
        """Largest ``|mean|`` in stderr units."""
        return float(_ratio(np.abs(self.mean), self.mean_stderr).max())


def _ratio(diff, err):
    diff = np.abs(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(err > 0, diff / np.where(err > 0, err, 1.0), np.where(diff > 0, np.inf, 0.0))
    return out


def metric_fit(cov, sig: Signature = MOSTLY_PLUS) -> float:
    """Scale ``c`` in ``cov ~ c eta``: signature-weighted mean of the diagonal."""
    cov = np.asarray(cov)
    eta = np.diag(sig.metric(cov.shape[0]))
    return float(np.mean(eta * np.diag(cov)))


def isotropy_deviation(cov, stderr, sig: Signature = MOSTLY_PLUS) -> float:
    """Largest ``|cov - c eta|`` in stderr units with ``c`` from :func:`metric_fit`."""
    cov = np.asarray(cov)
    c = metric_fit(cov, sig)
    return float(_ratio(cov - c * sig.metric(cov.shape[0]), np.asarray(stderr)).max())


def deviation(a, a_err, b, b_err=0.0) -> float:
    """Largest entrywise ``|a - b|`` in combined-stderr units."""
    a, b = np.asarray(a), np.asarray(b)
    err = np.sqrt(np.asarray(a_err) ** 2 + np.asarray(b_err) ** 2)
    return float(np.max(_ratio(a - b, np.broadcast_to(err, np.broadcast(a, b).shape))))


def report(acc: ComplexMomentAccumulator, sig: Signature = MOSTLY_PLUS) -> MomentReport:
    """Means, covariance and their standard errors."""
    n = acc.n
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples, have {n}")
    mean = acc.first / n
    var1 = np.maximum(acc.first_sq - n * np.abs(mean) ** 2, 0.0) / (n - 1)
    cov = acc.second / n
    var2 = np.maximum(acc.second_sq - n * cov**2, 0.0) / (n - 1)
    cov = 0.5 * (cov + cov.T)
    cov_err = np.sqrt(var2 / n)
    cov_err = 0.5 * (cov_err + cov_err.T)
    return MomentReport(
        n,
        mean,
        np.sqrt(var1 / n),
        cov,
        cov_err,
        metric_fit(cov, sig),
        isotropy_deviation(cov, cov_err, sig),
        sig,
        dict(acc.meta),
    )


def boost_covariance_check(
    vectors,
    codes,
    b: Boost,
    rule: ContinuationRule,
    sig: Signature = MOSTLY_PLUS,
    reference=None,
    reference_stderr=0.0,
) -> float:
    """Covariance of boosted jumps against the boosted covariance tensor.

    Sectors are re-derived from the boosted vectors and must agree with
    the originals.  Without ``reference`` the unboosted covariance of the
    same jumps is boosted, which only probes sector invariance and round
    off.  Passing an independent estimate (or the exact tensor) as
    ``reference`` makes the comparison statistical; its entrywise stderr
    is propagated through the boost as if entries were uncorrelated.
    Returns the largest entry deviation in combined-stderr units.
    """
    vectors = np.asarray(vectors, dtype=float)
    codes = np.asarray(codes)
    boosted = boost_vector(vectors, b)
    new_codes = sector_codes(boosted, sig, 0.0)
    if not np.array_equal(new_codes, codes):
        raise DomainError("sector classification changed under the boost")
    dim = vectors.shape[1]
    after = report(ComplexMomentAccumulator(dim, rule).add_vectors(boosted, new_codes), sig)
    if reference is None:
        reference = report(ComplexMomentAccumulator(dim, rule).add_vectors(vectors, codes), sig).cov
        reference_stderr = 0.0
    lam = b.matrix(dim)
    ref_err = np.broadcast_to(np.asarray(reference_stderr, dtype=float), (dim, dim))
    boosted_err = np.sqrt((lam**2) @ ref_err**2 @ (lam**2).T)
    return deviation(after.cov, after.cov_stderr, boost_tensor(reference, b), boosted_err)
