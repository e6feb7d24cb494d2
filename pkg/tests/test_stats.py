"""Weighted moment accumulation, reports and boost diagnostics."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from relbrownian.continuation import ContinuationRule, lambda_critical
from relbrownian.ensemble import SimulationConfig, jump_accumulator, jump_moments, sample_ensemble
from relbrownian.errors import ConfigurationError, DomainError, InsufficientDataError
from relbrownian.minkowski import MOSTLY_MINUS, MOSTLY_PLUS, Boost, Sector, boost_tensor, sector_codes
from relbrownian.oracle import sampled_moments
from relbrownian.sampler import Family, Jump
from relbrownian.stats import (
    ComplexMomentAccumulator,
    accumulate,
    boost_covariance_check,
    deviation,
    isotropy_deviation,
    merge,
    merge_all,
    metric_fit,
    report,
)

T, S = Sector.TIMELIKE, Sector.SPACELIKE


def _acc(rule=None, dim=4):
    return ComplexMomentAccumulator(dim, rule or ContinuationRule())


def test_accumulate_examples():
    rule = ContinuationRule(T, 1.0)
    acc = accumulate(_acc(rule), Jump(np.array([1.0, 0, 0, 0]), T), rule)
    assert acc.second[0, 0] == 1.0
    acc = accumulate(_acc(rule), Jump(np.array([0.0, 1, 0, 0]), S), rule)
    assert acc.second[1, 1] == -1.0
    assert acc.first[1] == 1j
    crit = ContinuationRule(T, lambda_critical())
    acc = accumulate(_acc(crit), Jump(np.array([0.0, 1, 0, 0]), S), crit)
    assert acc.second[1, 1] == pytest.approx(-0.40408697831889380, rel=1e-14)


def test_accumulate_errors():
    rule = ContinuationRule()
    with pytest.raises(DomainError):
        accumulate(_acc(rule), Jump(np.array([1.0, 1, 0, 0]), Sector.LIGHTLIKE), rule)
    with pytest.raises(ConfigurationError):
        accumulate(_acc(rule), Jump(np.array([1.0, 0, 0, 0]), T), ContinuationRule(S))
    with pytest.raises(ConfigurationError):
        _acc().add_samples(np.zeros((2, 3)), np.zeros((2, 3, 3)))


def _filled(rng, n, rule=None):
    v = rng.normal(size=(n, 4))
    return _acc(rule).add_vectors(v, sector_codes(v))


def test_merge_identity_and_commutativity(rng):
    a, b = _filled(rng, 100), _filled(rng, 57)
    e = _acc()
    m = merge(a, e)
    np.testing.assert_array_equal(m.second, a.second)
    assert m.n == a.n
    ab, ba = merge(a, b), merge(b, a)
    np.testing.assert_array_equal(ab.first, ba.first)
    np.testing.assert_array_equal(ab.second, ba.second)
    np.testing.assert_array_equal(ab.second_sq, ba.second_sq)


def test_merge_halves_equals_whole(rng):
    v = rng.normal(size=(1000, 4))
    c = sector_codes(v)
    whole = _acc().add_vectors(v, c)
    halves = merge(_acc().add_vectors(v[:500], c[:500]), _acc().add_vectors(v[500:], c[500:]))
    np.testing.assert_allclose(halves.second, whole.second, rtol=1e-13)
    assert halves.n == whole.n


def test_merge_mismatch(rng):
    with pytest.raises(ConfigurationError):
        merge(_acc(), _acc(dim=2))
    with pytest.raises(ConfigurationError):
        merge(_acc(ContinuationRule(T, 1.0)), _acc(ContinuationRule(T, 0.5)))
    with pytest.raises(InsufficientDataError):
        merge_all([])


def test_report_basic(rng):
    with pytest.raises(InsufficientDataError):
        report(_filled(rng, 1))
    rep = report(_filled(rng, 5000))
    np.testing.assert_array_equal(rep.cov, rep.cov.T)
    assert np.all(rep.cov_stderr >= 0) and np.all(rep.mean_stderr >= 0)
    d = rep.to_dict()
    assert d["n"] == 5000 and len(d["cov"]) == 4


def test_report_matches_direct_formulae(rng):
    rule = ContinuationRule(T, 0.6)
    v = rng.normal(size=(3000, 2))
    codes = sector_codes(v)
    rep = report(ComplexMomentAccumulator(2, rule).add_vectors(v, codes))
    w2 = np.where(codes == T, 1.0, -0.36)
    samples = w2[:, None, None] * v[:, :, None] * v[:, None, :]
    np.testing.assert_allclose(rep.cov, samples.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(rep.cov_stderr, samples.std(axis=0, ddof=1) / math.sqrt(3000), rtol=1e-9)


@given(st.floats(-3, 3), st.sampled_from([MOSTLY_PLUS, MOSTLY_MINUS]))
def test_metric_fit_and_isotropy_exact(c, sig):
    eta = sig.metric(4)
    assert metric_fit(c * eta, sig) == pytest.approx(c)
    assert isotropy_deviation(c * eta, np.ones((4, 4)), sig) == pytest.approx(0.0, abs=1e-12)


@given(arrays(np.float64, (4, 4), elements=st.floats(-5, 5)), st.floats(-3, 3))
def test_eta_proportional_is_boost_invariant(_, chi):
    eta = MOSTLY_PLUS.metric(4)
    np.testing.assert_allclose(boost_tensor(0.3 * eta, Boost(chi)), 0.3 * eta, atol=1e-10 * math.cosh(chi) ** 2)


def test_deviation_helper():
    assert deviation([1.0, 2.0], [0.5, 0.5], [1.0, 1.0]) == pytest.approx(2.0)
    assert deviation([1.0], [0.0], [1.0]) == 0.0
    assert deviation([1.0], [0.0], [2.0]) == math.inf


# --- Monte Carlo examples ----------------------------------------------------


def test_4d_gaussian_critical_report():
    cfg = SimulationConfig(Family.GAUSSIAN_4D, n=1_000_000, seed=3)
    rep = jump_moments(cfg)
    assert rep.isotropy_deviation < 4
    assert rep.scale == pytest.approx(-0.2979565, rel=0.02)
    assert np.diag(rep.cov)[0] > 0
    assert rep.first_moment_deviation() < 4


def test_4d_gaussian_lambda_one_time_entry():
    rep = jump_moments(SimulationConfig(Family.GAUSSIAN_4D, lam=1.0, n=500_000, seed=4))
    assert abs(rep.cov[0, 0]) < 4 * rep.cov_stderr[0, 0]


@pytest.mark.parametrize(
    "cfg",
    [
        SimulationConfig(Family.HYPERBOLIC_11, L=2.0, n=200_000, seed=1),
        SimulationConfig(Family.HYPERBOLIC_31, L=1.0, n=200_000, seed=2),
        SimulationConfig(Family.GAUSSIAN_2D, lam=0.7, n=200_000, seed=3),
        SimulationConfig(Family.GAUSSIAN_4D, physical_sector=S, n=200_000, seed=4),
        SimulationConfig(Family.HYPERBOLIC_11, physical_sector=S, sector_mix=0.3, n=200_000, seed=5),
    ],
)
def test_mc_matches_exact_and_zero_mean(cfg):
    rep = jump_moments(cfg)
    exact = sampled_moments(
        cfg.family, cfg.D, cfg.dtau, cfg.rule, L=cfg.L, sector_mix=cfg.sector_mix, timelike_scale=cfg.resolved_timelike_scale
    )
    assert deviation(rep.cov, rep.cov_stderr, exact) < 4
    assert rep.first_moment_deviation() < 4


def test_linearity_in_dtau():
    a = jump_moments(SimulationConfig(Family.HYPERBOLIC_31, dtau=0.01, n=200_000, seed=8))
    b = jump_moments(SimulationConfig(Family.HYPERBOLIC_31, dtau=0.02, n=200_000, seed=9))
    assert deviation(b.cov, b.cov_stderr, 2 * a.cov, 2 * a.cov_stderr) < 4


def test_swapping_physical_sector_and_tags_negates(rng):
    v = rng.normal(size=(2000, 4))
    codes = sector_codes(v)
    flipped = np.where(codes == T, S, T).astype(np.int8)
    a = _acc(ContinuationRule(T, 1.0)).add_vectors(v, codes)
    b = _acc(ContinuationRule(T, 1.0)).add_vectors(v, flipped)
    np.testing.assert_allclose(a.second, -b.second, rtol=1e-13)


def test_boost_check_zero_rapidity(rng):
    v = rng.normal(size=(5000, 4))
    assert boost_covariance_check(v, sector_codes(v), Boost(0.0), ContinuationRule()) < 1e-9


def test_boost_check_rejects_relabelled_sectors(rng):
    v = rng.normal(size=(100, 4))
    with pytest.raises(DomainError):
        boost_covariance_check(v, np.full(100, T, dtype=np.int8), Boost(0.5), ContinuationRule())


def test_boost_check_hyperbolic_independent_reference():
    cfg = SimulationConfig(Family.HYPERBOLIC_11, L=2.0, n=300_000, seed=11)
    v, c = sample_ensemble(cfg)
    ref = jump_moments(cfg.replace(seed=12))
    dev = boost_covariance_check(v, c, Boost.along(0.5, 2), cfg.rule, reference=ref.cov, reference_stderr=ref.cov_stderr)
    assert dev < 4


def test_boost_check_detects_wrong_reference():
    cfg = SimulationConfig(Family.HYPERBOLIC_11, L=2.0, n=300_000, seed=11)
    v, c = sample_ensemble(cfg)
    wrong = np.diag([1.0, 0.5]) * cfg.D * cfg.dtau
    assert boost_covariance_check(v, c, Boost.along(0.5, 2), cfg.rule, reference=wrong) > 4
