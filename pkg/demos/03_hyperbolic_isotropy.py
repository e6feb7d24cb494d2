"""
Isotropy of 3+1 hyperbolic jumps
================================

Hyperbolic jumps use a rapidity ``alpha`` uniform on ``[-L, L]``.  The
second moment is isotropic only when the ratio of the timelike to the
spacelike radial scale matches the value fixed by ``gamma(L)``, the mean
of ``sinh^2 alpha``.  A 20% error in that ratio is detected easily.
"""

from relbrownian import ContinuationRule, SimulationConfig, gamma_order, isotropic_timelike_scale, jump_moments

rule = ContinuationRule("timelike", 1.0)
for L in (0.5, 1.0, 2.0):
    g = gamma_order(L)
    scale = isotropic_timelike_scale(g, rule)
    cfg = SimulationConfig(family="hyperbolic-3+1", lam=1.0, L=L, n=500_000, seed=3)
    good = jump_moments(cfg.replace(timelike_scale=scale)).isotropy_deviation
    bad = jump_moments(cfg.replace(timelike_scale=1.2 * scale)).isotropy_deviation
    print(f"L={L:<4} gamma={g:.5f} ratio={scale:.5f}  deviation: matched {good:5.2f}, +20% {bad:6.1f}")
