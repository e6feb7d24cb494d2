"""
Boosts and composition of jumps
===============================

The weighted second moment transforms as a tensor: boosting every jump
gives ``Lambda C Lambda^T``.  A jump over ``dtau`` is statistically the
sum of ``M`` jumps over ``dtau / M``.  With jumps exactly every ``tau_J``
the moment grows as a staircase ``floor(tau / tau_J)``.
"""

import numpy as np

from relbrownian import Boost, SimulationConfig, boost_tensor, jump_moments
from relbrownian.oracle import sampled_moments
from relbrownian.process import JumpSchedule, evolve_ensemble, jumps_before
from relbrownian.stats import deviation, metric_fit

np.set_printoptions(precision=4, suppress=True)
cfg = SimulationConfig(family="gaussian-4d", n=400_000, seed=4)
reference = jump_moments(cfg.replace(seed=5))

# %%
# Boosted ensemble against the boosted tensor of an independent ensemble.
for chi in (0.25, 0.5, 1.0):
    b = Boost.along(chi, 4)
    after = jump_moments(cfg, b)
    dev = deviation(after.cov, after.cov_stderr, boost_tensor(reference.cov, b), reference.cov_stderr)
    print(f"chi={chi}: deviation {dev:.2f} stderr, still ~ eta: {after.isotropy_deviation:.2f}")

# %%
# Sub-step composition.
dtau = 0.64
one = evolve_ensemble(cfg.replace(dtau=dtau, n=100_000), checkpoints=[dtau]).reports()[0]
for m in (2, 8, 64):
    many = evolve_ensemble(cfg.replace(dtau=dtau / m, n=100_000, seed=m), checkpoints=[dtau]).reports()[0]
    print(f"M={m:>2}: tt {many.cov[0, 0]:.4f} vs {one.cov[0, 0]:.4f}  deviation {deviation(many.cov, many.cov_stderr, one.cov, one.cov_stderr):.2f}")

# %%
# Ordered jumps every tau_J: the moment counts whole jumps.
tau_J = 0.1
per_jump = metric_fit(sampled_moments("gaussian-4d", 1.0, tau_J, cfg.rule))
taus = [0.05, 0.15, 0.25, 0.55, 1.05]
mc = evolve_ensemble(cfg.replace(n=100_000), JumpSchedule.ordered(tau_J), checkpoints=taus)
for tau, rep in zip(mc.taus, mc.reports()):
    print(f"tau={tau:.2f}: N={jumps_before(tau, tau_J):>2}  estimated {rep.scale / per_jump:6.3f}")
