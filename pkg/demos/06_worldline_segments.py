"""
A single worldline and its segments
===================================

Follow one event through ``tau``.  Because jumps may be spacelike or run
backwards in ``t``, the worldline can turn around in coordinate time.
Segmentation labels each piece ``particle`` (timelike, forward in ``t``),
``antiparticle`` (timelike, backward) or ``tachyonic`` (spacelike) and
lists the turning points in ``t``.
"""

import numpy as np

from relbrownian import DriftField, JumpDistributionConfig, segment_worldline
from relbrownian.process import evolve

jcfg = JumpDistributionConfig("hyperbolic-1+1", D=1.0, dtau=0.01, sector_mix=0.5)
rec = evolve(np.zeros(2), DriftField(), jcfg, n_steps=300, rng=np.random.default_rng(7))
print("final tau", rec.taus[-1], "final point", rec.points[-1])
seg = segment_worldline(rec)
for s in seg.segments[:10]:
    print(f"{s.kind:>10s}  tau [{s.tau_start:.2f}, {s.tau_end:.2f}]  t [{s.t_start:+.3f}, {s.t_end:+.3f}]")
print(len(seg.segments), "segments,", len(seg.events), "turning points")
