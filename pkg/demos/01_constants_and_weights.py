"""
Critical weight and effective diffusion constant
================================================

Jumps are split into timelike and spacelike sectors.  The physical sector
keeps weight 1; the other carries ``i lam``, which contributes ``-lam^2``
to second moments.  For the isotropic 4D Gaussian the weighted second
moment tensor becomes proportional to the metric at one special weight.
"""

import math

import numpy as np

from relbrownian import effective_diffusion, lambda_critical, lambda_squared_critical
from relbrownian.oracle import closed_form_constants, quadrature_constants

# %%
# Closed forms and the same numbers from independent quadrature.
closed = closed_form_constants()
quad = quadrature_constants()
for key in closed:
    print(f"{key:>14s}  closed {closed[key]:.15f}  quadrature {quad[key]:.15f}")

# %%
# The weight, and the effective constant it leaves behind.
print("lambda^2  =", lambda_squared_critical(), "=", (3 * math.pi - 4) / (3 * math.pi + 4))
print("lambda    =", lambda_critical())
print("Dbreve/D  =", effective_diffusion(1.0), "=", 4 / (3 * math.pi + 4))

# %%
# Spacelike-physical weighting inverts the weight.
print("spacelike physical lambda^2 =", lambda_squared_critical("spacelike"))
print("product with timelike case  =", np.prod([lambda_squared_critical(s) for s in ("timelike", "spacelike")]))
