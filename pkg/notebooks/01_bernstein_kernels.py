# %% [markdown]
# # Bernstein functions and free heat kernels
#
# A kinetic symbol ``Phi`` turns the Laplacian into ``Phi(-Delta)``. We compare
# the on-diagonal heat kernel of a few symbols against their closed forms and
# look at the small-``lambda`` scaling window that drives the tail exponent.

# %%
import math

import numpy as np

from lifshitz.bernstein import (
    drift, heat_kernel_at_zero, moment_integral, parse_bernstein, phi_eval, relativistic, scaling_window_check,
    stable,
)

# %% [markdown]
# Brownian motion has ``p_t(0) = (4 pi t)^(-d/2)``; the Cauchy process in one
# dimension has ``p_t(0) = 1 / (pi t)``.

# %%
for t in (0.1, 1.0, 10.0):
    print(f"t={t:5}: drift {heat_kernel_at_zero(drift(), t, 1):.12f} vs {(4 * math.pi * t) ** -0.5:.12f}; "
          f"Cauchy {heat_kernel_at_zero(stable(1.0), t, 1):.12f} vs {1 / (math.pi * t):.12f}")

# %% [markdown]
# For the stable symbol ``Phi(lambda) = lambda^(alpha/2)`` the moment integral
# with ``gamma = alpha/2`` is ``1 / (Gamma(alpha/2 + 1) t)``.

# %%
for alpha in (0.5, 1.0, 2.0):
    ref = 1 / (math.gamma(alpha / 2 + 1) * 100.0)
    print(alpha, moment_integral(stable(alpha), alpha / 2, 100.0) / ref)

# %% [markdown]
# Each spec carries ``c1 lambda^(alpha/2) <= Phi(lambda) <= c2 lambda^(alpha/2)``
# on ``(0, lambda0)``. The relativistic symbol behaves like ``lambda`` near zero.

# %%
rel = relativistic(1.0, 1.0)
grid = np.geomspace(1e-8, 0.999, 200)
print(rel, rel.alpha, rel.c1, rel.c2)
print(scaling_window_check(rel, grid))
print([float(phi_eval(rel, lam)) / lam for lam in grid[:3]])

# %% [markdown]
# Specs serialize to a canonical text form that parses back exactly.

# %%
text = stable(1.5).to_text()
print(text, parse_bernstein(text) == stable(1.5))
