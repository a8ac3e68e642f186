# %% [markdown]
# # Alloy potentials
#
# A configuration puts one coupling ``q_k`` on every lattice site of the torus;
# the potential is the periodized sum of single-site bumps.

# %%
import math

import numpy as np

from lifshitz.alloy import (
    atom, box, compute_D0, exceedance_count, in_A_delta, mix64, periodized_potential, power, sample_config,
)
from lifshitz.bernstein import drift
from lifshitz.torus import TorusGrid

# %% [markdown]
# Seeds are derived from a master seed with a 64-bit mixing function, so every
# sample can be regenerated on its own.

# %%
seeds = [mix64(2024, i) for i in range(3)]
print([hex(s) for s in seeds])

# %%
law = atom(math.exp(-1), 1 - math.exp(-1))
q = sample_config(law, 8, 1, seeds[0])
print(np.round(q.values, 3))

# %% [markdown]
# With box sites of width one the potential is piecewise constant and its
# integral is the sum of the couplings.

# %%
grid = TorusGrid(8, 1, 8)
V = periodized_potential(q, box(0.5), grid)
print(V.sum() * grid.spacing, q.values.sum())

# %% [markdown]
# ``D0`` is the admissible threshold used by the Temple step; the event
# ``A_{M,delta}`` asks that few sites carry a coupling below ``D0 M^-alpha``.

# %%
phi = drift()
D0 = compute_D0(box(0.5), phi)
print(D0, 2 * math.pi**2 / 3)
for M in (4, 8, 16):
    qs = [sample_config(power(1.0), M, 1, mix64(M, i)) for i in range(200)]
    frac = np.mean([in_A_delta(c, 0.5, D0, phi.alpha) for c in qs])
    print(M, frac, exceedance_count(qs[0], D0, phi.alpha))
