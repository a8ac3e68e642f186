# %% [markdown]
# # Torus operators and their low spectrum
#
# On the torus of side ``M`` the kinetic operator is diagonal in Fourier space.
# Adding a potential gives a matrix-free operator whose lowest eigenvalues come
# from a block Lanczos solver.

# %%
import math

import numpy as np

from lifshitz.bernstein import drift, stable
from lifshitz.torus import (
    SchrodingerOperator, SpectralOperator, TorusGrid, gaussian_heat_kernel, ground_state, kinetic_eigenvalues,
    lowest_eigenvalues, torus_heat_kernel,
)

# %% [markdown]
# Free eigenvalues scale like ``M^-alpha``.

# %%
for M in (1, 2, 4, 8):
    mu = kinetic_eigenvalues(M, stable(1.0), 5)
    print(M, mu, mu[1] * M)

# %% [markdown]
# The torus heat kernel from the certified Fourier sum agrees with the sum
# over Gaussian images.

# %%
grid = TorusGrid(4, 1)
for t in (0.1, 1.0, 10.0):
    a = torus_heat_kernel(grid, drift(), t, [0.3], [2.9])
    b = gaussian_heat_kernel(4, t, [0.3], [2.9])
    print(f"t={t:5}: {a:.15f} {b:.15f}")

# %% [markdown]
# A nonnegative cosine potential lifts the ground state above the free value 0;
# its eigenfunction is positive.

# %%
grid = TorusGrid(4, 1, 16)
kin = SpectralOperator(grid, drift())
x = np.arange(grid.N) * grid.spacing
V = 1.0 + np.cos(2 * math.pi * x / grid.M)
op = SchrodingerOperator(kin, V)
lam, psi = ground_state(op, tol=1e-10)
print(lam, bool(np.all(psi * np.sign(psi.sum()) > 0)))
print(lowest_eigenvalues(op, 4, tol=1e-10))
