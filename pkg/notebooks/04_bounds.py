# %% [markdown]
# # Lower and upper bounds on the ground state
#
# Temple's inequality turns the mean and second moment of the potential into a
# lower bound on ``lambda_1``; a Chernoff estimate controls how often that
# bound is available; a box trial function gives an upper bound.

# %%
import numpy as np

from lifshitz.alloy import box, compute_D0, in_A_delta, mix64, periodized_potential, power, sample_config
from lifshitz.bernstein import drift, stable
from lifshitz.bounds import (
    binomial_tail_bound, binomial_upper_tail, complement_probability_bound, dirichlet_upper_bound,
    temple_delta_bound, temple_inputs, temple_lower_bound,
)
from lifshitz.torus import SchrodingerOperator, SpectralOperator, TorusGrid, ground_state

# %% [markdown]
# Temple bound against the computed ground state for configurations in the
# event set.

# %%
phi, site, M = drift(), box(0.5), 8
D0 = compute_D0(site, phi)
grid = TorusGrid(M, 1, 8)
kin = SpectralOperator(grid, phi)
print("uniform bound on A_{M,0.5}:", temple_delta_bound(0.5, D0, M, phi.alpha, site, phi.c1))
shown = 0
for i in range(100):
    q = sample_config(power(1.0), M, 1, mix64(1, i))
    if not in_A_delta(q, 0.5, D0, phi.alpha):
        continue
    lam, _ = ground_state(SchrodingerOperator(kin, periodized_potential(q, site, grid)), tol=1e-10)
    print(f"lambda_1 = {lam:.5f}  Temple >= {temple_lower_bound(temple_inputs(q, site, phi, D0)):.5f}")
    shown += 1
    if shown == 5:
        break

# %% [markdown]
# The Chernoff bound ``(p/gamma)^(gamma n) ((1-p)/(1-gamma))^((1-gamma) n)``
# against the exact binomial tail.

# %%
for n in (10, 30, 50):
    print(n, binomial_upper_tail(n, 0.3, 0.6 * n), binomial_tail_bound(n, 0.3, 0.6))
print(complement_probability_bound(4, 0.5, 0.01))

# %% [markdown]
# The box trial function gives an upper bound decaying like ``M^-alpha``.

# %%
for M in (2, 4, 8, 16):
    print(M, dirichlet_upper_bound(stable(1.0), M, 1, 1.0) * M)
