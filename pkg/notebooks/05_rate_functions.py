# %% [markdown]
# # Rate functions
#
# ``g(x) = -log F(D0/x)`` measures how unlikely small couplings are,
# ``j(x) = x^d g(x^alpha)`` and ``x_t`` solves ``j(x_t) = t``. The tail of
# ``log L(t)`` is ``t / x_t^alpha``.

# %%
import math

import numpy as np

from lifshitz.alloy import atom, double_exponential, exponential, power
from lifshitz.rates import RateBundle, h_eval, j_eval, loglog_limits, rate_denominator, tauber_substitution, x_t

# %%
bundles = {
    "atom": RateBundle(1, 2.0, 2 * math.pi**2 / 3, atom(math.exp(-1), 1 - math.exp(-1))),
    "power": RateBundle(1, 2.0, 1.0, power(1.0)),
    "exponential": RateBundle(1, 2.0, 1.0, exponential(1.0)),
    "double exponential": RateBundle(1, 2.0, 1.0, double_exponential()),
}
for name, b in bundles.items():
    row = [f"{rate_denominator(b, t):.4g}" for t in (1e2, 1e4, 1e6)]
    print(f"{name:20s} x_t(1e6) = {x_t(b, 1e6):9.4f}  t/x_t^alpha: {row}")

# %% [markdown]
# Inverse check and the loglog exponent of ``h`` for the exponential family.

# %%
b = bundles["exponential"]
print(max(abs(j_eval(b, x_t(b, t)) / t - 1) for t in np.geomspace(1, 1e9, 40)))
ts = np.geomspace(1e6, 1e9, 7)
print(np.polyfit(np.log(ts), np.log([h_eval(b, t) for t in ts]), 1)[0], loglog_limits(1.0, 1, 2.0)[1])

# %% [markdown]
# The substitution behind the Tauberian argument holds to rounding.

# %%
print(tauber_substitution(bundles["power"], 1e5, 2.0))
