# %% [markdown]
# Three routes to the metric of a random quasi-free system: closed forms,
# the generic spectral formula on the dense state, and finite differences
# of the Uhlmann fidelity.

# %%
import numpy as np

from thermobures import quasifree

# %%
rng = np.random.default_rng(7)
ms = quasifree.random_mode_system(rng, 3)
r = quasifree.oracle_check(ms)
print("closed:\n", r.closed)
print("dense:\n", r.dense)
print(f"closed vs dense {r.closed_vs_dense:.2e}, fidelity vs dense {r.fidelity_vs_dense:.2e}")

# %%
# with no Bogoliubov rotation the non-classical part vanishes on both routes
r0 = quasifree.oracle_check(quasifree.random_mode_system(rng, 3, zero_dtheta=True))
print("nc parts:", r0.nc_closed, r0.nc_dense)

# %%
worst = max(quasifree.oracle_check(quasifree.random_mode_system(rng, n)).fidelity_vs_dense
            for n in (1, 2, 3) for _ in range(20))
print(f"worst fidelity deviation over 60 trials: {worst:.2e}")
