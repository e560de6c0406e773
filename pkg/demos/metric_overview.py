# %% [markdown]
# Thermal Bures metric of the transverse-field Ising chain over the (h, T) plane.

# %%
import numpy as np

from thermobures import ising
from thermobures.numerics import eigen2

# %%
# metric components along the critical line h = 1
for T in (0.01, 0.02, 0.05, 0.1, 0.5):
    c = ising.metric_components(1.0, T)
    print(f"T={T:5.2f}  g_hh_c={c.g_hh_c:.4e}  g_hh_nc={c.g_hh_nc:.4e}  "
          f"g_hT={c.g_hT:+.4e}  g_TT={c.g_TT:.4e}")

# %%
# quantum-critical scaling: T g_nc approaches C/pi^2, T g_TT approaches pi/24
for T in (0.05, 0.02, 0.01):
    c = ising.metric_components(1.0, T)
    print(f"T={T}: T g_nc/(C/pi^2) = {T * c.g_hh_nc * np.pi ** 2 / ising.CATALAN:.4f}, "
          f"T g_TT/(pi/24) = {T * c.g_TT * 24 / np.pi:.4f}")

# %%
# quasi-classical region: the excess over the ground state dies like exp(-gap/T)
for T in (0.05, 0.07, 0.1):
    print(f"h=2 T={T}: g_hh - g_nc(T=0) = {ising.excess_over_ground_state(2.0, T):.3e}")

# %%
# all closed-form predictions at their probe points
for p in ising.asymptotic_predictions():
    for h, T in p.probes:
        pred = p.formula(h, T)
        num = p.numeric(h, T, None)
        print(f"{p.name:24s} ({h:g}, {T:g})  predicted {pred:+.4e}  numeric {num:+.4e}  "
              f"{'ok' if p.check(pred, num) else 'off'}")

# %%
# principal directions: at h = 0 the metric is diagonal
for h, T in [(0.0, 0.3), (1.0, 0.3), (20.0, 20.0)]:
    e = eigen2(ising.metric_at(h, T))
    print(f"({h}, {T}): lambda_max={e.lambda_max:.3e} v_max={np.round(e.v_max, 4)} "
          f"lambda_min/lambda_max={e.lambda_min / e.lambda_max:.2e}")

# %%
print("h=0 crossings of g_hh and g_TT:", ising.h_zero_line_crossings())
