# %% [markdown]
# Curvature sign change between the quasi-classical and quantum-critical regions.
# A coarse grid keeps this quick; `thermobures crossover` runs the full one.

# %%
import numpy as np

from thermobures import geometry

# %%
mf = geometry.ising_field((0.05, 3.0, 0.01, 2.0))
hs = np.linspace(1.05, 2.0, 30)
Ts = np.linspace(0.02, 1.0, 30)
sg = geometry.scan(mf, hs, Ts)
print("failed nodes:", len(sg.failures))

# %%
# coarse sign map, T increasing upwards
for iT in range(len(Ts) - 1, -1, -3):
    row = "".join("." if np.isnan(k) else ("+" if k > 0 else "-") for k in sg.curvature[iT])
    print(f"T={Ts[iT]:5.3f} {row}")

# %%
contours = geometry.zero_curvature_contours(sg)
for c in contours:
    print(f"zero-curvature line: {len(c)} points, dT/dh = {geometry.polyline_slope(c):.3f}")

# %%
ridges = geometry.ridge_lines(sg)
print(geometry.crossover_report(ridges=ridges, contours=contours).summary())
