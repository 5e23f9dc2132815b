"""
A full set of first integrals
=============================

Each non-radial geodesic touches the sphere of radius sqrt(I) at exactly one
point. Its position and unit velocity there form the J vector; I times J is
the I vector, which is continuous everywhere, vanishes on generatrices, and
pins down the geodesic.
"""

# %%
import numpy as np

from coneflow import IntegratorSettings, ManifoldConfig, PhasePoint, flow
from coneflow.integrals import integrals_I_vec, reconstruct_geodesic, recover

settings = IntegratorSettings(rtol=1e-10, atol=1e-12)
cone = ManifoldConfig.circle(1.0)
p = PhasePoint([1.0, 0.0, 1.0], [0.5, 1 / np.sqrt(2), 0.5])

iv = integrals_I_vec(cone, p, settings)
print("I vector:", np.round(iv.values, 10))

# %%
# Flowing the state along its geodesic leaves the I vector unchanged.
for s in (-10.0, 3.0, 10.0):
    q = flow(cone, p, s, settings=settings)
    change = np.abs(integrals_I_vec(cone, q, settings).values - iv.values).max()
    print(f"s = {s:6.1f}: change in I vector {change:.1e}")

# %%
# The vector can be inverted: recover I and J, then the tangency state.
I, j = recover(iv)
tangency = reconstruct_geodesic(cone, iv)
print("recovered I:", I)
print("tangency state:", tangency.x, tangency.v)

# %%
# Tilting the launch towards the generatrix drives the I vector to zero.
x = np.array([1.0, 0.0, 1.0])
for theta in (1.4, 1.5, 1.55, 1.57):
    v = np.cos(theta) * np.array([0.0, 1.0, 0.0]) + np.sin(theta) * x / np.sqrt(2)
    print(f"theta = {theta}: |I vector| = {np.linalg.norm(integrals_I_vec(cone, PhasePoint(x, v), settings).values):.2e}")
