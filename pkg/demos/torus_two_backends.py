"""
Two routes to the same geodesic
===============================

On the cone over a torus there is no closed form, but there are two
independent ways to compute a geodesic:

* integrate the cone's own geodesic equations (``backend="direct"``);
* integrate a geodesic of the spherical link and lift it back with
  gamma(s) = gamma~(arctan s) * sqrt(s^2 + 1) (``backend="lift"``).

Agreement between them is strong evidence that both are right.
"""

# %%
import numpy as np

from coneflow import IntegratorSettings, ManifoldConfig, integral_I, sample_trajectory
from coneflow.manifolds import chart_to_phase, random_launch

cone = ManifoldConfig.torus(2.0, 0.5)
settings = IntegratorSettings(rtol=1e-10, atol=1e-12)
rng = np.random.default_rng(3)

# %%
for k in range(3):
    p = chart_to_phase(cone, *random_launch(cone, rng))
    a = sample_trajectory(cone, p, (-20, 20), 401, "direct", settings)
    b = sample_trajectory(cone, p, (-20, 20), 401, "lift", settings)
    gap = max(np.abs(a.x - b.x).max(), np.abs(a.v - b.v).max())
    drift = np.abs(a.integral_I() - integral_I(p)).max()
    print(f"launch {k}: I = {integral_I(p):.6f}, direct/lift gap = {gap:.1e}, I drift = {drift:.1e}")
