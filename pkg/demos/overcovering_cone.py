"""
Narrow cones and self-intersecting geodesics
============================================

A whole cone geodesic projects onto a link geodesic arc of length pi. When
the closed link geodesic is shorter than pi the arc wraps past its own start,
and the cone geodesic crosses itself. The cone over a circle of radius 0.5
is narrow enough.
"""

# %%
import numpy as np

from coneflow import IntegratorSettings, ManifoldConfig, PhasePoint, sample_trajectory
from coneflow.correspondence import asymptotic_directions, link_length, self_intersections, wrap_count

settings = IntegratorSettings(rtol=1e-10, atol=1e-12)
for rho in (1.0, 0.5):
    cone = ManifoldConfig.circle(rho)
    print(f"rho = {rho}: link length {link_length(cone):.6f}, wrap count {wrap_count(cone):.6f}")

# %%
cone = ManifoldConfig.circle(0.5)
p = PhasePoint([0.5, 0.0, 1.0], [0.0, 1.0, 0.0])
traj = sample_trajectory(cone, p, (-100, 100), 4001, "lift", settings)
for s1, s2, dist in self_intersections(traj):
    print(f"gamma({s1:.6f}) = gamma({s2:.6f}), distance {dist:.1e}")

# %%
# Far out the geodesic straightens along two generatrices, one per end.
d_plus, d_minus = asymptotic_directions(cone, p, settings)
print("outgoing direction:", d_plus)
print("incoming direction:", d_minus)
print("angle at s = 100:", np.arccos(traj.v[-1] @ d_plus / np.linalg.norm(traj.v[-1])))
