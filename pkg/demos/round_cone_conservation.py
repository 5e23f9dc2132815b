"""
Geodesics on the round cone
===========================

The cone over the unit circle (at height 1) is flat away from its vertex, so
its geodesics unroll to straight lines. That gives an exact reference to
measure the integrator against, and a first look at the conserved quantity
I, the squared distance from the vertex to the tangent line.
"""

# %%
import numpy as np

from coneflow import IntegratorSettings, ManifoldConfig, PhasePoint, integral_I, sample_trajectory
from coneflow.manifolds import phase_to_chart
from coneflow.unroll import RoundConeSpec, oracle_state, unroll_state

cone = ManifoldConfig.circle(1.0)
launch = PhasePoint([1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
print("I at launch:", integral_I(launch))

# %%
# Integrate s in [-50, 50] with the default Dormand-Prince 8(5,3) stepper.
settings = IntegratorSettings(rtol=1e-10, atol=1e-12)
traj = sample_trajectory(cone, launch, (-50, 50), 1001, settings=settings)
print("max |I(s) - I(0)|:", np.abs(traj.integral_I() - 2.0).max())

# %%
# The distance to the vertex grows like a hyperbola: |x(s)|^2 = s^2 + I.
print("max quadratic-law residual:", np.abs(traj.norm_sq - (traj.s**2 + 2.0)).max())

# %%
# Unroll the cone into the plane and compare with the straight line there.
spec = RoundConeSpec(1.0)
t0, u0, dt0, du0 = phase_to_chart(cone, launch)
line = unroll_state(spec, t0, u0[0], dt0, du0[0])
x_ref, _ = oracle_state(spec, line, traj.s)
print("max position error vs unrolled line:", np.linalg.norm(traj.x - x_ref, axis=1).max())

# %%
# The geodesic never comes closer to the vertex than sqrt(I).
print("closest approach:", np.sqrt(traj.norm_sq.min()), "sqrt(I):", np.sqrt(2.0))
