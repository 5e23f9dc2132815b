"""Closed-form geodesics on round cones by flattening onto the plane.

The cone over the circle of radius rho in {x^3 = 1} has half-angle sine
``sin_alpha = rho / sqrt(1 + rho^2)``. Cutting along a generatrix and
flattening maps (t, u) to polar coordinates (|t|, u sin_alpha), an isometry,
so geodesics are straight lines in the plane. Nothing here uses the
numerical machinery; it is the reference every integrator is checked against.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RadialState

TOL_DEGENERATE = 1e-12


@dataclass(frozen=True)
class RoundConeSpec:
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("rho must be positive")

    @property
    def sin_alpha(self):
        return self.rho / np.sqrt(1.0 + self.rho**2)

    def link_point(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([self.rho * np.cos(u), self.rho * np.sin(u), np.ones_like(u)], -1) / np.sqrt(1 + self.rho**2)

    def link_tangent(self, u):
        u = np.asarray(u, dtype=float)
        return np.stack([-self.rho * np.sin(u), self.rho * np.cos(u), np.zeros_like(u)], -1) / np.sqrt(1 + self.rho**2)


@dataclass(frozen=True)
class PlanarLine:
    """Straight line ``P0 + s V`` in the development plane.

    ``sign`` is the sign of t (lower cone: -1); ``u0`` anchors the angle.
    """

    P0: np.ndarray
    V: np.ndarray
    u0: float
    sign: float

    @property
    def heading(self):
        return float(np.arctan2(self.V[1], self.V[0]))

    @property
    def r0(self):
        return float(np.hypot(*self.P0))

    @property
    def psi0(self):
        return float(np.arctan2(self.P0[1], self.P0[0]))

    @property
    def impact(self):
        """Distance from the apex to the line."""
        return abs(float(self.P0[0] * self.V[1] - self.P0[1] * self.V[0])) / np.hypot(*self.V)

    @property
    def s0(self):
        return -float(self.P0 @ self.V) / float(self.V @ self.V)


def unroll_state(spec, t0, u0, dt0, du0):
    """Develop the chart state ``(t0, u0, dt0, du0)`` into a planar line."""
    if t0 == 0.0:
        raise RadialState("vertex state has no development")
    sa = spec.sin_alpha
    r0 = abs(t0)
    psi0 = u0 * sa
    dr = np.sign(t0) * dt0
    dpsi = du0 * sa
    e_r = np.array([np.cos(psi0), np.sin(psi0)])
    e_psi = np.array([-np.sin(psi0), np.cos(psi0)])
    V = dr * e_r + r0 * dpsi * e_psi
    if not np.any(V):
        raise RadialState("zero velocity")
    line = PlanarLine(r0 * e_r, V, float(u0), float(np.sign(t0)))
    if line.impact <= TOL_DEGENERATE * max(1.0, r0):
        raise RadialState("heading along the generatrix")
    return line


def oracle_position(spec, line, s):
    """Chart coordinates ``(t, u)`` at parameter s; u is unwrapped continuously."""
    s = np.asarray(s, dtype=float)
    P = line.P0 + s[..., None] * line.V
    r = np.hypot(P[..., 0], P[..., 1])
    cross = line.P0[0] * P[..., 1] - line.P0[1] * P[..., 0]
    dot = line.P0 @ np.moveaxis(P, -1, 0)
    dpsi = np.arctan2(cross, dot)
    return line.sign * r, line.u0 + dpsi / spec.sin_alpha


def oracle_velocity(spec, line, s):
    """Chart velocities ``(dt, du)`` at parameter s."""
    s = np.asarray(s, dtype=float)
    P = line.P0 + s[..., None] * line.V
    r2 = P[..., 0] ** 2 + P[..., 1] ** 2
    dr = (P @ line.V) / np.sqrt(r2)
    dpsi = (P[..., 0] * line.V[1] - P[..., 1] * line.V[0]) / r2
    return line.sign * dr, dpsi / spec.sin_alpha


def oracle_state(spec, line, s):
    """Ambient ``(x, v)`` at parameter s."""
    t, u = oracle_position(spec, line, s)
    dt, du = oracle_velocity(spec, line, s)
    q = spec.link_point(u)
    dq = spec.link_tangent(u)
    t, dt, du = np.asarray(t)[..., None], np.asarray(dt)[..., None], np.asarray(du)[..., None]
    return t * q, dt * q + t * dq * du


def oracle_I(spec, line):
    """Squared distance from the apex to the developed line."""
    return line.impact**2
