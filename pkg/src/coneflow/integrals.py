"""First integrals built from the tangency point of a geodesic.

For a non-radial state the geodesic touches the sphere of radius sqrt(I) at
one point; its position and unit velocity there (the J vector) are constant
along the orbit. Multiplying by I gives the I vector, which extends
continuously by zero to the generatrices and still determines the orbit.
"""

from dataclasses import dataclass

import numpy as np

from .ambient import TOL_CONE, TOL_RADIAL, PhasePoint, classify, integral_I
from .engine import flow
from .errors import NotOnCone, RadialState, ZeroVector
from .manifolds import validate_phase

TOL_IMAGE = 1e-7


@dataclass(frozen=True)
class JVector:
    """Position and unit velocity of a geodesic at its tangency point.

    ``s0`` is the tangency parameter of the state the vector was computed
    from (in that state's own parametrization) and ``speed`` its speed.
    """

    position: np.ndarray
    velocity: np.ndarray
    s0: float = 0.0
    speed: float = 1.0

    @property
    def values(self):
        return np.concatenate([self.position, self.velocity])


@dataclass(frozen=True)
class IntegralVector:
    values: np.ndarray

    @property
    def N(self):
        return self.values.size // 2 - 1

    @property
    def position_part(self):
        return self.values[: self.N + 1]

    @property
    def velocity_part(self):
        return self.values[self.N + 1:]

    def is_zero(self):
        return not np.any(self.values)


def integrals_J(cfg, p, settings=None, backend="direct", tol_radial=TOL_RADIAL):
    c = classify(p, tol_radial)
    if c.radial:
        raise RadialState("J is undefined on generatrices")
    speed = p.speed
    unit = PhasePoint(p.x, p.v / speed)
    s0 = -float(unit.x @ unit.v) + 0.0
    at = flow(cfg, unit, s0, backend, settings, tol_radial)
    # the exact flow keeps unit speed; drop the integrator's drift
    return JVector(at.x, at.v / np.linalg.norm(at.v), s0 / speed, speed)


def integrals_I_vec(cfg, p, settings=None, backend="direct", tol_radial=TOL_RADIAL):
    """``I * J`` componentwise, or exactly zero on generatrices.

    The factor I is evaluated at the tangency state itself; it is the same
    first integral as at ``p`` and keeps the recovery identity exact.
    """
    if classify(p, tol_radial).radial:
        return IntegralVector(np.zeros(2 * p.dim))
    j = integrals_J(cfg, p, settings, backend, tol_radial)
    I = integral_I(PhasePoint(j.position, j.velocity))
    return IntegralVector(I * j.values)


def recover(iv):
    """Invert :func:`integrals_I_vec`: ``I = cbrt(sum of squared position entries)``, ``J = I^k / I``."""
    vals = np.asarray(iv.values if isinstance(iv, IntegralVector) else iv, dtype=float)
    iv = IntegralVector(vals)
    if iv.is_zero():
        raise ZeroVector("the zero vector corresponds to the whole family of generatrices")
    I = float(np.cbrt(np.sum(iv.position_part**2)))
    if I == 0.0:
        raise ZeroVector("position part vanishes; not in the image of a non-radial state")
    pos, vel = iv.position_part / I, iv.velocity_part / I
    return I, JVector(pos, vel, 0.0, float(np.linalg.norm(vel)))


def reconstruct_geodesic(cfg, iv, tol_cone=TOL_CONE, tol_image=TOL_IMAGE):
    """Tangency state of the unique geodesic with integral vector ``iv``.

    Vectors outside the image of the integral map raise NotOnCone.
    """
    I, j = recover(iv)
    p = PhasePoint(j.position, j.velocity)
    validate_phase(cfg, p, tol_cone)
    if abs(j.speed - 1.0) > tol_image:
        raise NotOnCone(f"velocity part has norm {j.speed:.12g}, expected 1")
    if abs(p.x @ p.v) > tol_image * np.sqrt(I):
        raise NotOnCone("recovered state is not a tangency state")
    return p
