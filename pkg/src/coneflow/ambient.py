"""Ambient geometry of a cone: phase points, the caustic integral, classification.

Everything here works directly with Euclidean coordinates in R^{N+1} and does
not need to know which manifold the cone is built over.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import RadialState, ZeroScale, ZeroVelocity

TOL_RADIAL = 1e-10
TOL_CONE = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    """Position ``x`` on the cone and velocity ``v`` in ambient coordinates.

    Unit speed is not required; all formulas use the ``|v|``-normalized forms.
    """

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=float).reshape(-1)
        if x.shape != v.shape:
            raise ValueError(f"x and v differ in length: {x.size} != {v.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("phase point has non-finite entries")
        x.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def dim(self):
        return self.x.size

    @property
    def speed(self):
        return float(np.linalg.norm(self.v))

    def __eq__(self, other):
        if not isinstance(other, PhasePoint):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash((self.x.tobytes(), self.v.tobytes()))


class Kind(Enum):
    RADIAL = "radial"
    NON_RADIAL = "non_radial"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    I_value: float

    @property
    def radial(self):
        return self.kind is Kind.RADIAL


def _speed_sq(v):
    vv = float(np.dot(v, v))
    if vv == 0.0:
        raise ZeroVelocity("velocity is zero")
    return vv


def integral_I(p):
    """Squared distance from the vertex to the tangent line through ``p``.

    Evaluated as the squared norm of the component of ``x`` orthogonal to
    ``v``, which equals ``|x|^2 - <x,v>^2/|v|^2`` but stays nonnegative and
    avoids cancellation far from the vertex.
    """
    vv = _speed_sq(p.v)
    w = p.x - (np.dot(p.x, p.v) / vv) * p.v
    return max(float(np.dot(w, w)), 0.0)


def classify(p, tol_radial=TOL_RADIAL):
    if not np.any(p.x):
        _speed_sq(p.v)
        return Classification(Kind.RADIAL, 0.0)
    I = integral_I(p)
    if I <= tol_radial:
        return Classification(Kind.RADIAL, I)
    return Classification(Kind.NON_RADIAL, I)


def tangency_parameter(p, tol_radial=TOL_RADIAL):
    """Parameter value at which the geodesic through ``p`` touches the sphere of radius sqrt(I).

    ``<gamma, gamma'>`` grows with constant slope ``|v|^2`` along any cone
    geodesic, so the zero is ``-<x,v>/|v|^2``.
    """
    c = classify(p, tol_radial)
    if c.radial:
        raise RadialState("tangency is undefined for a generatrix")
    return -float(np.dot(p.x, p.v)) / _speed_sq(p.v)


def scale_phase(p, a1, a2):
    """State at parameter 0 of the geodesic ``a1 * gamma(a2 * s)``."""
    if a1 == 0 or a2 == 0:
        raise ZeroScale("scale factors must be nonzero")
    return PhasePoint(a1 * p.x, a1 * a2 * p.v)


def canonical_form(p, tol_radial=TOL_RADIAL):
    """Return ``(I, speed, s0)`` used to normalize ``p`` to I = 1, unit speed, tangency at 0."""
    c = classify(p, tol_radial)
    if c.radial:
        raise RadialState("canonical form needs a non-radial state")
    speed = p.speed
    return c.I_value, speed, -float(np.dot(p.x, p.v)) / speed**2
