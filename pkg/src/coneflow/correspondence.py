"""Dictionary between cone geodesics and geodesics of the spherical link.

A non-radial cone geodesic normalized to I = 1, unit speed and tangency at
s = 0 projects radially onto a unit-speed link geodesic with s = tan(s~),
and every length-pi arc of a link geodesic lifts back through

    gamma(s) = gamma~(arctan s) * sqrt(s^2 + 1).

The lift gives a second, independent route to the cone flow: only the link
geodesic equations are integrated.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares
from scipy.spatial import cKDTree

from .ambient import TOL_RADIAL, PhasePoint, canonical_form, classify, integral_I
from .engine import DEFAULT_SETTINGS, Trajectory, flow_sigma
from .errors import NotNormalized, RadialState
from .manifolds import ambient_to_chart, induced_metric, velocity_to_chart

HALF_PI = 0.5 * np.pi


@dataclass
class SigmaGeodesic:
    """Arc-length parametrized link geodesic ``s~ -> (q, dq)`` in ambient coordinates.

    ``q(0)`` is the tangency direction of the cone geodesic it came from.
    ``chart``, when available, returns link chart coordinates ``(u, du)``;
    ``sign`` is -1 when the geodesic lives on the lower cone, where
    ``q = -q(u)``.
    """

    evaluate: object = field(repr=False)
    domain: tuple = (-HALF_PI, HALF_PI)
    chart: object = field(default=None, repr=False)
    sign: float = 1.0

    def __call__(self, st):
        return self.evaluate(st)


def _sigma_from_chart(cfg, strj, sign, domain):
    from .engine import _link_states

    n = cfg.n

    def ev(st):
        Y = strj.dense_chart(np.atleast_1d(st))
        qs, dqs = _link_states(cfg, Y)
        qs, dqs = sign * qs, sign * dqs
        if np.ndim(st) == 0:
            return qs[0], dqs[0]
        return qs, dqs

    def chart(st):
        Y = strj.dense_chart(st)
        return Y[:n], Y[n:]

    return SigmaGeodesic(ev, domain, chart, sign)


def sigma_geodesic_from_state(cfg, p, settings=None, span=(-HALF_PI, HALF_PI)):
    """Link geodesic of the cone geodesic through ``p``, integrated on the link only.

    The link geodesic is started from the radial projection of ``p`` itself,
    at link arc length ``arctan(<x,v> / (|v| sqrt(I)))`` from the tangency
    point, so the cone flow is never needed. Returns ``(sg, I, speed, s0)``.
    """
    settings = settings or DEFAULT_SETTINGS
    I, c, s0 = canonical_form(p)
    rI = np.sqrt(I)
    st0 = float(np.arctan(-c * s0 / rI))
    g = np.cos(st0) * p.x / rI
    dg = -np.sin(st0) * p.x / rI + p.v / (c * np.cos(st0))
    tq, u0 = ambient_to_chart(cfg, g)
    sign = np.sign(tq)
    _, du0 = velocity_to_chart(cfg, sign, u0, dg)
    lo, hi = min(span[0], st0), max(span[1], st0)
    if hi == lo:
        hi = lo + 1e-12
    strj = flow_sigma(cfg, u0, du0, (lo, hi), settings, s_start=st0)
    return _sigma_from_chart(cfg, strj, sign, (lo, hi)), I, c, s0


@dataclass
class LiftedGeodesic:
    """Cone geodesic rebuilt from a link geodesic: integral ``I``, speed ``speed``,
    tangency reached at parameter ``s0``."""

    sg: SigmaGeodesic
    I: float
    speed: float
    s0: float = 0.0

    def _tau(self, s):
        return self.speed * (np.asarray(s, dtype=float) - self.s0) / np.sqrt(self.I)

    def states(self, s):
        tau = self._tau(s)
        st = np.arctan(tau)
        g, dg = self.sg(st)
        w = np.sqrt(tau**2 + 1.0)
        if np.ndim(tau):
            tau, w = tau[:, None], w[:, None]
        x = np.sqrt(self.I) * g * w
        v = self.speed * (dg + tau * g) / w
        return x, v

    def __call__(self, s):
        return PhasePoint(*self.states(float(s)))


def lift_geodesic(sg, I_target=1.0, speed=1.0):
    """Lift a link geodesic to the cone; parameter 0 is the tangency point ``sqrt(I) sg(0)``."""
    return LiftedGeodesic(sg, float(I_target), float(speed), 0.0)


def lift_from_state(cfg, p, settings=None, span=None):
    """Flow closure for the geodesic through p built by the lift backend.

    ``span``, in the original parameter, limits how much of the link
    geodesic is integrated; by default the whole length-pi arc is.
    """
    I, c, s0 = canonical_form(p)
    if span is None:
        st_span = (-HALF_PI, HALF_PI)
    else:
        st_span = tuple(np.arctan(c * (np.asarray(span, dtype=float) - s0) / np.sqrt(I)))
    sg = sigma_geodesic_from_state(cfg, p, settings, st_span)[0]
    return LiftedGeodesic(sg, I, c, s0)


def lift_trajectory(cfg, p, grid, settings=None):
    """Lift-backend counterpart of :func:`engine.flow_cone_direct` on a fixed grid."""
    grid = np.asarray(grid, dtype=float)
    lifted = lift_from_state(cfg, p, settings, (grid[0], grid[-1]))
    xs, vs = lifted.states(grid)
    tau = lifted._tau(grid)
    st = np.arctan(tau)
    u, du_sigma = lifted.sg.chart(st)
    ts = lifted.sg.sign * np.sqrt(lifted.I * (tau**2 + 1.0))
    du = (du_sigma * (lifted.speed / np.sqrt(lifted.I)) / (1.0 + tau**2)).T
    return Trajectory(s=grid, x=xs, v=vs, t=ts, u=u.T, du=du, dense_eval=lifted.states,
                      meta={"backend": "lift", "settings": settings or DEFAULT_SETTINGS,
                            "manifold": cfg.to_dict(), "I0": lifted.I})


def project_geodesic(traj, tol=1e-8):
    """Radial projection of a normalized cone trajectory (I = 1, unit speed, tangency at 0)."""
    x0, v0 = traj.dense_eval(0.0)
    p0 = PhasePoint(x0, v0)
    if classify(p0).radial:
        raise RadialState("cannot project a generatrix")
    I = integral_I(p0)
    if abs(I - 1.0) > tol or abs(p0.speed - 1.0) > tol or abs(x0 @ v0) > tol:
        raise NotNormalized(
            f"need I = 1, unit speed and tangency at s = 0; got I={I:.3e}, "
            f"speed={p0.speed:.3e}, <x,v>={x0 @ v0:.3e}"
        )

    def ev(st):
        st = np.asarray(st, dtype=float)
        x, v = traj.dense_eval(np.tan(st))
        c, sn = np.cos(st), np.sin(st)
        if st.ndim:
            c, sn = c[:, None], sn[:, None]
        return c * x, -sn * x + v / c

    domain = (float(np.arctan(traj.s[0])), float(np.arctan(traj.s[-1])))
    return SigmaGeodesic(ev, domain, None, float(np.sign(x0[-1])))


def asymptotic_directions(cfg, p, settings=None):
    """Limits of gamma' as s -> +inf and s -> -inf, from the link geodesic at arc length +-pi/2."""
    if classify(p).radial:
        raise RadialState("asymptotic directions are defined for non-radial geodesics")
    sg = sigma_geodesic_from_state(cfg, p, settings)[0]
    d_plus = sg(HALF_PI)[0]
    d_minus = -sg(-HALF_PI)[0]
    return d_plus, d_minus


def link_length(cfg):
    """Length of the closed link geodesics when known in closed form, else None."""
    if cfg.kind == "circle":
        rho = cfg.params["rho"]
        return 2.0 * np.pi * rho / np.sqrt(1.0 + rho**2)
    if cfg.kind == "sphere" and not np.any(cfg.params["center"]):
        rho = cfg.params["rho"]
        return 2.0 * np.pi * rho / np.sqrt(1.0 + rho**2)
    if cfg.kind == "ellipse":
        return quad(lambda u: np.sqrt(induced_metric(cfg, [u])[0, 0]), 0.0, 2.0 * np.pi,
                    epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return None


def wrap_count(cfg, sg=None):
    """How many times a length-pi link arc covers its closed geodesic, or None when unknown.

    Values above one mean the cone geodesic winds around the cone enough to
    cross itself.
    """
    L = link_length(cfg)
    return None if L is None else np.pi / L


def self_intersections(traj, tol=1e-6, min_gap=None):
    """Pairs ``(s1, s2, distance)`` with ``gamma(s1) = gamma(s2)`` within ``tol`` and s1 < s2.

    Candidates come from nearby sample pairs far apart in s; each is refined
    by least squares on the dense interpolant.
    """
    X = traj.x
    seg = np.linalg.norm(np.diff(X, axis=0), axis=1)
    radius = 2.0 * seg.max()
    speed = np.linalg.norm(traj.v, axis=1).min()
    if min_gap is None:
        min_gap = 4.0 * radius / speed
    pairs = cKDTree(X).query_pairs(radius, output_type="ndarray")
    if pairs.size == 0:
        return []
    s = traj.s
    pairs = pairs[np.abs(s[pairs[:, 0]] - s[pairs[:, 1]]) > min_gap]

    def res(z):
        return traj.dense_eval(z[0])[0] - traj.dense_eval(z[1])[0]

    def jac(z):
        return np.column_stack([traj.dense_eval(z[0])[1], -traj.dense_eval(z[1])[1]])

    found = []
    lo, hi = s[0], s[-1]
    for i, j in pairs:
        sol = least_squares(res, [s[i], s[j]], jac=jac, bounds=([lo, lo], [hi, hi]),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        s1, s2 = sorted(sol.x)
        dist = float(np.linalg.norm(res(np.array([s1, s2]))))
        if dist <= tol and s2 - s1 > min_gap:
            if not any(abs(s1 - a) < min_gap and abs(s2 - b) < min_gap for a, b, _ in found):
                found.append((float(s1), float(s2), dist))
    return sorted(found)
