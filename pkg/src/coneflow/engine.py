"""Numerical geodesic flow on the cone and on its spherical link.

The cone metric in chart coordinates is the warped product dt^2 + t^2 sigma,
whose geodesic equations are

    t''   = t sigma_ij u'^i u'^j
    u''^k = -Gamma^k_ij u'^i u'^j - (2/t) t' u'^k

Adaptive stepping uses scipy's embedded Runge-Kutta pairs one step at a time,
so step limits, vertex guards and speed projection can be applied between
steps. A fixed-step classical RK4 is available for drift studies.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution
from scipy.interpolate import CubicHermiteSpline

from .ambient import TOL_RADIAL, PhasePoint, classify, integral_I
from .errors import ConfigError, RadialState, StepLimit, VertexApproach, ZeroVelocity
from .manifolds import (
    chart_to_ambient,
    induced_metric,
    link_frame,
    link_geometry,
    phase_to_chart,
    reduce,
)

BACKENDS = ("direct", "lift")


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float = None
    h_max: float = np.inf
    max_steps: int = 200_000
    renormalize_speed: bool = False
    method: str = "DOP853"
    h_fixed: float = 1e-2

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("integrator: rtol and atol must be positive")
        if not self.max_steps > 0:
            raise ConfigError("integrator: max_steps must be positive")
        if self.method not in ("RK45", "DOP853", "RK4"):
            raise ConfigError(f"integrator: unknown method {self.method!r}")
        if self.h_max is not None and not self.h_max > 0:
            raise ConfigError("integrator: h_max must be positive")
        if self.h_init is not None and not self.h_init > 0:
            raise ConfigError("integrator: h_init must be positive")
        if not self.h_fixed > 0:
            raise ConfigError("integrator: h_fixed must be positive")

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"integrator: {exc}") from None


DEFAULT_SETTINGS = IntegratorSettings()


# -- one-directional integration legs ---------------------------------------


@dataclass
class _Leg:
    ts: np.ndarray
    ys: np.ndarray
    dense: object
    nfev: int

    def __call__(self, s):
        return self.dense(s)


def _const_leg(y0):
    y0 = np.array(y0, dtype=float)

    def dense(s):
        s = np.asarray(s, dtype=float)
        return np.repeat(y0[:, None], s.size, axis=1).reshape(y0.shape + s.shape)

    return _Leg(np.array([0.0]), y0[None, :], dense, 0)


def _integrate_leg(fun, y0, s_end, settings, project=None, guard=None):
    """Integrate ``y' = fun(s, y)`` from s = 0 to ``s_end``; s_end is hit exactly."""
    if s_end == 0.0:
        return _const_leg(y0)
    if settings.method == "RK4":
        return _rk4_leg(fun, y0, s_end, settings, project, guard)
    cls = RK45 if settings.method == "RK45" else DOP853
    h_max = np.inf if settings.h_max is None else settings.h_max
    solver = cls(fun, 0.0, np.array(y0, dtype=float), s_end, rtol=settings.rtol, atol=settings.atol,
                 max_step=h_max, first_step=settings.h_init, vectorized=False)
    ts, ys, interps = [0.0], [solver.y.copy()], []
    steps = 0
    while solver.status == "running":
        if steps >= settings.max_steps:
            raise StepLimit(f"more than {settings.max_steps} steps before s={s_end}")
        msg = solver.step()
        if solver.status == "failed":
            raise StepLimit(f"step size underflow at s={solver.t}: {msg}")
        steps += 1
        interps.append(solver.dense_output())
        if project is not None:
            solver.y = project(solver.y)
            solver.f = fun(solver.t, solver.y)
        if guard is not None:
            guard(solver.t, solver.y)
        ts.append(solver.t)
        ys.append(solver.y.copy())
    ts = np.array(ts)
    sol = OdeSolution(ts, interps)
    return _Leg(ts, np.array(ys), sol, solver.nfev)


def _rk4_leg(fun, y0, s_end, settings, project, guard):
    n_steps = int(np.ceil(abs(s_end) / settings.h_fixed - 1e-12))
    if n_steps > settings.max_steps:
        raise StepLimit(f"fixed step {settings.h_fixed} needs {n_steps} > {settings.max_steps} steps")
    ts = np.linspace(0.0, s_end, n_steps + 1)
    y = np.array(y0, dtype=float)
    ys, fs = [y.copy()], [fun(0.0, y)]
    for k in range(n_steps):
        s, h = ts[k], ts[k + 1] - ts[k]
        k1 = fs[-1]
        k2 = fun(s + h / 2, y + h / 2 * k1)
        k3 = fun(s + h / 2, y + h / 2 * k2)
        k4 = fun(s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if project is not None:
            y = project(y)
        if guard is not None:
            guard(ts[k + 1], y)
        ys.append(y.copy())
        fs.append(fun(ts[k + 1], y))
    ys, fs = np.array(ys), np.array(fs)
    order = np.argsort(ts)
    spline = CubicHermiteSpline(ts[order], ys[order], fs[order], axis=0)

    def dense(s):
        return np.moveaxis(spline(s), -1, 0) if np.ndim(s) else spline(s)

    return _Leg(ts, ys, dense, 4 * n_steps)


class _TwoLegs:
    """Dense solution on [s_lo, s_hi] assembled from a backward and a forward leg out of s = 0."""

    def __init__(self, back, fwd, offset=0.0):
        self.back, self.fwd, self.offset = back, fwd, offset

    def __call__(self, s):
        s = np.asarray(s, dtype=float) - self.offset
        if s.ndim == 0:
            return (self.back if s < 0 else self.fwd)(s)
        out = np.empty((self.fwd.ys.shape[1], s.size))
        neg = s < 0
        if neg.any():
            out[:, neg] = self.back(s[neg])
        if (~neg).any():
            out[:, ~neg] = self.fwd(s[~neg])
        return out

    def step_points(self):
        return np.concatenate([self.back.ts[:0:-1], self.fwd.ts]) + self.offset

    def step_values(self):
        """States stored at the step points (after any projection), shape (dim, m)."""
        return np.concatenate([self.back.ys[:0:-1], self.fwd.ys]).T

    @property
    def nfev(self):
        return self.back.nfev + self.fwd.nfev


def _legs(fun, y0, span, settings, project=None, guard=None, start=0.0):
    lo, hi = span[0] - start, span[1] - start
    back = _integrate_leg(fun, y0, min(lo, 0.0), settings, project, guard)
    fwd = _integrate_leg(fun, y0, max(hi, 0.0), settings, project, guard)
    return _TwoLegs(back, fwd, start)


# -- right-hand sides -------------------------------------------------------


def cone_rhs(cfg):
    n = cfg.n

    def f(s, y):
        t, u, dt, du = y[0], y[1:n + 1], y[n + 1], y[n + 2:]
        _, _, sig, gam = link_geometry(cfg, u)
        out = np.empty_like(y)
        out[0] = dt
        out[1:n + 1] = du
        out[n + 1] = t * (du @ sig @ du)
        out[n + 2:] = -(gam @ du) @ du - (2.0 * dt / t) * du
        return out

    return f


def sigma_rhs(cfg):
    n = cfg.n

    def f(s, y):
        u, du = y[:n], y[n:]
        gam = link_geometry(cfg, u)[3]
        return np.concatenate([du, -(gam @ du) @ du])

    return f


# -- trajectories -----------------------------------------------------------


@dataclass
class Trajectory:
    """Samples of a cone geodesic plus a dense interpolant ``dense_eval(s) -> (x, v)``.

    ``u`` is kept continuous (unwrapped) along the trajectory; use
    ``reduced_u`` for coordinates in the fundamental domain.
    """

    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    dense_eval: object = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.s.size

    def state(self, s):
        x, v = self.dense_eval(s)
        return PhasePoint(x, v)

    def reduced_u(self, cfg):
        return reduce(cfg, self.u)

    @property
    def norm_sq(self):
        return np.einsum("ij,ij->i", self.x, self.x)

    def integral_I(self):
        if self.meta.get("backend") == "radial":
            # generatrices carry I = 0 exactly; the formula only adds round-off
            return np.zeros(self.s.size)
        return np.array([integral_I(PhasePoint(x, v)) for x, v in zip(self.x, self.v)])


@dataclass
class SigmaTrajectory:
    """Samples ``(s, u, du, q, dq)`` of a link geodesic and a dense chart interpolant."""

    s: np.ndarray
    u: np.ndarray
    du: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    dense_chart: object = field(repr=False)
    meta: dict = field(default_factory=dict)

    def speed(self, cfg):
        return np.array([np.sqrt(d @ induced_metric(cfg, u) @ d) for u, d in zip(self.u, self.du)])


def _chart_states_to_ambient(cfg, Y):
    n = cfg.n
    m = Y.shape[1]
    xs = np.empty((m, cfg.dim))
    vs = np.empty((m, cfg.dim))
    for k in range(m):
        xs[k], vs[k] = chart_to_ambient(cfg, Y[0, k], Y[1:n + 1, k], Y[n + 1, k], Y[n + 2:, k])
    return xs, vs


def _chart_dense_to_ambient(cfg, dense):
    def ev(s):
        Y = dense(np.atleast_1d(s))
        xs, vs = _chart_states_to_ambient(cfg, Y)
        if np.ndim(s) == 0:
            return xs[0], vs[0]
        return xs, vs

    return ev


def _sample_grid(span, n_samples):
    lo, hi = float(span[0]), float(span[1])
    if not hi > lo:
        raise ConfigError(f"span must satisfy s_a < s_b, got {span}")
    if n_samples < 2:
        raise ConfigError("n_samples must be at least 2")
    return np.linspace(lo, hi, int(n_samples))


def _vertex_guard(I):
    limit = 0.5 * np.sqrt(I)

    def guard(s, y):
        if abs(y[0]) < limit:
            raise VertexApproach(f"|t| = {abs(y[0]):.3e} < sqrt(I)/2 = {limit:.3e} at s={s}")

    return guard


def _cone_legs(cfg, t0, u0, dt0, du0, span, settings):
    x0, v0 = chart_to_ambient(cfg, t0, u0, dt0, du0)
    if t0 == 0.0:
        raise RadialState("t0 = 0 is the vertex; only generatrices pass through it")
    if not (dt0 != 0.0 or np.any(du0)):
        raise ZeroVelocity("initial velocity is zero")
    c = classify(PhasePoint(x0, v0))
    if c.radial:
        raise RadialState("radial initial state; use flow() for generatrices")
    y0 = np.concatenate([[t0], u0, [dt0], du0]).astype(float)
    return _legs(cone_rhs(cfg), y0, span, settings, guard=_vertex_guard(c.I_value)), c.I_value


def flow_cone_direct(cfg, t0, u0, dt0, du0, span, settings=None, n_samples=None):
    """Integrate the warped-product geodesic equations from chart state at s = 0.

    Samples are the accepted step points inside ``span`` unless ``n_samples``
    asks for a uniform grid.
    """
    settings = settings or DEFAULT_SETTINGS
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    du0 = np.atleast_1d(np.asarray(du0, dtype=float))
    if n_samples is not None:
        grid = _sample_grid(span, n_samples)
    elif not span[1] > span[0]:
        raise ConfigError(f"span must satisfy s_a < s_b, got {span}")
    legs, I0 = _cone_legs(cfg, float(t0), u0, float(dt0), du0, span, settings)
    if n_samples is None:
        pts = legs.step_points()
        grid = pts[(pts >= span[0]) & (pts <= span[1])]
    Y = legs(grid)
    xs, vs = _chart_states_to_ambient(cfg, Y)
    n = cfg.n
    return Trajectory(
        s=grid, x=xs, v=vs, t=Y[0], u=Y[1:n + 1].T, du=Y[n + 2:].T,
        dense_eval=_chart_dense_to_ambient(cfg, legs),
        meta={"backend": "direct", "settings": settings, "manifold": cfg.to_dict(),
              "nfev": legs.nfev, "I0": I0},
    )


def flow_sigma(cfg, u0, du0, span, settings=None, s_start=None, n_samples=None):
    """Geodesic of the link metric in chart coordinates, started at ``s_start`` (default span[0]).

    With ``renormalize_speed`` the initial velocity is scaled to unit
    sigma-norm and projected back onto it after every step.
    """
    settings = settings or DEFAULT_SETTINGS
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    du0 = np.atleast_1d(np.asarray(du0, dtype=float))
    if not np.any(du0):
        raise ZeroVelocity("initial link velocity is zero")
    if not span[1] > span[0]:
        raise ConfigError(f"span must satisfy s_a < s_b, got {span}")
    n = cfg.n
    sig0 = induced_metric(cfg, u0)
    project = None
    if settings.renormalize_speed:
        du0 = du0 / np.sqrt(du0 @ sig0 @ du0)

        def project(y):
            sig = link_geometry(cfg, y[:n])[2]
            return np.concatenate([y[:n], y[n:] / np.sqrt(y[n:] @ sig @ y[n:])])

    start = span[0] if s_start is None else float(s_start)
    legs = _legs(sigma_rhs(cfg), np.concatenate([u0, du0]), span, settings, project, start=start)
    if n_samples is None:
        pts = legs.step_points()
        keep = (pts >= span[0]) & (pts <= span[1])
        grid, Y = pts[keep], legs.step_values()[:, keep]
    else:
        grid = _sample_grid(span, n_samples)
        Y = legs(grid)
    qs, dqs = _link_states(cfg, Y)
    return SigmaTrajectory(s=grid, u=Y[:n].T, du=Y[n:].T, q=qs, dq=dqs, dense_chart=legs,
                           meta={"settings": settings, "manifold": cfg.to_dict(), "nfev": legs.nfev})


def _link_states(cfg, Y):
    n = cfg.n
    m = Y.shape[1]
    qs = np.empty((m, cfg.dim))
    dqs = np.empty((m, cfg.dim))
    for k in range(m):
        q, Q = link_frame(cfg, Y[:n, k])
        qs[k], dqs[k] = q, Q @ Y[n:, k]
    return qs, dqs


# -- the flow map -----------------------------------------------------------


def _check_backend(backend):
    if backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {BACKENDS}, got {backend!r}")


def flow(cfg, p, s, backend="direct", settings=None, tol_radial=TOL_RADIAL):
    """State at parameter ``s`` of the geodesic through ``p``.

    Generatrices are straight lines through the vertex and are advanced
    exactly as ``(x + s v, v)``; v is kept constant through the vertex.
    """
    _check_backend(backend)
    settings = settings or DEFAULT_SETTINGS
    s = float(s)
    if classify(p, tol_radial).radial:
        return PhasePoint(p.x + s * p.v, p.v)
    if s == 0.0:
        return p
    if backend == "lift":
        from .correspondence import lift_from_state

        return lift_from_state(cfg, p, settings, span=(min(s, 0.0), max(s, 0.0)))(s)
    t0, u0, dt0, du0 = phase_to_chart(cfg, p)
    n = cfg.n
    I0 = integral_I(p)
    leg = _integrate_leg(cone_rhs(cfg), np.concatenate([[t0], u0, [dt0], du0]), s, settings,
                         guard=_vertex_guard(I0))
    y = leg.ys[-1]
    return PhasePoint(*chart_to_ambient(cfg, y[0], y[1:n + 1], y[n + 1], y[n + 2:]))


def _radial_trajectory(cfg, p, grid):
    xs = p.x[None, :] + grid[:, None] * p.v[None, :]
    vs = np.repeat(p.v[None, :], grid.size, axis=0)
    from .manifolds import ambient_to_chart

    _, u_dir = ambient_to_chart(cfg, p.v if not np.any(p.x) else p.x)
    ts = np.copysign(np.linalg.norm(xs, axis=1), xs[:, -1])
    us = np.repeat(u_dir[None, :], grid.size, axis=0)

    def dense(s):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return p.x + s * p.v, p.v.copy()
        return p.x[None, :] + s[:, None] * p.v[None, :], np.repeat(p.v[None, :], s.size, axis=0)

    return Trajectory(s=grid, x=xs, v=vs, t=ts, u=us, du=np.zeros_like(us), dense_eval=dense,
                      meta={"backend": "radial", "manifold": cfg.to_dict(), "I0": 0.0})


def sample_trajectory(cfg, p, span, n_samples, backend="direct", settings=None, tol_radial=TOL_RADIAL):
    """Geodesic through p (at s = 0) sampled on a uniform grid over ``span``."""
    _check_backend(backend)
    settings = settings or DEFAULT_SETTINGS
    grid = _sample_grid(span, n_samples)
    if classify(p, tol_radial).radial:
        return _radial_trajectory(cfg, p, grid)
    if backend == "lift":
        from .correspondence import lift_trajectory

        return lift_trajectory(cfg, p, grid, settings)
    t0, u0, dt0, du0 = phase_to_chart(cfg, p)
    return flow_cone_direct(cfg, t0, u0, dt0, du0, span, settings, n_samples=n_samples)
