"""Manifolds in the hyperplane {x^{N+1} = 1}, their spherical links and link geometry.

A manifold is given by one periodic chart ``u -> p(u)`` with last coordinate
equal to one. The cone over it is ``{t p(u)}``; its link with the unit sphere
is parametrized by ``q(u) = p(u) / |p(u)|``. Metric and Christoffel symbols
of the link are assembled from the chart derivatives.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ambient import TOL_CONE, PhasePoint
from .errors import ConfigError, DomainError, NoConvergence, NotOnCone, RankDeficient

TWO_PI = 2.0 * np.pi
H_FD = 1e-5


@dataclass(frozen=True)
class ChartSpec:
    """Parametrized embedding of the base manifold.

    ``eval(u)`` returns p(u) in R^{N+1}, ``jacobian(u)`` the (N+1, n) matrix
    dp/du and ``hessian(u)``, when given, the (N+1, n, n) second derivatives.
    ``periods[i]`` is the period of coordinate i or None; non-periodic
    coordinates must lie strictly between ``lower[i]`` and ``upper[i]``.
    ``inverse``, when given, maps a point of the hyperplane back to u.
    """

    n: int
    N: int
    eval: Callable
    jacobian: Callable
    hessian: Optional[Callable] = None
    periods: tuple = ()
    lower: tuple = ()
    upper: tuple = ()
    inverse: Optional[Callable] = None

    def __post_init__(self):
        if not self.periods:
            object.__setattr__(self, "periods", (None,) * self.n)
        if not self.lower:
            object.__setattr__(self, "lower", (-np.inf,) * self.n)
        if not self.upper:
            object.__setattr__(self, "upper", (np.inf,) * self.n)
        if not (len(self.periods) == len(self.lower) == len(self.upper) == self.n):
            raise ConfigError("periods/lower/upper must have one entry per chart coordinate")


@dataclass(frozen=True)
class ManifoldConfig:
    kind: str
    params: dict
    chart: ChartSpec = field(repr=False)
    newton_tol: float = 1e-13
    newton_maxiter: int = 50

    @property
    def n(self):
        return self.chart.n

    @property
    def N(self):
        return self.chart.N

    @property
    def dim(self):
        """Ambient dimension N+1."""
        return self.chart.N + 1

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}

    # -- built-ins ---------------------------------------------------------

    @classmethod
    def circle(cls, rho=1.0):
        if not rho > 0:
            raise ConfigError("circle: rho must be positive")
        rho = float(rho)

        def ev(u):
            return np.array([rho * np.cos(u[0]), rho * np.sin(u[0]), 1.0])

        def jac(u):
            return np.array([[-rho * np.sin(u[0])], [rho * np.cos(u[0])], [0.0]])

        def hess(u):
            return np.array([[[-rho * np.cos(u[0])]], [[-rho * np.sin(u[0])]], [[0.0]]])

        def inv(y):
            return np.array([np.arctan2(y[1], y[0])])

        chart = ChartSpec(1, 2, ev, jac, hess, (TWO_PI,), inverse=inv)
        return cls("circle", {"rho": rho}, chart)

    @classmethod
    def ellipse(cls, a=2.0, b=1.0):
        if not (a > 0 and b > 0):
            raise ConfigError("ellipse: a and b must be positive")
        a, b = float(a), float(b)

        def ev(u):
            return np.array([a * np.cos(u[0]), b * np.sin(u[0]), 1.0])

        def jac(u):
            return np.array([[-a * np.sin(u[0])], [b * np.cos(u[0])], [0.0]])

        def hess(u):
            return np.array([[[-a * np.cos(u[0])]], [[-b * np.sin(u[0])]], [[0.0]]])

        def inv(y):
            return np.array([np.arctan2(y[1] / b, y[0] / a)])

        chart = ChartSpec(1, 2, ev, jac, hess, (TWO_PI,), inverse=inv)
        return cls("ellipse", {"a": a, "b": b}, chart)

    @classmethod
    def torus(cls, R=2.0, r=0.5):
        """Torus of revolution about the x^3 axis; u = (longitude, meridian angle)."""
        if not (R > r > 0):
            raise ConfigError("torus: need R > r > 0")
        R, r = float(R), float(r)

        def ev(u):
            cu, su, cw, sw = np.cos(u[0]), np.sin(u[0]), np.cos(u[1]), np.sin(u[1])
            rad = R + r * cw
            return np.array([rad * cu, rad * su, r * sw, 1.0])

        def jac(u):
            cu, su, cw, sw = np.cos(u[0]), np.sin(u[0]), np.cos(u[1]), np.sin(u[1])
            rad = R + r * cw
            return np.array([
                [-rad * su, -r * sw * cu],
                [rad * cu, -r * sw * su],
                [0.0, r * cw],
                [0.0, 0.0],
            ])

        def hess(u):
            cu, su, cw, sw = np.cos(u[0]), np.sin(u[0]), np.cos(u[1]), np.sin(u[1])
            rad = R + r * cw
            return np.array([
                [[-rad * cu, r * sw * su], [r * sw * su, -r * cw * cu]],
                [[-rad * su, -r * sw * cu], [-r * sw * cu, -r * cw * su]],
                [[0.0, 0.0], [0.0, -r * sw]],
                [[0.0, 0.0], [0.0, 0.0]],
            ])

        def inv(y):
            return np.array([np.arctan2(y[1], y[0]), np.arctan2(y[2], np.hypot(y[0], y[1]) - R)])

        chart = ChartSpec(2, 3, ev, jac, hess, (TWO_PI, TWO_PI), inverse=inv)
        return cls("torus", {"R": R, "r": r}, chart)

    @classmethod
    def sphere(cls, rho=1.0, center=(0.0, 0.0, 0.0)):
        """Round 2-sphere of radius ``rho`` centred at ``(center, 1)``; u = (polar, azimuth).

        The polar angle is not periodic and the chart degenerates at the poles.
        """
        if not rho > 0:
            raise ConfigError("sphere: rho must be positive")
        rho = float(rho)
        c = np.asarray(center, dtype=float).reshape(-1)
        if c.size != 3:
            raise ConfigError("sphere: center must have 3 entries")

        def ev(u):
            st, ct, sp, cp = np.sin(u[0]), np.cos(u[0]), np.sin(u[1]), np.cos(u[1])
            return np.array([c[0] + rho * st * cp, c[1] + rho * st * sp, c[2] + rho * ct, 1.0])

        def jac(u):
            st, ct, sp, cp = np.sin(u[0]), np.cos(u[0]), np.sin(u[1]), np.cos(u[1])
            return rho * np.array([
                [ct * cp, -st * sp],
                [ct * sp, st * cp],
                [-st, 0.0],
                [0.0, 0.0],
            ])

        def hess(u):
            st, ct, sp, cp = np.sin(u[0]), np.cos(u[0]), np.sin(u[1]), np.cos(u[1])
            return rho * np.array([
                [[-st * cp, -ct * sp], [-ct * sp, -st * cp]],
                [[-st * sp, ct * cp], [ct * cp, -st * sp]],
                [[-ct, 0.0], [0.0, 0.0]],
                [[0.0, 0.0], [0.0, 0.0]],
            ])

        def inv(y):
            d = y[:3] - c
            nd = np.linalg.norm(d)
            if nd == 0.0:
                raise NotOnCone("point maps to the sphere centre")
            return np.array([np.arccos(np.clip(d[2] / nd, -1.0, 1.0)), np.arctan2(d[1], d[0])])

        chart = ChartSpec(2, 3, ev, jac, hess, (None, TWO_PI), (0.0, -np.inf), (np.pi, np.inf), inv)
        return cls("sphere", {"rho": rho, "center": c.tolist()}, chart)

    @classmethod
    def custom(cls, chart, params=None):
        return cls("custom", dict(params or {}), chart)

    @classmethod
    def from_dict(cls, d):
        """Build from ``{"kind": ..., "params": {...}}``."""
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("manifold: expected an object with a 'kind' field")
        kind = d["kind"]
        params = d.get("params", {}) or {}
        builders = {"circle": cls.circle, "ellipse": cls.ellipse, "torus": cls.torus, "sphere": cls.sphere}
        if kind not in builders:
            raise ConfigError(f"manifold.kind: unknown kind {kind!r} (custom charts are API-only)")
        try:
            return builders[kind](**params)
        except TypeError as exc:
            raise ConfigError(f"manifold.params: {exc}") from None


# -- chart evaluation ------------------------------------------------------


def _as_u(cfg, u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (cfg.n,):
        raise DomainError(f"expected {cfg.n} chart coordinates, got shape {u.shape}")
    return u


def check_domain(cfg, u):
    ch = cfg.chart
    for i in range(cfg.n):
        if ch.periods[i] is None and not (ch.lower[i] < u[i] < ch.upper[i]):
            raise DomainError(f"chart coordinate {i} = {u[i]} outside ({ch.lower[i]}, {ch.upper[i]})")


def reduce(cfg, u):
    """Reduce periodic coordinates to [0, period)."""
    u = np.array(u, dtype=float)
    for i, per in enumerate(cfg.chart.periods):
        if per is not None:
            u[..., i] = np.mod(u[..., i], per)
    return u


def evaluate_chart(cfg, u):
    u = _as_u(cfg, u)
    check_domain(cfg, u)
    return cfg.chart.eval(reduce(cfg, u))


def sigma_point(cfg, u):
    p = evaluate_chart(cfg, u)
    return p / np.linalg.norm(p)


def link_frame(cfg, u):
    """Return ``(q, Q)``: the link point and its (N+1, n) derivative dq/du."""
    p = cfg.chart.eval(u)
    J = cfg.chart.jacobian(u)
    r = np.sqrt(p @ p)
    q = p / r
    Q = (J - np.outer(q, q @ J)) / r
    return q, Q


def _sigma_raw(cfg, u):
    _, Q = link_frame(cfg, u)
    return Q.T @ Q


def induced_metric(cfg, u, tol=1e-12):
    """Metric of the link in chart coordinates, ``sigma_ij = <dq/du^i, dq/du^j>``."""
    u = _as_u(cfg, u)
    check_domain(cfg, u)
    s = _sigma_raw(cfg, u)
    if np.linalg.eigvalsh(s)[0] <= tol:
        raise RankDeficient(f"link metric not positive definite at u={u}")
    return s


def link_geometry(cfg, u):
    """Return ``(q, Q, sigma, Gamma)`` at u, with ``Gamma[k, i, j]`` the link Christoffel symbols.

    Uses the analytic hessian when the chart supplies one (first-kind symbols
    are ``<d_i d_j q, d_k q>``), finite differences of sigma otherwise.
    """
    ch = cfg.chart
    if ch.hessian is None:
        q, Q = link_frame(cfg, u)
        sigma = Q.T @ Q
        return q, Q, sigma, _christoffel_fd(cfg, u, sigma, H_FD, False)
    p = ch.eval(u)
    J = ch.jacobian(u)
    H = ch.hessian(u)
    r = np.sqrt(p @ p)
    q = p / r
    rv = (p @ J) / r
    Q = (J - np.outer(q, rv)) / r
    sigma = Q.T @ Q
    rr = (J.T @ J + np.tensordot(p, H, axes=(0, 0))) / r - np.outer(rv, rv) / r
    Jr = J[:, :, None] * rv[None, None, :]
    qij = H / r - (Jr + Jr.transpose(0, 2, 1)) / r**2 + q[:, None, None] * (2.0 * np.outer(rv, rv) / r - rr)[None] / r
    first = np.tensordot(Q, qij, axes=(0, 0))
    try:
        gam = np.linalg.solve(sigma, first.reshape(cfg.n, -1)).reshape(cfg.n, cfg.n, cfg.n)
    except np.linalg.LinAlgError:
        raise RankDeficient(f"link metric singular at u={u}") from None
    return q, Q, sigma, gam


def _christoffel_fd(cfg, u, sigma, h, richardson):
    n = cfg.n

    def dsig(step):
        d = np.empty((n, n, n))
        for l in range(n):
            e = np.zeros(n)
            e[l] = step
            d[l] = (_sigma_raw(cfg, u + e) - _sigma_raw(cfg, u - e)) / (2.0 * step)
        return d

    d = dsig(h)
    if richardson:
        d = (4.0 * dsig(h / 2.0) - d) / 3.0
    # first[l, i, j] = (d_i s_jl + d_j s_il - d_l s_ij) / 2
    first = 0.5 * (d.transpose(2, 0, 1) + d.transpose(2, 1, 0) - d)
    try:
        return np.linalg.solve(sigma, first.reshape(n, -1)).reshape(n, n, n)
    except np.linalg.LinAlgError:
        raise RankDeficient(f"link metric singular at u={u}") from None


def christoffels(cfg, u, method="auto", h_fd=H_FD, richardson=False):
    """Christoffel symbols ``Gamma[k, i, j]`` of the link metric at u.

    ``method`` is "hessian" (analytic second derivatives), "fd" (central
    differences of the metric with step ``h_fd``) or "auto" (hessian when
    available).
    """
    u = _as_u(cfg, u)
    check_domain(cfg, u)
    sigma = induced_metric(cfg, u)
    if method == "auto":
        method = "fd" if cfg.chart.hessian is None else "hessian"
    if method == "hessian":
        if cfg.chart.hessian is None:
            raise ValueError("chart has no analytic hessian")
        return link_geometry(cfg, u)[3]
    if method == "fd":
        return _christoffel_fd(cfg, u, sigma, h_fd, richardson)
    raise ValueError(f"unknown method {method!r}")


# -- ambient <-> chart -----------------------------------------------------


def _grid_guess(cfg, y, per_axis=24):
    ch = cfg.chart
    axes = []
    for i in range(cfg.n):
        if ch.periods[i] is not None:
            axes.append(np.linspace(0.0, ch.periods[i], per_axis, endpoint=False))
        else:
            lo, hi = ch.lower[i], ch.upper[i]
            if not (np.isfinite(lo) and np.isfinite(hi)):
                lo, hi = -10.0, 10.0
            axes.append(np.linspace(lo, hi, per_axis + 2)[1:-1])
    best, best_d = None, np.inf
    for u in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, cfg.n):
        d = np.sum((ch.eval(u) - y) ** 2)
        if d < best_d:
            best, best_d = u, d
    return best


def newton_inverse(cfg, y, guess=None):
    """Gauss-Newton solve of ``p(u) = y`` for a point y of the hyperplane."""
    ch = cfg.chart
    u = _grid_guess(cfg, y) if guess is None else np.array(guess, dtype=float)
    for _ in range(cfg.newton_maxiter):
        res = ch.eval(u) - y
        J = ch.jacobian(u)
        step = np.linalg.lstsq(J, -res, rcond=None)[0]
        u = u + step
        if np.linalg.norm(step) <= cfg.newton_tol * (1.0 + np.linalg.norm(u)):
            return u
    raise NoConvergence(f"chart inversion did not converge for y={y}")


def ambient_to_chart(cfg, x, tol_cone=TOL_CONE, use_newton=False):
    """Invert ``x = t q(u)``. The sign of t records the component (t < 0 on the lower cone)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.dim,):
        raise NotOnCone(f"expected {cfg.dim} ambient coordinates, got shape {x.shape}")
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise NotOnCone("the vertex has no chart coordinates")
    if x[-1] == 0.0:
        raise NotOnCone("point lies in {x^{N+1} = 0}, off the cone")
    t = np.copysign(norm, x[-1])
    y = x / x[-1]
    if cfg.chart.inverse is not None and not use_newton:
        u = cfg.chart.inverse(y)
    else:
        u = newton_inverse(cfg, y)
    u = reduce(cfg, u)
    p = cfg.chart.eval(u)
    resid = np.linalg.norm(x / t - p / np.linalg.norm(p))
    if not resid <= tol_cone:
        raise NotOnCone(f"distance to the link is {resid:.3e} > {tol_cone:.1e}")
    return float(t), u


def chart_to_ambient(cfg, t, u, dt, du):
    q, Q = link_frame(cfg, np.asarray(u, dtype=float))
    x = t * q
    v = dt * q + t * (Q @ np.asarray(du, dtype=float))
    return x, v


def velocity_to_chart(cfg, t, u, v, tol_cone=TOL_CONE):
    """Split an ambient velocity at ``t q(u)`` into ``(dt, du)``."""
    q, Q = link_frame(cfg, u)
    v = np.asarray(v, dtype=float)
    dt = float(q @ v)
    rest = v - dt * q
    du = np.linalg.lstsq(t * Q, rest, rcond=None)[0]
    resid = np.linalg.norm(rest - t * (Q @ du))
    if not resid <= tol_cone * max(1.0, np.linalg.norm(v)):
        raise NotOnCone(f"velocity leaves the tangent space by {resid:.3e}")
    return dt, du


def phase_to_chart(cfg, p, tol_cone=TOL_CONE):
    t, u = ambient_to_chart(cfg, p.x, tol_cone)
    dt, du = velocity_to_chart(cfg, t, u, p.v, tol_cone)
    return t, u, dt, du


def chart_to_phase(cfg, t, u, dt, du):
    return PhasePoint(*chart_to_ambient(cfg, t, u, dt, du))


def validate_phase(cfg, p, tol_cone=TOL_CONE):
    """Raise NotOnCone unless p is a valid state of the cone over ``cfg``.

    At the vertex the tangent cone is the cone itself, so v must lie on K.
    """
    if p.dim != cfg.dim:
        raise NotOnCone(f"phase point has dimension {p.dim}, cone lives in R^{cfg.dim}")
    if not np.any(p.x):
        ambient_to_chart(cfg, p.v, tol_cone)
        return
    phase_to_chart(cfg, p, tol_cone)


def random_launch(cfg, rng, t_range=(0.5, 2.0)):
    """Uniform chart point, t uniform in ``t_range``, unit direction uniform in the cone metric."""
    ch = cfg.chart
    u = np.empty(cfg.n)
    for i in range(cfg.n):
        if ch.periods[i] is not None:
            u[i] = rng.uniform(0.0, ch.periods[i])
        else:
            u[i] = rng.uniform(ch.lower[i], ch.upper[i])
    t = rng.uniform(*t_range)
    xi = rng.standard_normal(cfg.n + 1)
    xi /= np.linalg.norm(xi)
    L = np.linalg.cholesky(induced_metric(cfg, u))
    du = np.linalg.solve(L.T, xi[1:]) / t
    return t, u, float(xi[0]), du
