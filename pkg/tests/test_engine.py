import numpy as np
import pytest

from coneflow import (
    IntegratorSettings,
    ManifoldConfig,
    PhasePoint,
    flow,
    flow_cone_direct,
    flow_sigma,
    integral_I,
    sample_trajectory,
)
from coneflow.errors import ConfigError, RadialState, StepLimit, VertexApproach, ZeroVelocity
from coneflow.manifolds import phase_to_chart
from coneflow.unroll import RoundConeSpec, oracle_state, unroll_state

from conftest import random_states

SQ2 = np.sqrt(2.0)


def oracle_for(rho, cfg, p):
    spec = RoundConeSpec(rho)
    t0, u0, dt0, du0 = phase_to_chart(cfg, p)
    return spec, unroll_state(spec, t0, u0[0], dt0, du0[0])


def test_settings_validation():
    with pytest.raises(ConfigError):
        IntegratorSettings(rtol=0)
    with pytest.raises(ConfigError):
        IntegratorSettings(max_steps=0)
    with pytest.raises(ConfigError):
        IntegratorSettings(method="Euler")


def test_flow_sigma_circle_arc_length(circle, settings):
    tr = flow_sigma(circle, [0.0], [SQ2], (0.0, np.pi / 2), settings)
    assert tr.u[-1, 0] == pytest.approx(SQ2 * np.pi / 2, abs=1e-9)
    assert tr.u[-1, 0] == pytest.approx(2.22144147, abs=1e-8)


def test_flow_sigma_zero_velocity(circle):
    with pytest.raises(ZeroVelocity):
        flow_sigma(circle, [0.0], [0.0], (0.0, 1.0))


@pytest.mark.parametrize("tilt", [0.0, 0.5])
def test_flow_sigma_sphere_closes(tilt, settings):
    """Link of the round sphere is a round sphere of radius rho/sqrt(1+rho^2); geodesics close."""
    rho = 1.0
    cfg = ManifoldConfig.sphere(rho)
    k = rho / np.sqrt(1 + rho**2)
    u0 = np.array([np.pi / 2, 0.3])
    du0 = np.array([np.sin(tilt) / k, np.cos(tilt) / k])
    L = 2 * np.pi * k
    tr = flow_sigma(cfg, u0, du0, (0.0, L), settings)
    assert np.linalg.norm(tr.q[-1] - tr.q[0]) <= 1e-7
    assert np.abs(tr.speed(cfg) - 1).max() <= 10 * settings.rtol


def test_flow_sigma_speed_drift_and_renormalization(torus, settings):
    tr = flow_sigma(torus, [0.4, 1.0], [0.3, 0.9], (0.0, 10.0), settings)
    sp = tr.speed(torus)
    assert np.abs(sp - sp[0]).max() <= 10 * settings.rtol * sp[0]
    rs = IntegratorSettings(rtol=1e-6, atol=1e-8, renormalize_speed=True)
    tr = flow_sigma(torus, [0.4, 1.0], [0.3, 0.9], (0.0, 10.0), rs)
    assert np.abs(tr.speed(torus) - 1).max() <= 1e-12


def test_flow_sigma_backward_from_start(circle, settings):
    tr = flow_sigma(circle, [1.0], [SQ2], (-1.0, 1.0), settings, s_start=0.0, n_samples=5)
    np.testing.assert_allclose(tr.u[:, 0], 1.0 + SQ2 * np.linspace(-1, 1, 5), atol=1e-9)


def test_flow_cone_direct_matches_oracle(circle, settings, round_launch):
    tr = flow_cone_direct(circle, SQ2, [0.0], 0.0, [1.0], (0.0, SQ2), settings)
    np.testing.assert_allclose(tr.x[-1], [0.6280, 1.2672, 1.41421], atol=1e-4)
    spec, line = oracle_for(1.0, circle, round_launch)
    x, _ = oracle_state(spec, line, SQ2)
    np.testing.assert_allclose(tr.x[-1], x, atol=1e-6)
    assert np.abs(tr.norm_sq - (tr.s**2 + 2)).max() <= 1e-8


def test_flow_cone_direct_rejects_radial(circle):
    with pytest.raises(RadialState):
        flow_cone_direct(circle, 1.0, [0.0], 1.0, [0.0], (0.0, 1.0))
    with pytest.raises(RadialState):
        flow_cone_direct(circle, 0.0, [0.0], 1.0, [1.0], (0.0, 1.0))


def test_flow_radial_is_exact(circle):
    g = np.array([1, 0, 1]) / SQ2
    p = PhasePoint(g, g)
    q = flow(circle, p, -1.0)
    np.testing.assert_array_equal(q.x, g - g)
    np.testing.assert_array_equal(q.v, g)
    q = flow(circle, p, -3.0)
    np.testing.assert_array_equal(q.x, g + -3.0 * g)


def test_flow_identity_and_oracle(circle, round_launch, settings):
    assert flow(circle, round_launch, 0.0) == round_launch
    q = flow(circle, round_launch, SQ2, settings=settings)
    np.testing.assert_allclose(q.x, [0.6280, 1.2672, 1.41421], atol=1e-4)
    for backend in ("direct", "lift"):
        spec, line = oracle_for(1.0, circle, round_launch)
        x, v = oracle_state(spec, line, SQ2)
        q = flow(circle, round_launch, SQ2, backend, settings)
        np.testing.assert_allclose(q.x, x, atol=1e-9)
        np.testing.assert_allclose(q.v, v, atol=1e-9)


def test_flow_unknown_backend(circle, round_launch):
    with pytest.raises(ConfigError):
        flow(circle, round_launch, 1.0, backend="magic")


def test_sample_trajectory_validation(circle, round_launch):
    with pytest.raises(ConfigError):
        sample_trajectory(circle, round_launch, (0.0, 0.0), 2)
    with pytest.raises(ConfigError):
        sample_trajectory(circle, round_launch, (0.0, 1.0), 1)


def test_round_cone_conservation(circle, round_launch, settings):
    tr = sample_trajectory(circle, round_launch, (-50, 50), 1001, settings=settings)
    assert np.abs(tr.integral_I() - 2.0).max() <= 1e-8
    spec, line = oracle_for(1.0, circle, round_launch)
    x, v = oracle_state(spec, line, tr.s)
    assert np.abs(tr.x - x).max() <= 1e-6
    assert np.abs(tr.v - v).max() <= 1e-6


@pytest.mark.parametrize("rho, p", [
    (0.5, PhasePoint(0.8 * np.array([0.5, 0.0, 1.0]), [0.1, 0.3, 0.2])),
    (2.0, PhasePoint(-1.5 * np.array([2.0, 0.0, 1.0]), [0.2, -0.7, 0.1])),
])
def test_oracle_agreement_both_components(rho, p, settings):
    cfg = ManifoldConfig.circle(rho)
    spec, line = oracle_for(rho, cfg, p)
    for backend in ("direct", "lift"):
        tr = sample_trajectory(cfg, p, (-15, 15), 301, backend, settings)
        x, v = oracle_state(spec, line, tr.s)
        assert np.abs(tr.x - x).max() <= 1e-7
        assert np.abs(tr.v - v).max() <= 1e-7
        np.testing.assert_array_less(0, np.sign(p.x[-1]) * tr.t)


def test_invariants_on_torus(torus, settings):
    for p in random_states(torus, 11, 3):
        tr = sample_trajectory(torus, p, (-10, 10), 201, settings=settings)
        I0 = integral_I(p)
        speed = p.speed
        C = 100
        assert np.abs(np.linalg.norm(tr.v, axis=1) - speed).max() <= C * settings.rtol
        assert np.abs(tr.integral_I() - I0).max() <= C * settings.rtol * (1 + I0)
        phi = np.einsum("ij,ij->i", tr.x, tr.v)
        assert np.abs(phi - (p.x @ p.v + speed**2 * tr.s)).max() <= C * settings.rtol * (1 + tr.s**2).max()
        s0 = -(p.x @ p.v) / speed**2
        assert np.abs(tr.norm_sq - (speed**2 * (tr.s - s0) ** 2 + I0)).max() <= C * settings.rtol * (1 + tr.s**2).max()


def test_dense_output_consistent_with_samples(torus, settings):
    p = random_states(torus, 2, 1)[0]
    tr = sample_trajectory(torus, p, (-3, 4), 15, settings=settings)
    x, v = tr.dense_eval(tr.s)
    np.testing.assert_allclose(x, tr.x, atol=1e-14)
    np.testing.assert_allclose(v, tr.v, atol=1e-14)
    mid = tr.state(0.123)
    assert integral_I(mid) == pytest.approx(integral_I(p), rel=1e-9)


def test_chart_coordinates_unwrapped(circle, settings):
    p = PhasePoint([0.3, 0.0, 0.3], [0.0, 1.0, 0.0])
    tr = sample_trajectory(circle, p, (-20, 20), 401, settings=settings)
    assert np.all(np.diff(tr.u[:, 0]) > 0)
    red = tr.reduced_u(circle)
    assert red.min() >= 0 and red.max() < 2 * np.pi


def test_radial_trajectory(circle):
    g = np.array([1, 0, 1]) / SQ2
    tr = sample_trajectory(circle, PhasePoint(g, g), (-2, 2), 5)
    np.testing.assert_array_equal(tr.x, g[None, :] + np.linspace(-2, 2, 5)[:, None] * g[None, :])
    assert np.all(tr.integral_I() == 0.0)
    np.testing.assert_allclose(tr.t, np.linspace(-1, 3, 5), atol=1e-15)


def test_rk4_fixed_step(circle, round_launch):
    st = IntegratorSettings(method="RK4", h_fixed=1e-2)
    spec, line = oracle_for(1.0, circle, round_launch)
    errs = []
    for h in (4e-2, 2e-2):
        st = IntegratorSettings(method="RK4", h_fixed=h)
        tr = sample_trajectory(circle, round_launch, (-5, 5), 51, settings=st)
        x, _ = oracle_state(spec, line, tr.s)
        errs.append(np.abs(tr.x - x).max())
    assert errs[1] < 1e-6
    # fourth order: halving h cuts the error by ~16
    assert errs[0] / errs[1] > 10


def test_order_sanity_halving_rtol(circle, round_launch):
    spec, line = oracle_for(1.0, circle, round_launch)
    for method in ("RK45", "DOP853"):
        errs = []
        for rtol in (1e-6, 5e-7):
            st = IntegratorSettings(rtol=rtol, atol=1e-3 * rtol, method=method)
            tr = sample_trajectory(circle, round_launch, (-20, 20), 201, settings=st)
            x, _ = oracle_state(spec, line, tr.s)
            errs.append(np.abs(tr.x - x).max())
        assert errs[0] / errs[1] >= 2.0, (method, errs)


def test_step_limit(torus):
    p = random_states(torus, 0, 1)[0]
    with pytest.raises(StepLimit):
        sample_trajectory(torus, p, (0, 10), 3, settings=IntegratorSettings(max_steps=5))
    with pytest.raises(StepLimit):
        sample_trajectory(torus, p, (0, 10), 3, settings=IntegratorSettings(method="RK4", h_fixed=1e-3, max_steps=100))


def test_vertex_guard(circle):
    """A crude integration of a near-generatrix dives under the sqrt(I)/2 sphere and is stopped."""
    p = PhasePoint([1, 0, 1], np.array([-1.0, 1e-4, -1.0]))
    st = IntegratorSettings(method="RK4", h_fixed=0.5)
    with pytest.raises(VertexApproach):
        sample_trajectory(circle, p, (0, 3), 3, settings=st)
