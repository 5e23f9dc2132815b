"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import time
from itertools import combinations

import numpy as np
import pytest

from coneflow import (
    IntegratorSettings,
    ManifoldConfig,
    PhasePoint,
    flow,
    integral_I,
    sample_trajectory,
    tangency_parameter,
)
from coneflow.correspondence import asymptotic_directions, self_intersections, wrap_count
from coneflow.integrals import integrals_I_vec, integrals_J, reconstruct_geodesic, recover
from coneflow.manifolds import phase_to_chart
from coneflow.unroll import RoundConeSpec, oracle_state, unroll_state

from conftest import random_states

SQ2 = np.sqrt(2.0)
SETTINGS = IntegratorSettings(rtol=1e-10, atol=1e-12)
CIRCLE = ManifoldConfig.circle(1.0)
TORUS = ManifoldConfig.torus(2.0, 0.5)
LAUNCH = PhasePoint([1.0, 0.0, 1.0], [0.0, 1.0, 0.0])


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def round_run():
    start = time.perf_counter()
    tr = sample_trajectory(CIRCLE, LAUNCH, (-50.0, 50.0), 1001, settings=SETTINGS)
    return tr, time.perf_counter() - start


@pytest.fixture(scope="module")
def torus_launches():
    return random_states(TORUS, 2024, 20)


def test_01_conservation_of_I(round_run, report):
    tr, elapsed = round_run
    drift = np.abs(tr.integral_I() - 2.0).max()
    report(1, "conservation of I", drift <= 1e-8 and elapsed < 1.0,
           f"max |I - 2| = {drift:.2e} (<= 1e-8), runtime {elapsed:.2f}s (< 1s)")


def test_02_oracle_agreement(round_run, report):
    tr, _ = round_run
    spec = RoundConeSpec(1.0)
    t0, u0, dt0, du0 = phase_to_chart(CIRCLE, LAUNCH)
    x, _ = oracle_state(spec, unroll_state(spec, t0, u0[0], dt0, du0[0]), tr.s)
    err = np.linalg.norm(tr.x - x, axis=1).max()
    report(2, "oracle agreement", err <= 1e-6 and len(tr) == 1001,
           f"max position error {err:.2e} over {len(tr)} samples (<= 1e-6)")


def test_03_backend_equivalence(torus_launches, report):
    start = time.perf_counter()
    worst = 0.0
    for p in torus_launches:
        a = sample_trajectory(TORUS, p, (-20.0, 20.0), 401, "direct", SETTINGS)
        b = sample_trajectory(TORUS, p, (-20.0, 20.0), 401, "lift", SETTINGS)
        worst = max(worst, np.abs(a.x - b.x).max(), np.abs(a.v - b.v).max())
    elapsed = time.perf_counter() - start
    report(3, "backend equivalence", worst <= 1e-6 and elapsed < 30.0,
           f"max direct/lift disagreement {worst:.2e} over 20 launches (<= 1e-6), runtime {elapsed:.1f}s (< 30s)")


def test_04_quadratic_law(round_run, report):
    tr, _ = round_run
    s0 = tangency_parameter(LAUNCH)
    err = np.abs(tr.norm_sq - ((tr.s - s0) ** 2 + integral_I(LAUNCH))).max()
    report(4, "quadratic law", err <= 1e-8, f"max |‖γ‖² - ((s-s0)² + I)| = {err:.2e} (<= 1e-8)")


def test_05_tangency(torus_launches, report):
    worst_dot = worst_norm = 0.0
    for p in torus_launches:
        q = flow(TORUS, p, tangency_parameter(p), settings=SETTINGS)
        worst_dot = max(worst_dot, abs(q.x @ q.v))
        worst_norm = max(worst_norm, abs(q.x @ q.x - integral_I(p)))
    report(5, "tangency", worst_dot <= 1e-10 and worst_norm <= 1e-9,
           f"max |<γ,γ'>(s0)| = {worst_dot:.2e} (<= 1e-10), max |‖γ(s0)‖² - I| = {worst_norm:.2e} (<= 1e-9)")


def test_06_recovery_round_trip(report):
    cones = [ManifoldConfig.circle(1.0), ManifoldConfig.ellipse(1.5, 0.7), TORUS]
    worst_I = worst_J = 0.0
    total = 0
    for k, cfg in enumerate(cones):
        for p in random_states(cfg, 600 + k, 34 if k < 2 else 32):
            j = integrals_J(cfg, p, SETTINGS)
            I_tan = integral_I(PhasePoint(j.position, j.velocity))
            I, jr = recover(integrals_I_vec(cfg, p, SETTINGS))
            worst_I = max(worst_I, abs(I - I_tan) / I_tan)
            worst_J = max(worst_J, np.abs(jr.values - j.values).max() / np.abs(j.values).max())
            total += 1
    ok = worst_I <= 1e-12 and worst_J <= 1e-12 and total == 100
    report(6, "recovery round-trip", ok,
           f"max relative error I {worst_I:.1e}, J {worst_J:.1e} over {total} states (<= 1e-12)")


def test_07_uniqueness_sampling(report):
    states = random_states(TORUS, 7, 100)
    ivs = np.array([integrals_I_vec(TORUS, p, SETTINGS).values for p in states])
    min_sep = min(np.linalg.norm(ivs[i] - ivs[j]) for i, j in combinations(range(len(ivs)), 2))
    worst = 0.0
    n = 41
    for p, iv in zip(states, ivs):
        q = reconstruct_geodesic(TORUS, iv)
        c = p.speed
        s0 = tangency_parameter(p)
        a = sample_trajectory(TORUS, p, (-5.0, 5.0), n, settings=SETTINGS)
        # gamma(s) = gamma_r(c (s - s0)), gamma'(s) = c gamma_r'(c (s - s0))
        b = sample_trajectory(TORUS, q, (c * (-5.0 - s0), c * (5.0 - s0)), n, settings=SETTINGS)
        worst = max(worst, np.abs(a.x - b.x).max(), np.abs(a.v - c * b.v).max())
    report(7, "uniqueness sampling", min_sep > 1e-6 and worst <= 1e-6,
           f"min pairwise I-vector distance {min_sep:.2e} (> 1e-6), max orbit round-trip error {worst:.2e} (<= 1e-6)")


def test_08_asymptotics(report):
    S = 1e3
    d_plus, _ = asymptotic_directions(CIRCLE, LAUNCH, SETTINGS)
    v = flow(CIRCLE, LAUNCH, S, settings=SETTINGS).v
    angle = float(np.arccos(np.clip(v @ d_plus / np.linalg.norm(v), -1.0, 1.0)))
    report(8, "asymptotics", angle <= 2 / S, f"angle(γ'(1000), d_plus) = {angle:.2e} (<= {2 / S:.0e})")


def test_09_continuity_at_generatrices(report):
    x = np.array([1.0, 0.0, 1.0])
    norms = []
    for theta in (1.4, 1.5, 1.55, 1.57):
        v = np.cos(theta) * np.array([0.0, 1.0, 0.0]) + np.sin(theta) * x / SQ2
        norms.append(float(np.linalg.norm(integrals_I_vec(CIRCLE, PhasePoint(x, v), SETTINGS).values)))
    g = x / SQ2
    zero = integrals_I_vec(CIRCLE, PhasePoint(g, g)).values
    monotone = all(b < a for a, b in zip(norms, norms[1:]))
    ok = monotone and norms[-1] < 1e-3 and not np.any(zero)
    report(9, "continuity at generatrices", ok,
           f"‖I_vec‖ = {', '.join(f'{n:.2e}' for n in norms)}; radial gives exact zero: {not np.any(zero)}")


def test_10_overcovering(report):
    cfg = ManifoldConfig.circle(0.5)
    w = wrap_count(cfg)
    x0 = np.array([0.5, 0.0, 1.0])
    tr = sample_trajectory(cfg, PhasePoint(x0, [0.0, 1.0, 0.0]), (-100.0, 100.0), 4001, "lift", SETTINGS)
    hits = self_intersections(tr, tol=1e-6)
    detail = f"wrap_count = {w:.6f} (> 1)"
    if hits:
        s1, s2, dist = hits[0]
        detail += f"; self-intersection γ({s1:.6f}) = γ({s2:.6f}) within {dist:.1e}"
    else:
        detail += "; no self-intersection found"
    report(10, "overcovering", w > 1 and bool(hits) and hits[0][1] - hits[0][0] > 1e-3, detail)
