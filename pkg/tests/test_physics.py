"""Rigid-body dynamics vs an independent single-DOF reference."""

from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose

import oracles
from crankid import physics, tape as tp

P = physics.default_params()

# frozen from tests/oracles.py (Table-valued rig constants)
D_AT_HALF_PI = 0.045657137141714          # d(theta=pi/2), m
OMDOT_UNIT_TORQUE = 255.727224294086      # omega_dot at rest, T=1, g=0, B_m=0
OMDOT_SPOT = 290.92852467761              # theta=.7, omega=-12, T=.8, F=25


def test_param_validation():
    with pytest.raises(ValueError):
        physics.PhysParams(m1=0.0, m2=1, m3=1, l1=0.1, l2=0.2, J1=1e-3, B_m=0)
    with pytest.raises(ValueError):
        physics.PhysParams(m1=1, m2=1, m3=1, l1=0.3, l2=0.2, J1=1e-3, B_m=0)
    with pytest.raises(ValueError):
        physics.PhysParams(m1=1, m2=1, m3=1, l1=0.1, l2=0.2, J1=1e-3, B_m=-1)
    assert P.r1 == 0.5 * P.l1 and P.r2 == 0.5 * P.l2
    assert_allclose(P.J2, P.m2 * P.l2 ** 2 / 3.0, rtol=1e-15)


def test_kinematics_closure():
    th = np.linspace(-2 * np.pi, 2 * np.pi, 801)
    fr = physics.kinematics(th, 1.0, P)
    # loop closure: rod projection matches crank height exactly
    assert_allclose(np.sin(fr.phi), (P.l1 / P.l2) * np.sin(th), atol=1e-15)
    # slider stroke: d in [0, 2 l1], endpoints at the dead centres
    assert fr.d.min() > -1e-12 and fr.d.max() < 2 * P.l1 + 1e-12
    fr0 = physics.kinematics(0.0, 0.0, P)
    assert_allclose(fr0.d, 2 * P.l1, atol=1e-15)
    frpi = physics.kinematics(np.pi, 0.0, P)
    assert_allclose(frpi.d, 0.0, atol=1e-12)


def test_kinematics_frozen_values():
    fr = physics.kinematics(np.pi / 2, 10.0, P)
    assert_allclose(fr.d, D_AT_HALF_PI, rtol=1e-12)
    # at top dead centre the rod end moves with the crank tip: v = -l1 * omega
    assert_allclose(fr.v, -0.5, rtol=1e-12)


def test_slider_velocity_is_d_derivative():
    # v must equal dd/dt; check against complex-step d'(theta) * omega
    rng = np.random.default_rng(2)
    th = rng.uniform(-np.pi, np.pi, 200)
    om = rng.uniform(-40, 40, 200)
    jd = oracles.slider_position(th + 1j * oracles.CSTEP, P).imag / oracles.CSTEP
    fr = physics.kinematics(th, om, P)
    assert_allclose(fr.v, jd * om, rtol=1e-12, atol=1e-15)


def test_forward_dynamics_frozen_values():
    p0 = P.replace(g=0.0, B_m=0.0)
    _, od = physics.forward_dynamics(0.0, 0.0, 1.0, 0.0, p0)
    assert_allclose(od, OMDOT_UNIT_TORQUE, rtol=1e-12)
    _, od = physics.forward_dynamics(0.7, -12.0, 0.8, 25.0, P)
    assert_allclose(od, OMDOT_SPOT, rtol=1e-12)


def test_forward_dynamics_matches_lagrangian_reference():
    rng = np.random.default_rng(0)
    th = rng.uniform(-2 * np.pi, 2 * np.pi, 1000)
    om = rng.uniform(-60, 60, 1000)
    T = rng.uniform(-3, 3, 1000)
    F = rng.uniform(-120, 120, 1000)
    ref = oracles.lagrangian_omega_dot(th, om, T, F, P)
    _, got = physics.forward_dynamics(th, om, T, F, P)
    rel = np.abs(got - ref) / np.maximum(1.0, np.abs(ref))
    assert rel.max() < 1e-8, "worst rel err %.3e" % rel.max()


def test_static_equilibrium():
    # holding torque equal to the gravity torque V'(0) keeps the crank at rest
    vprime = oracles._inertia_potential(1j * oracles.CSTEP, P)[1].imag / oracles.CSTEP
    _, od = physics.forward_dynamics(0.0, 0.0, vprime, 0.0, P)
    assert abs(od) < 1e-10


def test_viscous_damping_sign():
    # the damping contribution to omega_dot always opposes omega
    nodamp = P.replace(B_m=0.0)
    for th in (0.0, 0.9, 2.4):
        for om in (25.0, -25.0):
            _, od = physics.forward_dynamics(th, om, 0.0, 0.0, P)
            _, od0 = physics.forward_dynamics(th, om, 0.0, 0.0, nodamp)
            assert (od - od0) * om < 0.0


def test_taped_solve_matches_lapack():
    rng = np.random.default_rng(5)
    th = rng.uniform(-np.pi, np.pi, 64)
    om = rng.uniform(-50, 50, 64)
    T = rng.uniform(-2, 2, 64)
    F = rng.uniform(-80, 80, 64)
    _, od_np = physics.forward_dynamics(th, om, T, F, P)

    t = tp.Tape()
    pn = SimpleNamespace(**{k: t.variable(k, v) for k, v in P.as_dict().items()})
    od_tape = physics.omega_dot_taped(
        t.variable("th", th), t.variable("om", om),
        t.variable("T", T), t.variable("F", F), pn)
    assert_allclose(od_tape.data, od_np, rtol=1e-10)


def test_taped_gradients_match_fd():
    rng = np.random.default_rng(9)
    names = ["m1", "m2", "m3", "l1", "l2", "J1", "B_m", "g"]

    def fn(t, point):
        pn = SimpleNamespace(**{n: t.variable(n, point[n]) for n in names})
        args = [t.variable(n, point[n]) for n in ("theta", "omega", "T", "F")]
        return physics.omega_dot_taped(*args, pn).sum()

    point = P.as_dict()
    point.update(
        theta=rng.uniform(-np.pi, np.pi, 8),
        omega=rng.uniform(-40, 40, 8),
        T=rng.uniform(-2, 2, 8),
        F=rng.uniform(-60, 60, 8),
    )
    rep = tp.check_gradient(fn, point, eps=1e-6)
    assert rep.max_rel_error < 1e-5, rep


def test_static_pivots_bounded_away_from_zero():
    # the fixed elimination order must stay valid over the whole cycle and
    # for any plausible parameter draw, not just the rig constants
    rng = np.random.default_rng(13)
    th = np.linspace(0.0, 2 * np.pi, 721)
    for _ in range(25):
        l2 = rng.uniform(0.1, 0.6)
        p = physics.PhysParams(
            m1=rng.uniform(0.05, 2.0), m2=rng.uniform(0.05, 2.0),
            m3=rng.uniform(0.05, 2.0), l1=rng.uniform(0.1, 0.9) * l2,
            l2=l2, J1=rng.uniform(1e-4, 1e-2), B_m=rng.uniform(0.0, 0.05),
        )
        rows, rhs = physics.assemble(th, np.full_like(th, 7.0), 0.3, 1.0, p)
        _, pivots = physics.eliminate_omega_dot(rows, rhs)
        for piv in pivots:
            assert np.min(np.abs(piv)) > 1e-8


def test_singular_system_guard():
    # bypass parameter validation to starve the system of inertia
    fake = SimpleNamespace(m1=1e-40, m2=1e-40, m3=1e-40, l1=0.05, l2=0.29,
                           J1=1e-40, B_m=0.0, g=0.0)
    with pytest.raises(physics.SingularSystem):
        physics.solve_system(0.3, 1.0, 0.1, 0.0, fake)


def test_reaction_forces_balance_slider():
    # eq 7 of the block: normal force carries slider weight plus pin pull
    y = physics.solve_system(0.4, 20.0, 0.5, 10.0, P)
    i_fcy, i_fn = physics.UNKNOWNS.index("F_cy"), physics.UNKNOWNS.index("F_N")
    assert_allclose(y[..., i_fn] - y[..., i_fcy], P.m3 * P.g, rtol=1e-12)


def test_energy_conserved_without_inputs():
    # T=0, B_m=0, F=0: mechanical energy is invariant along the flow
    p0 = P.replace(B_m=0.0)

    def f(x):
        _, od = physics.forward_dynamics(x[0], x[1], 0.0, 0.0, p0)
        return np.array([x[1], float(od)])

    traj = oracles.rk4_reference(f, [0.3, 15.0], 1e-4, 2000)
    e = physics.mechanical_energy(traj[:, 0], traj[:, 1], p0)
    drift = np.max(np.abs(e - e[0])) / abs(e[0])
    assert drift < 1e-6, "energy drift %.3e" % drift


def test_mechanical_energy_matches_reference():
    rng = np.random.default_rng(21)
    th = rng.uniform(-np.pi, np.pi, 300)
    om = rng.uniform(-50, 50, 300)
    assert_allclose(
        physics.mechanical_energy(th, om, P),
        oracles.lagrangian_energy(th, om, P),
        rtol=1e-12,
    )
