"""Independent references used to freeze expected values in the tests.

The package computes the crank acceleration by solving the Newton-Euler
linear system with all constraint forces as unknowns.  The reference here
eliminates the constraints analytically instead: the mechanism has one DOF,
so its dynamics follow from an effective inertia I(theta), a gravity
potential V(theta) and the generalized load torque -F * dd/dtheta,

    I(theta) omega_dot + I'(theta) omega^2 / 2 + V'(theta)
        = T - B_m omega - F dd/dtheta.

I' and V' are obtained by complex-step differentiation (step 1e-20, exact to
machine precision, no subtractive cancellation), so no hand-derived second
derivatives enter.  A small fixed-step RK4 lives here as well so integrator
tests do not lean on the implementation they are checking.
"""

import numpy as np

CSTEP = 1e-20


def _inertia_potential(theta, p):
    """Effective inertia, potential and slider jacobian; complex-safe."""
    s1, c1 = np.sin(theta), np.cos(theta)
    sph = (p.l1 / p.l2) * s1
    cph = np.sqrt(1.0 - sph * sph)
    dphi = p.l1 * c1 / (p.l2 * cph)
    r1, r2 = 0.5 * p.l1, 0.5 * p.l2
    J2 = p.m2 * p.l2 ** 2 / 3.0
    jx2 = -p.l1 * s1 - r2 * sph * dphi
    jy2 = p.l1 * c1 - r2 * cph * dphi
    jd = -p.l1 * s1 - p.l2 * sph * dphi
    inertia = p.J1 + p.m2 * (jx2 ** 2 + jy2 ** 2) + J2 * dphi ** 2 + p.m3 * jd ** 2
    potential = p.g * (p.m1 * r1 * s1 + p.m2 * (p.l1 * s1 - r2 * sph))
    return inertia, potential, jd


def lagrangian_omega_dot(theta, omega, torque, load, p):
    """Crank acceleration from the single-DOF formulation."""
    theta = np.asarray(theta, dtype=np.float64)
    inertia, _, jd = _inertia_potential(theta, p)
    ic, vc, _ = _inertia_potential(theta + 1j * CSTEP, p)
    iprime = ic.imag / CSTEP
    vprime = vc.imag / CSTEP
    gen = torque - p.B_m * omega - load * jd
    return (gen - 0.5 * iprime * omega ** 2 - vprime) / inertia


def lagrangian_energy(theta, omega, p):
    inertia, potential, _ = _inertia_potential(np.asarray(theta, dtype=np.float64), p)
    return 0.5 * inertia * omega ** 2 + potential


def slider_position(theta, p):
    """d(theta); complex-safe so jacobians can be taken by complex step."""
    s1, c1 = np.sin(theta), np.cos(theta)
    sph = (p.l1 / p.l2) * s1
    cph = np.sqrt(1.0 - sph * sph)
    return p.l1 * c1 + p.l2 * cph - (p.l2 - p.l1)


def rk4_reference(f, x0, dt, n_steps):
    """Classic fixed-step RK4; f(x) -> dx/dt, x a 1-d array."""
    x = np.array(x0, dtype=np.float64)
    out = np.empty((n_steps + 1, x.size))
    out[0] = x
    for k in range(n_steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
    return out
