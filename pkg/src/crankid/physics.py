"""Rigid-body model of a slider-crank mechanism.

Geometry: crank of length l1 turns about a fixed axis at the origin (angle
theta, CCW positive); a connecting rod of length l2 couples the crank pin to
a slider that translates along y = 0.  phi is the rod angle with
sin(phi) = (l1/l2) sin(theta), and the slider coordinate

    d = l1 cos(theta) + l2 cos(phi) - (l2 - l1)

is zero at theta = pi and reaches 2*l1 at theta = 0.  v = d_dot.

The dynamics are assembled as one linear system A(theta) y = b in the
unknowns y = (omega_dot, F_ax, F_ay, F_bx, F_by, F_cx, F_cy, F_N): Newton
equations for crank CM and rod CM, the crank moment equation about its fixed
axis (inertia J1), the rod moment equation about its CM (inertia J2, taken
as m2 l2^2 / 3), and force balance of the slider carrying an external load
force F that enters as -F along +d.  Every linear acceleration is affine in
omega_dot, so the system closes without differentiating twice.

The same assembly code runs on plain numpy arrays (batched, solved by LAPACK
with partial pivoting) and on tape Values (solved by Gaussian elimination in
a fixed pivot order that is structurally non-singular for l1 < l2), so the
training path differentiates through exactly the equations used everywhere
else.
"""

from dataclasses import dataclass

import numpy as np

from . import tape as tp

DET_GUARD = 1e-12

# Unknown ordering in the assembled system.
UNKNOWNS = ("omega_dot", "F_ax", "F_ay", "F_bx", "F_by", "F_cx", "F_cy", "F_N")


class SingularSystem(Exception):
    """The assembled multibody system lost rank (|det A| below guard)."""


@dataclass(frozen=True)
class PhysParams:
    """Rigid-body constants.  Masses kg, lengths m, inertias kg m^2,
    B_m N m s/rad (viscous motor damping), g m/s^2."""

    m1: float
    m2: float
    m3: float
    l1: float
    l2: float
    J1: float
    B_m: float
    g: float = 9.81

    def __post_init__(self):
        if min(self.m1, self.m2, self.m3, self.J1) <= 0.0:
            raise ValueError("masses and J1 must be positive")
        if not 0.0 < self.l1 < self.l2:
            raise ValueError("need 0 < l1 < l2 for a valid mechanism")
        if self.B_m < 0.0 or self.g < 0.0:
            raise ValueError("B_m and g must be non-negative")

    @property
    def r1(self):
        return 0.5 * self.l1

    @property
    def r2(self):
        return 0.5 * self.l2

    @property
    def J2(self):
        return self.m2 * self.l2 ** 2 / 3.0

    def replace(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)

    def as_dict(self):
        return {
            "m1": self.m1, "m2": self.m2, "m3": self.m3,
            "l1": self.l1, "l2": self.l2, "J1": self.J1,
            "B_m": self.B_m, "g": self.g,
        }


def default_params():
    """Nominal constants of the test rig this model was built around."""
    return PhysParams(m1=0.23, m2=0.35, m3=0.77, l1=0.05, l2=0.29,
                      J1=0.0034, B_m=0.007, g=9.81)


@dataclass
class KinematicFrame:
    """Positions/velocities implied by (theta, omega); arrays broadcast."""

    phi: np.ndarray
    phidot: np.ndarray
    d: np.ndarray
    v: np.ndarray
    x1: np.ndarray   # crank CM
    y1: np.ndarray
    x2: np.ndarray   # rod CM
    y2: np.ndarray
    vx2: np.ndarray
    vy2: np.ndarray


def kinematics(theta, omega, p):
    theta = np.asarray(theta, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    s1, c1 = np.sin(theta), np.cos(theta)
    sph = (p.l1 / p.l2) * s1
    phi = np.arcsin(sph)
    cph = np.cos(phi)
    dphi = (p.l1 * c1) / (p.l2 * cph)
    phidot = dphi * omega
    d = p.l1 * c1 + p.l2 * cph - (p.l2 - p.l1)
    v = (-p.l1 * s1 - p.l2 * sph * dphi) * omega
    return KinematicFrame(
        phi=phi,
        phidot=phidot,
        d=d,
        v=v,
        x1=p.r1 * c1,
        y1=p.r1 * s1,
        x2=p.l1 * c1 + p.r2 * cph,
        y2=p.l1 * s1 - p.r2 * sph,
        vx2=(-p.l1 * s1 - p.r2 * sph * dphi) * omega,
        vy2=(p.l1 * c1 - p.r2 * cph * dphi) * omega,
    )


def assemble(theta, omega, torque, load, p):
    """Rows (dicts column -> entry) and right-hand side of A y = b.

    Works elementwise on numpy arrays and on tape Values alike; p only needs
    attribute access, so physical parameters may themselves be Values.
    """
    s1, c1 = tp.sin(theta), tp.cos(theta)
    ratio = p.l1 / p.l2
    sph = ratio * s1
    phi = tp.arcsin(sph)
    cph = tp.cos(phi)
    r1 = 0.5 * p.l1
    r2 = 0.5 * p.l2
    r2p = p.l2 - r2                      # lever of the rod CM to the crank pin
    J2 = p.m2 * p.l2 * p.l2 / 3.0
    om2 = omega * omega

    dphi = ratio * c1 / cph              # dphi/dtheta
    phidot = dphi * omega
    # accelerations are affine in omega_dot: value = a_* omega_dot + c_*
    a_phi = dphi
    c_phi = (sph * phidot * phidot - ratio * s1 * om2) / cph
    a_x1 = -r1 * s1
    c_x1 = -(r1 * c1 * om2)
    a_y1 = r1 * c1
    c_y1 = -(r1 * s1 * om2)
    a_x2 = -(p.l1 * s1) - r2 * sph * a_phi
    c_x2 = -(p.l1 * c1 * om2) - r2 * (sph * c_phi + cph * phidot * phidot)
    a_y2 = p.l1 * c1 - r2 * cph * a_phi
    c_y2 = -(p.l1 * s1 * om2) - r2 * (cph * c_phi - sph * phidot * phidot)
    a_v = -(p.l1 * s1) - p.l2 * sph * a_phi
    c_v = -(p.l1 * c1 * om2) - p.l2 * (sph * c_phi + cph * phidot * phidot)

    rows = [
        {0: p.m1 * a_x1, 1: -1.0, 3: -1.0},                  # crank CM, x
        {0: p.m1 * a_y1, 2: -1.0, 4: -1.0},                  # crank CM, y
        {0: p.J1, 3: p.l1 * s1, 4: -(p.l1 * c1)},            # crank moment, fixed axis
        {0: p.m2 * a_x2, 3: 1.0, 5: -1.0},                   # rod CM, x
        {0: p.m2 * a_y2, 4: 1.0, 6: -1.0},                   # rod CM, y
        {0: J2 * a_phi, 3: r2p * sph, 4: r2p * cph,
         5: r2 * sph, 6: r2 * cph},                          # rod moment, CM
        {6: -1.0, 7: 1.0},                                   # slider, y (massless in y)
        {0: p.m3 * a_v, 5: 1.0},                             # slider, x
    ]
    rhs = [
        -(p.m1 * c_x1),
        -(p.m1 * c_y1) - p.m1 * p.g,
        torque - p.B_m * omega - p.m1 * p.g * (r1 * c1),
        -(p.m2 * c_x2),
        -(p.m2 * c_y2) - p.m2 * p.g,
        -(J2 * c_phi),
        p.m3 * p.g + 0.0 * torque,       # keep batch shape
        -(p.m3 * c_v) - load,
    ]
    return rows, rhs


def _pack(rows, rhs, batch_shape):
    A = np.zeros(batch_shape + (8, 8))
    b = np.zeros(batch_shape + (8,))
    for i in range(8):
        for j, val in rows[i].items():
            A[..., i, j] = val
        b[..., i] = rhs[i]
    return A, b


def solve_system(theta, omega, torque, load, p):
    """Solve for all eight unknowns at once; returns an (..., 8) array."""
    theta, omega, torque, load = np.broadcast_arrays(
        np.asarray(theta, dtype=np.float64),
        np.asarray(omega, dtype=np.float64),
        np.asarray(torque, dtype=np.float64),
        np.asarray(load, dtype=np.float64),
    )
    rows, rhs = assemble(theta, omega, torque, load, p)
    A, b = _pack(rows, rhs, theta.shape)
    det = np.linalg.det(A)
    if np.any(np.abs(det) < DET_GUARD):
        idx = np.unravel_index(np.argmin(np.abs(det)), np.shape(det)) if np.ndim(det) else ()
        bad = theta[idx] if np.ndim(theta) else float(theta)
        raise SingularSystem("multibody system singular near theta=%r" % (bad,))
    return np.linalg.solve(A, b[..., None])[..., 0]


def forward_dynamics(theta, omega, torque, load, p):
    """State derivative of x = [theta, omega]: returns (theta_dot, omega_dot)."""
    y = solve_system(theta, omega, torque, load, p)
    return np.asarray(omega, dtype=np.float64) + 0.0 * y[..., 0], y[..., 0]


# Static pivot order for the tape path: (row, col) pairs.  Only five of the
# eight equations couple to omega_dot; the other three just read off the
# reaction forces F_ax, F_ay, F_N and are skipped when differentiating.
# Pivots along this order are 1, 1, 1, l2*cos(phi), I_eff(theta) -- all
# bounded away from zero whenever l1 < l2, so no runtime pivoting is needed.
_CORE_ORDER = ((7, 5), (3, 3), (4, 4), (5, 6), (2, 0))


def eliminate_omega_dot(rows, rhs):
    """Gaussian elimination in the fixed order above; returns (omega_dot,
    pivots).  Entries may be floats, numpy arrays or tape Values."""
    rows = [dict(r) for r in rows]
    rhs = list(rhs)
    order = _CORE_ORDER
    pivots = []
    for step in range(len(order) - 1):
        pr, pc = order[step]
        pivot = rows[pr].pop(pc)
        pivots.append(pivot)
        prow = rows[pr]
        for r, _ in order[step + 1 :]:
            if pc not in rows[r]:
                continue
            f = rows[r].pop(pc) / pivot
            for c, val in prow.items():
                if c in rows[r]:
                    rows[r][c] = rows[r][c] - f * val
                else:
                    rows[r][c] = 0.0 - f * val
            rhs[r] = rhs[r] - f * rhs[pr]
    pr, pc = order[-1]
    pivot = rows[pr][pc]
    pivots.append(pivot)
    return rhs[pr] / pivot, pivots


def omega_dot_taped(theta, omega, torque, load, p):
    """omega_dot as a tape Value (inputs may mix Values and constants)."""
    rows, rhs = assemble(theta, omega, torque, load, p)
    om_dot, pivots = eliminate_omega_dot(rows, rhs)
    det = 1.0
    for piv in pivots:
        det = det * np.abs(piv.data if isinstance(piv, tp.Value) else piv)
    if np.any(det < DET_GUARD):
        raise SingularSystem("multibody system singular inside taped solve")
    return om_dot


def mechanical_energy(theta, omega, p):
    """Kinetic + gravitational potential energy of the linkage (J).

    Crank kinetic energy is J1 omega^2 / 2 about the fixed axis (J1 already
    contains the translational part); rod energy splits into CM translation
    and rotation with J2 = m2 l2^2 / 3; the slider moves along y = 0 so only
    crank and rod contribute potential energy.
    """
    fr = kinematics(theta, omega, p)
    ke = 0.5 * (
        p.J1 * np.asarray(omega, dtype=np.float64) ** 2
        + p.m2 * (fr.vx2 ** 2 + fr.vy2 ** 2)
        + p.J2 * fr.phidot ** 2
        + p.m3 * fr.v ** 2
    )
    pe = p.g * (p.m1 * fr.y1 + p.m2 * fr.y2)
    return ke + pe
