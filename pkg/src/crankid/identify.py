"""Post-training identifiability analysis.

Builds the sample-by-feature sensitivity matrix S: row k holds the partial
derivatives of the angular acceleration f = omega_dot(theta_k, omega_k, T_k,
F_k; p) at measured sample k, with respect to the net force F (column "F",
evaluated at the converged net's own output) and to each physical parameter
in normalized coordinates, d f / d p_tilde_j = p_j * d f / d p_j, so column
magnitudes are comparable across parameters of different units.

Column norms rank feature influence; the correlation matrix Q of the
unit-normalized columns exposes which directions the data cannot separate
(|Q_ij| near 1 means trading feature i against j barely changes the output).

Per-sample partials come from one reverse sweep: every feature is mounted as
a per-sample (K, 1) tape variable, so the gradient of sum_k f_k delivers
d f_k / d feature_k for all k at once.
"""

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import hybrid, physics
from .tape import Tape


class ZeroSensitivity(Exception):
    """A feature column has zero norm; correlations are undefined for it."""


@dataclass
class SensitivityMatrix:
    features: tuple          # ("F", <parameter names...>)
    S: np.ndarray            # (K, len(features))

    def norms(self):
        return np.sqrt(np.sum(self.S ** 2, axis=0))

    def zero_columns(self):
        n = self.norms()
        return [f for f, v in zip(self.features, n) if v == 0.0]


@dataclass
class CorrelationMatrix:
    features: tuple
    Q: np.ndarray            # symmetric, unit diagonal

    def entry(self, a, b):
        return float(self.Q[self.features.index(a), self.features.index(b)])


def _chunk_rows(model, theta, omega, torque, fhat, params):
    n = len(theta)
    tape = Tape()
    col = lambda a: a.reshape(-1, 1)
    th = tape.constant(col(theta))
    om = tape.constant(col(omega))
    tq = tape.constant(col(torque))
    F = tape.variable("F", col(fhat))
    nodes = {}
    for name in params:
        p_j = getattr(model.phys, name)
        var = tape.variable("p:" + name, np.ones((n, 1)))
        nodes[name] = var * tape.constant(p_j)
    pn_dict = {name: tape.constant(getattr(model.phys, name))
               for name in hybrid.PHYS_NAMES if name not in params}
    pn_dict.update(nodes)
    pn = SimpleNamespace(**pn_dict)
    om_dot = physics.omega_dot_taped(th, om, tq, F, pn)
    grads = tape.backward(om_dot.sum())
    cols = [grads["F"][:, 0]]
    cols += [grads["p:" + name][:, 0] for name in params]
    return np.column_stack(cols)


def sensitivity_matrix(model, dataset, params=hybrid.PHYS_NAMES, chunk=4096):
    """S over every sample of every trajectory, in trajectory order.  The
    force column is evaluated at the converged net's own prediction."""
    blocks = []
    for tr in dataset.trajectories:
        fhat = hybrid.force(model, tr.theta, tr.omega, tr.torque)
        for i in range(0, len(tr), chunk):
            sl = slice(i, i + chunk)
            blocks.append(_chunk_rows(model, tr.theta[sl], tr.omega[sl],
                                      tr.torque[sl], fhat[sl], params))
    S = np.vstack(blocks)
    if not np.all(np.isfinite(S)):
        raise ValueError("non-finite sensitivity rows")
    return SensitivityMatrix(features=("F",) + tuple(params), S=S)


def rank_sensitivities(sm):
    """Feature influences ||s_j||_2, strongest first."""
    pairs = list(zip(sm.features, sm.norms()))
    return sorted(pairs, key=lambda fv: -fv[1])


def correlation_matrix(sm):
    norms = sm.norms()
    for f, v in zip(sm.features, norms):
        if v == 0.0:
            raise ZeroSensitivity("feature %r has zero sensitivity" % f)
    SN = sm.S / norms
    Q = SN.T @ SN
    Q = 0.5 * (Q + Q.T)
    np.fill_diagonal(Q, 1.0)
    return CorrelationMatrix(features=sm.features, Q=Q)


def write_sensitivity_csv(path, sm):
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(",".join(sm.features) + "\n")
        for row in sm.S:
            f.write(",".join("%.17g" % v for v in row) + "\n")


def write_correlation_csv(path, cm):
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("feature," + ",".join(cm.features) + "\n")
        for name, row in zip(cm.features, cm.Q):
            f.write(name + "," + ",".join("%.17g" % v for v in row) + "\n")
