"""Physics + network hybrid of the slider-crank with an unknown load force.

One model step is an explicit Euler update of x = [theta, omega] through the
rigid-body dynamics, with the load force F replaced by the network output
z = eta(q), where q is a configurable selection of physical signals
(slider position d, slider velocity v, theta, omega, drive torque).  Because
d and v are functions of theta and the link lengths, gradients flow through
the input map into the geometry as well.

Training minimizes a windowed multi-step prediction error: a window seeded
at sample i rolls the model n_steps Euler steps under the recorded torques
and accumulates (x_hat - x)' C (x - x_hat) against the recorded states,
with C = diag(1/var(theta), 1/var(omega)) taken from the training split.

In decomposed mode the force is the sum of a position-only head eta_c(d)
and a velocity-coupled head eta_nc(d, v); a penalty on eta_nc's output
pushes everything explainable by position alone into eta_c, which is what
separates a spring-like component from friction.
"""

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import data as dataio
from . import neural, physics

OMEGA_GUARD = 1e4          # rad/s; a rollout past this is treated as diverged
DIVERGED_PENALTY = 1e6     # large finite loss for diverged windows
NET_KEYS = ("w_h", "b_h", "w_o", "b_o")
PHYS_NAMES = ("m1", "m2", "m3", "l1", "l2", "J1", "B_m", "g")


class NonFiniteState(Exception):
    """A rollout left the admissible region (NaN/Inf or |omega| > guard)."""


class WindowTooLong(Exception):
    pass


# --- net input maps -------------------------------------------------------

INPUT_MAPS = {
    "dv": ("d", "v"),
    "dvT": ("d", "v", "torque"),
    "state": ("theta", "omega"),
    "stateT": ("theta", "omega", "torque"),
    "T": ("torque",),
    "thetaT": ("theta", "torque"),
    "omegaT": ("omega", "torque"),
}


@dataclass(frozen=True)
class InputMap:
    name: str
    columns: tuple


def get_input_map(name):
    if name not in INPUT_MAPS:
        raise KeyError("unknown input map %r; known: %s"
                       % (name, ", ".join(sorted(INPUT_MAPS))))
    return InputMap(name, INPUT_MAPS[name])


def input_columns(theta, omega, torque, p):
    """All candidate net inputs as named 1-d arrays."""
    fr = physics.kinematics(theta, omega, p)
    return {
        "d": fr.d,
        "v": fr.v,
        "theta": np.asarray(theta, dtype=np.float64),
        "omega": np.asarray(omega, dtype=np.float64),
        "torque": np.asarray(torque, dtype=np.float64),
    }


def collect_inputs(map_or_columns, theta, omega, torque, p):
    """Stack the requested columns into a (K, n_i) net input matrix."""
    columns = getattr(map_or_columns, "columns", map_or_columns)
    cols = input_columns(theta, omega, torque, p)
    return np.column_stack([cols[c] for c in columns])


# --- the model ------------------------------------------------------------

@dataclass
class HybridModel:
    phys: physics.PhysParams
    dt: float
    input_map: InputMap
    weights: np.ndarray                 # (2,) diagonal of the error metric C
    net: neural.NetParams = None        # single-head mode
    net_c: neural.NetParams = None      # decomposed: position-only head
    net_nc: neural.NetParams = None     # decomposed: velocity-coupled head

    @property
    def decomposed(self):
        return self.net is None

    def heads(self):
        """(column names, net) pairs whose outputs sum to the load force."""
        if self.decomposed:
            return [(("d",), self.net_c), (("d", "v"), self.net_nc)]
        return [(self.input_map.columns, self.net)]


def force_parts(model, theta, omega, torque):
    """Network load force and its per-head parts, all 1-d arrays."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    omega = np.atleast_1d(np.asarray(omega, dtype=np.float64))
    torque = np.broadcast_to(np.asarray(torque, dtype=np.float64), theta.shape)
    cols = input_columns(theta, omega, torque, model.phys)
    parts = []
    for columns, net in model.heads():
        q = np.column_stack([cols[c] for c in columns])
        parts.append(neural.eval_net(net, q)[:, 0])
    return sum(parts), parts


def force(model, theta, omega, torque):
    return force_parts(model, theta, omega, torque)[0]


def step(model, theta, omega, torque):
    """One Euler step of the hybrid dynamics (numpy path)."""
    z = force(model, theta, omega, torque)
    _, om_dot = physics.forward_dynamics(theta, omega, torque, z, model.phys)
    return theta + model.dt * omega, omega + model.dt * om_dot


def rollout(model, theta0, omega0, torques):
    """Roll n = len(torques) steps from (theta0, omega0); returns the
    predicted states h_1..h_n as two (n,) arrays.  Raises NonFiniteState when
    the trajectory leaves the omega guard."""
    n = len(torques)
    th = np.empty(n)
    om = np.empty(n)
    cur_th, cur_om = float(theta0), float(omega0)
    for k in range(n):
        nxt_th, nxt_om = step(model, cur_th, cur_om, float(torques[k]))
        cur_th = float(np.asarray(nxt_th).reshape(-1)[0])
        cur_om = float(np.asarray(nxt_om).reshape(-1)[0])
        if not (np.isfinite(cur_th) and np.isfinite(cur_om)) or abs(cur_om) > OMEGA_GUARD:
            raise NonFiniteState("rollout diverged at step %d" % (k + 1))
        th[k] = cur_th
        om[k] = cur_om
    return th, om


# --- windows --------------------------------------------------------------

def window_starts(n_samples, n_steps):
    """Valid seed indices for windows of n_steps Euler steps: a window
    seeded at i consumes samples i..i+n_steps, so i runs to n_samples-1-n_steps."""
    if n_steps < 1:
        raise WindowTooLong("need at least one step, got %d" % n_steps)
    if n_steps >= n_samples:
        raise WindowTooLong("window of %d steps does not fit a trajectory of %d samples"
                            % (n_steps, n_samples))
    return np.arange(n_samples - n_steps)


def all_windows(dataset, n_steps):
    """(traj_index, start) pairs over the whole dataset, as an (W, 2) array."""
    out = []
    for ti, traj in enumerate(dataset.trajectories):
        starts = window_starts(len(traj), n_steps)
        out.append(np.column_stack([np.full_like(starts, ti), starts]))
    return np.concatenate(out, axis=0)


def gather_batch(dataset, picks, n_steps):
    """Collect seed states, torque windows and target windows for the picked
    (traj, start) pairs into (B, ...) arrays."""
    th0 = np.empty((len(picks), 1))
    om0 = np.empty((len(picks), 1))
    torque = np.empty((len(picks), n_steps))
    t_th = np.empty((len(picks), n_steps))
    t_om = np.empty((len(picks), n_steps))
    for b, (ti, i) in enumerate(picks):
        tr = dataset.trajectories[ti]
        th0[b, 0] = tr.theta[i]
        om0[b, 0] = tr.omega[i]
        torque[b] = tr.torque[i : i + n_steps]
        t_th[b] = tr.theta[i + 1 : i + 1 + n_steps]
        t_om[b] = tr.omega[i + 1 : i + 1 + n_steps]
    return {"th0": th0, "om0": om0, "torque": torque,
            "target_theta": t_th, "target_omega": t_om}


def error_weights(dataset):
    """C = diag(1/var(theta), 1/var(omega)) over every training sample."""
    th = np.concatenate([tr.theta for tr in dataset.trajectories])
    om = np.concatenate([tr.omega for tr in dataset.trajectories])
    var = np.array([th.var(), om.var()])
    if np.any(var < 1e-300):
        raise dataio.DataError("constant state channel; error metric undefined")
    return 1.0 / var


# --- taped loss graph -----------------------------------------------------

def phys_nodes(tape, values, trainable, nominal):
    """Physical parameters as tape entities.  Trainables become variables in
    normalized coordinates p_tilde = p / p_nominal (named 'p:<name>'), so
    gradients come back in O(1) units; the rest are constants."""
    ns = {}
    for name in PHYS_NAMES:
        if name in trainable:
            var = tape.variable("p:" + name, values[name] / nominal[name])
            ns[name] = var * tape.constant(nominal[name])
        else:
            ns[name] = tape.constant(values[name])
    return SimpleNamespace(**ns)


def net_nodes(tape, net, prefix="net", trainable=True):
    """Network parameters as tape variables (or constants when frozen)."""
    nodes = {}
    for key in NET_KEYS:
        val = getattr(net, key)
        if trainable:
            nodes[key] = tape.variable(prefix + ":" + key, val)
        else:
            nodes[key] = tape.constant(val)
    return nodes


@dataclass
class ForceHead:
    columns: tuple
    nodes: dict
    sigma: np.ndarray
    regularized: bool = False


def taped_columns(tape, th, om, torque, pn, names):
    """Taped versions of the net input columns, (B, 1) Values each."""
    cols = {"theta": th, "omega": om, "torque": torque}
    if "d" in names or "v" in names:
        s1, c1 = th.sin(), th.cos()
        sph = (pn.l1 / pn.l2) * s1
        phi = sph.arcsin()
        cph = phi.cos()
        dphi = (pn.l1 * c1) / (pn.l2 * cph)
        cols["d"] = pn.l1 * c1 + pn.l2 * cph - (pn.l2 - pn.l1)
        cols["v"] = (0.0 - pn.l1 * s1 - pn.l2 * sph * dphi) * om
    return {n: cols[n] for n in names}


def taped_step(tape, th, om, torque, pn, heads, dtc):
    """One Euler step on the tape; returns (th', om', regularized force)."""
    needed = set()
    for head in heads:
        needed.update(head.columns)
    cols = taped_columns(tape, th, om, torque, pn, needed)
    z = None
    z_reg = None
    for head in heads:
        zi = neural.eval_taped(tape, [cols[c] for c in head.columns],
                               head.nodes, head.sigma)
        z = zi if z is None else z + zi
        if head.regularized:
            z_reg = zi if z_reg is None else z_reg + zi
    om_dot = physics.omega_dot_taped(th, om, torque, z, pn)
    return th + dtc * om, om + dtc * om_dot, z_reg


def build_window_loss(tape, pn, heads, batch, dt, weights, reg_c=0.0):
    """Mean window cost of a batch as a tape Value, or None if any rollout
    column left the omega guard (the caller turns that into a penalty)."""
    n_batch, n_steps = batch["torque"].shape
    th = tape.constant(batch["th0"])
    om = tape.constant(batch["om0"])
    dtc = tape.constant(dt)
    th_sq = om_sq = reg_sq = None
    for k in range(n_steps):
        tq = tape.constant(batch["torque"][:, k : k + 1])
        th, om, z_reg = taped_step(tape, th, om, tq, pn, heads, dtc)
        if (not np.all(np.isfinite(om.data)) or not np.all(np.isfinite(th.data))
                or np.max(np.abs(om.data)) > OMEGA_GUARD):
            return None
        e_th = (th - tape.constant(batch["target_theta"][:, k : k + 1])).square().sum()
        e_om = (om - tape.constant(batch["target_omega"][:, k : k + 1])).square().sum()
        th_sq = e_th if th_sq is None else th_sq + e_th
        om_sq = e_om if om_sq is None else om_sq + e_om
        if z_reg is not None:
            r = z_reg.square().sum()
            reg_sq = r if reg_sq is None else reg_sq + r
    scale = 1.0 / (n_batch * n_steps)
    total = (th_sq * float(weights[0]) + om_sq * float(weights[1])) * scale
    if reg_sq is not None and reg_c:
        total = total + reg_sq * (reg_c * scale)
    return total


def model_heads_taped(tape, model, trainable=True):
    """ForceHead list with this model's nets mounted as tape nodes."""
    heads = []
    if model.decomposed:
        heads.append(ForceHead(("d",), net_nodes(tape, model.net_c, "net_c", trainable),
                               model.net_c.sigma))
        heads.append(ForceHead(("d", "v"), net_nodes(tape, model.net_nc, "net_nc", trainable),
                               model.net_nc.sigma, regularized=True))
    else:
        heads.append(ForceHead(model.input_map.columns,
                               net_nodes(tape, model.net, "net", trainable),
                               model.net.sigma))
    return heads


def window_error_sums(model, batch):
    """Squared-error and penalty sums of a window batch on the numpy path;
    None when some window leaves the omega guard."""
    th = batch["th0"][:, 0].copy()
    om = batch["om0"][:, 0].copy()
    n_steps = batch["torque"].shape[1]
    err_th = err_om = reg = 0.0
    for k in range(n_steps):
        tq = batch["torque"][:, k]
        z, parts = force_parts(model, th, om, tq)
        _, om_dot = physics.forward_dynamics(th, om, tq, z, model.phys)
        th = th + model.dt * om
        om = om + model.dt * om_dot
        if (not np.all(np.isfinite(th)) or not np.all(np.isfinite(om))
                or np.max(np.abs(om)) > OMEGA_GUARD):
            return None
        err_th += float(np.sum((th - batch["target_theta"][:, k]) ** 2))
        err_om += float(np.sum((om - batch["target_omega"][:, k]) ** 2))
        if model.decomposed:
            reg += float(np.sum(parts[1] ** 2))
    return err_th, err_om, reg


def loss(model, dataset, n_steps, reg_c=0.0, chunk=4096):
    """Dataset prediction error (1/S)(1/L)(1/n) sum over windows and steps of
    e' C e, plus reg_c times the mean squared eta_nc over all evaluated
    states in decomposed mode.  Diverged windows short-circuit to the large
    finite penalty."""
    picks = all_windows(dataset, n_steps)
    err_th = err_om = reg = 0.0
    for lo in range(0, len(picks), chunk):
        batch = gather_batch(dataset, picks[lo : lo + chunk], n_steps)
        sums = window_error_sums(model, batch)
        if sums is None:
            return DIVERGED_PENALTY
        err_th += sums[0]
        err_om += sums[1]
        reg += sums[2]
    n_s = len(dataset)
    n_l = max(len(tr) for tr in dataset.trajectories)
    val = (model.weights[0] * err_th + model.weights[1] * err_om) / (n_s * n_l * n_steps)
    if model.decomposed and reg_c:
        val += reg_c * reg / (len(picks) * n_steps)
    return float(val)


# --- model files ----------------------------------------------------------

def save_model(model, path):
    obj = {
        "phys": model.phys.as_dict(),
        "dt": model.dt,
        "input_map": model.input_map.name,
        "weights": list(map(float, model.weights)),
        "decomposed": model.decomposed,
    }
    if model.decomposed:
        obj["net_c"] = model.net_c.to_dict()
        obj["net_nc"] = model.net_nc.to_dict()
    else:
        obj["net"] = model.net.to_dict()
    dataio.write_json(path, obj)


def load_model(path):
    obj = dataio.read_json(path)
    kw = {}
    if obj["decomposed"]:
        kw["net_c"] = neural.NetParams.from_dict(obj["net_c"])
        kw["net_nc"] = neural.NetParams.from_dict(obj["net_nc"])
    else:
        kw["net"] = neural.NetParams.from_dict(obj["net"])
    return HybridModel(
        phys=physics.PhysParams(**obj["phys"]),
        dt=float(obj["dt"]),
        input_map=get_input_map(obj["input_map"]),
        weights=np.asarray(obj["weights"], dtype=np.float64),
        **kw,
    )


# --- force surface --------------------------------------------------------

def mean_nn_spacing(points):
    """Mean nearest-neighbour distance of (K, n) points, exact, chunked."""
    pts = np.asarray(points, dtype=np.float64)
    best = np.full(len(pts), np.inf)
    for lo in range(0, len(pts), 512):
        blk = pts[lo : lo + 512]
        d2 = np.sum((blk[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        for r in range(len(blk)):
            d2[r, lo + r] = np.inf
        best[lo : lo + 512] = np.sqrt(d2.min(axis=1))
    return float(best.mean())


def force_surface(model, d_train, v_train, n_grid=61, radius=None):
    """eta over a (d, v) grid spanning the training support, with a mask of
    grid points within `radius` of a training input (scaled coordinates).

    Only meaningful when the force depends on (d, v) alone, i.e. for the
    'dv' map or a decomposed model.
    """
    if not model.decomposed and set(model.input_map.columns) - {"d", "v"}:
        raise ValueError("force surface needs a (d, v) input map")
    d_train = np.asarray(d_train, dtype=np.float64)
    v_train = np.asarray(v_train, dtype=np.float64)
    sigma = (model.net_nc if model.decomposed else model.net).sigma
    if model.decomposed or model.input_map.columns == ("d", "v"):
        scale = sigma
    else:  # ("v", "d") or single-column maps
        scale = np.ones(2)
    train = np.column_stack([d_train, v_train]) / scale
    if radius is None:
        radius = 2.0 * mean_nn_spacing(train)
    dg = np.linspace(d_train.min(), d_train.max(), n_grid)
    vg = np.linspace(v_train.min(), v_train.max(), n_grid)
    dd, vv = np.meshgrid(dg, vg, indexing="ij")
    pts = np.column_stack([dd.ravel(), vv.ravel()])
    cols = {"d": pts[:, 0], "v": pts[:, 1]}
    out = {"d": pts[:, 0], "v": pts[:, 1]}
    z = None
    for (columns, net), key in zip(model.heads(),
                                   ("z_c", "z_nc") if model.decomposed else ("z",)):
        q = np.column_stack([cols[c] for c in columns])
        zi = neural.eval_net(net, q)[:, 0]
        out[key] = zi
        z = zi if z is None else z + zi
    out["z"] = z
    scaled = pts / scale
    mind = np.full(len(scaled), np.inf)
    for lo in range(0, len(scaled), 1024):
        d2 = np.sum((scaled[lo : lo + 1024, None, :] - train[None, :, :]) ** 2, axis=-1)
        mind[lo : lo + 1024] = np.sqrt(d2.min(axis=1))
    out["explored"] = (mind <= radius).astype(np.int64)
    out["radius"] = radius
    return out


def write_force_surface(path, surface):
    keys = ["d", "v", "z"]
    if "z_c" in surface:
        keys += ["z_c", "z_nc"]
    keys.append("explored")
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in zip(*(surface[k] for k in keys)):
            fh.write(",".join("%d" % x if isinstance(x, (int, np.integer))
                              else "%.17g" % x for x in row) + "\n")
