"""Synthetic data generation with a known injected load force.

The "true" plant is the same rigid-body model the package identifies, driven
by torque profiles and loaded at the slider with

    F(d, v) = -k max(0, d_c - d)            (compression spring, engaged d < d_c)
              + F_C tanh(v / v_eps) + b_v v  (smoothed Coulomb + viscous friction)

With the slider equation m3 dv/dt = -F_cx - F, the spring term's sign makes
the force -F on the slider point toward +d whenever the spring is compressed,
i.e. a spring mounted at the inner end of the stroke pushing the slider back
out; its energy is the usual 1/2 k max(0, d_c - d)^2, which is what the
conservation tests check.  The friction term always opposes v.

Integration is classic fixed-step RK4 at `substeps` internal steps per
sample, batched over all trajectories at once.  Torque profiles are closed
forms of t with parameters drawn from per-profile seeds, pre-evaluated on the
half-substep grid so each RK4 stage reads exactly the torque it should; the
value stored in the CSV is the integrator's value at the sample instant.

The generating constants are written to ground_truth.json next to the data.
Training never reads that file; it exists so experiments can compare an
extracted force law with the injected one afterwards.
"""

from dataclasses import dataclass, field

import numpy as np

from . import data as dataio
from . import physics


@dataclass(frozen=True)
class LoadModel:
    """Injected slider load; defaults sized so spring and friction are the
    same order as the rig's inertia forces at working speeds."""

    k: float = 2000.0      # spring rate, N/m
    d_c: float = 0.05      # spring contact position, m (mid-stroke)
    F_C: float = 5.0       # Coulomb level, N
    b_v: float = 2.0       # viscous coefficient, N s/m
    v_eps: float = 0.01    # tanh smoothing velocity, m/s

    def spring(self, d):
        return -self.k * np.maximum(0.0, self.d_c - np.asarray(d, dtype=np.float64))

    def friction(self, v):
        v = np.asarray(v, dtype=np.float64)
        return self.F_C * np.tanh(v / self.v_eps) + self.b_v * v

    def force(self, d, v):
        return self.spring(d) + self.friction(v)

    def potential(self, d):
        return 0.5 * self.k * np.maximum(0.0, self.d_c - np.asarray(d, dtype=np.float64)) ** 2

    def as_dict(self):
        return {"k": self.k, "d_c": self.d_c, "F_C": self.F_C,
                "b_v": self.b_v, "v_eps": self.v_eps}


@dataclass(frozen=True)
class TorqueProfile:
    """Deterministic torque signal; |T(t)| <= amplitude for every kind."""

    kind: str              # "multisine" | "chirp" | "steps"
    amplitude: float       # N m
    seed: int
    duration: float        # s

    def sample(self, t):
        t = np.asarray(t, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        if self.kind == "multisine":
            freqs = rng.uniform(0.5, 8.0, size=6)
            coeff = rng.uniform(0.5, 1.0, size=6)
            phase = rng.uniform(0.0, 2 * np.pi, size=6)
            wave = np.zeros_like(t)
            for f, a, ph in zip(freqs, coeff, phase):
                wave += a * np.sin(2 * np.pi * f * t + ph)
            return self.amplitude * wave / coeff.sum()
        if self.kind == "chirp":
            f0 = rng.uniform(0.5, 2.0)
            f1 = rng.uniform(4.0, 10.0)
            rate = (f1 - f0) / (2.0 * self.duration)
            return self.amplitude * np.sin(2 * np.pi * (f0 * t + rate * t * t))
        if self.kind == "steps":
            hold = 0.05    # s per level
            n_lv = int(np.ceil(self.duration / hold)) + 1
            levels = rng.uniform(-1.0, 1.0, size=n_lv)
            idx = np.minimum((t / hold).astype(np.int64), n_lv - 1)
            return self.amplitude * levels[idx]
        raise ValueError("unknown torque profile kind %r" % self.kind)

    def as_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude,
                "seed": self.seed, "duration": self.duration}


_KIND_CYCLE = ("multisine", "chirp", "steps")


def default_profiles(n=10, amp_lo=0.25, amp_hi=2.0, seed=0, duration=0.4):
    """Amplitude-graded family cycling through the profile kinds, so the
    dataset spans slow oscillation through fast rotation."""
    amps = np.geomspace(amp_lo, amp_hi, n)
    return [TorqueProfile(kind=_KIND_CYCLE[i % len(_KIND_CYCLE)],
                          amplitude=float(amps[i]), seed=seed + 17 * i,
                          duration=duration)
            for i in range(n)]


@dataclass
class SimConfig:
    phys: physics.PhysParams = field(default_factory=physics.default_params)
    load: LoadModel = field(default_factory=LoadModel)
    profiles: list = None
    start_angles: tuple = (0.0, np.pi / 2)
    dt: float = 5e-4               # sample period, s (2 kHz)
    n_samples: int = 800           # per trajectory
    substeps: int = 10             # RK4 steps per sample
    seed: int = 0
    noise_sigma: float = 0.0       # theta noise std, rad; 0 = exact states

    def __post_init__(self):
        if self.profiles is None:
            duration = self.dt * self.n_samples
            self.profiles = default_profiles(seed=self.seed, duration=duration)


def _rk4_batch(phys, load, torque_fine, theta0, omega0, dt, n_samples, substeps):
    """Integrate all trajectories at once.  torque_fine holds the torque on
    the half-substep grid, shape (S, 2*(n_samples-1)*substeps + 1)."""

    def f(th, om, tq):
        fr = physics.kinematics(th, om, phys)
        _, om_dot = physics.forward_dynamics(th, om, tq, load.force(fr.d, fr.v), phys)
        return om, om_dot

    n_traj = len(theta0)
    th = np.array(theta0, dtype=np.float64)
    om = np.array(omega0, dtype=np.float64)
    out_th = np.empty((n_traj, n_samples))
    out_om = np.empty((n_traj, n_samples))
    out_th[:, 0] = th
    out_om[:, 0] = om
    h = dt / substeps
    for k in range(1, n_samples):
        for j in range(substeps):
            m = 2 * ((k - 1) * substeps + j)
            t0, t1, t2 = torque_fine[:, m], torque_fine[:, m + 1], torque_fine[:, m + 2]
            k1t, k1o = f(th, om, t0)
            k2t, k2o = f(th + 0.5 * h * k1t, om + 0.5 * h * k1o, t1)
            k3t, k3o = f(th + 0.5 * h * k2t, om + 0.5 * h * k2o, t1)
            k4t, k4o = f(th + h * k3t, om + h * k3o, t2)
            th = th + (h / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t)
            om = om + (h / 6.0) * (k1o + 2 * k2o + 2 * k3o + k4o)
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(om))):
            raise RuntimeError("simulation diverged at sample %d" % k)
        out_th[:, k] = th
        out_om[:, k] = om
    return out_th, out_om


def generate(config):
    """Simulate the full trajectory set; returns (Dataset, ground-truth dict)."""
    profiles = config.profiles
    starts = list(config.start_angles)
    pairs = [(pr, th0) for pr in profiles for th0 in starts]
    n_traj = len(pairs)
    n_fine = 2 * (config.n_samples - 1) * config.substeps + 1
    t_fine = np.arange(n_fine) * (config.dt / (2 * config.substeps))
    torque_fine = np.stack([pr.sample(t_fine) for pr, _ in pairs])
    theta0 = np.array([th0 for _, th0 in pairs])
    omega0 = np.zeros(n_traj)
    out_th, out_om = _rk4_batch(config.phys, config.load, torque_fine,
                                theta0, omega0, config.dt,
                                config.n_samples, config.substeps)
    t = np.arange(config.n_samples) * config.dt
    torque_samples = torque_fine[:, :: 2 * config.substeps]
    rng = np.random.default_rng(config.seed + 1000003)
    trajs = []
    for i, (pr, th0) in enumerate(pairs):
        theta = out_th[i]
        omega = out_om[i]
        if config.noise_sigma > 0.0:
            # measured angle channel; omega re-derived from it like an
            # encoder pipeline would (central differences, one-sided ends)
            theta = theta + rng.normal(0.0, config.noise_sigma, size=theta.shape)
            omega = np.gradient(theta, config.dt)
        trajs.append(dataio.Trajectory(
            t=t.copy(), theta=theta, omega=omega, torque=torque_samples[i].copy(),
            label="traj_%02d" % i))
    meta = {
        "seed": config.seed,
        "noise_sigma": config.noise_sigma,
        "substeps": config.substeps,
        "start_angles": [float(a) for a in starts],
        "profiles": [pr.as_dict() for pr in profiles],
    }
    dataset = dataio.Dataset(trajs, config.dt, meta)
    truth = {
        "phys": config.phys.as_dict(),
        "load": config.load.as_dict(),
        "note": "generating constants; not an input to identification",
    }
    return dataset, truth


def peak_speeds(dataset):
    return np.array([np.max(np.abs(tr.omega)) for tr in dataset.trajectories])


def speed_span(dataset):
    """Ratio of fastest to slowest trajectory by peak |omega|."""
    pk = peak_speeds(dataset)
    return float(pk.max() / pk.min())


def low_speed_indices(dataset):
    """Indices of the slower half (by peak |omega|): the restricted
    region-of-operation subset used in the extrapolation study."""
    pk = peak_speeds(dataset)
    order = np.argsort(pk, kind="stable")
    return sorted(int(i) for i in order[: len(order) // 2])


def force_comparison(model, dataset, truth):
    """Identified load force against the injected law, evaluated on the
    dataset's own samples (i.e. the explored region).

    `truth` is the generator's ground-truth dict; only verification code may
    pass it in.  Returns per-sample arrays plus summary statistics; the
    decomposed extras quantify how well the position-only head isolates the
    spring and whether the velocity-coupled head flips sign with v.
    """
    from . import hybrid

    phys_true = physics.PhysParams(**truth["phys"])
    load = LoadModel(**truth["load"])
    th = np.concatenate([tr.theta for tr in dataset.trajectories])
    om = np.concatenate([tr.omega for tr in dataset.trajectories])
    tq = np.concatenate([tr.torque for tr in dataset.trajectories])
    fr = physics.kinematics(th, om, phys_true)
    f_true = load.force(fr.d, fr.v)
    f_net, parts = hybrid.force_parts(model, th, om, tq)
    rng = float(np.ptp(f_true))
    rmse = float(np.sqrt(np.mean((f_net - f_true) ** 2)))
    out = {
        "samples": {"d": fr.d, "v": fr.v, "f_true": f_true, "f_net": f_net},
        "rmse": rmse,
        "force_range": rng,
        "rmse_over_range": rmse / rng if rng > 0 else float("inf"),
    }
    if model.decomposed:
        z_c, z_nc = parts
        spring = load.spring(fr.d)
        fric = load.friction(fr.v)
        fs = float(np.ptp(spring))
        rmse_c = float(np.sqrt(np.mean((z_c - spring) ** 2)))
        out["samples"]["z_c"] = z_c
        out["samples"]["z_nc"] = z_nc
        out["rmse_c"] = rmse_c
        out["spring_full_scale"] = fs
        out["rmse_c_over_full_scale"] = rmse_c / fs if fs > 0 else float("inf")
        # sign behaviour of the velocity head, away from the sticking band
        v0 = 0.1 * float(np.percentile(np.abs(fr.v), 90))
        out["mean_znc_forward"] = float(np.mean(z_nc[fr.v > v0]))
        out["mean_znc_backward"] = float(np.mean(z_nc[fr.v < -v0]))
        out["mean_abs_c"] = float(np.mean(np.abs(z_c)))
        out["mean_abs_friction"] = float(np.mean(np.abs(fric)))
    return out
