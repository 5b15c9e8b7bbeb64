"""Joint identification of physical parameters and the load network.

Training minimizes the windowed prediction error: every (trajectory, start)
pair yields one window, each epoch shuffles the full window list and walks it
in minibatches, and every minibatch re-traces the model graph and takes one
Adam step on the normalized physical parameters and the net weights together.
Normalization (p_tilde = p / p_nominal) keeps all parameter gradients at
comparable magnitude; the optimizer clamps p_tilde to the same +/-band box
the initializer draws from, so a parameter can stall at the boundary but
never leave it.

The cross-validation harness retrains from scratch per fold — input scales
and the error metric are recomputed from each fold's training split, so no
statistic of a held-out trajectory ever leaks into its own evaluation.
"""

import dataclasses
from dataclasses import dataclass, field
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import data as dataio
from . import hybrid, neural, physics
from .tape import Tape


class NonFiniteGradient(Exception):
    """A loss gradient came back NaN/Inf (names the offending minibatch)."""


class Adam:
    """Standard bias-corrected Adam on a dict of named arrays/scalars."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr < 0 or not (0 <= beta1 < 1) or not (0 <= beta2 < 1) or eps <= 0:
            raise ValueError("bad Adam hyperparameters")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        """One update; returns the new parameter dict, params untouched."""
        for name in params:
            if not np.all(np.isfinite(grads[name])):
                raise NonFiniteGradient("non-finite gradient for %r" % name)
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        out = {}
        for name, p in params.items():
            g = np.asarray(grads[name], dtype=np.float64)
            m = self.beta1 * self.m.get(name, 0.0) + (1 - self.beta1) * g
            v = self.beta2 * self.v.get(name, 0.0) + (1 - self.beta2) * g * g
            self.m[name] = m
            self.v[name] = v
            step = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            out[name] = p - step
        return out


@dataclass
class TrainConfig:
    n_window: int = 1            # prediction steps per window
    epochs: int = 40
    minibatch: int = 200         # windows per Adam step
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    trainable: tuple = ("m3", "J1", "B_m")
    init_band: float = 0.5       # trainable start spread; also the clamp box
    jitter_band: float = 0.1     # mis-knowledge applied to fixed parameters
    seed: int = 0
    reg_c: float = 0.0           # penalty on the velocity-coupled head output
    n_hidden: int = 32
    input_map: str = "dv"
    decomposed: bool = False

    def __post_init__(self):
        if self.minibatch < 1:
            raise ValueError("minibatch must be >= 1")
        if not (0 <= self.init_band < 1) or not (0 <= self.jitter_band < 1):
            raise ValueError("bands must lie in [0, 1)")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        for name in self.trainable:
            if name not in hybrid.PHYS_NAMES:
                raise ValueError("unknown trainable parameter %r" % name)

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclass
class FitResult:
    model: hybrid.HybridModel
    loss_history: list           # mean minibatch objective per epoch
    p_history: dict              # name -> normalized value per epoch (0 = init)
    epoch_seconds: list
    n_diverged: int              # minibatches skipped by the rollout guard
    config: TrainConfig


def _nominal_dict(nominal):
    return nominal.as_dict()


def init_model(dataset, config, nominal=None, rng=None):
    """Draw a starting model: trainables uniform in the +/-init_band box
    around nominal, fixed parameters (except g) jittered by +/-jitter_band,
    nets freshly seeded with input scales fitted on this dataset."""
    nominal = nominal if nominal is not None else physics.default_params()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    nom = _nominal_dict(nominal)
    drawn = {}
    for name in hybrid.PHYS_NAMES:
        if name in config.trainable:
            drawn[name] = nom[name] * rng.uniform(1 - config.init_band,
                                                  1 + config.init_band)
        elif name != "g" and config.jitter_band > 0:
            drawn[name] = nom[name] * rng.uniform(1 - config.jitter_band,
                                                  1 + config.jitter_band)
    phys = nominal.replace(**drawn)

    def make_net(columns):
        net = neural.init(len(columns), config.n_hidden,
                          seed=int(rng.integers(2 ** 31)))
        th = np.concatenate([tr.theta for tr in dataset.trajectories])
        om = np.concatenate([tr.omega for tr in dataset.trajectories])
        tq = np.concatenate([tr.torque for tr in dataset.trajectories])
        neural.fit_input_scaling(net, hybrid.collect_inputs(columns, th, om, tq, phys))
        return net

    weights = hybrid.error_weights(dataset)
    imap = hybrid.get_input_map(config.input_map)
    if config.decomposed:
        return hybrid.HybridModel(phys=phys, dt=dataset.dt, input_map=imap,
                                  weights=weights,
                                  net_c=make_net(("d",)),
                                  net_nc=make_net(("d", "v")))
    return hybrid.HybridModel(phys=phys, dt=dataset.dt, input_map=imap,
                              weights=weights, net=make_net(imap.columns))


def copy_model(model):
    return hybrid.HybridModel(
        phys=model.phys, dt=model.dt, input_map=model.input_map,
        weights=model.weights.copy(),
        net=model.net.copy() if model.net is not None else None,
        net_c=model.net_c.copy() if model.net_c is not None else None,
        net_nc=model.net_nc.copy() if model.net_nc is not None else None)


def _net_prefixes(model):
    if model.decomposed:
        return [("net_c", model.net_c), ("net_nc", model.net_nc)]
    return [("net", model.net)]


def train(dataset, config, model=None, nominal=None):
    """Fit (p, net) on the dataset; returns a FitResult with the model
    updated in place plus per-epoch convergence records."""
    lengths = {len(tr) for tr in dataset.trajectories}
    if len(lengths) > 1:
        raise dataio.DataError("trajectories must share a common length")
    nominal = nominal if nominal is not None else physics.default_params()
    nom = _nominal_dict(nominal)
    rng = np.random.default_rng(config.seed)
    if model is None:
        model = init_model(dataset, config, nominal=nominal, rng=rng)

    p_tilde = {n: getattr(model.phys, n) / nom[n] for n in config.trainable}
    lo, hi = 1 - config.init_band, 1 + config.init_band
    adam = Adam(config.lr, config.beta1, config.beta2, config.eps)
    wins = hybrid.all_windows(dataset, config.n_window)
    loss_history = []
    epoch_seconds = []
    p_history = {n: [p_tilde[n]] for n in config.trainable}
    n_diverged = 0

    for epoch in range(config.epochs):
        tic = time.perf_counter()
        perm = rng.permutation(len(wins))
        batch_losses = []
        for mb, start in enumerate(range(0, len(wins), config.minibatch)):
            picks = wins[perm[start : start + config.minibatch]]
            batch = hybrid.gather_batch(dataset, picks, config.n_window)
            tape = Tape()
            pn = hybrid.phys_nodes(tape, model.phys.as_dict(),
                                   config.trainable, nom)
            heads = hybrid.model_heads_taped(tape, model)
            value = hybrid.build_window_loss(tape, pn, heads, batch, dataset.dt,
                                             model.weights, config.reg_c)
            if value is None:
                n_diverged += 1
                batch_losses.append(hybrid.DIVERGED_PENALTY)
                continue
            grads = tape.backward(value)
            params = {"p:" + n: p_tilde[n] for n in config.trainable}
            for prefix, net in _net_prefixes(model):
                for key in hybrid.NET_KEYS:
                    params[prefix + ":" + key] = getattr(net, key)
            try:
                new = adam.step(params, grads)
            except NonFiniteGradient as err:
                raise NonFiniteGradient(
                    "epoch %d minibatch %d: %s" % (epoch, mb, err)) from err
            for n in config.trainable:
                p_tilde[n] = float(np.clip(new["p:" + n], lo, hi))
            model.phys = model.phys.replace(
                **{n: p_tilde[n] * nom[n] for n in config.trainable})
            for prefix, net in _net_prefixes(model):
                for key in hybrid.NET_KEYS:
                    setattr(net, key, new[prefix + ":" + key])
            batch_losses.append(float(value.data))
        loss_history.append(float(np.mean(batch_losses)))
        for n in config.trainable:
            p_history[n].append(p_tilde[n])
        epoch_seconds.append(time.perf_counter() - tic)

    return FitResult(model=model, loss_history=loss_history,
                     p_history=p_history, epoch_seconds=epoch_seconds,
                     n_diverged=n_diverged, config=config)


# ------------------------------------------------------------- evaluation

def rmse_multistep(model, traj):
    """Seed at the first sample, roll the full horizon, RMSE of omega; Inf
    when the rollout trips the divergence guard."""
    if len(traj) < 2:
        raise ValueError("trajectory too short")
    try:
        _, om = hybrid.rollout(model, traj.theta[0], traj.omega[0],
                               traj.torque[:-1])
    except hybrid.NonFiniteState:
        return float("inf")
    return float(np.sqrt(np.mean((om - traj.omega[1:]) ** 2)))


@dataclass
class FoldResult:
    fold: int
    label: str
    seed: int
    rmse: float
    diverged: bool
    p_final: dict


@dataclass
class LoocvResult:
    folds: list
    median: float                # over folds that completed
    band90: tuple                # (best, 90th percentile) of completed folds
    n_diverged: int
    input_map: str
    n_window: int

    def rmse_table(self):
        return [(f.fold, f.label, f.rmse) for f in self.folds]


def _fold_seed(seed, k):
    return seed + 7919 * (k + 1)


def _run_fold(args):
    dataset, config, k, nominal = args
    train_idx = [i for i in range(len(dataset.trajectories)) if i != k]
    train_ds = dataset.subset(train_idx)
    held = dataset.trajectories[k]
    cfg = config.replace(seed=_fold_seed(config.seed, k))
    fit = train(train_ds, cfg, nominal=nominal)
    rmse = rmse_multistep(fit.model, held)
    p_final = {n: getattr(fit.model.phys, n) for n in config.trainable}
    return FoldResult(fold=k, label=held.label, seed=cfg.seed, rmse=rmse,
                      diverged=not np.isfinite(rmse), p_final=p_final)


def loocv(dataset, config, nominal=None, jobs=1):
    """Leave-one-trajectory-out: S independently seeded retrainings, each
    scored by full-horizon rollout RMSE on its held-out trajectory."""
    n_traj = len(dataset.trajectories)
    if n_traj < 2:
        raise ValueError("cross-validation needs at least 2 trajectories")
    work = [(dataset, config, k, nominal) for k in range(n_traj)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_fold, work))
    else:
        folds = [_run_fold(w) for w in work]
    finite = np.array([f.rmse for f in folds if np.isfinite(f.rmse)])
    if len(finite):
        median = float(np.median(finite))
        band90 = (float(finite.min()), float(np.quantile(finite, 0.9)))
    else:
        median = float("inf")
        band90 = (float("inf"), float("inf"))
    return LoocvResult(folds=folds, median=median, band90=band90,
                       n_diverged=sum(f.diverged for f in folds),
                       input_map=config.input_map, n_window=config.n_window)


def ablate_inputs(dataset, config, maps=("dv", "T"), nominal=None, jobs=1):
    """LOOCV once per candidate input map with matched fold seeds, so fold k
    is a paired comparison across maps."""
    return {name: loocv(dataset, config.replace(input_map=name),
                        nominal=nominal, jobs=jobs)
            for name in maps}


def sweep_n(train_ds, test_ds, config, n_values=(1, 8, 64), nominal=None,
            epochs_recurrent=None):
    """Window-length study.  The N=1 model is trained from scratch; every
    longer window starts from a copy of that converged model (recurrent
    fine-tuning).  Returns one record per N with held-out RMSEs and the
    mean per-epoch wall time."""
    if 1 not in n_values:
        raise ValueError("the sweep needs the N=1 baseline")
    base = train(train_ds, config.replace(n_window=1), nominal=nominal)
    records = []
    for n in n_values:
        if n == 1:
            fit = base
        else:
            cfg = config.replace(n_window=n)
            if epochs_recurrent is not None:
                cfg = cfg.replace(epochs=epochs_recurrent)
            fit = train(train_ds, cfg, model=copy_model(base.model),
                        nominal=nominal)
        rmses = [rmse_multistep(fit.model, tr) for tr in test_ds.trajectories]
        finite = [r for r in rmses if np.isfinite(r)]
        records.append({
            "n_window": n,
            "rmse": rmses,
            "rmse_median": float(np.median(finite)) if finite else float("inf"),
            "epoch_seconds": float(np.mean(fit.epoch_seconds)),
            "fit": fit,
        })
    return records
