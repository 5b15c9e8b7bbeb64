"""Release gates: one test per headline claim of the toolkit.

Unlike the unit modules these run full training studies on synthetic
ground truth, so the file takes over an hour single-core.  `pytest -v`
prints one pass/fail line per gate.  Frozen study configurations live at
the top; the companion rationale for each tolerance sits next to the
assert that uses it.
"""

import json
import os
import time

import numpy as np
import pytest

import oracles
from crankid import cli, hybrid, identify, optimize, physics, simulate
from crankid.tape import check_gradient

P_TRUE = physics.default_params()

# friction-only drive set: fast enough that omega_dot and omega^2 terms pin
# m3/J1/B_m, no spring so the net has an easy (d, v) law to absorb
RECOVERY_LOAD = simulate.LoadModel(k=0.0, F_C=5.0, b_v=2.0, v_eps=0.03)
RECOVERY_PROFILES = dict(n=10, amp_lo=0.5, amp_hi=2.0, seed=0, duration=0.2)
RECOVERY_SIM = dict(dt=2e-4, n_samples=1000, substeps=10)
RECOVERY_TRAIN = optimize.TrainConfig(trainable=("m3", "J1", "B_m"),
                                      epochs=500, lr=1e-3, jitter_band=0.0)

# spring-loaded slider on a horizontal (g = 0) rig.  The spring seat sits at
# full extension so the spring stays engaged over the whole stroke: the
# position head then has to learn a kink-free linear law, which extrapolates
# correctly through the low-leverage stroke ends (j_d -> 0) where the data
# cannot pin any force.  +/- torque pairs sweep each position in both travel
# directions, so the direction-dependent friction averages out of the
# position head's d-conditional target.
FORCE_LOAD = simulate.LoadModel(k=400.0, d_c=0.10, F_C=5.0, b_v=2.0,
                                v_eps=0.03)
FORCE_SIM = dict(dt=5e-4, n_samples=1000, substeps=10,
                 start_angles=(np.pi / 2, -np.pi / 2))
FORCE_SEEDS = 10  # heads are averaged over this many converged models
FORCE_TRAIN = optimize.TrainConfig(trainable=(), epochs=500, lr=1e-3,
                                   jitter_band=0.0)

ABLATION_MAPS = ("dv", "T", "thetaT", "omegaT")


def mirrored_profiles(n, amp_lo, amp_hi, seed, duration):
    """Torque profiles in +/- pairs so both travel directions are driven."""
    out = []
    for pr in simulate.default_profiles(n, amp_lo, amp_hi, seed, duration):
        out.append(pr)
        out.append(simulate.TorqueProfile(kind=pr.kind, amplitude=-pr.amplitude,
                                          seed=pr.seed, duration=pr.duration))
    return out


def force_dataset(k):
    cfg = simulate.SimConfig(
        phys=P_TRUE.replace(g=0.0),
        profiles=mirrored_profiles(5, 0.3, 1.0, 0, 0.5),
        load=simulate.LoadModel(k=k, d_c=FORCE_LOAD.d_c, F_C=FORCE_LOAD.F_C,
                                b_v=FORCE_LOAD.b_v, v_eps=FORCE_LOAD.v_eps),
        **FORCE_SIM)
    return simulate.generate(cfg)


def concat_states(ds):
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    tq = np.concatenate([tr.torque for tr in ds.trajectories])
    return th, om, tq


def true_forces(ds, truth):
    load = simulate.LoadModel(**truth["load"])
    phys = physics.PhysParams(**truth["phys"])
    th, om, _ = concat_states(ds)
    kin = physics.kinematics(th, om, phys)
    return kin.d, kin.v, load.spring(kin.d), load.friction(kin.v)


# ------------------------------------------------------------ criterion 1

def test_criterion_1_loss_gradient_matches_central_differences():
    t0 = time.time()
    cfg = simulate.SimConfig(dt=5e-4, n_samples=120, substeps=2, seed=3,
                             start_angles=(0.3,),
                             profiles=simulate.default_profiles(
                                 2, 0.6, 1.4, seed=1, duration=0.06),
                             load=simulate.LoadModel(k=300.0))
    ds, _ = simulate.generate(cfg)
    weights = hybrid.error_weights(ds)
    nom = P_TRUE.as_dict()
    worst = 0.0
    for n_steps in (1, 5):
        picks = hybrid.all_windows(ds, n_steps)[:6]
        batch = hybrid.gather_batch(ds, picks, n_steps)
        for seed in range(5):
            tc = optimize.TrainConfig(trainable=hybrid.PHYS_NAMES, seed=seed,
                                      init_band=0.3, jitter_band=0.0,
                                      n_hidden=8)
            model = optimize.init_model(ds, tc)
            point = {"p:" + n: getattr(model.phys, n) / nom[n]
                     for n in hybrid.PHYS_NAMES}
            for key in hybrid.NET_KEYS:
                point["net:" + key] = getattr(model.net, key).copy()

            def fn(tape, pt):
                m = optimize.copy_model(model)
                for key in hybrid.NET_KEYS:
                    setattr(m.net, key, np.asarray(pt["net:" + key]))
                values = {n: pt["p:" + n] * nom[n] for n in hybrid.PHYS_NAMES}
                pn = hybrid.phys_nodes(tape, values, hybrid.PHYS_NAMES, nom)
                heads = hybrid.model_heads_taped(tape, m)
                value = hybrid.build_window_loss(tape, pn, heads, batch,
                                                 ds.dt, weights)
                assert value is not None, "guarded rollout in gradcheck"
                return value

            report = check_gradient(fn, point, eps=1e-6)
            worst = max(worst, report.max_rel_error)
    elapsed = time.time() - t0
    assert worst < 1e-5, "worst AD-vs-FD rel error %.3e" % worst
    assert elapsed < 60.0, "gradient check took %.1f s" % elapsed


# ------------------------------------------------------------ criterion 2

def test_criterion_2_forward_dynamics_matches_lagrangian_oracle():
    rng = np.random.default_rng(11)
    th = rng.uniform(-2 * np.pi, 2 * np.pi, 1000)
    om = rng.uniform(-60.0, 60.0, 1000)
    T = rng.uniform(-3.0, 3.0, 1000)
    F = rng.uniform(-120.0, 120.0, 1000)
    ref = oracles.lagrangian_omega_dot(th, om, T, F, P_TRUE)
    _, got = physics.forward_dynamics(th, om, T, F, P_TRUE)
    rel = np.abs(got - ref) / np.maximum(1.0, np.abs(ref))
    assert rel.max() < 1e-8, "worst rel err %.3e" % rel.max()

    # undriven, undamped flow must conserve mechanical energy
    p0 = P_TRUE.replace(B_m=0.0)

    def f(x):
        _, od = physics.forward_dynamics(x[0], x[1], 0.0, 0.0, p0)
        return np.array([x[1], float(od)])

    traj = oracles.rk4_reference(f, [0.3, 15.0], 1e-4, 2000)
    e = physics.mechanical_energy(traj[:, 0], traj[:, 1], p0)
    drift = np.max(np.abs(e - e[0])) / abs(e[0])
    assert drift < 1e-6, "energy drift %.3e" % drift


# ------------------------------------------------------------ criterion 3

@pytest.fixture(scope="module")
def recovery_runs():
    """Ten seeded recoveries of (m3, J1, B_m) from +/-50% random starts."""
    cfg = simulate.SimConfig(profiles=simulate.default_profiles(
        **RECOVERY_PROFILES), load=RECOVERY_LOAD, **RECOVERY_SIM)
    ds, truth = simulate.generate(cfg)
    errors = []
    t0 = time.time()
    for seed in range(10):
        fit = optimize.train(ds, RECOVERY_TRAIN.replace(seed=seed))
        errors.append({n: 100.0 * (fit.model.phys.as_dict()[n]
                                   / truth["phys"][n] - 1.0)
                       for n in RECOVERY_TRAIN.trainable})
    return {"errors": errors, "elapsed": time.time() - t0}


def test_criterion_3_recovers_m3_J1_Bm_from_random_starts(recovery_runs):
    errors, elapsed = recovery_runs["errors"], recovery_runs["elapsed"]
    hits = sum(all(abs(e[n]) < 5.0 for n in ("m3", "J1", "B_m"))
               for e in errors)
    assert hits >= 9, "only %d/10 runs inside 5%%: %s" % (hits, errors)
    assert elapsed <= 1800.0, "recovery study took %.0f s" % elapsed


# ------------------------------------------------------------ criterion 4

DEGENERATE_TRAIN = RECOVERY_TRAIN.replace(trainable=("l1", "m3", "J1", "B_m"))
DEGENERATE_NOISE = 1e-4  # rad of encoder noise; omega re-derived by gradient


@pytest.fixture(scope="module")
def degenerate_runs():
    """Joint (l1, m3) recovery on noisy data; per-seed noise realizations."""
    fits, errors = [], []
    for seed in range(10):
        cfg = simulate.SimConfig(profiles=simulate.default_profiles(
            **RECOVERY_PROFILES), load=RECOVERY_LOAD, seed=seed,
            noise_sigma=DEGENERATE_NOISE, **RECOVERY_SIM)
        ds, truth = simulate.generate(cfg)
        fit = optimize.train(ds, DEGENERATE_TRAIN.replace(seed=seed))
        errors.append({n: 100.0 * (fit.model.phys.as_dict()[n]
                                   / truth["phys"][n] - 1.0)
                       for n in DEGENERATE_TRAIN.trainable})
        if seed == 0:
            fits.append((fit, ds))
    return {"errors": errors, "probe": fits[0]}


def test_criterion_4_l1_m3_degeneracy_spreads_and_correlates(
        recovery_runs, degenerate_runs):
    spread3 = np.ptp([e["m3"] for e in recovery_runs["errors"]])
    for name in ("l1", "m3"):
        spread = np.ptp([e[name] for e in degenerate_runs["errors"]])
        assert spread >= 3.0 * spread3, (
            "%s spread %.2f pp < 3x criterion-3 m3 spread %.2f pp"
            % (name, spread, spread3))

    fit, ds = degenerate_runs["probe"]
    sm = identify.sensitivity_matrix(fit.model, ds)
    q = identify.correlation_matrix(sm)
    coupled = abs(q.entry("l1", "m3"))
    force_max = max(abs(q.entry("F", n)) for n in hybrid.PHYS_NAMES
                    if n in sm.features)
    assert coupled > force_max, (
        "|Q(l1,m3)| %.3f not above max |Q(F,p)| %.3f" % (coupled, force_max))


# ------------------------------------------------------------ criterion 5

@pytest.fixture(scope="module")
def force_recovery():
    """Single-head fit plus head-averaged decompositions, spring on and off."""
    out = {}
    ds, truth = force_dataset(FORCE_LOAD.k)
    fit = optimize.train(ds, FORCE_TRAIN.replace(seed=0))
    out["single"] = simulate.force_comparison(fit.model, ds, truth)

    for key, k in (("spring", FORCE_LOAD.k), ("no_spring", 0.0)):
        dsk, truthk = (ds, truth) if k else force_dataset(0.0)
        dk, vk, springk, frictionk = true_forces(dsk, truthk)
        th, om, tq = concat_states(dsk)
        zc_runs, znc_runs = [], []
        for seed in range(FORCE_SEEDS):
            cfgk = FORCE_TRAIN.replace(seed=seed, decomposed=True,
                                       reg_c=1e-6)
            fitk = optimize.train(dsk, cfgk)
            zc, znc = hybrid.force_parts(fitk.model, th, om, tq)[1]
            zc_runs.append(zc)
            znc_runs.append(znc)
        v0 = 0.1 * np.percentile(np.abs(vk), 90)
        out[key] = {
            "d": dk, "v": vk, "v0": v0, "spring": springk,
            "friction": frictionk,
            "zc": np.mean(zc_runs, axis=0),
            "znc": np.mean(znc_runs, axis=0),
        }
    return out


def test_criterion_5_recovered_force_law_and_decomposition(force_recovery):
    # single head: net output tracks the injected F(d, v) over the data
    single = force_recovery["single"]
    assert single["rmse_over_range"] < 0.10, (
        "single-head force RMSE %.1f%% of range"
        % (100 * single["rmse_over_range"]))

    # decomposed: position head carries the spring, velocity head flips sign
    dec = force_recovery["spring"]
    full_scale = np.ptp(dec["spring"])
    rmse_c = np.sqrt(np.mean((dec["zc"] - dec["spring"]) ** 2))
    assert rmse_c < 0.10 * full_scale, (
        "eta_c misses the spring by %.2f N (full scale %.2f N)"
        % (rmse_c, full_scale))
    fwd = dec["znc"][dec["v"] > dec["v0"]].mean()
    bwd = dec["znc"][dec["v"] < -dec["v0"]].mean()
    assert fwd > 0.0 > bwd, "eta_nc does not flip sign: %+.2f / %+.2f" % (fwd, bwd)

    # spring removed: the position head decays to the residual leakage level
    non = force_recovery["no_spring"]
    gate = 0.10 * np.mean(np.abs(non["friction"]))
    level = np.mean(np.abs(non["zc"]))
    assert level < gate, (
        "spring-free |eta_c| %.3f N above 10%% of friction %.3f N"
        % (level, gate))


# ------------------------------------------------------------ criterion 6

ABLATION_SIM = dict(dt=5e-4, n_samples=400, substeps=10)
ABLATION_TRAIN = optimize.TrainConfig(trainable=("m3", "J1", "B_m"),
                                      epochs=100, lr=1e-3, jitter_band=0.0)


@pytest.fixture(scope="module")
def ablation_study():
    cfg = simulate.SimConfig(profiles=simulate.default_profiles(
        8, 0.5, 2.0, seed=0, duration=0.2), load=RECOVERY_LOAD,
        start_angles=(0.3,), **ABLATION_SIM)
    ds, _ = simulate.generate(cfg)
    return optimize.ablate_inputs(ds, ABLATION_TRAIN, maps=ABLATION_MAPS)


def test_criterion_6_dv_input_map_wins_loocv(ablation_study):
    results = ablation_study
    best = results["dv"]
    for name in ABLATION_MAPS[1:]:
        other = results[name]
        assert best.median < other.median, (
            "median RMSE dv %.4f not below %s %.4f"
            % (best.median, name, other.median))
        wins = sum(b.rmse < o.rmse
                   for b, o in zip(best.folds, other.folds))
        frac = wins / len(best.folds)
        assert frac >= 0.8, (
            "dv beats %s on only %d/%d folds" % (name, wins, len(best.folds)))


# -------------------------------------------------------- criteria 7 and 8

SWEEP_N_VALUES = (1, 8, 64)


@pytest.fixture(scope="module")
def window_sweep():
    make = lambda seed: simulate.SimConfig(
        profiles=simulate.default_profiles(8, 0.5, 2.0, seed=seed,
                                           duration=0.2),
        load=RECOVERY_LOAD, start_angles=(0.3,), **ABLATION_SIM)
    train_ds, _ = simulate.generate(make(0))
    test_ds, _ = simulate.generate(make(500))
    cfg = ABLATION_TRAIN.replace(epochs=150)
    return optimize.sweep_n(train_ds, test_ds, cfg,
                            n_values=SWEEP_N_VALUES, epochs_recurrent=12)


def test_criterion_7_long_window_fine_tune_beats_feedforward(window_sweep):
    by_n = {rec["n_window"]: rec for rec in window_sweep}
    base, deep = by_n[1]["rmse_median"], by_n[64]["rmse_median"]
    assert deep < base, (
        "held-out RMSE N=64 %.4f not below N=1 %.4f" % (deep, base))


def test_criterion_8_epoch_time_grows_with_window_length(window_sweep):
    times = [rec["epoch_seconds"] for rec in window_sweep]
    assert times[0] < times[1] < times[2], (
        "per-epoch seconds not increasing across N=1,8,64: %s" % (times,))


# ------------------------------------------------------------ criterion 9

def _cli_config(path):
    cfg = {
        "simulate": {
            "dt": 5e-4, "n_samples": 80, "substeps": 2, "seed": 3,
            "start_angles": [0.3],
            "profiles": {"n": 2, "amp_lo": 0.6, "amp_hi": 1.4, "seed": 1},
            "load": {"k": 300.0},
        },
        "model": {},
        "train": {"epochs": 2, "minibatch": 60, "seed": 5},
        "analysis": {"n_values": [1, 2], "epochs_recurrent": 1,
                     "maps": ["dv", "T"]},
    }
    with open(path, "w") as fh:
        json.dump(cfg, fh)
    return str(path)


def _dir_bytes(path):
    out = {}
    for root, _, files in os.walk(path):
        for name in files:
            if name == "timings.json":  # wall time may differ between runs
                continue
            full = os.path.join(root, name)
            with open(full, "rb") as fh:
                out[os.path.relpath(full, path)] = fh.read()
    return out


def test_criterion_9_cli_outputs_are_byte_deterministic(tmp_path):
    cfgp = _cli_config(tmp_path / "config.json")
    data = str(tmp_path / "data")
    assert cli.main(["simulate", "--config", cfgp, "--out", data]) == 0
    model = str(tmp_path / "model")
    assert cli.main(["train", "--config", cfgp, "--data", data,
                     "--out", model]) == 0
    model_file = os.path.join(model, "model.json")

    runs = [
        ("simulate", []),
        ("train", ["--data", data]),
        ("loocv", ["--data", data]),
        ("sweep-n", ["--data", data, "--test-data", data]),
        ("ablate-inputs", ["--data", data]),
        ("decompose", ["--data", data]),
        ("sensitivity", ["--data", data, "--model", model_file]),
        ("verify-force", ["--data", data, "--model", model_file]),
    ]
    for command, extra in runs:
        seen = []
        for tag in ("a", "b"):
            out = str(tmp_path / ("%s_%s" % (command, tag)))
            rc = cli.main([command, "--config", cfgp, "--out", out] + extra)
            assert rc == 0, "%s run %s exited %d" % (command, tag, rc)
            seen.append(_dir_bytes(out))
        assert seen[0] == seen[1], "%s rerun differed" % command
