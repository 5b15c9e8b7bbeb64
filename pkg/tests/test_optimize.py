"""Optimizer and training-loop mechanics (fast unit checks only; the
long-horizon recovery studies live in the acceptance suite)."""

import dataclasses

import numpy as np
import pytest

from crankid import data as dataio
from crankid import hybrid, optimize, physics, simulate
from crankid.tape import Tape


def tiny_dataset(n_samples=60, n_profiles=2, seed=7):
    prof = simulate.default_profiles(n=n_profiles, amp_lo=0.5, amp_hi=1.5,
                                     seed=seed, duration=n_samples * 5e-4)
    cfg = simulate.SimConfig(profiles=prof, start_angles=(0.2,),
                             n_samples=n_samples, substeps=4, seed=seed,
                             load=simulate.LoadModel(k=300.0))
    ds, _ = simulate.generate(cfg)
    return ds


# -------------------------------------------------------------------- Adam

def test_adam_zero_gradient_keeps_params():
    adam = optimize.Adam(lr=0.1)
    p = {"a": np.array([1.0, -2.0]), "b": 3.0}
    g = {"a": np.zeros(2), "b": 0.0}
    out = adam.step(p, g)
    assert np.array_equal(out["a"], p["a"]) and out["b"] == 3.0
    # moments stay at zero, so later real gradients see fresh state
    assert np.all(adam.m["a"] == 0.0) and np.all(adam.v["a"] == 0.0)


def test_adam_constant_gradient_step_approaches_lr():
    # with a constant gradient the bias-corrected update tends to lr*sign(g)
    adam = optimize.Adam(lr=1e-3)
    p = {"x": 0.0}
    for _ in range(500):
        prev = p["x"]
        p = adam.step(p, {"x": 4.2})
    assert abs((prev - p["x"]) - 1e-3) < 1e-5


def test_adam_rejects_nonfinite():
    adam = optimize.Adam()
    with pytest.raises(optimize.NonFiniteGradient):
        adam.step({"x": 1.0}, {"x": float("nan")})


def test_adam_hyperparameter_validation():
    with pytest.raises(ValueError):
        optimize.Adam(lr=-1.0)
    with pytest.raises(ValueError):
        optimize.Adam(beta1=1.0)


# ------------------------------------------------------------- TrainConfig

def test_config_validation():
    with pytest.raises(ValueError):
        optimize.TrainConfig(minibatch=0)
    with pytest.raises(ValueError):
        optimize.TrainConfig(init_band=1.0)
    with pytest.raises(ValueError):
        optimize.TrainConfig(lr=-0.1)
    with pytest.raises(ValueError):
        optimize.TrainConfig(trainable=("bogus",))
    # lr=0 is allowed: it must yield a no-op training run
    optimize.TrainConfig(lr=0.0)


def test_init_model_draws_inside_bands():
    ds = tiny_dataset()
    nom = physics.default_params()
    for seed in range(5):
        tc = optimize.TrainConfig(seed=seed, init_band=0.5, jitter_band=0.1)
        model = optimize.init_model(ds, tc)
        for n in tc.trainable:
            ratio = getattr(model.phys, n) / getattr(nom, n)
            assert 0.5 <= ratio <= 1.5
        for n in ("m1", "m2", "l1", "l2"):
            ratio = getattr(model.phys, n) / getattr(nom, n)
            assert 0.9 <= ratio <= 1.1
        assert model.phys.g == nom.g  # gravity is never perturbed


# ---------------------------------------------------------------- training

def test_lr_zero_changes_nothing():
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=1, epochs=2, minibatch=50, lr=0.0)
    model = optimize.init_model(ds, tc)
    w_before = model.net.w_h.copy()
    p_before = model.phys.as_dict()
    fit = optimize.train(ds, tc, model=model)
    assert np.array_equal(fit.model.net.w_h, w_before)
    assert fit.model.phys.as_dict() == p_before


def test_training_is_deterministic():
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=5, epochs=2, minibatch=50)
    fit1 = optimize.train(ds, tc)
    fit2 = optimize.train(ds, tc)
    assert fit1.loss_history == fit2.loss_history
    assert fit1.p_history == fit2.p_history
    assert np.array_equal(fit1.model.net.w_o, fit2.model.net.w_o)


def test_loss_decreases_on_tiny_problem():
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=2, epochs=12, minibatch=118)
    fit = optimize.train(ds, tc)
    assert fit.loss_history[-1] < fit.loss_history[0]


def test_histories_have_expected_lengths():
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=0, epochs=3, minibatch=64)
    fit = optimize.train(ds, tc)
    assert len(fit.loss_history) == 3
    assert len(fit.epoch_seconds) == 3
    for n in tc.trainable:
        assert len(fit.p_history[n]) == 4  # init + one entry per epoch


def test_clamp_box_never_violated():
    ds = tiny_dataset()
    # lr far wider than the box: the first step magnitude is ~lr, so every
    # trainable must leave the box and get pinned to a boundary
    tc = optimize.TrainConfig(seed=4, epochs=2, minibatch=50, lr=2.0,
                              init_band=0.5)
    fit = optimize.train(ds, tc)
    for n in tc.trainable:
        h = np.array(fit.p_history[n])
        assert np.all(h >= 0.5 - 1e-12) and np.all(h <= 1.5 + 1e-12)
        on_edge = np.minimum(np.abs(h[1:] - 0.5), np.abs(h[1:] - 1.5))
        assert np.all(on_edge < 1e-12)


def test_single_step_descends_with_small_lr():
    # one Adam step on one window must reduce that window's loss
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=6)
    nom = physics.default_params().as_dict()
    for lr in (1e-6, 1e-5):
        model = optimize.init_model(ds, tc)
        batch = hybrid.gather_batch(ds, np.array([[0, 10]]), 1)

        def window_loss():
            tape = Tape()
            pn = hybrid.phys_nodes(tape, model.phys.as_dict(), tc.trainable, nom)
            heads = hybrid.model_heads_taped(tape, model)
            val = hybrid.build_window_loss(tape, pn, heads, batch, ds.dt,
                                           model.weights)
            return tape, val

        tape, val = window_loss()
        before = float(val.data)
        grads = tape.backward(val)
        params = {"p:" + n: getattr(model.phys, n) / nom[n] for n in tc.trainable}
        for key in hybrid.NET_KEYS:
            params["net:" + key] = getattr(model.net, key)
        new = optimize.Adam(lr=lr).step(params, grads)
        model.phys = model.phys.replace(
            **{n: new["p:" + n] * nom[n] for n in tc.trainable})
        for key in hybrid.NET_KEYS:
            setattr(model.net, key, new["net:" + key])
        _, val = window_loss()
        assert float(val.data) < before


def test_unequal_lengths_rejected():
    ds = tiny_dataset()
    short = dataio.Trajectory(t=ds.trajectories[0].t[:30],
                              theta=ds.trajectories[0].theta[:30],
                              omega=ds.trajectories[0].omega[:30],
                              torque=ds.trajectories[0].torque[:30],
                              label="short")
    bad = dataio.Dataset([ds.trajectories[0], short], ds.dt, {})
    with pytest.raises(dataio.DataError):
        optimize.train(bad, optimize.TrainConfig(epochs=1))


# -------------------------------------------------------------- evaluation

def test_rmse_multistep_perfect_and_offset():
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=3)
    model = optimize.init_model(ds, tc)
    tr = ds.trajectories[0]
    th, om = hybrid.rollout(model, tr.theta[0], tr.omega[0], tr.torque[:-1])
    self_traj = dataio.Trajectory(
        t=tr.t, theta=np.concatenate([[tr.theta[0]], th]),
        omega=np.concatenate([[tr.omega[0]], om]), torque=tr.torque,
        label="self")
    assert optimize.rmse_multistep(model, self_traj) == 0.0
    om_shift = self_traj.omega + 0.25
    om_shift[0] = self_traj.omega[0]  # same start, so the rollout is unchanged
    shifted = dataio.Trajectory(t=tr.t, theta=self_traj.theta,
                                omega=om_shift, torque=tr.torque,
                                label="shift")
    assert optimize.rmse_multistep(model, shifted) == pytest.approx(0.25)


def test_rmse_multistep_divergence_is_inf():
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=3)
    model = optimize.init_model(ds, tc)
    model.net.b_o = np.array([1e9])  # absurd constant force
    assert optimize.rmse_multistep(model, ds.trajectories[0]) == float("inf")


# ------------------------------------------------------------------- loocv

def test_loocv_two_fold_structure_and_determinism():
    ds = tiny_dataset(n_profiles=2)
    ds = dataio.Dataset(ds.trajectories[:2], ds.dt, ds.meta)
    tc = optimize.TrainConfig(seed=9, epochs=2, minibatch=59)
    res1 = optimize.loocv(ds, tc)
    res2 = optimize.loocv(ds, tc)
    assert len(res1.folds) == 2
    assert [f.label for f in res1.folds] == ["traj_00", "traj_01"]
    assert [f.rmse for f in res1.folds] == [f.rmse for f in res2.folds]
    assert res1.folds[0].seed != res1.folds[1].seed
    assert res1.median == pytest.approx(np.median([f.rmse for f in res1.folds]))


def test_loocv_needs_two_trajectories():
    ds = tiny_dataset()
    solo = dataio.Dataset(ds.trajectories[:1], ds.dt, {})
    with pytest.raises(ValueError):
        optimize.loocv(solo, optimize.TrainConfig(epochs=1))


def test_sweep_requires_baseline():
    ds = tiny_dataset()
    with pytest.raises(ValueError):
        optimize.sweep_n(ds, ds, optimize.TrainConfig(epochs=1), n_values=(8,))


def test_sweep_records_timings_and_rmse():
    ds = tiny_dataset()
    tc = optimize.TrainConfig(seed=1, epochs=2, minibatch=59)
    recs = optimize.sweep_n(ds, ds, tc, n_values=(1, 4), epochs_recurrent=1)
    assert [r["n_window"] for r in recs] == [1, 4]
    for r in recs:
        assert r["epoch_seconds"] > 0
        assert len(r["rmse"]) == len(ds.trajectories)
