"""Training validation of the light-friction wide-coverage force dataset."""
import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import hybrid, optimize, physics, simulate
sys.path.insert(0, "exp")
from crit5o import mirrored_profiles

def make(k):
    load = simulate.LoadModel(k=k, d_c=0.05, F_C=1.25, b_v=0.5, v_eps=0.03)
    prof = mirrored_profiles(5, 0.3, 1.0, 0, 0.5)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=5e-4,
                             n_samples=1000, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    return simulate.generate(cfg)

def states(ds):
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    tq = np.concatenate([tr.torque for tr in ds.trajectories])
    return th, om, tq

for k in (400.0, 0.0):
    ds, truth = make(k)
    load = simulate.LoadModel(**truth["load"])
    phys = physics.PhysParams(**truth["phys"])
    th, om, tq = states(ds)
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring, fric = load.spring(d), load.friction(v)
    FS = np.ptp(spring)
    gate_c = 0.1 * np.mean(np.abs(fric))
    v0 = 0.1 * np.percentile(np.abs(v), 90)
    n_windows = sum(len(tr) - 1 for tr in ds.trajectories)
    print(f"--- k{k:.0f}: FS {FS:.2f}  mean|fric| {np.mean(np.abs(fric)):.3f} "
          f"(gateC {gate_c:.3f})  B {n_windows}", flush=True)

    if k:
        t0 = time.time()
        fit = optimize.train(ds, optimize.TrainConfig(
            seed=0, epochs=500, lr=1e-3, trainable=(), jitter_band=0.0))
        cmp = simulate.force_comparison(fit.model, ds, truth)
        print(f"single e500 {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e}"
              f" rmse/range {100*cmp['rmse_over_range']:.2f}%", flush=True)

    zcs, zncs = [], []
    for seed in range(3):
        tc = optimize.TrainConfig(seed=seed, epochs=500, lr=1e-3, trainable=(),
                                  jitter_band=0.0, decomposed=True, reg_c=1e-6)
        t0 = time.time()
        fit = optimize.train(ds, tc)
        zc, znc = hybrid.force_parts(fit.model, th, om, tq)[1]
        zcs.append(zc)
        zncs.append(znc)
        rc = np.sqrt(np.mean((zc - spring) ** 2))
        msg = f"/FS {100*rc/FS:.2f}%" if FS else f"mean|zc| {np.mean(np.abs(zc)):.3f}"
        print(f"decomp s{seed} e500 {time.time()-t0:4.0f}s "
              f"loss {fit.loss_history[-1]:.2e} rmse_c {rc:.3f} {msg} "
              f"znc {znc[v>v0].mean():+.2f}/{znc[v<-v0].mean():+.2f}", flush=True)
    zca, znca = np.mean(zcs, axis=0), np.mean(zncs, axis=0)
    rc = np.sqrt(np.mean((zca - spring) ** 2))
    msg = f"/FS {100*rc/FS:.2f}%" if FS else f"mean|zc| {np.mean(np.abs(zca)):.3f}"
    print(f"3-seed avg: rmse_c {rc:.3f} {msg} "
          f"znc {znca[v>v0].mean():+.2f}/{znca[v<-v0].mean():+.2f}", flush=True)

# full-batch trend on the spring set, seed 0
ds, truth = make(400.0)
load = simulate.LoadModel(**truth["load"])
phys = physics.PhysParams(**truth["phys"])
th, om, tq = states(ds)
kin = physics.kinematics(th, om, phys)
spring = load.spring(kin.d)
FS = np.ptp(spring)
n_windows = sum(len(tr) - 1 for tr in ds.trajectories)
model = None
tcf = optimize.TrainConfig(seed=0, epochs=250, lr=1e-3, trainable=(),
                           jitter_band=0.0, decomposed=True, reg_c=1e-6,
                           minibatch=n_windows)
total = 0
for block in range(6):
    t0 = time.time()
    fit = optimize.train(ds, tcf, model=model)
    model = fit.model
    total += tcf.epochs
    zc, znc = hybrid.force_parts(model, th, om, tq)[1]
    rc = np.sqrt(np.mean((zc - spring) ** 2))
    print(f"full e{total:4d} {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e}"
          f" rmse_c {rc:.3f} /FS {100*rc/FS:.2f}%", flush=True)
