"""Candidate freeze: always-engaged linear spring, full-strength friction."""
import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import hybrid, optimize, physics, simulate

def mirrored_profiles(n, lo, hi, seed, duration):
    out = []
    for pr in simulate.default_profiles(n, lo, hi, seed, duration):
        out.append(pr)
        out.append(simulate.TorqueProfile(kind=pr.kind, amplitude=-pr.amplitude,
                                          seed=pr.seed, duration=pr.duration))
    return out

def make(k):
    load = simulate.LoadModel(k=k, d_c=0.10, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = mirrored_profiles(5, 0.3, 1.0, 0, 0.5)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=5e-4,
                             n_samples=1000, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    return simulate.generate(cfg)

for k in (400.0, 0.0):
    ds, truth = make(k)
    load = simulate.LoadModel(**truth["load"])
    phys = physics.PhysParams(**truth["phys"])
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    tq = np.concatenate([tr.torque for tr in ds.trajectories])
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring, fric = load.spring(d), load.friction(v)
    FS = np.ptp(spring)
    gate_c = 0.1 * np.mean(np.abs(fric))
    v0 = 0.1 * np.percentile(np.abs(v), 90)
    print(f"--- k{k:.0f}: FS {FS:.2f} d[{d.min():.4f},{d.max():.4f}] "
          f"gateC {gate_c:.3f} |om|p90 {np.percentile(np.abs(om),90):.1f}",
          flush=True)

    if k:
        t0 = time.time()
        fit = optimize.train(ds, optimize.TrainConfig(
            seed=0, epochs=500, lr=1e-3, trainable=(), jitter_band=0.0))
        cmp = simulate.force_comparison(fit.model, ds, truth)
        print(f"single e500 {time.time()-t0:4.0f}s "
              f"rmse/range {100*cmp['rmse_over_range']:.2f}%", flush=True)

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
