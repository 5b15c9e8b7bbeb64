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

def make(k, dt, L):
    load = simulate.LoadModel(k=k, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = mirrored_profiles(3, 0.3, 1.0, 0, 0.3)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=dt,
                             n_samples=L, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    return simulate.generate(cfg)

def states(ds):
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    tq = np.concatenate([tr.torque for tr in ds.trajectories])
    return th, om, tq

for k, dt, L, n_seeds in ((400.0, 2e-4, 1500, 6), (0.0, 2e-4, 1500, 6)):
    ds, truth = make(k, dt, L)
    load = simulate.LoadModel(**truth["load"])
    phys = physics.PhysParams(**truth["phys"])
    th, om, tq = states(ds)
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring = np.where(d < load.d_c, load.k * (load.d_c - d), 0.0)
    fric = load.F_C * np.tanh(v / load.v_eps) + load.b_v * v
    FS = np.ptp(spring)
    v0 = 0.1 * np.percentile(np.abs(v), 90)
    zc_all, znc_all = [], []
    for seed in range(n_seeds):
        tc = optimize.TrainConfig(seed=seed, epochs=500, lr=1e-3,
                                  trainable=(), jitter_band=0.0,
                                  decomposed=True, reg_c=1e-6)
        t0 = time.time()
        fit = optimize.train(ds, tc)
        zc, znc = hybrid.force_parts(fit.model, th, om, tq)[1]
        zc_all.append(zc)
        znc_all.append(znc)
        msg = f"  /FS {100*np.sqrt(np.mean((zc-spring)**2))/FS:.2f}%" if FS else ""
        print(f"dt{dt:g} k{k:.0f} seed {seed} {time.time()-t0:4.0f}s "
              f"loss {fit.loss_history[-1]:.2e} "
              f"rmse_c {np.sqrt(np.mean((zc-spring)**2)):.3f}{msg} "
              f"mean|zc| {np.mean(np.abs(zc)):.3f} "
              f"znc {znc[v>v0].mean():+.2f}/{znc[v<-v0].mean():+.2f}", flush=True)
    zc_avg = np.mean(zc_all, axis=0)
    znc_avg = np.mean(znc_all, axis=0)
    rc = np.sqrt(np.mean((zc_avg - spring) ** 2))
    print(f"dt{dt:g} k{k:.0f} AVG: rmse_c {rc:.3f} N"
          + (f"  /FS {100*rc/FS:.2f}%" if FS else "")
          + f"  mean|zc_avg| {np.mean(np.abs(zc_avg)):.3f}"
          f"  (10%fric gate {0.1*np.mean(np.abs(fric)):.3f})"
          f"  znc_avg {znc_avg[v>v0].mean():+.3f}/{znc_avg[v<-v0].mean():+.3f}",
          flush=True)
