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

ds, truth = make(400.0, 3e-4, 1000)
load = simulate.LoadModel(**truth["load"])
phys = physics.PhysParams(**truth["phys"])

for epochs in (500, 1500):
    tc = optimize.TrainConfig(seed=0, epochs=epochs, lr=1e-3, jitter_band=0.0,
                              decomposed=True, reg_c=1e-6)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    cmp = simulate.force_comparison(fit.model, ds, truth)
    print(f"e{epochs} {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e} "
          f"rmse/range {100*cmp['rmse_over_range']:.2f}% "
          f"rmse_c/FS {100*cmp['rmse_c_over_full_scale']:.2f}% "
          f"znc {cmp['mean_znc_forward']:+.2f}/{cmp['mean_znc_backward']:+.2f}",
          flush=True)

    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    tq = np.concatenate([tr.torque for tr in ds.trajectories])
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring = np.where(d < load.d_c, load.k * (load.d_c - d), 0.0)
    fric = load.F_C * np.tanh(v / load.v_eps) + load.b_v * v
    _, parts = hybrid.force_parts(fit.model, th, om, tq)
    zc, znc = parts
    bins = np.linspace(d.min(), d.max(), 13)
    idx = np.digitize(d, bins) - 1
    print("   d-bin    n     spring   zc-spr   E[fric|d]  E[znc|d]")
    for b in range(12):
        m = idx == b
        if m.sum() == 0:
            continue
        print(f"   {bins[b]:.4f} {m.sum():5d}  {spring[m].mean():+8.2f} "
              f"{(zc - spring)[m].mean():+8.2f}  {fric[m].mean():+8.2f} "
              f"{znc[m].mean():+8.2f}", flush=True)
    w = np.bincount(idx, minlength=12).astype(float)
    resid = np.array([((zc - spring)[idx == b].mean() if (idx == b).any() else 0.0)
                      for b in range(12)])
    print(f"   occupancy-weighted |E[zc-spr|d]| rms "
          f"{np.sqrt((w * resid**2).sum() / w.sum()):.3f} N", flush=True)
