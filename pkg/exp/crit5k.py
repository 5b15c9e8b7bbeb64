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
    load = simulate.LoadModel(k=k, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = mirrored_profiles(3, 0.3, 1.0, 0, 0.3)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=5e-4,
                             n_samples=600, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    return simulate.generate(cfg)

def heads_on_samples(model, ds):
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    tq = np.concatenate([tr.torque for tr in ds.trajectories])
    _, parts = hybrid.force_parts(model, th, om, tq)
    return parts

for k in (400.0, 0.0):
    ds, truth = make(k)
    load = simulate.LoadModel(**truth["load"])
    phys = physics.PhysParams(**truth["phys"])
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring = np.where(d < load.d_c, load.k * (load.d_c - d), 0.0)
    fric = load.F_C * np.tanh(v / load.v_eps) + load.b_v * v
    zc_all, znc_all = [], []
    for seed in range(6):
        tc = optimize.TrainConfig(seed=seed, epochs=500, lr=1e-3,
                                  trainable=(), jitter_band=0.0,
                                  decomposed=True, reg_c=1e-6)
        t0 = time.time()
        fit = optimize.train(ds, tc)
        zc, znc = heads_on_samples(fit.model, ds)
        zc_all.append(zc)
        znc_all.append(znc)
        e = np.sqrt(np.mean((zc - spring) ** 2))
        print(f"k{k:.0f} seed {seed} {time.time()-t0:4.0f}s "
              f"loss {fit.loss_history[-1]:.2e}  rmse_c {e:.3f} N "
              f"mean|zc| {np.mean(np.abs(zc)):.3f}", flush=True)
    tcj = optimize.TrainConfig(seed=0, epochs=500, lr=1e-3, jitter_band=0.0,
                               decomposed=True, reg_c=1e-6)
    fitj = optimize.train(ds, tcj)
    drift = {n: 100.0 * (fitj.model.phys.as_dict()[n] / truth["phys"][n] - 1.0)
             for n in ("m3", "J1", "B_m")}
    print(f"k{k:.0f} joint-p drift: "
          + "  ".join(f"{n} {e:+.1f}%" for n, e in drift.items()), flush=True)
    zc_avg = np.mean(zc_all, axis=0)
    znc_avg = np.mean(znc_all, axis=0)
    FS = np.ptp(spring)
    v0 = 0.1 * np.percentile(np.abs(v), 90)
    print(f"k{k:.0f} AVG: rmse_c {np.sqrt(np.mean((zc_avg-spring)**2)):.3f} N"
          + (f"  /FS {100*np.sqrt(np.mean((zc_avg-spring)**2))/FS:.2f}%"
             if FS > 0 else "")
          + f"  mean|zc_avg| {np.mean(np.abs(zc_avg)):.3f}"
          f"  (gate {0.1*np.mean(np.abs(fric)):.3f})"
          f"  znc_avg(+v) {znc_avg[v > v0].mean():+.3f}"
          f"  znc_avg(-v) {znc_avg[v < -v0].mean():+.3f}", flush=True)
