"""Fit-weight vs reg economics: reg_c=0 control and larger-dt datasets."""
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

def make(k, dt, n_samples):
    load = simulate.LoadModel(k=k, d_c=0.05, F_C=1.25, b_v=0.5, v_eps=0.03)
    prof = mirrored_profiles(5, 0.3, 1.0, 0, 0.5)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=dt,
                             n_samples=n_samples, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    return simulate.generate(cfg)

def study(k, dt, n_samples, reg_c, single=False, seeds=1):
    ds, truth = make(k, dt, n_samples)
    load = simulate.LoadModel(**truth["load"])
    phys = physics.PhysParams(**truth["phys"])
    th = np.concatenate([tr.theta[:-1] for tr in ds.trajectories])
    om = np.concatenate([tr.omega[:-1] for tr in ds.trajectories])
    tq = np.concatenate([tr.torque[:-1] for tr in ds.trajectories])
    om1 = np.concatenate([tr.omega[1:] for tr in ds.trajectories])
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring, fric = load.spring(d), load.friction(v)
    FS = np.ptp(spring)
    v0 = 0.1 * np.percentile(np.abs(v), 90)
    _, a0 = physics.forward_dynamics(th, om, tq, np.zeros_like(th), phys)
    _, a1 = physics.forward_dynamics(th, om, tq, np.ones_like(th), phys)
    gain = a1 - a0
    z_req = ((om1 - om) / dt - a0) / gain
    ghost = z_req - (spring + fric)
    w_med = np.median(dt * dt * gain * gain) / np.var(om)
    print(f"== k{k:.0f} dt{dt:g} L{n_samples} c{reg_c:g}: FS {FS:.2f} "
          f"w_med/c {w_med/max(reg_c, 1e-300):.1f} rms(ghost) "
          f"{np.sqrt(np.mean(ghost**2)):.2f} mean|fric| {np.mean(np.abs(fric)):.3f}",
          flush=True)

    if single:
        t0 = time.time()
        fit = optimize.train(ds, optimize.TrainConfig(
            seed=0, epochs=500, lr=1e-3, trainable=(), jitter_band=0.0))
        cmp = simulate.force_comparison(fit.model, ds, truth)
        print(f"  single e500 {time.time()-t0:4.0f}s "
              f"rmse/range {100*cmp['rmse_over_range']:.2f}%", flush=True)

    for seed in range(seeds):
        tc = optimize.TrainConfig(seed=seed, epochs=500, lr=1e-3, trainable=(),
                                  jitter_band=0.0, decomposed=True, reg_c=reg_c)
        t0 = time.time()
        fit = optimize.train(ds, tc)
        zc, znc = hybrid.force_parts(fit.model, th, om, tq)[1]
        rc = np.sqrt(np.mean((zc - spring) ** 2))
        msg = f"/FS {100*rc/FS:.2f}%" if FS else ""
        print(f"  decomp s{seed} e500 {time.time()-t0:4.0f}s "
              f"loss {fit.loss_history[-1]:.2e} rmse_c {rc:.3f} {msg} "
              f"mean|zc| {np.mean(np.abs(zc)):.3f} "
              f"rms(z-z_req) {np.sqrt(np.mean((zc+znc-z_req)**2)):.3f} "
              f"znc {znc[v>v0].mean():+.2f}/{znc[v<-v0].mean():+.2f}", flush=True)

study(400.0, 5e-4, 1000, 0.0)              # trap control: no reg
study(400.0, 1e-3, 500, 1e-6, single=True)  # fit pressure x4
study(400.0, 2e-3, 250, 1e-6, single=True)  # fit pressure x16
study(0.0, 1e-3, 500, 1e-6)                 # leakage gate at dt 1e-3
study(0.0, 2e-3, 250, 1e-6)                 # leakage gate at dt 2e-3
