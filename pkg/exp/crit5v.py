"""Always-engaged linear spring: floors, coverage, and two-stage training."""
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

def make(k, dt, n_samples, amp_lo=0.3, amp_hi=1.0):
    load = simulate.LoadModel(k=k, d_c=0.10, F_C=1.25, b_v=0.5, v_eps=0.03)
    prof = mirrored_profiles(5, amp_lo, amp_hi, 0, 0.5)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=dt,
                             n_samples=n_samples, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    return simulate.generate(cfg)

def parts(ds, truth):
    load = simulate.LoadModel(**truth["load"])
    phys = physics.PhysParams(**truth["phys"])
    th = np.concatenate([tr.theta[:-1] for tr in ds.trajectories])
    om = np.concatenate([tr.omega[:-1] for tr in ds.trajectories])
    tq = np.concatenate([tr.torque[:-1] for tr in ds.trajectories])
    om1 = np.concatenate([tr.omega[1:] for tr in ds.trajectories])
    kin = physics.kinematics(th, om, phys)
    _, a0 = physics.forward_dynamics(th, om, tq, np.zeros_like(th), phys)
    _, a1 = physics.forward_dynamics(th, om, tq, np.ones_like(th), phys)
    gain = a1 - a0
    z_req = ((om1 - om) / ds.dt - a0) / gain
    return kin.d, kin.v, load.spring(kin.d), load.friction(kin.v), z_req, gain

def floor(tag, k, dt, n_samples):
    ds, truth = make(k, dt, n_samples)
    d, v, spring, fric, z_req, gain = parts(ds, truth)
    ghost = z_req - spring - fric
    nb = 40
    edges = np.linspace(d.min(), d.max() + 1e-12, nb + 1)
    idx = np.clip(np.digitize(d, edges) - 1, 0, nb - 1)
    cnt = np.bincount(idx, minlength=nb)
    bm = lambda x: np.bincount(idx, weights=x, minlength=nb) / np.maximum(cnt, 1)
    FS = np.ptp(spring) if k else 1.0
    fl = np.sqrt(np.mean((bm(z_req)[idx] - spring) ** 2))
    fp = np.sqrt(np.mean(bm(fric)[idx] ** 2))
    gp = np.sqrt(np.mean(bm(ghost)[idx] ** 2))
    print(f"{tag:22s} FS {np.ptp(spring):5.1f} d[{d.min():.4f},{d.max():.4f}] "
          f"floor {100*fl/FS:5.2f}% fric {100*fp/FS:5.2f}% ghost {100*gp/FS:5.2f}% "
          f"gain p5 {np.percentile(np.abs(gain),5):4.1f} "
          f"mean|fric| {np.mean(np.abs(fric)):.3f}", flush=True)

floor("k400 dt5e-4 L1000", 400.0, 5e-4, 1000)
floor("k400 dt1e-3 L500", 400.0, 1e-3, 500)
floor("k0   dt5e-4 L1000", 0.0, 5e-4, 1000)

for k, dt, L in ((400.0, 5e-4, 1000), (0.0, 5e-4, 1000)):
    ds, truth = make(k, dt, L)
    d, v, spring, fric, z_req, gain = parts(ds, truth)
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    tq = np.concatenate([tr.torque for tr in ds.trajectories])
    FS = np.ptp(spring)
    gate_c = 0.1 * np.mean(np.abs(fric))
    v0 = 0.1 * np.percentile(np.abs(v), 90)
    n_windows = sum(len(tr) - 1 for tr in ds.trajectories)
    kin_all = physics.kinematics(th, om, physics.PhysParams(**truth["phys"]))
    load = simulate.LoadModel(**truth["load"])
    spr_all = load.spring(kin_all.d)

    if k:
        t0 = time.time()
        fit = optimize.train(ds, optimize.TrainConfig(
            seed=0, epochs=500, lr=1e-3, trainable=(), jitter_band=0.0))
        cmp = simulate.force_comparison(fit.model, ds, truth)
        print(f"k{k:.0f} single e500 {time.time()-t0:4.0f}s "
              f"rmse/range {100*cmp['rmse_over_range']:.2f}%", flush=True)

    tc = optimize.TrainConfig(seed=0, epochs=500, lr=1e-3, trainable=(),
                              jitter_band=0.0, decomposed=True, reg_c=1e-6)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    model = fit.model

    def report(tag, t0, loss):
        zc, znc = hybrid.force_parts(model, th, om, tq)[1]
        rc = np.sqrt(np.mean((zc - spr_all) ** 2))
        msg = f"/FS {100*rc/FS:.2f}%" if FS else f"(gateC {gate_c:.3f})"
        print(f"k{k:.0f} {tag} {time.time()-t0:4.0f}s loss {loss:.2e} "
              f"rmse_c {rc:.3f} {msg} mean|zc-spr| {np.mean(np.abs(zc-spr_all)):.3f} "
              f"znc {znc[kin_all.v>v0].mean():+.2f}/{znc[kin_all.v<-v0].mean():+.2f}",
              flush=True)

    report("mb  e 500", t0, fit.loss_history[-1])
    tcf = tc.replace(epochs=500, minibatch=n_windows)
    total = 500
    for block in range(4):
        t0 = time.time()
        fit = optimize.train(ds, tcf, model=model)
        model = fit.model
        total += tcf.epochs
        report(f"full e{total:4d}", t0, fit.loss_history[-1])
