"""Two-stage training: minibatch fit convergence, full-batch gauge drain."""
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
    load = simulate.LoadModel(k=k, d_c=0.05, F_C=1.25, b_v=0.5, v_eps=0.03)
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
    v = kin.v
    spring = load.spring(kin.d)
    FS = np.ptp(spring)
    v0 = 0.1 * np.percentile(np.abs(v), 90)
    n_windows = sum(len(tr) - 1 for tr in ds.trajectories)

    tc = optimize.TrainConfig(seed=0, epochs=500, lr=1e-3, trainable=(),
                              jitter_band=0.0, decomposed=True, reg_c=1e-6)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    model = fit.model

    def report(tag, t0, loss):
        zc, znc = hybrid.force_parts(model, th, om, tq)[1]
        rc = np.sqrt(np.mean((zc - spring) ** 2))
        msg = f"/FS {100*rc/FS:.2f}%" if FS else ""
        print(f"k{k:.0f} {tag} {time.time()-t0:4.0f}s loss {loss:.2e} "
              f"rmse_c {rc:.3f} {msg} mean|zc| {np.mean(np.abs(zc)):.3f} "
              f"znc {znc[v>v0].mean():+.2f}/{znc[v<-v0].mean():+.2f}", flush=True)

    report("mb  e 500", t0, fit.loss_history[-1])
    tcf = tc.replace(epochs=250, minibatch=n_windows)
    total = 500
    for block in range(8):
        t0 = time.time()
        fit = optimize.train(ds, tcf, model=model)
        model = fit.model
        total += tcf.epochs
        report(f"full e{total:4d}", t0, fit.loss_history[-1])
