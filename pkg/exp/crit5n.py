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

ds, truth = make(400.0)
load = simulate.LoadModel(**truth["load"])
phys = physics.PhysParams(**truth["phys"])
th = np.concatenate([tr.theta for tr in ds.trajectories])
om = np.concatenate([tr.omega for tr in ds.trajectories])
tq = np.concatenate([tr.torque for tr in ds.trajectories])
kin = physics.kinematics(th, om, phys)
d, v = kin.d, kin.v
spring = load.spring(d)            # correct sign: -k max(0, d_c - d)
fric = load.friction(v)
FS = np.ptp(spring)
v0 = 0.1 * np.percentile(np.abs(v), 90)
n_windows = sum(len(tr) - 1 for tr in ds.trajectories)
print(f"FS {FS:.2f} N  rms(spring) {np.sqrt(np.mean(spring**2)):.2f} N  "
      f"d [{d.min():.4f}, {d.max():.4f}]  B {n_windows}", flush=True)

def report(tag, t0, fit):
    zc, znc = hybrid.force_parts(fit.model, th, om, tq)[1]
    rc = np.sqrt(np.mean((zc - spring) ** 2))
    rf = np.sqrt(np.mean((zc + spring) ** 2))   # old flipped metric
    print(f"{tag} {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e} "
          f"rmse_c {rc:.3f} /FS {100*rc/FS:.2f}% (flipped {100*rf/FS:.2f}%) "
          f"znc {znc[v>v0].mean():+.2f}/{znc[v<-v0].mean():+.2f}", flush=True)

# acceptance candidate: default minibatch, fixed p, 3 seeds
for seed in range(3):
    tc = optimize.TrainConfig(seed=seed, epochs=500, lr=1e-3, trainable=(),
                              jitter_band=0.0, decomposed=True, reg_c=1e-6)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    report(f"mb200 e500 s{seed}", t0, fit)

# full-batch trend, seed 0
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
    report(f"full  e{total:4d} s0", t0, fit)
