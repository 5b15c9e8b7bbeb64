"""Dissect the decomposed stationary point on the light-friction dataset."""
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

load = simulate.LoadModel(k=400.0, d_c=0.05, F_C=1.25, b_v=0.5, v_eps=0.03)
prof = mirrored_profiles(5, 0.3, 1.0, 0, 0.5)
phys = physics.default_params().replace(g=0.0)
cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=5e-4,
                         n_samples=1000, substeps=10,
                         start_angles=(np.pi / 2, -np.pi / 2))
ds, truth = simulate.generate(cfg)

th = np.concatenate([tr.theta[:-1] for tr in ds.trajectories])
om = np.concatenate([tr.omega[:-1] for tr in ds.trajectories])
tq = np.concatenate([tr.torque[:-1] for tr in ds.trajectories])
om1 = np.concatenate([tr.omega[1:] for tr in ds.trajectories])
kin = physics.kinematics(th, om, phys)
d, v = kin.d, kin.v
spring, fric = load.spring(d), load.friction(v)
FS = np.ptp(spring)
_, a0 = physics.forward_dynamics(th, om, tq, np.zeros_like(th), phys)
_, a1 = physics.forward_dynamics(th, om, tq, np.ones_like(th), phys)
gain = a1 - a0
z_req = ((om1 - om) / cfg.dt - a0) / gain

nb = 12
edges = np.linspace(d.min(), d.max() + 1e-12, nb + 1)
idx = np.clip(np.digitize(d, edges) - 1, 0, nb - 1)
cnt = np.bincount(idx, minlength=nb)
bm = lambda x: np.bincount(idx, weights=x, minlength=nb) / np.maximum(cnt, 1)
zc_eq = bm(z_req)

tc = optimize.TrainConfig(seed=0, epochs=500, lr=1e-3, trainable=(),
                          jitter_band=0.0, decomposed=True, reg_c=1e-6)
t0 = time.time()
fit = optimize.train(ds, tc)
model = fit.model

def show(tag):
    zc, znc = hybrid.force_parts(model, th, om, tq)[1]
    rc = np.sqrt(np.mean((zc - spring) ** 2))
    req = np.sqrt(np.mean((zc - zc_eq[idx]) ** 2))
    print(f"{tag}: rmse_c {rc:.3f} /FS {100*rc/FS:.2f}% vs-eq {req:.3f} "
          f"c*mean(znc^2) {1e-6*np.mean(znc**2):.2e} "
          f"rms(z-z_req) {np.sqrt(np.mean((zc+znc-z_req)**2)):.3f}", flush=True)
    return zc, znc

zc, znc = show(f"mb e500 ({time.time()-t0:.0f}s)")
print("bin  d      n     zc-spr   zc-eq    E[znc|d]  spr")
for b in range(nb):
    m = idx == b
    print(f"{b:2d} {edges[b]:.4f} {cnt[b]:6d} {np.mean(zc[m]-spring[m]):+8.3f}"
          f" {np.mean(zc[m])-zc_eq[b]:+8.3f} {np.mean(znc[m]):+8.3f}"
          f" {np.mean(spring[m]):+8.3f}", flush=True)

# escape attempts, each continuing from the current model
n_windows = sum(len(tr) - 1 for tr in ds.trajectories)
for tag, kw in (("mb lr3e-3 e250", dict(epochs=250, lr=3e-3)),
                ("mb lr1e-3 e500 more", dict(epochs=500)),
                ("full lr1e-2 e250", dict(epochs=250, lr=1e-2,
                                          minibatch=n_windows))):
    t0 = time.time()
    fit = optimize.train(ds, tc.replace(**kw), model=model)
    model = fit.model
    zc, znc = show(f"{tag} ({time.time()-t0:.0f}s) loss {fit.loss_history[-1]:.2e}")
