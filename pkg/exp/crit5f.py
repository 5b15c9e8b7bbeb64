import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import optimize, physics, simulate

# horizontal-plane rig (no gravity torque) + torque-sign-paired profiles and
# mirrored start angles: every trajectory has an exact mirror partner with
# the same d(t) and opposite v(t), so no friction can hide in a d-only head
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

# quick symmetry audit before any training
ds, truth = make(400.0)
p = physics.PhysParams(**truth["phys"])
load = simulate.LoadModel(**truth["load"])
th = np.concatenate([tr.theta for tr in ds.trajectories])
om = np.concatenate([tr.omega for tr in ds.trajectories])
fr = physics.kinematics(th, om, p)
fric = load.friction(fr.v)
bins = np.linspace(fr.d.min(), fr.d.max(), 31)
idx = np.digitize(fr.d, bins) - 1
cond = np.array([fric[idx == b].mean() if np.any(idx == b) else 0.0
                 for b in range(30)])
print("E[fric|d] rms %.4f N  var_om %.1f  fit/reg %.1fx"
      % (np.sqrt(np.mean(cond ** 2)), om.var(),
         (5e-4 * 15) ** 2 / om.var() / 1e-6), flush=True)

for tag, k, decomposed, epochs in (
        ("single k=400 e300", 400.0, False, 300),
        ("decomp k=400 e500", 400.0, True, 500),
        ("decomp k=0   e500", 0.0, True, 500)):
    ds, truth = make(k)
    tc = optimize.TrainConfig(seed=0, epochs=epochs, lr=1e-3, jitter_band=0.0,
                              decomposed=decomposed,
                              reg_c=1e-6 if decomposed else 0.0)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    cmp = simulate.force_comparison(fit.model, ds, truth)
    msg = (f"{tag} {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e} "
           f"rmse/range {100*cmp['rmse_over_range']:.2f}%")
    if decomposed:
        msg += (f"  rmse_c/FS {100*cmp['rmse_c_over_full_scale']:.2f}%"
                f"  znc(+v) {cmp['mean_znc_forward']:+.2f}"
                f"  znc(-v) {cmp['mean_znc_backward']:+.2f}"
                f"  mean|z_c| {cmp['mean_abs_c']:.2f}"
                f"  mean|fric| {cmp['mean_abs_friction']:.2f}")
    print(msg, flush=True)
