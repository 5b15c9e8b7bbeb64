import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import optimize, physics, simulate

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

for tag, k, epochs in (("k1000 e500", 1000.0, 500), ("k2000 e500", 2000.0, 500),
                       ("k2000 e800", 2000.0, 800)):
    ds, truth = make(k)
    tc = optimize.TrainConfig(seed=0, epochs=epochs, lr=1e-3, jitter_band=0.0,
                              decomposed=True, reg_c=1e-6)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    cmp = simulate.force_comparison(fit.model, ds, truth)
    print(f"decomp {tag} {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e} "
          f"rmse/range {100*cmp['rmse_over_range']:.2f}%"
          f"  rmse_c/FS {100*cmp['rmse_c_over_full_scale']:.2f}%"
          f"  FS {cmp['spring_full_scale']:.1f}"
          f"  znc(+v) {cmp['mean_znc_forward']:+.3f}"
          f"  znc(-v) {cmp['mean_znc_backward']:+.3f}"
          f"  mean|z_c| {cmp['mean_abs_c']:.2f}"
          f"  mean|fric| {cmp['mean_abs_friction']:.2f}", flush=True)
