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

def make(k, dt, L):
    load = simulate.LoadModel(k=k, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = mirrored_profiles(3, 0.3, 1.0, 0, 0.3)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=dt,
                             n_samples=L, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    return simulate.generate(cfg)

def report(tag, fit, cmp, t0):
    extra = ""
    if "rmse_c_over_full_scale" in cmp:
        extra = (f"  rmse_c/FS {100*cmp['rmse_c_over_full_scale']:.2f}%"
                 f"  FS {cmp['spring_full_scale']:.1f}"
                 f"  znc(+v) {cmp['mean_znc_forward']:+.3f}"
                 f"  znc(-v) {cmp['mean_znc_backward']:+.3f}"
                 f"  mean|z_c| {cmp['mean_abs_c']:.2f}"
                 f"  mean|fric| {cmp['mean_abs_friction']:.2f}")
    print(f"{tag} {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e} "
          f"rmse/range {100*cmp['rmse_over_range']:.2f}%" + extra, flush=True)

for tag, k, dt, L, dec in (
        ("single k400 dt2e-4", 400.0, 2e-4, 1500, False),
        ("decomp k400 dt2e-4", 400.0, 2e-4, 1500, True),
        ("decomp k0   dt2e-4", 0.0, 2e-4, 1500, True),
        ("decomp k400 dt3e-4", 400.0, 3e-4, 1000, True),
        ("decomp k0   dt3e-4", 0.0, 3e-4, 1000, True)):
    ds, truth = make(k, dt, L)
    tc = optimize.TrainConfig(seed=0, epochs=500, lr=1e-3, jitter_band=0.0,
                              decomposed=dec, reg_c=1e-6 if dec else 0.0)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    cmp = simulate.force_comparison(fit.model, ds, truth)
    report(tag, fit, cmp, t0)
