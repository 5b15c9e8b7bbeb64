import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import optimize, simulate

def make(k):
    load = simulate.LoadModel(k=k, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = simulate.default_profiles(6, 0.5, 2.0, 0, 0.12)
    cfg = simulate.SimConfig(profiles=prof, load=load, dt=2e-4,
                             n_samples=600, substeps=10)
    return simulate.generate(cfg)

for tag, k, trainable, epochs in (
        ("decomp k=400 joint e800", 400.0, ("m3", "J1", "B_m"), 800),
        ("decomp k=0   joint e800", 0.0, ("m3", "J1", "B_m"), 800),
        ("decomp k=400 fixed e400", 400.0, (), 400),
        ("decomp k=0   fixed e400", 0.0, (), 400)):
    ds, truth = make(k)
    tc = optimize.TrainConfig(seed=0, epochs=epochs, lr=1e-3, jitter_band=0.0,
                              trainable=trainable, decomposed=True, reg_c=1e-6)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    cmp = simulate.force_comparison(fit.model, ds, truth)
    print(f"{tag} {time.time()-t0:4.0f}s loss {fit.loss_history[-1]:.2e} "
          f"rmse/range {100*cmp['rmse_over_range']:.2f}%"
          f"  rmse_c/FS {100*cmp['rmse_c_over_full_scale']:.2f}%"
          f"  znc(+v) {cmp['mean_znc_forward']:+.2f}"
          f"  znc(-v) {cmp['mean_znc_backward']:+.2f}"
          f"  mean|z_c| {cmp['mean_abs_c']:.2f}"
          f"  mean|fric| {cmp['mean_abs_friction']:.2f}", flush=True)
