import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import optimize, simulate

# rotation-dominated excitation: every slider position is visited in both
# stroke directions at comparable |v|, so no friction structure can hide in
# a position-only head
def make(k):
    load = simulate.LoadModel(k=k, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = simulate.default_profiles(6, 1.0, 2.0, 0, 0.8)
    cfg = simulate.SimConfig(profiles=prof, load=load, dt=2e-3,
                             n_samples=400, substeps=40)
    return simulate.generate(cfg)

for tag, k, decomposed, epochs in (
        ("single k=400 e300", 400.0, False, 300),
        ("decomp k=400 e400", 400.0, True, 400),
        ("decomp k=0   e400", 0.0, True, 400)):
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
