import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import optimize, simulate

def make(k, amps, dt, subs):
    load = simulate.LoadModel(k=k, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = simulate.default_profiles(6, amps[0], amps[1], 0, 0.4)
    cfg = simulate.SimConfig(profiles=prof, load=load, dt=dt,
                             n_samples=400, substeps=subs)
    return simulate.generate(cfg)

for amps in ((1.0, 2.0), (0.8, 1.5)):
    print(f"--- amps {amps} dt 1e-3", flush=True)
    for tag, k, decomposed, epochs in (
            ("single k=400 e300", 400.0, False, 300),
            ("decomp k=400 e500", 400.0, True, 500),
            ("decomp k=0   e500", 0.0, True, 500)):
        ds, truth = make(k, amps, 1e-3, 20)
        tc = optimize.TrainConfig(seed=0, epochs=epochs, lr=1e-3,
                                  jitter_band=0.0, decomposed=decomposed,
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
