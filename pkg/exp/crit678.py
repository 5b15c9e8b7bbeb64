import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import optimize, simulate

# 8 single-start trajectories: LOOCV ablation + window-length sweep
# (mirrors the acceptance gates: friction-only load, m3/J1/B_m trainable)
load = simulate.LoadModel(k=0.0, F_C=5.0, b_v=2.0, v_eps=0.03)
prof = simulate.default_profiles(8, 0.5, 2.0, 0, 0.2)
cfg = simulate.SimConfig(profiles=prof, load=load, dt=5e-4,
                         n_samples=400, substeps=10, start_angles=(0.3,))
ds, _ = simulate.generate(cfg)

prof_test = simulate.default_profiles(8, 0.5, 2.0, 500, 0.2)
cfg_test = simulate.SimConfig(profiles=prof_test, load=load, dt=5e-4,
                              n_samples=400, substeps=10, start_angles=(0.3,))
ds_test, _ = simulate.generate(cfg_test)

tc = optimize.TrainConfig(trainable=("m3", "J1", "B_m"), seed=0,
                          epochs=100, lr=1e-3, jitter_band=0.0)

t0 = time.time()
res = optimize.ablate_inputs(ds, tc, maps=("dv", "T", "thetaT", "omegaT"))
print(f"ablate {time.time()-t0:.0f}s", flush=True)
dv = res["dv"]
for m in ("dv", "T", "thetaT", "omegaT"):
    r = res[m]
    line = f"{m:8s} median {r.median:9.4g} folds " + " ".join(
        f"{f.rmse:9.3g}" for f in r.folds)
    print(line, flush=True)
for m in ("T", "thetaT", "omegaT"):
    wins = sum(a.rmse < b.rmse for a, b in zip(dv.folds, res[m].folds))
    print(f"dv beats {m} on {wins}/8 folds; medians {dv.median:.4g} < {res[m].median:.4g}: "
          f"{dv.median < res[m].median}", flush=True)

t0 = time.time()
recs = optimize.sweep_n(ds, ds_test, tc.replace(epochs=150), n_values=(1, 8, 64),
                        epochs_recurrent=12)
print(f"sweep {time.time()-t0:.0f}s", flush=True)
for r in recs:
    print(f"N={r['n_window']:3d} median {r['rmse_median']:9.4g} "
          f"epoch {r['epoch_seconds']*1e3:7.1f} ms", flush=True)
