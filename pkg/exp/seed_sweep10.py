import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import optimize, physics, simulate

load = simulate.LoadModel(k=0.0, v_eps=0.03)
prof = simulate.default_profiles(10, 0.5, 2.0, 0, 0.2)
cfg = simulate.SimConfig(profiles=prof, load=load, dt=2e-4,
                         n_samples=1000, substeps=10)
ds, truth = simulate.generate(cfg)
true = truth["phys"]

for s in range(10):
    tc = optimize.TrainConfig(seed=s, epochs=500, lr=1e-3, jitter_band=0.0)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    errs = {n: 100 * (getattr(fit.model.phys, n) / true[n] - 1)
            for n in tc.trainable}
    ok = all(abs(e) < 5 for e in errs.values())
    print(f"seed {s} {time.time()-t0:5.0f}s loss {fit.loss_history[-1]:.2e} "
          + " ".join(f"{n} {e:+.2f}%" for n, e in errs.items())
          + ("  OK" if ok else "  FAIL"), flush=True)
