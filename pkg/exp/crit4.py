import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import identify, optimize, simulate

load = simulate.LoadModel(k=0.0, v_eps=0.03)
prof = simulate.default_profiles(10, 0.5, 2.0, 0, 0.2)
cfg = simulate.SimConfig(profiles=prof, load=load, dt=2e-4,
                         n_samples=1000, substeps=10)
ds, truth = simulate.generate(cfg)
true = truth["phys"]

names = ("l1", "m3", "J1", "B_m")
errs = {n: [] for n in names}
last = None
for s in range(10):
    tc = optimize.TrainConfig(seed=s, epochs=500, lr=1e-3, jitter_band=0.0,
                              trainable=names)
    t0 = time.time()
    fit = optimize.train(ds, tc)
    last = fit
    row = {n: 100 * (getattr(fit.model.phys, n) / true[n] - 1) for n in names}
    for n in names:
        errs[n].append(row[n])
    print(f"seed {s} {time.time()-t0:5.0f}s loss {fit.loss_history[-1]:.2e} "
          + " ".join(f"{n} {row[n]:+.2f}%" for n in names), flush=True)

for n in names:
    a = np.array(errs[n])
    print(f"{n}: spread {a.max()-a.min():.3f}%  std {a.std():.3f}%", flush=True)

S = identify.sensitivity_matrix(last.model, ds)
Q = identify.correlation_matrix(S)
print("|Q(l1,m3)| =", abs(Q.entry("l1", "m3")))
for p in S.features[1:]:
    print(f"|Q(F,{p})| = {abs(Q.entry('F', p)):.4f}")
