import sys, time
import numpy as np
sys.path.insert(0, "src")
from crankid import physics, simulate, optimize, hybrid, data
sys.path.insert(0, "exp")
from crit5o import mirrored_profiles

AMP_LO, AMP_HI = 0.5, 1.5

def make(k):
    load = simulate.LoadModel(k=k, d_c=0.10, F_C=5.0, b_v=2.0, v_eps=0.03)
    prof = mirrored_profiles(5, AMP_LO, AMP_HI, 0, 0.5)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=5e-4,
                             n_samples=1000, substeps=10,
                             start_angles=(np.pi/2, -np.pi/2))
    ds, truth = simulate.generate(cfg)
    return ds, truth, load, phys

def heads(model, d, v):
    zc = hybrid.eval_net(model.nets["net_c"], d[:, None])
    znc = hybrid.eval_net(model.nets["net_nc"], np.stack([d, v], 1))
    return zc, znc

for k in (400.0, 0.0):
    ds, truth, load, phys = make(k)
    th = np.concatenate([tr.theta for tr in ds.trajectories])
    om = np.concatenate([tr.omega for tr in ds.trajectories])
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring, fric = load.spring(d), load.friction(v)
    FS = np.ptp(spring) if k else 1.0
    gateC = 0.1*np.mean(np.abs(fric))
    v0 = 0.1*np.percentile(np.abs(v), 90)
    print(f"--- k{k:.0f}: FS {FS:.2f} d[{d.min():.4f},{d.max():.4f}]"
          f" gateC {gateC:.3f} |om|p90 {np.percentile(np.abs(om),90):.1f}",
          flush=True)
    if k:
        t0 = time.time()
        tc = optimize.TrainConfig(trainable=(), epochs=500, lr=1e-3,
                                  jitter_band=0.0, seed=0)
        model, info = optimize.train(ds, tc)
        f_net = np.concatenate([hybrid.force_parts(model, tr.theta, tr.omega,
                                tr.torque)[0] for tr in ds.trajectories])
        f_true = load.force(d, v)
        rmse = np.sqrt(np.mean((f_net-f_true)**2))
        print(f"single e500 {time.time()-t0:4.0f}s rmse/range"
              f" {100*rmse/np.ptp(f_true):.2f}%", flush=True)
    zcs, zncs = [], []
    for seed in range(3):
        t0 = time.time()
        tc = optimize.TrainConfig(trainable=(), epochs=500, lr=1e-3,
                                  jitter_band=0.0, seed=seed,
                                  decomposed=True, reg_c=1e-6)
        model, info = optimize.train(ds, tc)
        zc, znc = heads(model, d, v)
        zcs.append(zc); zncs.append(znc)
        rc = np.sqrt(np.mean((zc-spring)**2))
        fw, bw = np.mean(znc[v > v0]), np.mean(znc[v < -v0])
        extra = (f"rmse_c {rc:.3f} /FS {100*rc/FS:.2f}%" if k
                 else f"mean|zc| {np.mean(np.abs(zc)):.3f}")
        print(f"decomp s{seed} e500 {time.time()-t0:4.0f}s"
              f" loss {info['loss'][-1]:.2e} {extra}"
              f" znc {fw:+.2f}/{bw:+.2f}", flush=True)
    zc, znc = np.mean(zcs, 0), np.mean(zncs, 0)
    rc = np.sqrt(np.mean((zc-spring)**2))
    fw, bw = np.mean(znc[v > v0]), np.mean(znc[v < -v0])
    extra = (f"rmse_c {rc:.3f} /FS {100*rc/FS:.2f}%" if k
             else f"mean|zc| {np.mean(np.abs(zc)):.3f} vs gateC {gateC:.3f}")
    print(f"3-seed avg: {extra} znc {fw:+.2f}/{bw:+.2f}", flush=True)
