"""Equilibrium floor of the decomposed fit, no training needed.

With one-step windows the fit pins, per sample, the force z_req that makes
a single Euler step land on the recorded next state; om_dot is affine in z
so z_req comes from two forward_dynamics calls.  At the reg equilibrium the
position head follows the d-binned mean of z_req, so

    floor rmse_c = rms( E[z_req | d-bin] - spring )

decomposable into the friction coverage-asymmetry part E[fric|d] and the
Euler ghost part E[z_req - F_true | d].
"""
import sys
import numpy as np
sys.path.insert(0, "src")
from crankid import physics, simulate

def mirrored_profiles(n, lo, hi, seed, duration):
    out = []
    for pr in simulate.default_profiles(n, lo, hi, seed, duration):
        out.append(pr)
        out.append(simulate.TorqueProfile(kind=pr.kind, amplitude=-pr.amplitude,
                                          seed=pr.seed, duration=pr.duration))
    return out

def floor(tag, dt, n_samples, amp_lo, amp_hi, F_C=5.0, b_v=2.0, d_c=0.05,
          k=400.0, n_prof=3, duration=0.3, nbins=40):
    load = simulate.LoadModel(k=k, d_c=d_c, F_C=F_C, b_v=b_v, v_eps=0.03)
    prof = mirrored_profiles(n_prof, amp_lo, amp_hi, 0, duration)
    phys = physics.default_params().replace(g=0.0)
    cfg = simulate.SimConfig(phys=phys, profiles=prof, load=load, dt=dt,
                             n_samples=n_samples, substeps=10,
                             start_angles=(np.pi / 2, -np.pi / 2))
    ds, truth = simulate.generate(cfg)

    th = np.concatenate([tr.theta[:-1] for tr in ds.trajectories])
    om = np.concatenate([tr.omega[:-1] for tr in ds.trajectories])
    tq = np.concatenate([tr.torque[:-1] for tr in ds.trajectories])
    om1 = np.concatenate([tr.omega[1:] for tr in ds.trajectories])
    kin = physics.kinematics(th, om, phys)
    d, v = kin.d, kin.v
    spring = load.spring(d)
    fric = load.friction(v)
    f_true = spring + fric

    _, a0 = physics.forward_dynamics(th, om, tq, np.zeros_like(th), phys)
    _, a1 = physics.forward_dynamics(th, om, tq, np.ones_like(th), phys)
    gain = a1 - a0                      # d(om_dot)/dz
    need = (om1 - om) / dt              # om_dot that matches the data
    z_req = (need - a0) / gain
    ghost = z_req - f_true

    edges = np.linspace(d.min(), d.max() + 1e-12, nbins + 1)
    idx = np.clip(np.digitize(d, edges) - 1, 0, nbins - 1)
    cnt = np.bincount(idx, minlength=nbins)
    def binmean(x):
        return np.bincount(idx, weights=x, minlength=nbins) / np.maximum(cnt, 1)
    zc_eq = binmean(z_req)
    FS = np.ptp(spring)
    err = zc_eq[idx] - spring
    e_fric = binmean(fric)[idx]
    e_ghost = binmean(ghost)[idx]
    print(f"{tag:26s} FS {FS:5.2f}  floor {100*np.sqrt(np.mean(err**2))/FS:6.2f}%"
          f"  fric-part {100*np.sqrt(np.mean(e_fric**2))/FS:6.2f}%"
          f"  ghost-part {100*np.sqrt(np.mean(e_ghost**2))/FS:6.2f}%"
          f"  rms(ghost) {np.sqrt(np.mean(ghost**2)):5.2f} N", flush=True)

floor("base dt5e-4", 5e-4, 600, 0.3, 1.0)
floor("dt2e-4 L1500", 2e-4, 1500, 0.3, 1.0)
floor("dt1e-4 L3000", 1e-4, 3000, 0.3, 1.0)
floor("fric/2", 5e-4, 600, 0.3, 1.0, F_C=2.5, b_v=1.0)
floor("fric/2 dt2e-4", 2e-4, 1500, 0.3, 1.0, F_C=2.5, b_v=1.0)
floor("slower 0.2-0.6", 5e-4, 600, 0.2, 0.6)
floor("faster 0.5-1.5", 5e-4, 600, 0.5, 1.5)
floor("d_c 0.08 engaged", 5e-4, 600, 0.3, 1.0, d_c=0.08)
floor("d_c 0.08 dt2e-4", 2e-4, 1500, 0.3, 1.0, d_c=0.08)
floor("5 prof pairs", 5e-4, 600, 0.3, 1.0, n_prof=5)
floor("k800", 5e-4, 600, 0.3, 1.0, k=800.0)
