"""Trajectory containers and on-disk layout.

A dataset directory holds one CSV per trajectory (columns t, theta, omega,
torque), a manifest.json with the sampling setup, and - when produced by the
simulator - a ground_truth.json with the constants that generated the data.
Loading for training NEVER touches the ground-truth file; it exists only for
after-the-fact comparisons.

All floats are written with repr-level precision so that a rerun with the
same seed produces byte-identical files.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = "t,theta,omega,torque"
GROUND_TRUTH_FILE = "ground_truth.json"
MANIFEST_FILE = "manifest.json"


class DataError(Exception):
    pass


@dataclass
class Trajectory:
    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    torque: np.ndarray
    label: str = ""

    def __len__(self):
        return self.theta.size


@dataclass
class Dataset:
    trajectories: list
    dt: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.trajectories)

    def n_samples(self):
        return sum(len(tr) for tr in self.trajectories)

    def subset(self, indices):
        return Dataset([self.trajectories[i] for i in indices], self.dt, dict(self.meta))


def _fmt(x):
    return "%.17g" % x


def write_trajectory_csv(path, traj):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in zip(traj.t, traj.theta, traj.omega, traj.torque):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_trajectory_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise DataError("%s: expected header %r, got %r" % (path, CSV_HEADER, header))
        rows = [line.split(",") for line in fh if line.strip()]
    if not rows:
        raise DataError("%s: no samples" % path)
    arr = np.array(rows, dtype=np.float64)
    if arr.shape[1] != 4:
        raise DataError("%s: expected 4 columns" % path)
    return Trajectory(t=arr[:, 0], theta=arr[:, 1], omega=arr[:, 2], torque=arr[:, 3],
                      label=os.path.splitext(os.path.basename(path))[0])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_dataset(dataset, outdir, ground_truth=None):
    os.makedirs(outdir, exist_ok=True)
    names = []
    for i, traj in enumerate(dataset.trajectories):
        name = "traj_%02d.csv" % i
        write_trajectory_csv(os.path.join(outdir, name), traj)
        names.append(name)
    manifest = dict(dataset.meta)
    manifest.update(
        dt=dataset.dt,
        n_trajectories=len(dataset),
        n_samples_per_trajectory=[len(tr) for tr in dataset.trajectories],
        files=names,
    )
    write_json(os.path.join(outdir, MANIFEST_FILE), manifest)
    if ground_truth is not None:
        write_json(os.path.join(outdir, GROUND_TRUTH_FILE), ground_truth)


def load_dataset(path):
    """Read a dataset directory for training; the ground-truth file (if any)
    is deliberately ignored."""
    manifest_path = os.path.join(path, MANIFEST_FILE)
    if not os.path.exists(manifest_path):
        raise DataError("no %s in %s" % (MANIFEST_FILE, path))
    manifest = read_json(manifest_path)
    trajectories = [read_trajectory_csv(os.path.join(path, name))
                    for name in manifest["files"]]
    lengths = manifest.get("n_samples_per_trajectory")
    if lengths is not None and lengths != [len(tr) for tr in trajectories]:
        raise DataError("manifest sample counts disagree with CSV contents")
    dt = float(manifest["dt"])
    for tr in trajectories:
        if len(tr) >= 2:
            step = np.diff(tr.t)
            if np.max(np.abs(step - dt)) > 1e-9:
                raise DataError("%s: time grid step differs from manifest dt" % tr.label)
    meta = {k: v for k, v in manifest.items() if k != "files"}
    return Dataset(trajectories, dt, meta)


def load_ground_truth(path):
    """Explicit accessor for comparisons; training code must not call this."""
    return read_json(os.path.join(path, GROUND_TRUTH_FILE))
