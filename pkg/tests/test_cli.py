"""End-to-end checks of the command-line harness on tiny configs."""

import json
import os

import numpy as np
import pytest

from crankid import cli
from crankid import data as dataio


def write_config(path, **over):
    cfg = {
        "simulate": {
            "dt": 5e-4, "n_samples": 80, "substeps": 2, "seed": 3,
            "start_angles": [0.3],
            "profiles": {"n": 2, "amp_lo": 0.6, "amp_hi": 1.4, "seed": 1},
            "load": {"k": 300.0},
        },
        "model": {},
        "train": {"epochs": 2, "minibatch": 60, "seed": 5},
        "analysis": {},
    }
    for key, val in over.items():
        cfg[key] = val
    with open(path, "w") as fh:
        json.dump(cfg, fh)
    return path


def dir_bytes(path, skip=("timings.json",)):
    out = {}
    for root, _, files in os.walk(path):
        for name in files:
            if name in skip:
                continue
            full = os.path.join(root, name)
            with open(full, "rb") as fh:
                out[os.path.relpath(full, path)] = fh.read()
    return out


@pytest.fixture()
def workdir(tmp_path):
    cfgp = write_config(tmp_path / "config.json")
    data = tmp_path / "data"
    rc = cli.main(["simulate", "--config", str(cfgp), "--out", str(data)])
    assert rc == 0
    return tmp_path, str(cfgp), str(data)


def test_simulate_writes_dataset_and_resolved_config(workdir):
    tmp, cfgp, data = workdir
    ds = dataio.load_dataset(data)
    assert len(ds) == 2 and len(ds.trajectories[0]) == 80
    assert os.path.exists(os.path.join(data, "ground_truth.json"))
    resolved = dataio.read_json(os.path.join(data, "config_resolved.json"))
    assert resolved["command"] == "simulate"
    assert resolved["config"]["simulate"]["n_samples"] == 80
    assert resolved["config"]["train"]["lr"] == 1e-3  # defaults filled in
    assert "version" in resolved and "seeds" in resolved


def test_simulate_rerun_is_byte_identical(workdir, tmp_path):
    tmp, cfgp, data = workdir
    again = tmp_path / "data2"
    assert cli.main(["simulate", "--config", cfgp, "--out", str(again)]) == 0
    assert dir_bytes(data) == dir_bytes(str(again))


def test_missing_section_names_the_key(tmp_path, capsys):
    cfgp = tmp_path / "bad.json"
    cfg = json.loads(open(write_config(tmp_path / "ok.json")).read())
    del cfg["train"]
    with open(cfgp, "w") as fh:
        json.dump(cfg, fh)
    rc = cli.main(["simulate", "--config", str(cfgp), "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_CONFIG
    assert "train" in capsys.readouterr().err


def test_unknown_keys_rejected(tmp_path):
    for bad in ({"extra": {}},
                {"train": {"epochs": 1, "bogus": 2}},
                {"simulate": {"load": {"stiffness": 1.0}}}):
        cfgp = write_config(tmp_path / "bad.json", **bad)
        rc = cli.main(["simulate", "--config", str(cfgp),
                       "--out", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG


def test_invalid_json_is_config_error(tmp_path):
    cfgp = tmp_path / "broken.json"
    cfgp.write_text("{not json")
    rc = cli.main(["simulate", "--config", str(cfgp), "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_CONFIG


def test_missing_dataset_is_data_error(workdir, tmp_path):
    tmp, cfgp, data = workdir
    rc = cli.main(["train", "--config", cfgp, "--data", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_DATA


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergent_simulation_exits_4(tmp_path):
    # anti-restoring spring of absurd rate blows the integration up
    cfgp = write_config(tmp_path / "config.json",
                        simulate={"dt": 5e-4, "n_samples": 400, "substeps": 2,
                                  "start_angles": [0.3],
                                  "profiles": {"n": 1, "amp_lo": 1.0,
                                               "amp_hi": 1.0, "seed": 1},
                                  "load": {"k": -1e9, "d_c": 1.0}})
    rc = cli.main(["simulate", "--config", str(cfgp),
                   "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_DIVERGED


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_outputs_and_determinism(workdir, tmp_path):
    tmp, cfgp, data = workdir
    out1, out2 = tmp_path / "fit1", tmp_path / "fit2"
    for out in (out1, out2):
        rc = cli.main(["train", "--config", cfgp, "--data", data,
                       "--out", str(out)])
        assert rc == 0
    for name in ("model.json", "metrics.json", "trace.csv", "timings.json",
                 "force_surface.csv", "config_resolved.json"):
        assert os.path.exists(out1 / name), name
    assert dir_bytes(str(out1)) == dir_bytes(str(out2))
    metrics = dataio.read_json(str(out1 / "metrics.json"))
    assert set(metrics["p_final"]) == {"m3", "J1", "B_m"}


def test_loocv_emits_fold_records(workdir, tmp_path):
    tmp, cfgp, data = workdir
    out = tmp_path / "cv"
    rc = cli.main(["loocv", "--config", cfgp, "--data", data, "--out", str(out)])
    assert rc == 0
    folds = dataio.read_json(str(out / "folds.json"))
    assert len(folds["folds"]) == 2
    assert {f["label"] for f in folds["folds"]} == {"traj_00", "traj_01"}
    with open(out / "rmse.csv") as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0] == "fold,label,seed,rmse" and len(lines) == 3


def test_sweep_and_ablate_and_decompose(workdir, tmp_path):
    tmp, cfgp, data = workdir
    cfgp2 = write_config(tmp_path / "c2.json",
                         analysis={"n_values": [1, 3], "epochs_recurrent": 1,
                                   "maps": ["dv", "T"]})
    out = tmp_path / "sweep"
    assert cli.main(["sweep-n", "--config", str(cfgp2), "--data", data,
                     "--out", str(out)]) == 0
    sweep = dataio.read_json(str(out / "sweep.json"))
    assert [r["n_window"] for r in sweep] == [1, 3]
    timing = dataio.read_json(str(out / "timings.json"))
    assert set(timing["epoch_seconds_by_n"]) == {"1", "3"}

    out = tmp_path / "ablate"
    assert cli.main(["ablate-inputs", "--config", str(cfgp2), "--data", data,
                     "--out", str(out)]) == 0
    ablate = dataio.read_json(str(out / "ablate.json"))
    assert set(ablate) == {"dv", "T"}
    with open(out / "rmse_by_map.csv") as fh:
        assert fh.readline().strip() == "fold,label,rmse_dv,rmse_T"

    out = tmp_path / "dec"
    assert cli.main(["decompose", "--config", str(cfgp2), "--data", data,
                     "--out", str(out)]) == 0
    with open(out / "force_surface.csv") as fh:
        header = fh.readline().strip().split(",")
    assert "z_c" in header and "z_nc" in header


def test_sensitivity_and_verify_force(workdir, tmp_path):
    tmp, cfgp, data = workdir
    fit = tmp_path / "fit"
    assert cli.main(["train", "--config", cfgp, "--data", data,
                     "--out", str(fit)]) == 0
    model = str(fit / "model.json")

    out = tmp_path / "sens"
    assert cli.main(["sensitivity", "--config", cfgp, "--data", data,
                     "--model", model, "--out", str(out)]) == 0
    ranking = dataio.read_json(str(out / "ranking.json"))
    assert set(ranking["norms"]) == {"F"} | set(
        dataio.read_json(str(fit / "config_resolved.json"))
        ["config"]["simulate"]["phys"])
    assert os.path.exists(out / "sensitivity.csv")
    assert os.path.exists(out / "correlation.csv")

    out = tmp_path / "verify"
    assert cli.main(["verify-force", "--config", cfgp, "--data", data,
                     "--model", model, "--out", str(out)]) == 0
    verify = dataio.read_json(str(out / "verify.json"))
    assert verify["force_range"] > 0
    assert np.isfinite(verify["rmse_over_range"])


def test_default_out_uses_env_root(workdir, tmp_path, monkeypatch):
    tmp, cfgp, data = workdir
    monkeypatch.setenv(cli.OUT_ROOT_ENV, str(tmp_path / "root"))
    assert cli.main(["simulate", "--config", cfgp]) == 0
    assert os.path.exists(tmp_path / "root" / "simulate" / "manifest.json")
