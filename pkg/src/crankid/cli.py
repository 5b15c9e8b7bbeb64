"""Command-line experiment harness.

Subcommands mirror the identification workflow: `simulate` writes a dataset
directory; `train`, `loocv`, `sweep-n`, `ablate-inputs` and `decompose` fit
models and emit JSON metrics plus CSV traces; `sensitivity` analyses a saved
model; `verify-force` is the only command that opens a dataset's ground-truth
file.

All experiment knobs live in one JSON config with four sections (simulate,
model, train, analysis); unknown or missing keys abort with exit code 2, and
every output directory receives config_resolved.json holding the fully
resolved config, the tool version, and every seed used, so a result can be
regenerated from its directory alone.  Wall-clock measurements go to a
separate timings.json; every other output file is byte-reproducible for a
fixed config.

Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical divergence.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from . import data as dataio
from . import hybrid, identify, optimize, physics, simulate

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

OUT_ROOT_ENV = "CRANKID_OUT"


class ConfigError(Exception):
    pass


# --- config handling --------------------------------------------------------

_SECTION_KEYS = {
    "simulate": ("dt", "n_samples", "substeps", "seed", "noise_sigma",
                 "start_angles", "profiles", "load", "phys"),
    "model": ("input_map", "n_hidden", "trainable", "decomposed"),
    "train": ("n_window", "epochs", "minibatch", "lr", "beta1", "beta2",
              "eps", "init_band", "jitter_band", "seed", "reg_c"),
    "analysis": ("n_values", "epochs_recurrent", "maps", "params", "n_grid"),
}
_PROFILE_KEYS = ("n", "amp_lo", "amp_hi", "seed", "duration")
_LOAD_KEYS = ("k", "d_c", "F_C", "b_v", "v_eps")
_MODEL_FIELDS = ("input_map", "n_hidden", "trainable", "decomposed")


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON: %s" % exc)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in cfg:
        if key not in _SECTION_KEYS:
            raise ConfigError("unknown config key %r" % key)
    for key in _SECTION_KEYS:
        if key not in cfg:
            raise ConfigError("missing config key %r" % key)
    for sec, allowed in _SECTION_KEYS.items():
        if not isinstance(cfg[sec], dict):
            raise ConfigError("config section %r must be an object" % sec)
        for key in cfg[sec]:
            if key not in allowed:
                raise ConfigError("unknown config key %r in section %r" % (key, sec))
    for key, allowed in (("profiles", _PROFILE_KEYS), ("load", _LOAD_KEYS),
                         ("phys", hybrid.PHYS_NAMES)):
        for sub in cfg["simulate"].get(key, {}):
            if sub not in allowed:
                raise ConfigError("unknown config key %r in simulate.%s" % (sub, key))
    return cfg


def sim_config(cfg):
    sec = dict(cfg["simulate"])
    phys = physics.default_params()
    if "phys" in sec:
        phys = phys.replace(**sec.pop("phys"))
    load = simulate.LoadModel(**sec.pop("load", {}))
    prof_kw = sec.pop("profiles", None)
    if "start_angles" in sec:
        sec["start_angles"] = tuple(sec["start_angles"])
    sm = simulate.SimConfig(phys=phys, load=load, **sec)
    if prof_kw is not None:
        prof_kw = dict(prof_kw)
        prof_kw.setdefault("duration", sm.dt * sm.n_samples)
        sm.profiles = simulate.default_profiles(**prof_kw)
    return sm


def train_config(cfg):
    kw = {}
    kw.update(cfg["model"])
    kw.update(cfg["train"])
    if "trainable" in kw:
        kw["trainable"] = tuple(kw["trainable"])
    try:
        return optimize.TrainConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def resolved_config(cfg):
    sm = sim_config(cfg)
    tc = train_config(cfg)
    tcd = dataclasses.asdict(tc)
    tcd["trainable"] = list(tcd["trainable"])
    model = {k: tcd.pop(k) for k in _MODEL_FIELDS}
    return {
        "simulate": {
            "dt": sm.dt,
            "n_samples": sm.n_samples,
            "substeps": sm.substeps,
            "seed": sm.seed,
            "noise_sigma": sm.noise_sigma,
            "start_angles": [float(a) for a in sm.start_angles],
            "profiles": [pr.as_dict() for pr in sm.profiles],
            "load": sm.load.as_dict(),
            "phys": sm.phys.as_dict(),
        },
        "model": model,
        "train": tcd,
        "analysis": dict(cfg["analysis"]),
    }


def write_run_info(outdir, command, cfg, seeds):
    doc = {
        "version": __version__,
        "command": command,
        "config": resolved_config(cfg),
        "seeds": seeds,
    }
    dataio.write_json(os.path.join(outdir, "config_resolved.json"), _jsonable(doc))


def _outdir(args):
    out = args.out or os.path.join(os.environ.get(OUT_ROOT_ENV, "runs"),
                                   args.command)
    os.makedirs(out, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for x in row:
                if isinstance(x, str):
                    cells.append(x)
                elif isinstance(x, (int, np.integer)):
                    cells.append("%d" % x)
                else:
                    cells.append("%.17g" % x)
            fh.write(",".join(cells) + "\n")


# --- fit output helpers -----------------------------------------------------

def _save_fit(outdir, fit, prefix=""):
    tc = fit.config
    hybrid.save_model(fit.model, os.path.join(outdir, prefix + "model.json"))
    metrics = {
        "loss_first": fit.loss_history[0],
        "loss_final": fit.loss_history[-1],
        "n_diverged": fit.n_diverged,
        "p_init": {n: fit.p_history[n][0] for n in tc.trainable},
        "p_final": {n: getattr(fit.model.phys, n) for n in tc.trainable},
        "p_final_normalized": {n: fit.p_history[n][-1] for n in tc.trainable},
    }
    dataio.write_json(os.path.join(outdir, prefix + "metrics.json"),
                      _jsonable(metrics))
    header = ["epoch", "loss"] + list(tc.trainable)
    rows = [[e + 1, fit.loss_history[e]] + [fit.p_history[n][e + 1]
                                             for n in tc.trainable]
            for e in range(len(fit.loss_history))]
    _write_csv(os.path.join(outdir, prefix + "trace.csv"), header, rows)
    dataio.write_json(os.path.join(outdir, prefix + "timings.json"),
                      {"epoch_seconds": fit.epoch_seconds})


def _save_surface(outdir, fit, dataset, n_grid, prefix=""):
    model = fit.model
    if not model.decomposed and set(model.input_map.columns) - {"d", "v"}:
        return  # surface only meaningful over (d, v)
    th = np.concatenate([tr.theta for tr in dataset.trajectories])
    om = np.concatenate([tr.omega for tr in dataset.trajectories])
    tq = np.concatenate([tr.torque for tr in dataset.trajectories])
    cols = hybrid.input_columns(th, om, tq, model.phys)
    surface = hybrid.force_surface(model, cols["d"], cols["v"], n_grid=n_grid)
    hybrid.write_force_surface(os.path.join(outdir, prefix + "force_surface.csv"),
                               surface)


def _loocv_record(res):
    return {
        "input_map": res.input_map,
        "n_window": res.n_window,
        "median": res.median,
        "band90": list(res.band90),
        "n_diverged": res.n_diverged,
        "folds": [dataclasses.asdict(f) for f in res.folds],
    }


# --- commands ----------------------------------------------------------------

def cmd_simulate(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    sm = sim_config(cfg)
    dataset, truth = simulate.generate(sm)
    dataio.save_dataset(dataset, out, ground_truth=truth)
    write_run_info(out, "simulate", cfg,
                   {"simulate": sm.seed,
                    "profiles": [pr.seed for pr in sm.profiles]})
    print("simulate: %d trajectories x %d samples -> %s"
          % (len(dataset), sm.n_samples, out))
    return 0


def cmd_train(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    ds = dataio.load_dataset(args.data)
    tc = train_config(cfg)
    fit = optimize.train(ds, tc)
    write_run_info(out, "train", cfg, {"train": tc.seed})
    _save_fit(out, fit)
    _save_surface(out, fit, ds, int(cfg["analysis"].get("n_grid", 61)))
    print("train: loss %.3e -> %.3e (%d epochs) -> %s"
          % (fit.loss_history[0], fit.loss_history[-1], tc.epochs, out))
    return 0


def cmd_loocv(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    ds = dataio.load_dataset(args.data)
    tc = train_config(cfg)
    res = optimize.loocv(ds, tc, jobs=args.jobs)
    write_run_info(out, "loocv", cfg,
                   {"train": tc.seed, "folds": [f.seed for f in res.folds]})
    dataio.write_json(os.path.join(out, "folds.json"),
                      _jsonable(_loocv_record(res)))
    _write_csv(os.path.join(out, "rmse.csv"),
               ["fold", "label", "seed", "rmse"],
               [[f.fold, f.label, f.seed, f.rmse] for f in res.folds])
    print("loocv: median rmse %.4g over %d folds (%d diverged) -> %s"
          % (res.median, len(res.folds), res.n_diverged, out))
    return 0


def cmd_sweep_n(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    train_ds = dataio.load_dataset(args.data)
    test_ds = dataio.load_dataset(args.test_data) if args.test_data else train_ds
    tc = train_config(cfg)
    analysis = cfg["analysis"]
    n_values = tuple(analysis.get("n_values", (1, 8, 64)))
    records = optimize.sweep_n(train_ds, test_ds, tc, n_values=n_values,
                               epochs_recurrent=analysis.get("epochs_recurrent"))
    write_run_info(out, "sweep-n", cfg, {"train": tc.seed})
    rows = []
    timings = {}
    for rec in records:
        hybrid.save_model(rec["fit"].model,
                          os.path.join(out, "model_n%03d.json" % rec["n_window"]))
        timings[str(rec["n_window"])] = rec["epoch_seconds"]
        rows.append([rec["n_window"], rec["rmse_median"]] + rec["rmse"])
    dataio.write_json(os.path.join(out, "sweep.json"), _jsonable(
        [{k: rec[k] for k in ("n_window", "rmse", "rmse_median")}
         for rec in records]))
    dataio.write_json(os.path.join(out, "timings.json"),
                      {"epoch_seconds_by_n": timings})
    labels = [tr.label for tr in test_ds.trajectories]
    _write_csv(os.path.join(out, "sweep.csv"),
               ["n_window", "rmse_median"] + ["rmse_" + lb for lb in labels],
               rows)
    print("sweep-n: " + "  ".join("N=%d median %.4g" % (r["n_window"], r["rmse_median"])
                                  for r in records) + " -> " + out)
    return 0


def cmd_ablate_inputs(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    ds = dataio.load_dataset(args.data)
    tc = train_config(cfg)
    maps = tuple(cfg["analysis"].get("maps", ("dv", "T")))
    try:
        results = optimize.ablate_inputs(ds, tc, maps=maps, jobs=args.jobs)
    except KeyError as exc:
        raise ConfigError(str(exc))
    write_run_info(out, "ablate-inputs", cfg,
                   {"train": tc.seed,
                    "folds": [f.seed for f in results[maps[0]].folds]})
    dataio.write_json(os.path.join(out, "ablate.json"), _jsonable(
        {name: _loocv_record(res) for name, res in results.items()}))
    first = results[maps[0]]
    rows = []
    for i, fold in enumerate(first.folds):
        rows.append([fold.fold, fold.label]
                    + [results[m].folds[i].rmse for m in maps])
    _write_csv(os.path.join(out, "rmse_by_map.csv"),
               ["fold", "label"] + ["rmse_" + m for m in maps], rows)
    print("ablate-inputs: " + "  ".join("%s median %.4g" % (m, results[m].median)
                                        for m in maps) + " -> " + out)
    return 0


def cmd_decompose(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    ds = dataio.load_dataset(args.data)
    tc = train_config(cfg).replace(decomposed=True)
    if tc.reg_c == 0.0:
        tc = tc.replace(reg_c=1e-6)
    fit = optimize.train(ds, tc)
    write_run_info(out, "decompose", cfg, {"train": tc.seed})
    _save_fit(out, fit)
    _save_surface(out, fit, ds, int(cfg["analysis"].get("n_grid", 61)))
    print("decompose: loss %.3e -> %.3e (reg_c %g) -> %s"
          % (fit.loss_history[0], fit.loss_history[-1], tc.reg_c, out))
    return 0


def cmd_sensitivity(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    model = hybrid.load_model(args.model)
    ds = dataio.load_dataset(args.data)
    params = tuple(cfg["analysis"].get("params", hybrid.PHYS_NAMES))
    for name in params:
        if name not in hybrid.PHYS_NAMES:
            raise ConfigError("unknown parameter %r in analysis.params" % name)
    S = identify.sensitivity_matrix(model, ds, params=params)
    write_run_info(out, "sensitivity", cfg, {})
    identify.write_sensitivity_csv(os.path.join(out, "sensitivity.csv"), S)
    dropped = S.zero_columns()
    if dropped:
        keep = [i for i, f in enumerate(S.features) if f not in dropped]
        reduced = identify.SensitivityMatrix(
            features=tuple(S.features[i] for i in keep), S=S.S[:, keep])
        Q = identify.correlation_matrix(reduced)
    else:
        Q = identify.correlation_matrix(S)
    identify.write_correlation_csv(os.path.join(out, "correlation.csv"), Q)
    dataio.write_json(os.path.join(out, "ranking.json"), _jsonable({
        "norms": dict(zip(S.features, S.norms())),
        "ranking": identify.rank_sensitivities(S),
        "dropped_from_correlation": list(dropped),
    }))
    print("sensitivity: ranked %s -> %s"
          % (" > ".join(name for name, _ in identify.rank_sensitivities(S)[:4]),
             out))
    return 0


def cmd_verify_force(args):
    cfg = load_config(args.config)
    out = _outdir(args)
    model = hybrid.load_model(args.model)
    ds = dataio.load_dataset(args.data)
    try:
        truth = dataio.load_ground_truth(args.data)
    except FileNotFoundError:
        raise dataio.DataError("dataset %s has no ground-truth file" % args.data)
    cmp = simulate.force_comparison(model, ds, truth)
    write_run_info(out, "verify-force", cfg, {})
    samples = cmp.pop("samples")
    keys = ["d", "v", "f_true", "f_net"] + (["z_c", "z_nc"] if "z_c" in samples else [])
    _write_csv(os.path.join(out, "force_samples.csv"), keys,
               zip(*(samples[k] for k in keys)))
    dataio.write_json(os.path.join(out, "verify.json"), _jsonable(cmp))
    print("verify-force: rmse %.4g over range %.4g (%.1f%%) -> %s"
          % (cmp["rmse"], cmp["force_range"],
             100 * cmp["rmse_over_range"], out))
    return 0


# --- entry point --------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="crankid",
        description="gray-box identification experiments on slider-crank data")
    p.add_argument("--version", action="version",
                   version="crankid " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, data=False, model=False, test_data=False,
            jobs=False):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True,
                        help="experiment config JSON (sections: simulate, "
                             "model, train, analysis)")
        sp.add_argument("--out", default=None,
                        help="output directory (default $%s/<command>)"
                             % OUT_ROOT_ENV)
        if data:
            sp.add_argument("--data", required=True, help="dataset directory")
        if test_data:
            sp.add_argument("--test-data", default=None,
                            help="held-out dataset directory (default: --data)")
        if model:
            sp.add_argument("--model", required=True, help="saved model JSON")
        if jobs:
            sp.add_argument("--jobs", type=int, default=1,
                            help="parallel fold workers")
        sp.set_defaults(func=fn)

    add("simulate", cmd_simulate, "generate a synthetic dataset directory")
    add("train", cmd_train, "fit one model on a dataset", data=True)
    add("loocv", cmd_loocv, "leave-one-trajectory-out cross-validation",
        data=True, jobs=True)
    add("sweep-n", cmd_sweep_n, "window-length study from one N=1 baseline",
        data=True, test_data=True)
    add("ablate-inputs", cmd_ablate_inputs,
        "cross-validate competing net input maps", data=True, jobs=True)
    add("decompose", cmd_decompose,
        "fit in decomposed mode and emit z_c/z_nc surfaces", data=True)
    add("sensitivity", cmd_sensitivity,
        "sensitivity and correlation analysis of a saved model",
        data=True, model=True)
    add("verify-force", cmd_verify_force,
        "compare an identified force law against the injected one",
        data=True, model=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except dataio.DataError as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return EXIT_DATA
    except (optimize.NonFiniteGradient, hybrid.NonFiniteState) as exc:
        print("divergence: %s" % exc, file=sys.stderr)
        return EXIT_DIVERGED
    except RuntimeError as exc:
        print("divergence: %s" % exc, file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
