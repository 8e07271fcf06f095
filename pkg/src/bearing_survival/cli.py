"""Command-line pipeline: detect, prepare, benchmark, simulate.

Configuration is a flat TOML-style key/value file mirrored one-to-one by
command-line flags; flags override the file and the BEARING_SURVIVAL_SEED
environment variable overrides both for the seed. All outputs land under
the configured output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import signal as sig
from .events import detect_event, write_trace_csv
from .exceptions import BearingSurvivalError
from .experiment import DEFAULT_MODELS, SearchSpace, default_search_space, run_benchmark
from .features import FEATURE_NAMES, feature_matrix
from .metrics import write_report_csv, write_report_json
from .models import kaplan_meier
from .simulate import (
    SynthBearingConfig,
    group_survival_comparison,
    synth_bearing,
    write_xjtu_archive,
)

EXIT_IO_ERROR = 2
EXIT_VALIDATION_ERROR = 3

DEFAULT_CONFIG = {
    "dataset_kind": "xjtu",          # xjtu | pronostia
    "data_dir": "",
    "output_dir": "out",
    "frame_len": 0,                   # 0 = one frame per acquisition window
    "entropy_bins": 64,
    "band_halfwidth": 0.0,            # 0 = 5% of each center frequency
    "breakin_windows": 0,             # 0 = 10% of the windows
    "margin": 0.1,
    "n_slices": 20,
    "bootstrap_factor": 5,
    "censoring_rate": 0.2,
    "seed": 0,
    "models": list(DEFAULT_MODELS),
    "train_bearings": [],
    "test_bearings": [],
    "n_iterations": 10,
    "n_folds": 5,
    # ridge for the Cox model; synthetic archives can produce numerically
    # collinear covariates that plain maximum partial likelihood rejects
    "coxph_penalizer": 0.0,
    # bearing geometry for the characteristic bands
    "n_balls": 8,
    "ball_diameter": 7.92,
    "pitch_diameter": 34.55,
    "contact_angle": 0.0,
    "shaft_rate": 35.0,
    # survival-curve group export (features are z-scored in prepared CSVs)
    "group_split_feature": "rms",
    "group_split_threshold": 0.0,
    # simulate subcommand
    "n_bearings": 3,
    "duration_windows": 60,
    "onset_window": 40,
    "fault_bin": "bpfo",
    "noise_sigma": 0.05,
    "growth_rate": 0.06,
    "window_samples": 4096,
    "table2": False,
}

_LIST_KEYS = ("models", "train_bearings", "test_bearings")


def parse_flat_toml(text: str) -> dict:
    """Parse the flat TOML subset: key = value with scalars and arrays."""
    config = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            raise ValueError(f"line {lineno}: sections are not supported, keep the file flat")
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        config[key.strip()] = _parse_toml_value(value.strip(), lineno)
    return config


def _parse_toml_value(token: str, lineno: int):
    if token.startswith("[") and token.endswith("]"):
        inner = token[1:-1].strip()
        if not inner:
            return []
        return [_parse_toml_value(item.strip(), lineno) for item in inner.split(",")]
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"line {lineno}: cannot parse value {token!r}") from None


def load_config(config_path: str | None, overrides: dict) -> dict:
    config = dict(DEFAULT_CONFIG)
    if config_path:
        file_values = parse_flat_toml(Path(config_path).read_text())
        unknown = set(file_values) - set(config)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config.update(file_values)
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
    env_seed = os.environ.get("BEARING_SURVIVAL_SEED")
    if env_seed is not None:
        config["seed"] = int(env_seed)
    for key in _LIST_KEYS:
        if isinstance(config[key], str):
            config[key] = [v for v in config[key].split(",") if v]
    return config


def _geometry(config) -> sig.BearingGeometry:
    return sig.BearingGeometry(
        n_balls=int(config["n_balls"]),
        ball_diameter=float(config["ball_diameter"]),
        pitch_diameter=float(config["pitch_diameter"]),
        contact_angle=float(config["contact_angle"]),
        shaft_rate=float(config["shaft_rate"]),
    )


def _load_archive(config):
    loaders = {"xjtu": ds.load_xjtu, "pronostia": ds.load_pronostia}
    kind = config["dataset_kind"]
    if kind not in loaders:
        raise ValueError(f"dataset_kind must be one of {sorted(loaders)}")
    if not config["data_dir"]:
        raise ValueError("data_dir must point at the raw archive")
    return loaders[kind](config["data_dir"])


def _window_pdfs_and_features(pseudo, config, geometry):
    """Per-acquisition-window spectral PDFs and mean feature vectors."""
    windows = ds.channel_windows(pseudo.channel, pseudo.file_lengths)
    halfwidth = config["band_halfwidth"] or None
    frame_len = int(config["frame_len"])
    pdfs = []
    feats = []
    for w, samples in enumerate(windows):
        spectrum = sig.envelope_spectrum(
            sig.analytic_envelope(samples), pseudo.channel.sample_rate)
        pdfs.append(sig.characteristic_bins(spectrum, geometry, halfwidth, window_index=w))
        length = frame_len if frame_len else samples.size
        frames = [samples[k * length:(k + 1) * length] for k in range(samples.size // length)]
        rows = [fv.as_array() for fv in feature_matrix(frames, int(config["entropy_bins"]))
                if fv is not None]
        feats.append(None if not rows else _mean_feature_vector(rows, w))
    return pdfs, feats


def _mean_feature_vector(rows, window_index):
    from .features import FeatureVector

    mean = np.mean(rows, axis=0)
    return FeatureVector(*mean, frame_index=window_index)


def _detect_all(config):
    geometry = _geometry(config)
    breakin = int(config["breakin_windows"]) or None
    results = []
    for record in _load_archive(config):
        for pseudo in ds.axis_split(record):
            pdfs, feats = _window_pdfs_and_features(pseudo, config, geometry)
            trace, annotation = detect_event(
                pdfs, breakin_windows=breakin, margin=float(config["margin"]))
            results.append((pseudo, pdfs, feats, trace, annotation))
    return results


def cmd_detect(config) -> int:
    out = Path(config["output_dir"])
    (out / "annotations").mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    for pseudo, pdfs, _, trace, annotation in _detect_all(config):
        payload = {
            "bearing_id": pseudo.bearing_id,
            "source_bearing": pseudo.source_bearing,
            "n_windows": len(pdfs),
            "observed": annotation.observed,
            "event_window": annotation.event_window,
            "kl_threshold": trace.kl_threshold,
            "sd_threshold": trace.sd_threshold,
        }
        with open(out / "annotations" / f"{pseudo.bearing_id}.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_trace_csv(trace, out / "traces" / f"{pseudo.bearing_id}.csv")
    return 0


def cmd_prepare(config) -> int:
    if not config["train_bearings"] or not config["test_bearings"]:
        raise ValueError("train_bearings and test_bearings must both be set")
    seed = int(config["seed"])
    records = []
    for pseudo, pdfs, feats, _, annotation in _detect_all(config):
        records.extend(ds.build_survival_records(
            feats, annotation, n_slices=int(config["n_slices"]),
            source_bearing=pseudo.bearing_id))
    records = ds.constrained_bootstrap(records, factor=int(config["bootstrap_factor"]),
                                       seed=seed)
    full = ds.apply_censoring(records, rate=float(config["censoring_rate"]), seed=seed)
    train, test = ds.split_by_bearing(full, config["train_bearings"], config["test_bearings"])
    train, test, _ = ds.zscore_fit_transform(train, test)

    out = Path(config["output_dir"])
    (out / "data").mkdir(parents=True, exist_ok=True)
    ds.write_survival_csv(train, out / "data" / "train.csv")
    ds.write_survival_csv(test, out / "data" / "test.csv")
    summary = {
        "n_train": len(train),
        "n_test": len(test),
        "n_total": len(train) + len(test),
        "censoring_rate": float(config["censoring_rate"]),
        "censored_fraction_train": float(np.mean(train.event == 0)),
        "censored_fraction_test": float(np.mean(test.event == 0)),
        "d": len(train.feature_names),
        "feature_names": list(train.feature_names),
        "seed": seed,
    }
    with open(out / "data" / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _write_curve_csv(path, times, mean, lower=None, upper=None):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["time", "survival"] + (["lower", "upper"] if lower is not None else [])
        writer.writerow(header)
        for i, t in enumerate(times):
            row = [repr(float(t)), repr(float(mean[i]))]
            if lower is not None:
                row += [repr(float(lower[i])), repr(float(upper[i]))]
            writer.writerow(row)


def cmd_benchmark(config) -> int:
    out = Path(config["output_dir"])
    train = ds.read_survival_csv(out / "data" / "train.csv")
    test = ds.read_survival_csv(out / "data" / "test.csv")
    seed = int(config["seed"])
    models = list(config["models"])
    spaces = {}
    for kind in models:
        params = dict(default_search_space(kind).params)
        if kind == "coxph" and float(config["coxph_penalizer"]) > 0:
            params["penalizer"] = [float(config["coxph_penalizer"])]
        spaces[kind] = SearchSpace(params=params,
                                   n_iterations=int(config["n_iterations"]),
                                   n_folds=int(config["n_folds"]), seed=seed)
    rows = run_benchmark({"prepared": (train, test)}, models=models, seed=seed, spaces=spaces)

    (out / "report").mkdir(parents=True, exist_ok=True)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    reports = [row.report for row in rows if row.report is not None]
    write_report_csv(reports, out / "report" / "report.csv")
    write_report_json(reports, out / "report" / "report.json")
    errors = {row.model: row.error for row in rows if row.error}
    if errors:
        with open(out / "report" / "errors.json", "w") as fh:
            json.dump(errors, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if config["table2"]:
        _print_table2(reports)

    grid = np.unique(test.duration[test.event == 1])
    if grid.size:
        km = kaplan_meier(train.duration, train.event)
        _write_curve_csv(out / "curves" / "km_reference.csv", km.times, km.survival,
                         km.lower, km.upper)
        cox_model = None
        for row in rows:
            if row.fitted is None:
                continue
            if row.model == "coxph":
                cox_model = row.fitted
            surv = row.fitted.predict_survival(test.X, grid)
            _write_curve_csv(out / "curves" / f"{row.model}_mean.csv",
                             grid, np.minimum.accumulate(surv.mean(axis=0)))
        if cox_model is not None:
            _export_group_curves(cox_model, test, config, out / "curves", grid, seed)

    return 0 if reports else EXIT_VALIDATION_ERROR


def _export_group_curves(model, test, config, curves_dir, grid, seed):
    feature = config["group_split_feature"]
    names = list(test.feature_names)
    if feature not in names and feature in FEATURE_NAMES:
        # prepared CSVs carry positional names; map through the canonical order
        feature = f"feature_{FEATURE_NAMES.index(feature) + 1}"
    if feature not in names:
        return
    comparison = group_survival_comparison(
        model, test.X, feature, float(config["group_split_threshold"]),
        times=grid, feature_names=names, seed=seed)
    for label, curve, cohort in (("low", comparison.low_curve, comparison.low_cohort),
                                 ("high", comparison.high_curve, comparison.high_cohort)):
        _write_curve_csv(curves_dir / f"group_{label}.csv", curve.times,
                         curve.survival, curve.lower, curve.upper)
        if cohort is not None:
            with open(curves_dir / f"group_{label}_simulated.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["simulated_time"])
                for t in cohort.durations:
                    writer.writerow([repr(float(t))])


def _print_table2(reports):
    print(f"{'Model':<14}{'T_train':>10}{'CI':>8}{'CI_td':>8}{'IBS':>8}")
    for r in reports:
        print(f"{r.model:<14}{r.train_seconds:>10.3f}{r.harrell_ci:>8.3f}"
              f"{r.antolini_ci:>8.3f}{r.ibs:>8.3f}")


def cmd_simulate(config) -> int:
    out = Path(config["data_dir"] or Path(config["output_dir"]) / "synthetic")
    seed = int(config["seed"])
    onset = config["onset_window"]
    onset = None if onset in (None, -1) else int(onset)
    window_samples = int(config["window_samples"])
    bearings = {}
    truth = {}
    for b in range(int(config["n_bearings"])):
        bearing_id = f"SynthBearing{b + 1}"
        channels = []
        for axis in range(2):
            cfg = SynthBearingConfig(
                duration_windows=int(config["duration_windows"]),
                onset_window=onset,
                fault_bin=config["fault_bin"],
                noise_sigma=float(config["noise_sigma"]),
                growth_rate=float(config["growth_rate"]),
                geometry=_geometry(config),
                seed=seed + 2 * b + axis,
                window_samples=window_samples,
            )
            channels.append(synth_bearing(cfg))
        bearings[bearing_id] = (channels[0], channels[1], window_samples)
        truth[bearing_id] = {"onset_window": onset,
                             "n_windows": int(config["duration_windows"])}
    write_xjtu_archive(out, bearings)
    with open(out / "ground_truth.json", "w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "prepare": cmd_prepare,
    "benchmark": cmd_benchmark,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bearing-survival",
        description="Annotate bearing archives with failure events and "
                    "fit censored survival models on time-domain features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat TOML config file")
        for key, default in DEFAULT_CONFIG.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, bool):
                p.add_argument(flag, dest=key, action="store_true", default=None)
            elif isinstance(default, list):
                p.add_argument(flag, dest=key, default=None,
                               help="comma-separated list")
            elif isinstance(default, int):
                p.add_argument(flag, dest=key, type=int, default=None)
            elif isinstance(default, float):
                p.add_argument(flag, dest=key, type=float, default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k in DEFAULT_CONFIG}
    try:
        config = load_config(args.config, overrides)
        return COMMANDS[args.command](config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    except (BearingSurvivalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR


if __name__ == "__main__":
    sys.exit(main())
