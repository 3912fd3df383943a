"""Command-line frontend: dataset generation, fitting, and evaluation.

Every command prints a JSON run manifest to stdout (resolved configuration,
input checksums, output paths, wall time).  Outputs are plot-ready CSV/JSON;
nothing is rendered.

Any flag can also be supplied through ``--config file.json`` whose keys
mirror the flag names (dashes or underscores); explicit flags win.

Exit codes: 0 success, 1 output I/O failure, 2 usage or configuration
error (including unreadable inputs), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .data import (DataMatrix, builtin_iris, generate_swiss_roll, load_csv,
                   load_idx, scale_features, write_csv)
from .embedding import DEFAULT_NULL_TOL
from .errors import NumericalError
from .evaluation import evaluate_embedding
from .metric import OptimizerConfig, load_metric, save_metric
from .pipeline import PipelineConfig, fit_alle, fit_lle
from .reconstruction import DEFAULT_GRAM_REG

DATASET_DEFAULTS = {
    "n": 1000,
    "noise": 0.0,
    "seed": 0,
    "factors": "1,1,10",
    "output": None,
}

FIT_DEFAULTS = {
    "input": None,
    "output": None,
    "algorithm": "alle",
    "input_format": "csv",
    "idx_labels": None,
    "has_header": False,
    "label_column": None,
    "color_column": None,
    "neighbors": 10,
    "components": 2,
    "epochs": 50,
    "optimizer": "sgd",
    "lr": 1e-3,
    "lam": 0.0,
    "metric_init": "identity",
    "init_sigma": 0.1,
    "metric_mode": "factorL",
    "recompute_neighbors": "never",
    "gram_reg": DEFAULT_GRAM_REG,
    "null_tol": DEFAULT_NULL_TOL,
    "seed": 0,
    "no_early_stop": False,
    "no_eta_clamp": False,
    "metric_in": None,
    "metric_out": None,
    "trace_out": None,
}

EVALUATE_DEFAULTS = {
    "original": None,
    "embedding": None,
    "labels": None,
    "label_column": None,
    "has_header": False,
    "k": None,
    "knn_k": 5,
    "test_fraction": 0.25,
    "split_seed": 0,
    "output": None,
}


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(command, config, inputs, outputs, started) -> None:
    payload = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.perf_counter() - started, 6),
        "version": __version__,
    }
    print(json.dumps(payload, indent=2))


def _resolve(args, defaults: dict, required: tuple = ()) -> dict:
    """Merge flag values over --config file values over defaults."""
    file_values = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            raw = json.load(f)
        if not isinstance(raw, dict):
            raise ValueError("--config must hold a JSON object")
        file_values = {str(k).replace("-", "_"): v for k, v in raw.items()}
        if "lambda" in file_values:
            file_values["lam"] = file_values.pop("lambda")

    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key)
        if flag is not None:
            resolved[key] = flag
        elif key in file_values:
            resolved[key] = file_values[key]
        else:
            resolved[key] = default
    for key in required:
        if resolved[key] is None:
            raise ValueError("missing required option --%s" % key.replace("_", "-"))
    return resolved


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptive-lle",
        description="Locally linear embedding with a learned neighborhood metric")
    sub = parser.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset", help="generate a benchmark dataset CSV")
    ds.add_argument("kind", choices=["swiss-roll", "scaled-swiss-roll", "iris"])
    ds.add_argument("--n", type=int)
    ds.add_argument("--noise", type=float)
    ds.add_argument("--seed", type=int)
    ds.add_argument("--factors",
                    help="per-column scale factors for scaled-swiss-roll")
    ds.add_argument("--output")
    ds.add_argument("--config", help="JSON file with defaults for any flag")

    fit = sub.add_parser("fit", help="fit an embedding")
    fit.add_argument("--input")
    fit.add_argument("--output")
    fit.add_argument("--config", help="JSON file with defaults for any flag")
    fit.add_argument("--input-format", choices=["csv", "idx"])
    fit.add_argument("--idx-labels", help="IDX label file (input-format=idx)")
    fit.add_argument("--has-header", action="store_true", default=None)
    fit.add_argument("--label-column", type=int)
    fit.add_argument("--color-column", type=int)
    fit.add_argument("--algorithm", choices=["lle", "alle"])
    fit.add_argument("--neighbors", type=int)
    fit.add_argument("--components", type=int)
    fit.add_argument("--epochs", type=int)
    fit.add_argument("--optimizer", choices=["sgd", "adam"])
    fit.add_argument("--lr", type=float)
    fit.add_argument("--lambda", dest="lam", type=float)
    fit.add_argument("--metric-init", choices=["identity", "random"])
    fit.add_argument("--init-sigma", type=float)
    fit.add_argument("--metric-mode", choices=["factorL", "directM"])
    fit.add_argument("--recompute-neighbors", choices=["never", "every-epoch"])
    fit.add_argument("--gram-reg", type=float)
    fit.add_argument("--null-tol", type=float)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--no-early-stop", action="store_true", default=None)
    fit.add_argument("--no-eta-clamp", action="store_true", default=None)
    fit.add_argument("--metric-in", help="CSV of a factor L to start from")
    fit.add_argument("--metric-out", help="write the final factor L as CSV")
    fit.add_argument("--trace-out", help="write the per-epoch error trace as CSV")

    ev = sub.add_parser("evaluate", help="score an embedding against its source")
    ev.add_argument("--original")
    ev.add_argument("--embedding")
    ev.add_argument("--labels", help="single-column CSV of integer labels")
    ev.add_argument("--label-column", type=int,
                    help="label column inside --original (headerless files)")
    ev.add_argument("--has-header", action="store_true", default=None,
                    help="both CSVs carry a header row")
    ev.add_argument("--k", type=int)
    ev.add_argument("--knn-k", type=int)
    ev.add_argument("--test-fraction", type=float)
    ev.add_argument("--split-seed", type=int)
    ev.add_argument("--output")
    ev.add_argument("--config", help="JSON file with defaults for any flag")
    return parser


def _cmd_dataset(args) -> int:
    started = time.perf_counter()
    opts = _resolve(args, DATASET_DEFAULTS, required=("output",))
    if args.kind == "iris":
        data = builtin_iris()
        config = {"kind": args.kind, "output": opts["output"]}
    else:
        data = generate_swiss_roll(opts["n"], opts["noise"], opts["seed"])
        config = {"kind": args.kind, "n": opts["n"], "noise": opts["noise"],
                  "seed": opts["seed"], "output": opts["output"]}
        if args.kind == "scaled-swiss-roll":
            factors = [float(v) for v in str(opts["factors"]).split(",")]
            data = scale_features(data, factors)
            config["factors"] = factors
    try:
        write_csv(data, opts["output"])
    except OSError as exc:
        print("error: cannot write %s: %s" % (opts["output"], exc),
              file=sys.stderr)
        return 1
    _manifest("dataset", config, [], [opts["output"]], started)
    return 0


def _load_fit_input(opts) -> DataMatrix:
    if opts["input_format"] == "idx":
        return load_idx(opts["input"], opts["idx_labels"])
    return load_csv(opts["input"], has_header=opts["has_header"],
                    label_column=opts["label_column"],
                    color_column=opts["color_column"])


def _cmd_fit(args) -> int:
    started = time.perf_counter()
    opts = _resolve(args, FIT_DEFAULTS, required=("input", "output"))
    opts["recompute_neighbors"] = str(opts["recompute_neighbors"]).replace("-", "_")
    data = _load_fit_input(opts)

    optimizer = OptimizerConfig(
        method=opts["optimizer"], eta=opts["lr"], lam=opts["lam"],
        mode=opts["metric_mode"], enforce_eta_bound=not opts["no_eta_clamp"])
    config = PipelineConfig(
        n_components=opts["components"], n_neighbors=opts["neighbors"],
        max_epochs=opts["epochs"], optimizer=optimizer,
        metric_init=opts["metric_init"], init_sigma=opts["init_sigma"],
        recompute_neighbors=opts["recompute_neighbors"],
        gram_reg=opts["gram_reg"], null_tol=opts["null_tol"],
        early_stop=not opts["no_early_stop"], seed=opts["seed"])

    initial_state = load_metric(opts["metric_in"]) if opts["metric_in"] else None
    if opts["algorithm"] == "lle":
        result = fit_lle(data, config)
    else:
        result = fit_alle(data, config, initial_state=initial_state)

    embedding = DataMatrix(result.Y, labels=data.labels,
                           feature_names=["y%d" % j for j in range(result.dim)])
    outputs = []
    try:
        write_csv(embedding, opts["output"])
        outputs.append(opts["output"])
        if opts["metric_out"]:
            save_metric(result.metric, opts["metric_out"])
            outputs.append(opts["metric_out"])
        if opts["trace_out"]:
            with open(opts["trace_out"], "w", encoding="utf-8", newline="\n") as f:
                f.write("epoch,E\n")
                for epoch, err in enumerate(result.error_trace, start=1):
                    f.write("%d,%s\n" % (epoch, repr(float(err))))
            outputs.append(opts["trace_out"])
    except OSError as exc:
        print("error: cannot write output: %s" % exc, file=sys.stderr)
        return 1

    manifest_config = dict(opts)
    manifest_config.update({
        "epochs_run": int(result.error_trace.size),
        "eta_guard": bool(result.eta_guard),
    })
    inputs = [opts["input"]] + ([opts["idx_labels"]] if opts["idx_labels"] else [])
    if opts["metric_in"]:
        inputs.append(opts["metric_in"])
    _manifest("fit", manifest_config, inputs, outputs, started)
    return 0


def _load_eval_table(path, has_header: bool, label_column=None):
    """Read a CSV, routing header columns named label/color out of the
    features."""
    label_idx = label_column
    color_idx = None
    if has_header:
        with open(path, "r", encoding="utf-8") as f:
            header = [c.strip() for c in f.readline().split(",")]
        if label_idx is None and "label" in header:
            label_idx = header.index("label")
        if "color" in header:
            color_idx = header.index("color")
    return load_csv(path, has_header=has_header, label_column=label_idx,
                    color_column=color_idx)


def _cmd_evaluate(args) -> int:
    started = time.perf_counter()
    opts = _resolve(args, EVALUATE_DEFAULTS,
                    required=("original", "embedding", "k", "output"))
    original = _load_eval_table(opts["original"], opts["has_header"],
                                opts["label_column"])
    embedded = _load_eval_table(opts["embedding"], opts["has_header"])
    if original.n != embedded.n:
        raise ValueError("row count mismatch: original has %d rows, embedding %d"
                         % (original.n, embedded.n))

    labels = None
    if opts["labels"] is not None:
        labels = load_csv(opts["labels"], has_header=False, label_column=0).labels
        if labels.size != original.n:
            raise ValueError("label file row count does not match the data")
    elif original.labels is not None:
        labels = original.labels
    elif embedded.labels is not None:
        labels = embedded.labels

    report = evaluate_embedding(
        original.values, embedded.values, opts["k"], labels=labels,
        k_classify=opts["knn_k"], test_fraction=opts["test_fraction"],
        seed=opts["split_seed"],
        config_echo={"original": opts["original"], "embedding": opts["embedding"],
                     "k": opts["k"], "knn_k": opts["knn_k"],
                     "test_fraction": opts["test_fraction"],
                     "split_seed": opts["split_seed"]})
    try:
        with open(opts["output"], "w", encoding="utf-8", newline="\n") as f:
            f.write(report.to_json() + "\n")
    except OSError as exc:
        print("error: cannot write %s: %s" % (opts["output"], exc),
              file=sys.stderr)
        return 1
    inputs = [opts["original"], opts["embedding"]]
    if opts["labels"]:
        inputs.append(opts["labels"])
    _manifest("evaluate", report.config_echo, inputs, [opts["output"]], started)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "dataset":
            return _cmd_dataset(args)
        if args.command == "fit":
            return _cmd_fit(args)
        return _cmd_evaluate(args)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    except (ValueError, FileNotFoundError, IsADirectoryError,
            json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
