"""Command-line harness.

Subcommands: ingest, featurize, select, train, evaluate, grid, explain,
report.  Exit codes: 0 ok, 2 config error, 3 data error, 4 compute error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
from dataclasses import asdict
from pathlib import Path

from . import pipeline
from .features import FeatureMatrix, median_impute
from .metrics import TrainSplit
from .models import ModelSpec, TreeEnsemble, fit_model
from .pipeline import ConfigError, GridSpec, PipelineConfig, PipelineStageError
from .resampling import ResamplingStrategy, apply_strategy
from .tables import DataError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_COMPUTE = 4


def _load_config(args) -> PipelineConfig:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass  # keep raw string
        overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "data", None) is not None:
        overrides["data_dir"] = args.data
    if args.config:
        return PipelineConfig.from_file(args.config, overrides)
    return PipelineConfig.from_flat(overrides)


def _write_json(path, payload):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_ingest(config: PipelineConfig, args) -> int:
    bundle = pipeline.ingest_stage(config.data_dir)
    sanity = pipeline.validate_bundle(bundle)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "sanity.json", {"config_hash": config.hash(), "seed": config.seed, **asdict(sanity)})
    print(f"{sanity.n_accounts} accounts, {sanity.n_labeled} labeled")
    for w in sanity.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_featurize(config: PipelineConfig, args) -> int:
    bundle = pipeline.ingest_stage(config.data_dir)
    matrix = pipeline.featurize_stage(bundle)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(out / "features.csv")
    print(f"wrote {len(matrix.row_ids)} rows x {len(matrix.columns)} KPI columns")
    return EXIT_OK


def _load_matrix(config: PipelineConfig) -> FeatureMatrix:
    path = Path(config.out_dir) / "features.csv"
    if not path.exists():
        raise DataError(f"{path} not found; run the featurize stage first")
    return FeatureMatrix.from_csv(path)


def cmd_select(config: PipelineConfig, args) -> int:
    matrix = _load_matrix(config)
    pruned, report = pipeline.select_stage(matrix, config)
    out = Path(config.out_dir)
    report.to_json(out / "selection.json")
    pruned.to_csv(out / "features_pruned.csv")
    print(report.table())
    return EXIT_OK


def _working_matrix(config: PipelineConfig) -> FeatureMatrix:
    pruned_path = Path(config.out_dir) / "features_pruned.csv"
    if pruned_path.exists():
        matrix = FeatureMatrix.from_csv(pruned_path)
    else:
        matrix, _ = pipeline.select_stage(_load_matrix(config), config)
    if config.feature_set == "top_k":
        matrix, _, _ = pipeline.shap_reduce_stage(matrix, config)
    return matrix


def cmd_train(config: PipelineConfig, args) -> int:
    matrix = _working_matrix(config)
    X, _ = median_impute(matrix.values)
    strategy = ResamplingStrategy(config.resampling, config.k_neighbors, config.seed)
    Xb, yb, wb = apply_strategy(strategy, TrainSplit(X, matrix.y))
    spec = ModelSpec(config.model, config.model_params)
    fitted = fit_model(spec, Xb, yb, matrix.columns, sample_weight=wb, seed=config.seed)
    out = Path(config.out_dir)
    if isinstance(fitted.model, TreeEnsemble):
        payload = fitted.model.to_dict()
        payload["stamp"] = {"config_hash": config.hash(), "seed": config.seed}
        _write_json(out / "model.json", payload)
        print(f"saved {config.model} with {len(fitted.model.trees)} trees")
    else:
        print(f"fitted {config.model} (non-tree models are not serialized)")
    return EXIT_OK


def cmd_evaluate(config: PipelineConfig, args) -> int:
    matrix = _working_matrix(config)
    spec = ModelSpec(config.model, config.model_params)
    strategy = ResamplingStrategy(config.resampling, config.k_neighbors, config.seed)
    cv = pipeline.evaluate_cell(spec, strategy, matrix, config.cv_folds, config.seed)
    _write_json(
        Path(config.out_dir) / "eval.json",
        {
            "config_hash": config.hash(),
            "seed": config.seed,
            "model": config.model,
            "resampling": config.resampling,
            "feature_set": config.feature_set,
            "folds": cv.fold_ginis,
            "mean": cv.mean,
            "std": cv.std,
        },
    )
    print(f"{config.model} x {config.resampling}: gini {cv.formatted()}")
    return EXIT_OK


def cmd_grid(config: PipelineConfig, args) -> int:
    matrix, _ = pipeline.select_stage(_load_matrix(config), config)
    matrices = {"pruned": matrix}
    feature_sets = args.feature_sets.split(",") if args.feature_sets else ["pruned"]
    if "top_20" in feature_sets or "top_k" in feature_sets:
        reduced, _, _ = pipeline.shap_reduce_stage(matrix, config)
        matrices["top_20"] = reduced
        feature_sets = ["top_20" if f == "top_k" else f for f in feature_sets]
    grid = GridSpec(
        models=args.models.split(",") if args.models else ["logistic", "oblivious_boosting"],
        resamplers=args.resamplers.split(",") if args.resamplers else ["none", "smote"],
        feature_sets=feature_sets,
    )
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = pipeline.run_grid(grid, matrices, config, out / "grid.csv")
    print(pipeline.format_grid(rows))
    return EXIT_OK


def cmd_explain(config: PipelineConfig, args) -> int:
    matrix = _working_matrix(config)
    model_path = Path(config.out_dir) / "model.json"
    if not model_path.exists():
        raise DataError(f"{model_path} not found; run the train stage first")
    ensemble = TreeEnsemble.load(model_path)
    from .models import FittedModel

    _, medians = median_impute(matrix.values)
    fitted = FittedModel(ModelSpec(config.model), ensemble, medians)
    row_id = args.row or matrix.row_ids[0]
    data = pipeline.explain_account(fitted, matrix, row_id, config.out_dir)
    print(f"{row_id}: p(bad) = {data['probability']:.3f} -> {data['case']}")
    return EXIT_OK


def cmd_report(config: PipelineConfig, args) -> int:
    result = pipeline.run_pipeline(config)
    print(f"artifacts in {result['out_dir']} (config {result['config_hash']})")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "featurize": cmd_featurize,
    "select": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
    "explain": cmd_explain,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="creditshap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file with flat dotted keys")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--data", default=None, help="directory holding the four CSV tables")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
        if name == "grid":
            p.add_argument("--models", default=None, help="comma list of model families")
            p.add_argument("--resamplers", default=None, help="comma list of strategies")
            p.add_argument("--feature-sets", dest="feature_sets", default=None)
        if name == "explain":
            p.add_argument("--row", default=None, help="row id to explain")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PipelineStageError as exc:
        code = EXIT_DATA if isinstance(exc.cause, DataError) else EXIT_COMPUTE
        print(f"{exc}", file=sys.stderr)
        return code
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
