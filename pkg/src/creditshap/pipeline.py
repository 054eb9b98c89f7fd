"""End-to-end orchestration: config, staged runs, the experiment grid and
per-account explanation artifacts.

Every artifact embeds the config hash and seed so a rerun with the same
inputs is byte-identical (timestamps are deliberately absent).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import explain, plots, selection
from .features import (
    FeatureMatrix,
    build_feature_matrix,
    drop_inactive_accounts,
    median_impute,
)
from .metrics import CvResult, TrainSplit, cross_validate, roc_auc
from .models import FittedModel, ModelSpec, TreeEnsemble, classify, fit_model
from .resampling import ResamplingStrategy, apply_strategy
from .tables import (
    DataError,
    LedgerBundle,
    join_bundle,
    load_table,
    reconstruct_bundle_balances,
    validate_bundle,
)


class ConfigError(Exception):
    """Invalid pipeline configuration."""


@dataclass
class PipelineConfig:
    data_dir: str = "."
    out_dir: str = "out"
    seed: int = 0
    correlation_threshold: float = 0.95
    missing_threshold: float = 0.5
    zero_as_missing: bool = False
    resampling: str = "none"
    k_neighbors: int = 5
    model: str = "oblivious_boosting"
    model_params: dict = field(default_factory=dict)
    feature_set: str = "pruned"  # pruned | top_k
    top_k: int = 20
    cv_folds: int = 5

    def __post_init__(self):
        from .models import MODEL_FAMILIES
        from .resampling import STRATEGY_KINDS

        if self.model not in MODEL_FAMILIES:
            raise ConfigError(f"unknown model family {self.model!r}")
        if self.resampling not in STRATEGY_KINDS:
            raise ConfigError(f"unknown resampling strategy {self.resampling!r}")
        if self.feature_set not in ("pruned", "top_k"):
            raise ConfigError(f"feature_set must be pruned or top_k, not {self.feature_set!r}")

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        """JSON config with flat dotted keys; explicit overrides win."""
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"missing config file {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from exc
        raw.update(overrides or {})
        return cls.from_flat(raw)

    @classmethod
    def from_flat(cls, raw: dict) -> "PipelineConfig":
        kwargs = {}
        params = {}
        for key, value in raw.items():
            if key.startswith("model.params."):
                params[key.split(".", 2)[2]] = value
            elif key in cls.__dataclass_fields__:
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        if params:
            kwargs.setdefault("model_params", {}).update(params)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def cell_seed(global_seed: int, label: str) -> int:
    """Per-cell seed independent of scheduling order."""
    digest = hashlib.sha256(f"{global_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def make_fit_and_score(spec: ModelSpec, strategy: ResamplingStrategy, seed: int):
    """CV callback: impute, resample and fit on the training split only."""

    def fit_and_score(split: TrainSplit, X_test, y_test):
        X_tr, medians = median_impute(split.X)
        Xb, yb, wb = apply_strategy(strategy, TrainSplit(X_tr, split.y))
        names = split.columns or [f"f{j}" for j in range(X_tr.shape[1])]
        fitted = fit_model(spec, Xb, yb, names, sample_weight=wb, seed=seed)
        X_te, _ = median_impute(np.asarray(X_test, dtype=float), medians)
        return fitted.predict_proba(X_te)

    return fit_and_score


def evaluate_cell(spec, strategy, matrix: FeatureMatrix, k: int, seed: int) -> CvResult:
    callback = make_fit_and_score(spec, strategy, seed)
    X = matrix.values
    result = cross_validate(callback, X, matrix.y, k=k, seed=seed)
    result.config.update({"model": spec.family, "resampling": strategy.kind})
    return result


def ingest_stage(data_dir) -> LedgerBundle:
    data = Path(data_dir)
    clients = load_table(data / "clients.csv", "clients")
    accounts = load_table(data / "accounts.csv", "accounts")
    transactions = load_table(data / "transactions.csv", "transactions")
    loans = load_table(data / "loans.csv", "loans")
    bundle = join_bundle(clients, accounts, transactions, loans)
    reconstruct_bundle_balances(bundle)
    return bundle


def featurize_stage(bundle) -> FeatureMatrix:
    return drop_inactive_accounts(build_feature_matrix(bundle))


def select_stage(matrix: FeatureMatrix, config: PipelineConfig):
    """Constant, missing and correlation pruning; merged report."""
    m1, r1 = selection.drop_constant(matrix)
    m2, r2 = selection.prune_missing(m1, config.missing_threshold, config.zero_as_missing)
    m3, r3 = selection.correlation_prune(m2, config.correlation_threshold)
    merged = selection.SelectionReport(list(matrix.columns))
    for rep in (r1, r2, r3):
        merged.removed.update(rep.removed)
    merged.finish()
    return m3, merged


def shap_reduce_stage(matrix: FeatureMatrix, config: PipelineConfig):
    """Fit the benchmark oblivious booster on the pruned matrix, rank by
    mean |SHAP| and keep the top-k columns."""
    X, _ = median_impute(matrix.values)
    spec = ModelSpec("oblivious_boosting", {"n_rounds": 150})
    fitted = fit_model(spec, X, matrix.y, matrix.columns, seed=config.seed)
    imp = explain.global_importance(fitted.model, X)
    reduced, report = selection.select_top_k_by_shap(matrix, imp.as_dict(), config.top_k)
    return reduced, report, imp


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage, writing artifacts under config.out_dir."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = {"config_hash": config.hash(), "seed": config.seed}
    stage = "ingest"
    try:
        bundle = ingest_stage(config.data_dir)
        sanity = validate_bundle(bundle)
        _write_json(out / "sanity.json", {**stamp, **asdict(sanity)})

        stage = "featurize"
        matrix = featurize_stage(bundle)
        matrix.to_csv(out / "features.csv")

        stage = "select"
        pruned, report = select_stage(matrix, config)
        report.to_json(out / "selection.json")
        working = pruned
        if config.feature_set == "top_k":
            working, topk_report, imp = shap_reduce_stage(pruned, config)
            _write_json(
                out / "top_k.json",
                {**stamp, "ranking": imp.ranking(), "kept": working.columns},
            )

        stage = "train"
        X, medians = median_impute(working.values)
        strategy = ResamplingStrategy(config.resampling, config.k_neighbors, config.seed)
        Xb, yb, wb = apply_strategy(strategy, TrainSplit(X, working.y))
        spec = ModelSpec(config.model, config.model_params)
        fitted = fit_model(spec, Xb, yb, working.columns, sample_weight=wb, seed=config.seed)
        if isinstance(fitted.model, TreeEnsemble):
            payload = fitted.model.to_dict()
            payload["stamp"] = stamp
            _write_json(out / "model.json", payload)

        stage = "evaluate"
        cv = evaluate_cell(spec, strategy, working, config.cv_folds, config.seed)
        probs = fitted.predict_proba(X)
        roc = roc_auc(working.y, probs)
        _write_json(
            out / "eval.json",
            {
                **stamp,
                "model": config.model,
                "resampling": config.resampling,
                "feature_set": config.feature_set,
                "folds": cv.fold_ginis,
                "mean": cv.mean,
                "std": cv.std,
                "train_auc": roc.auc,
                "train_gini": roc.gini,
                "roc": roc.points(),
            },
        )

        stage = "explain"
        if isinstance(fitted.model, TreeEnsemble):
            n_bg = min(len(working.row_ids), 50)
            imp = explain.global_importance(fitted.model, X[:n_bg])
            _write_json(out / "importance.json", {**stamp, "ranking": imp.ranking()})
            with open(out / "importance.svg", "w") as fh:
                fh.write(plots.importance_bar_svg(imp.ranking()))
            summary = explain.summary_data(fitted.model, X[:n_bg])
            _write_json(out / "summary.json", {**stamp, **summary})
    except (DataError, ValueError) as exc:
        partial = out / f"{stage}.partial"
        partial.write_text(f"stage {stage} failed: {exc}\n")
        raise PipelineStageError(stage, exc) from exc
    return {"out_dir": str(out), **stamp}


class PipelineStageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class GridSpec:
    models: list[str] = field(
        default_factory=lambda: ["logistic", "oblivious_boosting"]
    )
    resamplers: list[str] = field(default_factory=lambda: ["none", "smote"])
    feature_sets: list[str] = field(default_factory=lambda: ["pruned"])

    def cells(self):
        # class-weight strategies only pair with weighted-loss models
        weighted_ok = {"oblivious_boosting", "gradient_boosting", "mlp", "logistic", "logistic_binned"}
        for fs in self.feature_sets:
            for model in self.models:
                for res in self.resamplers:
                    if res in ("class_weight", "sqrt_balanced") and model == "random_forest":
                        continue
                    yield f"{model}|{res}|{fs}"


def run_grid(grid: GridSpec, matrices: dict[str, FeatureMatrix], config: PipelineConfig, out_path=None):
    """One row per (model, resampler, feature_set) cell: mean Gini (std)."""
    rows = []
    for label in grid.cells():
        model, res, fs = label.split("|")
        seed = cell_seed(config.seed, label)
        matrix = matrices[fs]
        try:
            spec = ModelSpec(model, config.model_params if model == config.model else {})
            strategy = ResamplingStrategy(res, config.k_neighbors, seed)
            cv = evaluate_cell(spec, strategy, matrix, config.cv_folds, seed)
            rows.append(
                {
                    "model": model,
                    "resampling": res,
                    "feature_set": fs,
                    "mean_gini": round(cv.mean, 6),
                    "std_gini": round(cv.std, 6),
                    "formatted": cv.formatted(),
                    "error": "",
                }
            )
        except Exception as exc:  # cell failure must not abort the grid
            rows.append(
                {
                    "model": model,
                    "resampling": res,
                    "feature_set": fs,
                    "mean_gini": "",
                    "std_gini": "",
                    "formatted": "",
                    "error": str(exc),
                }
            )
    if out_path is not None:
        import csv as _csv

        with open(out_path, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return rows


def format_grid(rows) -> str:
    head = f"{'model':20s} {'resampling':18s} {'features':8s} gini"
    lines = [head, "-" * len(head)]
    for r in rows:
        cell = r["formatted"] or f"ERROR: {r['error']}"
        lines.append(f"{r['model']:20s} {r['resampling']:18s} {r['feature_set']:8s} {cell}")
    return "\n".join(lines)


def explain_account(fitted: FittedModel, matrix: FeatureMatrix, row_id: str, out_dir, threshold: float = 0.5):
    """Waterfall artifact for one row, labeled TP/TN/FP/FN."""
    if row_id not in matrix.row_ids:
        raise DataError(f"unknown row id {row_id!r}")
    if not isinstance(fitted.model, TreeEnsemble):
        raise ValueError("per-account explanation targets tree ensembles")
    i = matrix.row_ids.index(row_id)
    X, _ = median_impute(matrix.values, fitted.medians)
    x = X[i]
    p = float(fitted.predict_proba(x[None, :])[0])
    pred = int(classify(np.array([p]), threshold)[0])
    truth = int(matrix.y[i])
    label = {(1, 1): "true positive", (0, 0): "true negative", (1, 0): "false positive", (0, 1): "false negative"}[(pred, truth)]
    data = explain.waterfall_data(fitted.model, x)
    data.update({"row_id": row_id, "true_label": truth, "predicted_label": pred, "case": label})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"waterfall_{row_id}.json", data)
    with open(out / f"waterfall_{row_id}.svg", "w") as fh:
        fh.write(plots.waterfall_svg(data))
    return data
