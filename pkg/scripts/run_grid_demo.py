#!/usr/bin/env python3
"""End-to-end demo: synthetic ledger -> features -> model x resampler grid.

Usage: python3 scripts/run_grid_demo.py [--out out/demo] [--accounts 150]
"""

import argparse
from pathlib import Path

from creditshap.pipeline import (
    GridSpec,
    PipelineConfig,
    featurize_stage,
    format_grid,
    ingest_stage,
    run_grid,
    select_stage,
    shap_reduce_stage,
)
from creditshap.synthetic import write_ledger_fixture


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/demo")
    parser.add_argument("--accounts", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    data_dir = write_ledger_fixture(out / "data", n_accounts=args.accounts, seed=args.seed)
    config = PipelineConfig(
        data_dir=str(data_dir),
        out_dir=str(out),
        seed=args.seed,
        cv_folds=3,
        model_params={"n_rounds": 80},
    )
    matrix = featurize_stage(ingest_stage(data_dir))
    pruned, report = select_stage(matrix, config)
    print(f"{len(matrix.columns)} KPI columns -> {len(pruned.columns)} after pruning")
    reduced, _, _ = shap_reduce_stage(pruned, config)
    grid = GridSpec(
        models=["logistic", "gradient_boosting", "oblivious_boosting"],
        resamplers=["none", "undersample", "smote", "sqrt_balanced"],
        feature_sets=["pruned", "top_20"],
    )
    rows = run_grid(grid, {"pruned": pruned, "top_20": reduced}, config, out / "grid.csv")
    print(format_grid(rows))
    print(f"grid written to {out / 'grid.csv'}")


if __name__ == "__main__":
    main()
