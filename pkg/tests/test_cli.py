import csv
import json
from pathlib import Path

import pytest

from creditshap.cli import EXIT_COMPUTE, EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from creditshap.synthetic import write_ledger_fixture


@pytest.fixture(scope="module")
def ledger_dir(tmp_path_factory):
    return write_ledger_fixture(tmp_path_factory.mktemp("ledger"), n_accounts=50, seed=0)


def run(*argv):
    return main(list(argv))


class TestStagedFlow:
    def test_ingest_featurize_select_train_evaluate_explain(self, ledger_dir, tmp_path):
        out = str(tmp_path / "out")
        common = ["--data", str(ledger_dir), "--out", out, "--seed", "7"]
        assert run("ingest", *common) == EXIT_OK
        assert (Path(out) / "sanity.json").exists()

        assert run("featurize", *common) == EXIT_OK
        with open(Path(out) / "features.csv") as fh:
            header = next(csv.reader(fh))
        assert len(header) == 108  # row_id + 106 KPIs + performance

        assert run("select", *common) == EXIT_OK
        selection = json.loads((Path(out) / "selection.json").read_text())
        assert selection["surviving"]

        fast = ["--set", 'model.params.n_rounds=40', "--set", "cv_folds=3"]
        assert run("train", *common, *fast) == EXIT_OK
        model = json.loads((Path(out) / "model.json").read_text())
        assert model["kind"] == "oblivious_boosting"
        assert model["trees"]

        assert run("evaluate", *common, *fast) == EXIT_OK
        ev = json.loads((Path(out) / "eval.json").read_text())
        assert len(ev["folds"]) == 3
        assert -1.0 <= ev["mean"] <= 1.0

        assert run("explain", *common, *fast, "--row", "A0003") == EXIT_OK
        wf = json.loads((Path(out) / "waterfall_A0003.json").read_text())
        assert wf["case"] in ("true positive", "true negative", "false positive", "false negative")
        assert (Path(out) / "waterfall_A0003.svg").exists()
        total = wf["baseline"] + sum(c["shap"] for c in wf["contributions"])
        assert abs(total - wf["margin"]) < 1e-8

    def test_grid_writes_csv(self, ledger_dir, tmp_path):
        out = str(tmp_path / "out")
        common = ["--data", str(ledger_dir), "--out", out]
        assert run("featurize", *common) == EXIT_OK
        rc = run(
            "grid", *common, "--set", "cv_folds=3",
            "--models", "logistic,oblivious_boosting",
            "--resamplers", "none,undersample",
            "--set", 'model.params.n_rounds=30',
        )
        assert rc == EXIT_OK
        with open(Path(out) / "grid.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert all(r["error"] == "" for r in rows)

    def test_report_end_to_end(self, ledger_dir, tmp_path):
        out = tmp_path / "out"
        rc = run(
            "report", "--data", str(ledger_dir), "--out", str(out),
            "--set", 'model.params.n_rounds=40', "--set", "cv_folds=3",
        )
        assert rc == EXIT_OK
        for name in ("sanity.json", "features.csv", "selection.json", "model.json", "eval.json", "importance.json", "importance.svg", "summary.json"):
            assert (out / name).exists(), name


class TestDeterminism:
    def test_report_rerun_byte_identical(self, ledger_dir, tmp_path):
        out = tmp_path / "out"
        args = (
            "report", "--data", str(ledger_dir), "--out", str(out),
            "--seed", "3", "--set", 'model.params.n_rounds=30', "--set", "cv_folds=3",
        )
        assert run(*args) == EXIT_OK
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert run(*args) == EXIT_OK
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], f"{name} differs between reruns"

    def test_seed_changes_outputs(self, ledger_dir, tmp_path):
        outs = []
        for seed in ("1", "2"):
            out = tmp_path / f"out{seed}"
            run(
                "report", "--data", str(ledger_dir), "--out", str(out),
                "--seed", seed, "--set", 'model.params.n_rounds=30', "--set", "cv_folds=3",
            )
            outs.append(json.loads((out / "eval.json").read_text()))
        assert outs[0]["folds"] != outs[1]["folds"]


class TestExitCodes:
    def test_unknown_resampling_is_config_error(self, ledger_dir, tmp_path):
        rc = run("evaluate", "--data", str(ledger_dir), "--out", str(tmp_path), "--set", "resampling=adasyn")
        assert rc == EXIT_CONFIG

    def test_bad_set_syntax_is_config_error(self, tmp_path):
        rc = run("ingest", "--out", str(tmp_path), "--set", "no-equals-sign")
        assert rc == EXIT_CONFIG

    def test_unknown_config_key_is_config_error(self, tmp_path):
        rc = run("ingest", "--out", str(tmp_path), "--set", "typo_key=1")
        assert rc == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        rc = run("ingest", "--config", str(tmp_path / "nope.json"))
        assert rc == EXIT_CONFIG

    def test_missing_data_dir_is_data_error(self, tmp_path):
        rc = run("ingest", "--data", str(tmp_path / "nothing"), "--out", str(tmp_path / "o"))
        assert rc == EXIT_DATA

    def test_select_without_features_is_data_error(self, tmp_path):
        rc = run("select", "--data", str(tmp_path), "--out", str(tmp_path / "o"))
        assert rc == EXIT_DATA

    def test_single_class_labels_fail_compute(self, tmp_path):
        data = write_ledger_fixture(tmp_path / "ledger", n_accounts=30, seed=1, bad_rate=0.0)
        out = str(tmp_path / "out")
        common = ["--data", str(data), "--out", out]
        assert run("featurize", *common) == EXIT_OK
        rc = run("evaluate", *common, "--set", "cv_folds=3")
        assert rc in (EXIT_DATA, EXIT_COMPUTE)
        assert rc != EXIT_OK

    def test_config_file_round_trip(self, ledger_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "data_dir": str(ledger_dir),
            "out_dir": str(tmp_path / "out"),
            "seed": 11,
            "cv_folds": 3,
            "model.params.n_rounds": 30,
        }))
        assert run("ingest", "--config", str(cfg)) == EXIT_OK
        sanity = json.loads((tmp_path / "out" / "sanity.json").read_text())
        assert sanity["seed"] == 11
