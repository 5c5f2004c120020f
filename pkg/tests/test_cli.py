import json
import subprocess
import sys

import numpy as np
import pytest

from dbn_garson.attribution import ImportanceVector
from dbn_garson.cli import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, main
from dbn_garson.core import read_csv


@pytest.fixture
def synth_dir(tmp_path):
    assert main(["synth", "--n-samples", "300", "--seed", "2", "--out", str(tmp_path / "d.csv")]) == EXIT_OK
    recipe = {"task": "classification", "steps": [{"op": "set_target", "column": "y"},
                                                  {"op": "standardize", "columns": "numeric"}]}
    (tmp_path / "recipe.json").write_text(json.dumps(recipe))
    cfg = {"dataset": "d.csv", "recipe": "recipe.json", "dbna": {"hidden_sizes": [4], "n_epochs": 20},
           "top_k": [3], "models": ["logistic", "tree"], "cv_folds": 3, "output_dir": "out"}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    return tmp_path


class TestSubcommands:
    def test_synth(self, synth_dir):
        ds = read_csv(synth_dir / "d.csv", target="y")
        assert ds.n_samples == 300 and ds.n_features == 6
        truth = json.loads((synth_dir / "d.truth.json").read_text())
        assert len(truth["informative"]) == 3 and truth["seed"] == 2

    def test_run_with_overrides(self, synth_dir, capsys):
        code = main(["run", "--config", str(synth_dir / "cfg.json"), "--seed", "5", "--out", str(synth_dir / "o5")])
        assert code == EXIT_OK
        rep = json.loads((synth_dir / "o5" / "report.json").read_text())
        assert rep["config"]["seed"] == 5
        assert "top-3" in capsys.readouterr().out

    def test_rank(self, synth_dir):
        assert main(["rank", "--config", str(synth_dir / "cfg.json"), "--out", str(synth_dir / "r")]) == EXIT_OK
        assert {p.name for p in (synth_dir / "r").iterdir()} == {
            "importance_ega.csv", "importance_wald.csv", "dbna.json", "chart_ega_top3.csv", "chart_wald_top3.csv"}

    def test_chart(self, tmp_path):
        ImportanceVector.from_scores([10.0, 70.0, 20.0], ["a", "b", "c"]).to_csv(tmp_path / "imp.csv")
        out = tmp_path / "chart.csv"
        assert main(["chart", "--importance", str(tmp_path / "imp.csv"), "--k", "2", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[1].startswith("1,b,70.0") and lines[2].startswith("2,c,20.0,90.0")


class TestExitCodes:
    def test_config_error(self, tmp_path):
        (tmp_path / "c.json").write_text("{}")
        assert main(["run", "--config", str(tmp_path / "c.json")]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_data_error(self, synth_dir):
        (synth_dir / "d.csv").write_text("x0,y\n1.0,\n")
        assert main(["run", "--config", str(synth_dir / "cfg.json")]) == EXIT_DATA

    def test_numerical_error(self, synth_dir):
        # a separable target makes the Wald baseline undefined
        ds = read_csv(synth_dir / "d.csv", target="y")
        X = ds.X
        lines = ["x0,x1,y"] + [f"{float(a)!r},{float(b)!r},{int(a > 0)}" for a, b in X[:, :2]]
        (synth_dir / "d.csv").write_text("\n".join(lines) + "\n")
        cfg = json.loads((synth_dir / "cfg.json").read_text())
        cfg["top_k"] = [1]
        (synth_dir / "cfg.json").write_text(json.dumps(cfg))
        assert main(["run", "--config", str(synth_dir / "cfg.json")]) == EXIT_NUMERICAL
        assert not (synth_dir / "out").exists()

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "dbn_garson.cli", "run", "--config", str(tmp_path / "x.json")],
                              capture_output=True, text=True)
        assert proc.returncode == EXIT_CONFIG
        assert "error:" in proc.stderr

    def test_usage_error(self):
        with pytest.raises(SystemExit):
            main(["bogus"])
