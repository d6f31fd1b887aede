import json

import pytest

from divsum.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Synthetic instance written to disk through the synth subcommand."""
    root = tmp_path_factory.mktemp("cli")
    rc = main(
        [
            "synth",
            "--n", "60",
            "--d", "8",
            "--groups", "male:0.8,female:0.2",
            "--seed", "3",
            "--query-bias", "1.0",
            "--out-dir", str(root / "data"),
        ]
    )
    assert rc == 0
    data = root / "data"
    cfg = root / "run.toml"
    cfg.write_text(
        'embeddings = "data/embeddings.csv"\n'
        'labels = "data/labels.csv"\n'
        'control_set = "data/control_balanced.csv"\n'
        'query = "data/query.toml"\n'
        'algorithms = ["qs", "qs-balanced", "mmr"]\n'
        "m = 10\n"
    )
    # run.toml paths resolve against its own directory, so keep it beside data/
    assert (data / "embeddings.csv").exists()
    return root


class TestSynth:
    def test_writes_expected_files(self, workdir):
        data = workdir / "data"
        for name in (
            "embeddings.csv",
            "labels.csv",
            "query.toml",
            "query_refs.csv",
            "control_balanced.csv",
            "metadata.json",
        ):
            assert (data / name).exists(), name

    def test_bad_groups_is_usage_error(self, tmp_path):
        rc = main(
            ["synth", "--n", "10", "--d", "4", "--groups", "oops",
             "--out-dir", str(tmp_path / "x")]
        )
        assert rc == 1


class TestSummarize:
    def test_runs(self, workdir, capsys):
        rc = main(
            [
                "summarize",
                "--embeddings", str(workdir / "data/embeddings.csv"),
                "--query", str(workdir / "data/query.toml"),
                "--control", str(workdir / "data/control_balanced.csv"),
                "--labels", str(workdir / "data/labels.csv"),
                "--algorithm", "qs-balanced",
                "-m", "8",
            ]
        )
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out["sections"]["qs-balanced"]["ids"]) == 8

    def test_missing_file_is_data_error(self, workdir):
        rc = main(
            [
                "summarize",
                "--embeddings", str(workdir / "nope.csv"),
                "--query", str(workdir / "data/query.toml"),
                "-m", "5",
            ]
        )
        assert rc == 2

    def test_missing_flag_is_usage_error(self, workdir):
        rc = main(["summarize", "--embeddings", str(workdir / "data/embeddings.csv")])
        assert rc == 1


class TestRank:
    def test_full_ranking(self, workdir, capsys):
        rc = main(
            [
                "rank",
                "--embeddings", str(workdir / "data/embeddings.csv"),
                "--query", str(workdir / "data/query.toml"),
                "--control", str(workdir / "data/control_balanced.csv"),
            ]
        )
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out["ranking"]) == 60
        assert len(set(out["ranking"])) == 60


class TestEvaluate:
    def test_id_list(self, workdir, tmp_path, capsys):
        ids = [f"male_{j:05d}" for j in range(4)] + ["female_00000"]
        summary = tmp_path / "summary.txt"
        summary.write_text("\n".join(ids) + "\n")
        rc = main(
            [
                "evaluate",
                "--summary", str(summary),
                "--labels", str(workdir / "data/labels.csv"),
                "--embeddings", str(workdir / "data/embeddings.csv"),
                "--query", str(workdir / "data/query.toml"),
            ]
        )
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["metrics"]["anti_stereotypical"] == pytest.approx(0.2)
        assert "nonredundancy_logdet" in out["metrics"]


class TestCompare:
    def test_report(self, workdir, tmp_path):
        out = tmp_path / "report.json"
        rc = main(["compare", "--config", str(workdir / "run.toml"), "--output", str(out)])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert set(rep["sections"]) == {"qs", "qs-balanced", "mmr"}

    def test_bad_config_is_data_error(self, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text('embeddings = "missing.csv"\nquery = "q.toml"\n')
        assert main(["compare", "--config", str(cfg)]) == 2


class TestSweep:
    def test_alpha_sweep_with_csv(self, workdir, tmp_path):
        out = tmp_path / "sweep.json"
        csv_out = tmp_path / "sweep.csv"
        rc = main(
            [
                "sweep",
                "--config", str(workdir / "run.toml"),
                "--param", "alpha",
                "--values", "0,0.5,1",
                "--output", str(out),
                "--csv", str(csv_out),
            ]
        )
        assert rc == 0
        rep = json.loads(out.read_text())
        assert len(rep["rows"]) == 3
        assert csv_out.read_text().startswith("value,algorithm")

    def test_bad_values_usage_error(self, workdir):
        rc = main(
            ["sweep", "--config", str(workdir / "run.toml"),
             "--param", "alpha", "--values", "a,b"]
        )
        assert rc == 1

    def test_composition_needs_control_files(self, workdir):
        rc = main(
            ["sweep", "--config", str(workdir / "run.toml"),
             "--param", "control_composition", "--values", "0,1"]
        )
        assert rc == 1


class TestValidate:
    def test_ok(self, workdir, capsys):
        rc = main(
            [
                "validate",
                "--embeddings", str(workdir / "data/embeddings.csv"),
                "--labels", str(workdir / "data/labels.csv"),
                "--query", str(workdir / "data/query.toml"),
                "--control", str(workdir / "data/control_balanced.csv"),
            ]
        )
        assert rc == 0
        assert "ok:" in capsys.readouterr().out

    def test_rejects_corrupt(self, workdir, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,v0\na,nan\n")
        assert main(["validate", "--embeddings", str(bad)]) == 2
