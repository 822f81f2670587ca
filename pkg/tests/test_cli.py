import json

import pytest

from mlstream.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, OUTPUT_ENV, main
from mlstream.data_io import ArffStream


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.arff"
    assert main(["synth", "--output", str(path), "--labels", "3", "--features", "4",
                 "--instances", "300", "--seed", "5"]) == EXIT_OK
    return path


def run_args(dataset, out, *extra):
    return ["run", "--dataset", str(dataset), "--k", "2", "--chunk", "100", "--seed", "42",
            "--output-dir", str(out), *extra]


def test_synth_roundtrip_and_determinism(tmp_path, toy):
    header = ArffStream(toy).header
    assert (header.label_count, header.n_features) == (3, 4)
    assert len(list(ArffStream(toy))) == 300
    again = tmp_path / "again" / "toy.arff"  # parent directory is created
    main(["synth", "--output", str(again), "--labels", "3", "--features", "4", "--instances", "300",
          "--seed", "5"])
    assert again.read_bytes() == toy.read_bytes()


def test_synth_records_drift_point(tmp_path):
    path = tmp_path / "drift.arff"
    main(["synth", "--output", str(path), "--instances", "100", "--drift-point", "60"])
    assert "% drift_point=60" in path.read_text().splitlines()
    assert main(["synth", "--output", str(path), "--instances", "100", "--drift-point", "100"]) == EXIT_USAGE


def test_run_writes_reports_deterministically(tmp_path, toy):
    out = tmp_path / "out"
    assert main(run_args(toy, out, "--model", "goowe-cc", "eps")) == EXIT_OK
    first = (out / "toy_goowe-cc_42.json").read_bytes()
    assert (out / "toy_goowe-cc_42.csv").exists() and (out / "toy_eps_42.json").exists()
    assert main(run_args(toy, out, "--model", "goowe-cc")) == EXIT_OK
    assert (out / "toy_goowe-cc_42.json").read_bytes() == first
    summary = json.loads(first)
    assert summary["instances_evaluated"] == 200 and summary["n_windows"] == 2


def test_parallel_grid_matches_serial(tmp_path, toy):
    serial, parallel = tmp_path / "s", tmp_path / "p"
    models = ["--model", "goowe-br", "eabr"]
    assert main(run_args(toy, serial, *models)) == EXIT_OK
    assert main(run_args(toy, parallel, *models, "--workers", "2")) == EXIT_OK
    for name in ("toy_goowe-br_42.json", "toy_eabr_42.json"):
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


def test_output_dir_env_override(tmp_path, toy, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(run_args(toy, tmp_path / "ignored", "--model", "ebr")) == EXIT_OK
    assert (tmp_path / "env" / "toy_ebr_42.json").exists()
    assert not (tmp_path / "ignored").exists()


@pytest.mark.parametrize("extra", [["--model", "goowe-rt"], ["--model", "ebr", "--k", "1"],
                                   ["--model", "ebr", "--window", "101"], ["--bogus"]])
def test_usage_errors(tmp_path, toy, extra, capsys):
    assert main(run_args(toy, tmp_path, *extra)) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_data_error_reports_file_and_line(tmp_path, capsys):
    bad = tmp_path / "bad.arff"
    bad.write_text("@relation 'bad: -C 2'\n@attribute a {0,1}\n@attribute b {0,1}\n"
                   "@attribute x numeric\n@data\n0,1,0.5\n0,1,oops\n")
    assert main(run_args(bad, tmp_path, "--model", "ebr")) == EXIT_DATA
    err = capsys.readouterr().err
    assert "bad.arff" in err and "line 7" in err
    assert main(run_args(tmp_path / "missing.arff", tmp_path, "--model", "ebr")) == EXIT_DATA


def summary(path, dataset, model, f1):
    path.write_text(json.dumps({"dataset": dataset, "model": model, "metrics": {"f1_ex": f1}}))


def test_stats_command(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    for d, scores in {"d1": (0.5, 0.4), "d2": (0.6, 0.3)}.items():
        for m, f1 in zip(("a", "b"), scores):
            summary(tmp_path / f"{d}_{m}.json", d, m, f1)
    out = tmp_path / "stats"
    assert main(["stats", "--summaries", str(tmp_path / "d*.json"), "--output-dir", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "Friedman" in text and "critical difference = 1.386" in text
    payload = json.loads((out / "cd_f1_ex.json").read_text())
    assert payload["average_ranks"] == {"a": 1.0, "b": 2.0}

    (tmp_path / "d2_b.json").unlink()
    assert main(["stats", "--summaries", str(tmp_path / "d*.json"), "--output-dir", str(out)]) == EXIT_DATA
    assert "b on d2" in capsys.readouterr().err
    (tmp_path / "d2_a.json").unlink()
    assert main(["stats", "--summaries", str(tmp_path / "d*.json"), "--output-dir", str(out)]) == EXIT_DATA
