"""Command-line interface: exit codes, file outputs, end-to-end pipeline."""
import json

import numpy as np
import pytest

import rebel.cli as cli
from rebel.boost import NumericOverflowError
from rebel.io import load_model


def run(argv):
    return cli.main([str(a) for a in argv])


def test_synth_train_eval_predict_pipeline(tmp_path, capsys):
    train_csv = tmp_path / "train.csv"
    test_csv = tmp_path / "test.csv"
    costs_csv = tmp_path / "costs.csv"
    model_txt = tmp_path / "model.txt"
    trace_csv = tmp_path / "trace.csv"
    pred_csv = tmp_path / "pred.csv"

    assert run(["synth", "--k", 3, "--clusters", 2, "--train-total", 120,
                "--test-total", 60, "--seed", 7, "--cost-seed", 3,
                "--out-train", train_csv, "--out-test", test_csv,
                "--out-costs", costs_csv]) == 0
    out = capsys.readouterr().out
    assert "120 train / 60 test" in out
    assert costs_csv.exists()

    assert run(["train", "--data", train_csv, "--labels", "col:-1",
                "--costs", costs_csv, "--rounds", 15, "--out", model_txt,
                "--trace", trace_csv, "--val", test_csv]) == 0
    out = capsys.readouterr().out
    assert "trained" in out and "best validation round count" in out
    model = load_model(model_txt)
    assert model.k == 3
    assert trace_csv.read_text().startswith("round,loss")

    assert run(["eval", "--model", model_txt, "--data", test_csv,
                "--labels", "col:-1", "--costs", costs_csv]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["k"] == 3 and report["n"] == 60
    assert report["risk"] >= 0.0

    assert run(["predict", "--model", model_txt, "--data", test_csv,
                "--labels", "col:-1", "--out", pred_csv]) == 0
    lines = pred_csv.read_text().strip().split("\n")
    assert lines[0] == "pred,score_1,score_2,score_3"
    assert len(lines) == 61
    preds = [int(l.split(",", 1)[0]) for l in lines[1:]]
    assert set(preds) <= {1, 2, 3}


def test_predict_unlabeled_features_to_stdout(tmp_path, capsys):
    train_csv = tmp_path / "train.csv"
    test_csv = tmp_path / "test.csv"
    model_txt = tmp_path / "model.txt"
    run(["synth", "--k", 2, "--train-total", 40, "--test-total", 10,
         "--seed", 1, "--out-train", train_csv, "--out-test", test_csv])
    run(["train", "--data", train_csv, "--labels", "col:-1", "--rounds", 5,
         "--out", model_txt])
    capsys.readouterr()
    feats = tmp_path / "plain.csv"
    feats.write_text("0.0,0.0\n1.0,-1.0\n")
    assert run(["predict", "--model", model_txt, "--data", feats]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "pred,score_1,score_2"
    assert len(out) == 3


def test_missing_file_exits_2(tmp_path, capsys):
    assert run(["train", "--data", tmp_path / "nope.csv", "--labels", "col:-1",
                "--rounds", 3, "--out", tmp_path / "m.txt"]) == 2
    assert "error:" in capsys.readouterr().err


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["train"])  # missing required arguments
    assert exc.value.code == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_bad_epsilon_exits_2(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("0.0,a\n1.0,b\n")
    assert run(["train", "--data", data, "--labels", "col:-1", "--rounds", 2,
                "--epsilon", "wat", "--out", tmp_path / "m.txt"]) == 2
    capsys.readouterr()


def test_oracle_check_passes(capsys):
    assert run(["oracle-check", "--trials", 2, "--rounds", 8, "--n", 60,
                "--d", 3, "--seed", 11]) == 0
    out = capsys.readouterr().out
    assert out.count(": ok") == 2
    assert "oracle check passed" in out


def test_oracle_check_negative_control_fails(capsys):
    """Perturbing the smoothing constant must break binary-reduction parity."""
    assert run(["oracle-check", "--trials", 2, "--rounds", 10, "--n", 60,
                "--d", 3, "--seed", 11, "--debug-epsilon-scale", 10]) == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out
    assert "oracle check FAILED" in captured.err


def test_overflow_exits_3(tmp_path, capsys, monkeypatch):
    def boom(*a, **kw):
        raise NumericOverflowError(round_index=4)

    monkeypatch.setattr(cli, "train", boom)
    data = tmp_path / "d.csv"
    data.write_text("0.0,a\n1.0,b\n")
    assert run(["train", "--data", data, "--labels", "col:-1", "--rounds", 2,
                "--out", tmp_path / "m.txt"]) == 3
    assert "overflow" in capsys.readouterr().err


def test_compare_tiny_run(tmp_path, capsys):
    out = tmp_path / "compare.csv"
    assert run(["compare", "--datasets", 1, "--matrices", 2, "--rounds", 5,
                "--seed", 3, "--a0-mode", "both", "--out", out]) == 0
    text = capsys.readouterr().out
    assert "[a0 on]" in text and "[a0 off]" in text
    assert out.exists() and (tmp_path / "compare.noa0.csv").exists()
    header = out.read_text().split("\n", 1)[0]
    assert header == "trial_id,dataset_seed,cost_seed,rebel_risk,twostep_risk,winner"
