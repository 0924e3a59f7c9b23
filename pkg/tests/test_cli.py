"""CLI behavior: exit codes, JSON output shape, and emitted files. The
heavier model families are exercised through the library tests; here the
fast logistic path plus untrained checkpoints keep every case quick."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from advlab.checkpoint import save_checkpoint
from advlab.cli import main
from advlab.models import MaxoutModel
from advlab.numerics import RngStream

DATA_DIR = str(Path(__file__).resolve().parent.parent / "data" / "mnist")


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def logistic_ckpt(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    code = main(["train", "logistic", "--out-dir", str(out), "--data-dir", DATA_DIR])
    assert code == 0
    return out / "logistic.ckpt"


def test_no_subcommand_exits_with_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_train_logistic_emits_metrics_and_files(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, "train", "logistic", "--out-dir", str(tmp_path), "--data-dir", DATA_DIR
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["model"] == "logistic"
    assert payload["clean"]["error_rate"] <= 0.05
    assert payload["fgsm"]["error_rate"] >= 0.90
    assert (tmp_path / "logistic.ckpt").exists()
    history = (tmp_path / "logistic_history.csv").read_text()
    assert history.startswith("epoch,train_err,valid_err,adv_valid_err,loss")


def test_attack_respects_limit(capsys, logistic_ckpt):
    code, out, _ = run_cli(
        capsys,
        "attack",
        "--checkpoint",
        str(logistic_ckpt),
        "--limit",
        "50",
        "--data-dir",
        DATA_DIR,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["n"] == 50
    assert payload["kind"] == "fgsm"
    assert 0.0 <= payload["metrics"]["error_rate"] <= 1.0


def test_attack_random_sign_with_clamp(capsys, logistic_ckpt):
    code, out, _ = run_cli(
        capsys,
        "attack",
        "--checkpoint",
        str(logistic_ckpt),
        "--kind",
        "random_sign",
        "--clamp",
        "--limit",
        "20",
        "--data-dir",
        DATA_DIR,
    )
    assert code == 0
    assert json.loads(out)["kind"] == "random_sign"


def test_attack_missing_checkpoint_fails_cleanly(capsys):
    code, _, err = run_cli(capsys, "attack", "--checkpoint", "/nonexistent.ckpt")
    assert code == 1
    assert "advlab:" in err


def test_sweep_writes_csv(capsys, logistic_ckpt, tmp_path):
    out_csv = tmp_path / "trace.csv"
    code, out, _ = run_cli(
        capsys,
        "sweep",
        "--checkpoint",
        str(logistic_ckpt),
        "--index",
        "0",
        "--half-range",
        "0.05",
        "--step",
        "0.005",
        "--out",
        str(out_csv),
        "--data-dir",
        DATA_DIR,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["grid_points"] == 21
    text = out_csv.read_text()
    assert text.startswith("epsilon,logit_")


def test_rubbish_reports_histogram(capsys, logistic_ckpt):
    code, out, _ = run_cli(
        capsys, "rubbish", "--checkpoint", str(logistic_ckpt), "--n", "64"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["n_samples"] == 64
    assert len(payload["class_histogram"]) == 2
    assert sum(payload["class_histogram"]) <= 64


def test_fool_runs_on_maxout_checkpoint(capsys, tmp_path):
    model = MaxoutModel.init(784, 10, 8, 2, RngStream(0, "cli fool"))
    ckpt = tmp_path / "m.ckpt"
    save_checkpoint(ckpt, model)
    code, out, _ = run_cli(
        capsys,
        "fool",
        "--checkpoint",
        str(ckpt),
        "--target",
        "3",
        "--attempts",
        "5",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["target_class"] == 3
    assert payload["attempts"] == 5
    assert 0 <= payload["successes"] <= 5


def test_transfer_between_checkpoints(capsys, logistic_ckpt):
    code, out, _ = run_cli(
        capsys,
        "transfer",
        "--source",
        str(logistic_ckpt),
        "--target",
        str(logistic_ckpt),
        "--epsilon",
        "0.1",
        "--data-dir",
        DATA_DIR,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["n"] == 10000
    assert payload["source_wrong"] >= payload["both_wrong"]


def test_reproduce_fig3_writes_report(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys,
        "reproduce",
        "fig3_logistic",
        "--out-dir",
        str(tmp_path),
        "--data-dir",
        DATA_DIR,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["recipe"] == "fig3_logistic"
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["results"]["fgsm"]["error_rate"] >= 0.90


def test_bench_compares_backends(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys,
        "bench",
        "--batch",
        "8",
        "--units",
        "4",
        "--pieces",
        "2",
        "--repeats",
        "2",
        "--out-dir",
        str(tmp_path),
    )
    assert code == 0
    payload = json.loads(out)
    assert set(payload["per_call_seconds"]) == {"numpy", "cython"}
    numpy_times = payload["per_call_seconds"]["numpy"]
    assert set(numpy_times) == {"maxout_reduce", "maxout_scatter", "softmax_xent"}
    assert all(t > 0 for t in numpy_times.values())
    assert (tmp_path / "bench.json").exists()


def test_train_with_bad_data_dir_fails_cleanly(capsys, tmp_path):
    code, _, err = run_cli(
        capsys, "train", "logistic", "--out-dir", str(tmp_path), "--data-dir", "/no/such/dir"
    )
    assert code == 1
    assert "advlab:" in err
