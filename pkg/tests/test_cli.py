"""Command-line flows: subcommand plumbing, exit codes, determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from condemb.cli import main

CONFIG = """
[synth]
n_records = 120
d = 16
latent = 4
noise_sigma = 0.05
n_conditions = 24
seed = 3

[compose]
variant = "cond"
subtract_condition = true

[split]
train_frac = 0.7
val_ratio = 0.7
seed = 2

[train]
kind = "nonlinear"
k = 4
lr = 1e-3
batch_size = 32
dropout_rate = 0.15
max_epochs = 4
seed = 1
early_stop_patience = 10
"""


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "bench"
    code = main([
        "synth", "--out-dir", str(out), "--n", "80", "--d", "12", "--latent", "4",
        "--noise", "0.02", "--n-conditions", "16", "--seed", "9",
    ])
    assert code == 0
    return out


def test_synth_outputs(synth_dir):
    assert (synth_dir / "dataset.jsonl").exists()
    assert (synth_dir / "store.cemb").exists()
    assert (synth_dir / "store.cemb.manifest.json").exists()
    assert (synth_dir / "ground_truth.ckpt").exists()
    summary = json.loads((synth_dir / "synth.json").read_text())
    assert summary["n_records"] == 80
    assert summary["store_rows"] == 80 * 2 + 16


def test_compose_train_eval_flow(synth_dir, tmp_path, capsys):
    pairs = tmp_path / "pairs"
    assert main([
        "compose", "--dataset", str(synth_dir / "dataset.jsonl"),
        "--store", str(synth_dir / "store.cemb"),
        "--variant", "cond", "--subtract-c", "--out", str(pairs),
    ]) == 0
    ckpt = tmp_path / "head.ckpt"
    assert main([
        "train", "--pairs", str(pairs), "--kind", "nonlinear", "--k", "4",
        "--batch-size", "32", "--max-epochs", "3", "--seed", "5",
        "--checkpoint", str(ckpt), "--history-csv", str(tmp_path / "hist.csv"),
    ]) == 0
    assert ckpt.exists()
    assert json.loads((str(ckpt) + ".split.json") and Path(str(ckpt) + ".split.json").read_text())
    hist = (tmp_path / "hist.csv").read_text().strip().splitlines()
    assert hist[0] == "epoch,train_loss,val_spearman"
    assert len(hist) == 4

    report = tmp_path / "eval.json"
    scores = tmp_path / "scores.csv"
    assert main([
        "eval", "--pairs", str(pairs), "--model", str(ckpt),
        "--report", str(report), "--scores-csv", str(scores),
    ]) == 0
    payload = json.loads(report.read_text())
    assert payload["n"] == 80
    assert -1.0 <= payload["spearman"] <= 1.0
    assert payload["model_id"].startswith("nonlinear:")
    assert len(scores.read_text().strip().splitlines()) == 81

    # unsupervised evaluation works without a model
    assert main(["eval", "--pairs", str(pairs), "--report", str(report)]) == 0
    assert json.loads(report.read_text())["model_id"] == "unsupervised"


def test_eval_exit_code_on_missing_pairs(tmp_path):
    code = main([
        "eval", "--pairs", str(tmp_path / "nope"), "--report", str(tmp_path / "r.json"),
    ])
    assert code == 3


def test_isotropy_subcommand(synth_dir, tmp_path):
    report = tmp_path / "iso.json"
    hist = tmp_path / "hist.csv"
    assert main([
        "isotropy", "--store", str(synth_dir / "store.cemb"),
        "--roles", "cond_given_s1,cond_given_s2",
        "--k", "200", "--seed", "4", "--report", str(report), "--hist-csv", str(hist),
    ]) == 0
    payload = json.loads(report.read_text())
    assert 0.0 < payload["i_iso"] <= 1.0
    assert payload["n"] == 160
    assert hist.read_text().startswith("row,cos_to_mean")


def test_isotropy_comparison(synth_dir, tmp_path):
    report = tmp_path / "cmp.json"
    assert main([
        "isotropy", "--store", str(synth_dir / "store.cemb"),
        "--store-b", str(synth_dir / "store.cemb"),
        "--k", "100", "--seed", "1", "--report", str(report),
    ]) == 0
    payload = json.loads(report.read_text())
    assert payload["delta_i_iso"] == 0.0


def test_inspect_prints_variants(synth_dir, capsys):
    assert main([
        "inspect", "--record-id", "3", "--store", str(synth_dir / "store.cemb"),
        "--dataset", str(synth_dir / "dataset.jsonl"),
        "--model", str(synth_dir / "ground_truth.ckpt"),
    ]) == 0
    out = capsys.readouterr().out
    assert "record 3" in out
    assert "cond-c" in out
    assert "rating:" in out


def test_inspect_missing_record_exit_code(synth_dir, capsys):
    code = main(["inspect", "--record-id", "no-such", "--store", str(synth_dir / "store.cemb")])
    assert code == 3


def test_validation_exit_code_on_bad_dataset(tmp_path, synth_dir):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"sentence1": "a", "sentence2": "b", "condition": "c", "label": 9}\n')
    code = main([
        "compose", "--dataset", str(bad), "--store", str(synth_dir / "store.cemb"),
        "--variant", "cond", "--out", str(tmp_path / "p"),
    ])
    assert code == 2


def test_run_pipeline_from_config(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text(CONFIG + f'\n[output]\ndir = "{tmp_path / "out"}"\n')
    assert main(["run", "--config", str(config)]) == 0
    out = tmp_path / "out"
    report = json.loads((out / "report.json").read_text())
    assert report["n_train"] + report["n_val"] + report["n_test"] == 120
    assert (out / "checkpoint.ckpt").exists()
    assert (out / "history.csv").exists()


def test_run_pipeline_bad_config_exit_code(tmp_path):
    config = tmp_path / "broken.toml"
    config.write_text("[compose]\nvariant = 'cond'\n")  # neither synth nor data
    assert main(["run", "--config", str(config)]) == 2


def test_run_pipeline_rejects_malformed_toml(tmp_path):
    config = tmp_path / "nonsense.toml"
    config.write_text("this is not toml [")
    assert main(["run", "--config", str(config)]) == 2
