import json
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from gener.checkpoint import read_checkpoint
from gener.cli import main
from gener.ingest import parse_expression_tsv
from helpers import TINY

FAST_TRAIN = {"max_epochs": 3, "patience": 2}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and out.strip() else out)


def synth(capsys, d, *extra):
    code, doc = run(capsys, "synth", "--out", d, "--modules", 4, "--genes-per-module", 5, "--length", 16, *extra)
    assert code == 0
    cfg = json.loads((d / "config.json").read_text())
    cfg["model"] = dict(TINY)
    cfg["train"] = dict(FAST_TRAIN)
    (d / "config.json").write_text(json.dumps(cfg))
    return doc


@pytest.fixture
def prepared(tmp_path, capsys):
    synth(capsys, tmp_path)
    code, stats = run(capsys, "prepare", "--config", tmp_path / "config.json", "--out", tmp_path)
    assert code == 0
    return tmp_path, stats


def test_synth_round_trip_and_seed(tmp_path, capsys):
    doc = synth(capsys, tmp_path / "a")
    code, stats = run(capsys, "prepare", "--config", tmp_path / "a" / "config.json", "--out", tmp_path / "a")
    assert stats["kept"] == doc["positives_written"] == 4 * 10
    synth(capsys, tmp_path / "b", "--seed", 8)
    assert (tmp_path / "a" / "expression.tsv").read_bytes() != (tmp_path / "b" / "expression.tsv").read_bytes()


def test_synth_zero_noise_reports_duplicates(tmp_path, capsys):
    doc = synth(capsys, tmp_path, "--sigma", 0)
    assert doc["duplicate_rows"] == 20


def test_synth_invalid_spec_exit_2(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--length", "1"]) == 2


def test_prepare_outputs(prepared):
    d, stats = prepared
    assert (d / "manifest.tsv").read_text().startswith("gene_a\tgene_b\tlabel\tsplit\n")
    assert stats["splits"]["train"] == {"positive": 32, "negative": 32}


def test_prepare_quantile_columns_identical(tmp_path, capsys):
    synth(capsys, tmp_path)
    cfg = json.loads((tmp_path / "config.json").read_text())
    cfg["data"]["normalization"] = "quantile"
    (tmp_path / "config.json").write_text(json.dumps(cfg))
    assert run(capsys, "prepare", "--config", tmp_path / "config.json", "--out", tmp_path)[0] == 0
    v = np.sort(parse_expression_tsv(tmp_path / "matrix.norm.tsv").values, axis=0)
    assert np.allclose(v, v[:, :1], atol=1e-9)


def test_prepare_missing_expression_exit_3(tmp_path, capsys):
    synth(capsys, tmp_path)
    (tmp_path / "expression.tsv").unlink()
    out = tmp_path / "run"
    assert main(["prepare", "--config", str(tmp_path / "config.json"), "--out", str(out)]) == 3
    assert not out.exists() or not any(out.iterdir())


def test_prepare_bad_config_exit_2(tmp_path, capsys):
    (tmp_path / "c.json").write_text('{"data": {"expression_path": "x"}}')
    assert main(["prepare", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 2
    (tmp_path / "c.json").write_text("{not json")
    assert main(["prepare", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 2


def test_prepare_table_split_counts(tmp_path, capsys):
    genes = [f"G{i:03d}" for i in range(120)]
    rows = ["gene\t" + "\t".join(f"c{j}" for j in range(4))]
    r = np.random.default_rng(0)
    rows += [g + "\t" + "\t".join(repr(float(x)) for x in r.normal(size=4)) for g in genes]
    (tmp_path / "e.tsv").write_text("\n".join(rows) + "\n")
    pairs = list(combinations(genes, 2))[: 2 * 3368]
    (tmp_path / "p.tsv").write_text("".join(f"{a}\t{b}\t{k % 2}\n" for k, (a, b) in enumerate(pairs)))
    (tmp_path / "c.json").write_text(json.dumps({"data": {
        "expression_path": "e.tsv", "interactions_path": "p.tsv", "negatives": "from_file"}}))
    code, stats = run(capsys, "prepare", "--config", tmp_path / "c.json", "--out", tmp_path)
    assert code == 0
    assert stats["splits"] == {s: {"positive": n, "negative": n}
                               for s, n in (("train", 2694), ("val", 337), ("test", 337))}
    lines = (tmp_path / "manifest.tsv").read_text().splitlines()[1:]
    assert sum(1 for ln in lines if ln.endswith("\t1\ttrain")) == 2694


def test_train_arch_and_determinism(prepared, capsys):
    d, _ = prepared
    cfg = d / "config.json"
    assert run(capsys, "train", "--config", cfg, "--out", d)[0] == 0
    first = (d / "model.genr").read_bytes()
    assert read_checkpoint(d / "model.genr").architecture == "gener"
    assert run(capsys, "train", "--config", cfg, "--out", d)[0] == 0
    assert (d / "model.genr").read_bytes() == first
    code, rep = run(capsys, "train", "--config", cfg, "--out", d, "--arch", "cnn",
                    "--manifest", d / "manifest.tsv")
    assert code == 0 and read_checkpoint(d / "model.genr").architecture == "cnn_only"
    assert rep["architecture"] == "cnn_only"
    assert (d / "history.csv").read_text().startswith("epoch,train_loss,val_loss,val_auroc_micro")


def test_train_missing_manifest_is_data_error(tmp_path, capsys):
    synth(capsys, tmp_path)
    assert main(["train", "--config", str(tmp_path / "config.json"), "--out", str(tmp_path / "x")]) == 3


def test_train_empty_split_exit_4(prepared, capsys):
    d, _ = prepared
    lines = (d / "manifest.tsv").read_text().splitlines()
    (d / "manifest.tsv").write_text("\n".join(ln for ln in lines if not ln.endswith("\tval")) + "\n")
    assert main(["train", "--config", str(d / "config.json"), "--out", str(d)]) == 4


def test_evaluate_outputs_and_L_mismatch(prepared, capsys):
    d, _ = prepared
    assert run(capsys, "train", "--config", d / "config.json", "--out", d)[0] == 0
    code, rep = run(capsys, "evaluate", "--out", d)
    assert code == 0 and rep["split"] == "test"
    assert {"auroc_micro", "aupr_micro", "mcc_class1", "mcc_class2", "confusion",
            "n_train", "n_val", "n_test"} <= set(rep)
    for name in ("roc.csv", "pr.csv", "roc.svg", "pr.svg", "report.json"):
        assert (d / name).exists()
    assert (d / "roc.csv").read_text().startswith("fpr,tpr\n")
    assert (d / "pr.csv").read_text().startswith("recall,precision\n")

    m = parse_expression_tsv(d / "matrix.norm.tsv")
    wide = d / "wide.tsv"
    wide.write_text("gene\t" + "\t".join(f"c{j}" for j in range(20)) + "\n" +
                    "".join(g + "\t" + "\t".join(["0.5"] * 20) + "\n" for g in m.genes))
    assert main(["evaluate", "--out", str(d), "--matrix", str(wide)]) == 5
    err = capsys.readouterr().err
    assert "16" in err and "20" in err


def test_baseline_schema_matches_model_report(prepared, capsys):
    d, _ = prepared
    run(capsys, "train", "--config", d / "config.json", "--out", d)
    _, model = run(capsys, "evaluate", "--out", d)
    code, base = run(capsys, "baseline", "--out", d)
    assert code == 0 and json.loads((d / "baseline_report.json").read_text()) == base
    scalar = {"auroc_micro", "aupr_micro", "mcc_class1", "mcc_class2", "confusion", "n_train", "n_val", "n_test"}
    assert scalar <= set(base) and scalar <= set(model)
    assert base["auroc_micro"] > 0.9


def test_gridsearch_jobs_and_singleton(prepared, capsys):
    d, _ = prepared
    cfg = d / "config.json"
    (d / "grid.json").write_text(json.dumps({"lr": [0.001, 0.01], "dense_units": [4, 8]}))
    assert run(capsys, "gridsearch", "--config", cfg, "--out", d / "j1", "--manifest", d / "manifest.tsv",
               "--matrix", d / "matrix.norm.tsv", "--grid", d / "grid.json")[0] == 0
    assert run(capsys, "gridsearch", "--config", cfg, "--out", d / "j2", "--manifest", d / "manifest.tsv",
               "--matrix", d / "matrix.norm.tsv", "--grid", d / "grid.json", "--jobs", 2)[0] == 0
    board = (d / "j1" / "leaderboard.csv").read_text()
    assert board == (d / "j2" / "leaderboard.csv").read_text()
    assert board.count("\n") == 5

    (d / "single.json").write_text("{}")
    run(capsys, "gridsearch", "--config", cfg, "--out", d / "s", "--manifest", d / "manifest.tsv",
        "--matrix", d / "matrix.norm.tsv", "--grid", d / "single.json")
    run(capsys, "train", "--config", cfg, "--out", d)
    assert (d / "s" / "model.genr").read_bytes() == (d / "model.genr").read_bytes()


def test_predict(prepared, capsys):
    d, _ = prepared
    run(capsys, "train", "--config", d / "config.json", "--out", d)
    g = parse_expression_tsv(d / "matrix.norm.tsv").genes
    (d / "pairs.tsv").write_text(f"{g[0]}\t{g[1]}\n{g[1]}\t{g[0]}\n")
    code, doc = run(capsys, "predict", "--out", d, "--pairs", d / "pairs.tsv")
    p = [x["probability"] for x in doc["predictions"]]
    assert code == 0 and p[0] == p[1] and 0 <= p[0] <= 1
    (d / "pairs.tsv").write_text("NOPE\tNADA\n")
    assert main(["predict", "--out", str(d), "--pairs", str(d / "pairs.tsv")]) == 3
