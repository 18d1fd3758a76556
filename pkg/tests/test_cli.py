import json
import subprocess
import sys
from hashlib import sha256
from pathlib import Path

import pytest

from ransomtrace.cli import main

from conftest import DEMO_DIR, EMBEDDINGS_16X4, batch_spec

PLAYBOOK = DEMO_DIR / "playbook"
LEAK = DEMO_DIR / "leak"


def run(*args):
    return main([str(a) for a in args])


def test_no_arguments_is_usage_error(capsys):
    assert run() == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_is_usage_error():
    assert run("frobnicate") == 2


def _gen_fixture(tmp_path, name="fx", seed=7):
    tmp_path.mkdir(parents=True, exist_ok=True)
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"cases": [
        {"motif": "pattern_a", "ransom_sats": 100_000_000, "share": "0.195"},
        {"motif": "aggregation", "inputs": 12},
    ]}), encoding="utf-8")
    out = tmp_path / "out"
    assert run("gen-fixture", "--spec", spec, "--seed", seed,
               "--name", name, "--out", out) == 0
    return out


def test_gen_fixture_writes_manifest_with_correct_hashes(tmp_path):
    out = _gen_fixture(tmp_path)
    manifest = json.loads((out / "run.manifest.json").read_text())
    assert manifest["subcommand"] == "gen-fixture"
    assert manifest["seed"] == 7
    for name, digest in manifest["artifacts"].items():
        assert sha256((out / name).read_bytes()).hexdigest() == digest


def test_gen_fixture_reproducible(tmp_path):
    out1 = _gen_fixture(tmp_path / "a")
    out2 = _gen_fixture(tmp_path / "b")
    assert (out1 / "fx.jsonl").read_bytes() == (out2 / "fx.jsonl").read_bytes()
    m1 = json.loads((out1 / "run.manifest.json").read_text())
    m2 = json.loads((out2 / "run.manifest.json").read_text())
    # artifacts and configuration identical; input paths may differ
    assert m1["artifacts"] == m2["artifacts"]
    assert m1["config"] == m2["config"] and m1["seed"] == m2["seed"]


def test_detect_patterns_pipeline(tmp_path):
    out = _gen_fixture(tmp_path)
    truth = json.loads((out / "fx.truth.json").read_text())
    seed_addr = next(a for a, t in truth.items() if t["motif"] == "pattern_a")
    seeds = tmp_path / "seeds.txt"
    seeds.write_text(seed_addr + "\n", encoding="utf-8")
    det = tmp_path / "det"
    assert run("detect-patterns", "--ledger", out / "fx.jsonl",
               "--seeds", seeds, "--n", 2, "--out", det) == 0
    cases = [json.loads(l) for l in (det / "cases.jsonl").read_text().splitlines()]
    assert cases[0]["pattern"] == "A"
    summary = json.loads((det / "summary.json").read_text())
    assert summary["patterns"] == {"A": 1}
    assert summary["total_lba_sats"] == truth[seed_addr]["lba_sats"]

    temp = tmp_path / "temp"
    assert run("temporality", "--ledger", out / "fx.jsonl",
               "--cases", det / "cases.jsonl", "--out", temp) == 0
    lines = (temp / "temporality.csv").read_text().splitlines()
    assert lines[0] == "offset,count,phase"
    assert len(lines) > 1


def test_explore_exports(tmp_path):
    out = _gen_fixture(tmp_path)
    truth = json.loads((out / "fx.truth.json").read_text())
    seed_addr = next(a for a, t in truth.items() if t["motif"] == "pattern_a")
    seeds = tmp_path / "seeds.txt"
    seeds.write_text(seed_addr + "\n", encoding="utf-8")
    for fmt, name in (("dot", "graph.dot"), ("graphml", "graph.graphml"),
                      ("csv", "graph.csv")):
        dest = tmp_path / f"exp_{fmt}"
        assert run("explore", "--ledger", out / "fx.jsonl", "--seeds", seeds,
                   "--n", 2, "--format", fmt, "--out", dest) == 0
        assert (dest / name).stat().st_size > 0


def test_broken_ledger_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{broken\n", encoding="utf-8")
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("1A1zP1eP5QGefi2DMPTfTL5SLmv7DivfNa\n", encoding="utf-8")
    assert run("detect-patterns", "--ledger", bad, "--seeds", seeds,
               "--out", tmp_path / "x") == 1
    err = capsys.readouterr().err
    assert "error:" in err


def test_extract_segment_preprocess_on_demo_corpus(tmp_path):
    out = tmp_path / "ex"
    assert run("extract-addresses", "--leak-dir", LEAK, "--out", out) == 0
    rows = (out / "addresses.csv").read_text().splitlines()
    assert rows[0] == "address,kind,first_chat_id"
    assert len(rows) >= 3
    report = json.loads((out / "extraction_report.json").read_text())
    assert report["checksum_failures"] >= 1
    assert report["unique_global"] < report["detected"]

    seg = tmp_path / "seg"
    assert run("segment", "--leak-dir", LEAK, "--out", seg) == 0
    seg_report = json.loads((seg / "segment_report.json").read_text())
    assert seg_report["chats"] == 4
    assert seg_report["interactions"] == 8  # one forced split per chat

    pre = tmp_path / "pre"
    assert run("preprocess", "--leak-dir", LEAK, "--out", pre) == 0
    tokens = [json.loads(l) for l in (pre / "tokens.jsonl").read_text().splitlines()]
    assert len(tokens) == 16  # attacker turns only
    assert all(t["tokens"] for t in tokens)


def test_cluster_sweep_and_fit_on_checked_in_embeddings(tmp_path):
    sweep = tmp_path / "sweep"
    assert run("cluster-sweep", "--embeddings", EMBEDDINGS_16X4,
               "--k-min", 2, "--k-max", 6, "--seed", 3, "--out", sweep) == 0
    rec = json.loads((sweep / "recommendation.json").read_text())
    assert rec["recommended_k"] == 4  # four planted theme groups

    fit1 = tmp_path / "fit1"
    fit2 = tmp_path / "fit2"
    for dest in (fit1, fit2):
        assert run("cluster", "--embeddings", EMBEDDINGS_16X4, "--k", 4,
                   "--seed", 3, "--out", dest) == 0
    assert (fit1 / "assignments.jsonl").read_bytes() == \
        (fit2 / "assignments.jsonl").read_bytes()
    model = json.loads((fit1 / "model.json").read_text())
    assert model["k"] == 4 and model["seed"] == 3


def test_cluster_sweep_precomputed_rows(tmp_path):
    csv_body = "k,inertia,silhouette,ch,db\n" + "\n".join([
        "22,1149.65,0.103,42.48,3.09",
        "23,1142.66,0.105,41.32,3.02",
        "24,1112.93,0.124,42.81,2.90",
        "25,1109.84,0.121,41.35,3.03",
        "26,1098.58,0.124,40.88,2.99",
    ]) + "\n"
    pre = tmp_path / "metrics.csv"
    pre.write_text(csv_body, encoding="utf-8")
    out = tmp_path / "rec"
    assert run("cluster-sweep", "--precomputed", pre, "--out", out) == 0
    rec = json.loads((out / "recommendation.json").read_text())
    assert rec["recommended_k"] == 24


def test_label_file_mode_and_playbook(tmp_path):
    out = tmp_path / "pb"
    assert run("playbook",
               "--interactions", PLAYBOOK / "interactions.jsonl",
               "--assignments", PLAYBOOK / "assignments.jsonl",
               "--labels", PLAYBOOK / "labels.json",
               "--q", "0.15", "--out", out) == 0
    full = json.loads((out / "transitions.json").read_text())
    kept = json.loads((out / "playbook.json").read_text())
    assert len(full["edges"]) == 60
    assert len(kept["edges"]) == 9  # ceil(0.15 * 60)
    assert len(kept["nodes"]) == 9
    dot = (out / "playbook.dot").read_text()
    assert dot.count("->") == 9
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["edges_total"] == 60 and diag["edges_kept"] == 9

    # label file mode over the demo assignments
    mapping = {str(cid): {"label": f"theme number {cid} label", "category": "Ransom"}
               for cid in range(12)}
    mfile = tmp_path / "map.json"
    mfile.write_text(json.dumps(mapping), encoding="utf-8")
    lab = tmp_path / "lab"
    assert run("label", "--assignments", PLAYBOOK / "assignments.jsonl",
               "--mode", "file", "--mapping", mfile, "--out", lab) == 0
    labels = json.loads((lab / "labels.json").read_text())
    assert len(labels) == 12


def test_ttp_diff_cli(tmp_path, capsys):
    assert run("ttp-diff") == 0
    obj = json.loads(capsys.readouterr().out)
    assert "T1021" in obj["both"]
    assert "T1047" in obj["only_a"]
    assert "T1027" in obj["only_b"]

    bad = tmp_path / "bad.txt"
    bad.write_text("T12\n", encoding="utf-8")
    assert run("ttp-diff", "--a", bad) == 2


def test_report_on_leak_dir(tmp_path):
    out = tmp_path / "rep"
    assert run("report", "--leak-dir", LEAK, "--out", out) == 0
    overview = json.loads((out / "overview.json").read_text())
    assert overview["user_tags"]["Verified"] == 5
    assert overview["row_counts"]["chats"] > 0
    assert (out / "visits_activity.csv").exists()
    assert (out / "chat_durations.csv").exists()


def test_report_on_cases(tmp_path):
    out = _gen_fixture(tmp_path)
    truth = json.loads((out / "fx.truth.json").read_text())
    seed_addr = next(a for a, t in truth.items() if t["motif"] == "pattern_a")
    seeds = tmp_path / "seeds.txt"
    seeds.write_text(seed_addr + "\n", encoding="utf-8")
    det = tmp_path / "det"
    assert run("detect-patterns", "--ledger", out / "fx.jsonl",
               "--seeds", seeds, "--out", det) == 0
    rep = tmp_path / "rep"
    assert run("report", "--cases", det / "cases.jsonl",
               "--ledger", out / "fx.jsonl", "--out", rep) == 0
    summary = json.loads((rep / "patterns_summary.json").read_text())
    assert summary["patterns"]["A"] == 1
    assert summary["total_lba_sats"] == truth[seed_addr]["lba_sats"]


def test_installed_entry_point_smoke():
    proc = subprocess.run([sys.executable, "-m", "ransomtrace.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "detect-patterns" in proc.stdout


def test_ingest_ledger_report(tmp_path):
    out = _gen_fixture(tmp_path)
    rep = tmp_path / "ing"
    assert run("ingest-ledger", "--ledger", out / "fx.jsonl", "--out", rep) == 0
    report = json.loads((rep / "ledger_report.json").read_text())
    assert report["transactions"] > 0
    assert set(report["active_addresses"]) == {"ever_credited", "nonzero_final_balance"}
