"""Command-line orchestration for both analysis pipelines.

Every artifact-producing run writes ``run.manifest.json`` into the output
directory: the subcommand, its inputs, the effective configuration, the seed,
and a sha256 per artifact.  Rerunning with the same manifest configuration
reproduces byte-identical artifacts.  Exit codes: 0 success, 1 data error,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from fractions import Fraction
from hashlib import sha256
from pathlib import Path

from . import chaingraph, chatcorpus, cluster, fixtures, flowpatterns, ledger as ledger_mod
from . import playbook as playbook_mod
from . import textprep, ttp
from .addresses import BadAddressChecksum

DATA_ERRORS = (
    ledger_mod.LedgerError,
    BadAddressChecksum,
    chaingraph.GraphError,
    flowpatterns.FlowError,
    chatcorpus.CorpusError,
    cluster.ClusterError,
    playbook_mod.PlaybookError,
    fixtures.InvalidSpec,
    OSError,
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# small helpers


def _read_seeds(path: Path) -> list[str]:
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    if not out:
        raise UsageError(f"no seed addresses in {path}")
    return out


def _fraction_flag(value: str) -> Fraction:
    try:
        f = Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"not a fraction: {value!r}") from e
    if not 0 <= f <= 1:
        raise UsageError(f"fraction {value} outside [0, 1]")
    return f


def _load_ledger(path: Path) -> ledger_mod.Ledger:
    with open(path, encoding="utf-8") as fh:
        return ledger_mod.parse_ledger(fh)


class _Run:
    """Collects artifacts for one invocation and writes the manifest."""

    def __init__(self, outdir: Path, subcommand: str, inputs: dict, config: dict, seed=None):
        self.outdir = outdir
        self.subcommand = subcommand
        self.inputs = {k: str(v) for k, v in inputs.items() if v is not None}
        self.config = config
        self.seed = seed
        self.artifacts: dict[str, str] = {}
        outdir.mkdir(parents=True, exist_ok=True)

    def emit(self, name: str, data) -> Path:
        if isinstance(data, str):
            data = data.encode("utf-8")
        path = self.outdir / name
        path.write_bytes(data)
        self.artifacts[name] = sha256(data).hexdigest()
        return path

    def emit_json(self, name: str, obj) -> Path:
        return self.emit(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def finish(self) -> None:
        manifest = {
            "subcommand": self.subcommand,
            "inputs": self.inputs,
            "config": self.config,
            "seed": self.seed,
            "artifacts": self.artifacts,
        }
        body = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        (self.outdir / "run.manifest.json").write_text(body, encoding="utf-8")


def _csv_bytes(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_fixture(args) -> int:
    spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    run = _Run(Path(args.out), "gen-fixture", {"spec": args.spec},
               {"name": args.name}, seed=args.seed)
    led, truth = fixtures.generate_fixture(spec, args.seed)
    run.emit(f"{args.name}.jsonl", ledger_mod.serialize_ledger(led))
    run.emit_json(f"{args.name}.truth.json", truth)
    run.finish()
    return 0


def cmd_ingest_ledger(args) -> int:
    led = _load_ledger(Path(args.ledger))
    run = _Run(Path(args.out), "ingest-ledger", {"ledger": args.ledger}, {})
    addrs = led.addresses()
    counts = ledger_mod.active_address_counts(led, addrs)
    run.emit_json("ledger_report.json", {
        "transactions": len(led),
        "addresses": len(addrs),
        "max_height": led.max_height(),
        "active_addresses": {
            "ever_credited": counts.ever_credited,
            "nonzero_final_balance": counts.nonzero_final_balance,
        },
    })
    run.finish()
    return 0


def cmd_explore(args) -> int:
    led = _load_ledger(Path(args.ledger))
    seeds = _read_seeds(Path(args.seeds))
    g = chaingraph.build_graph(led, seeds, args.n, direction=args.direction)
    for missing in g.unknown_seeds:
        print(f"warning: seed not in ledger: {missing}", file=sys.stderr)
    run = _Run(Path(args.out), "explore",
               {"ledger": args.ledger, "seeds": args.seeds},
               {"n": args.n, "direction": args.direction, "format": args.format})
    ext = {"dot": "dot", "graphml": "graphml", "csv": "csv"}[args.format]
    run.emit(f"graph.{ext}", chaingraph.export_graph(g, args.format))
    run.finish()
    return 0


def _classify_config(args) -> flowpatterns.ClassifyConfig:
    return flowpatterns.ClassifyConfig(
        dust_sats=args.dust,
        band_low=_fraction_flag(args.band_low),
        band_high=_fraction_flag(args.band_high),
        aggregator_k_min=args.k_min,
    )


def cmd_detect_patterns(args) -> int:
    led = _load_ledger(Path(args.ledger))
    seeds = _read_seeds(Path(args.seeds))
    cfg = _classify_config(args)
    g = chaingraph.build_graph(led, seeds, args.n)
    for missing in g.unknown_seeds:
        print(f"warning: seed not in ledger: {missing}", file=sys.stderr)
    reports = [flowpatterns.classify_case(g, led, s, cfg) for s in g.seed_set]
    run = _Run(Path(args.out), "detect-patterns",
               {"ledger": args.ledger, "seeds": args.seeds},
               {"n": args.n, "dust": args.dust, "band_low": args.band_low,
                "band_high": args.band_high, "k_min": args.k_min})
    lines = "".join(json.dumps(flowpatterns.case_to_json(r), sort_keys=True) + "\n"
                    for r in reports)
    run.emit("cases.jsonl", lines)
    by_pattern: dict[str, int] = {}
    shares = []
    for r in reports:
        by_pattern[r.pattern] = by_pattern.get(r.pattern, 0) + 1
        if r.split is not None:
            shares.append(float(r.split.lba_share))
    run.emit_json("summary.json", {
        "cases": len(reports),
        "patterns": by_pattern,
        "drained": sum(1 for r in reports if r.drained),
        "total_lba_sats": flowpatterns.total_lba_receipts(reports, led),
        "lba_share_range": [min(shares), max(shares)] if shares else None,
    })
    run.finish()
    return 0


def cmd_temporality(args) -> int:
    led = _load_ledger(Path(args.ledger))
    hist: dict[tuple[int, int], int] = {}
    with open(args.cases, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            case = json.loads(line)
            if not case.get("phase2_tx"):
                continue
            base = led.tx(case["phase2_tx"]).block_height
            for phase, txids in ((1, case["phase1_txs"]), (3, case["phase3_txs"])):
                for txid in txids:
                    off = led.tx(txid).block_height - base
                    hist[(phase, off)] = hist.get((phase, off), 0) + 1
    rows = [(off, count, phase) for (phase, off), count in sorted(hist.items())]
    run = _Run(Path(args.out), "temporality",
               {"ledger": args.ledger, "cases": args.cases}, {})
    run.emit("temporality.csv", _csv_bytes(["offset", "count", "phase"], rows))
    run.finish()
    return 0


def _corpus_from_args(args) -> chatcorpus.Corpus:
    if getattr(args, "leak_dir", None):
        return chatcorpus.ingest_leak_tables(Path(args.leak_dir))
    if getattr(args, "chats", None):
        return chatcorpus.load_chats_csv(Path(args.chats))
    raise UsageError("provide --leak-dir or --chats")


def cmd_extract_addresses(args) -> int:
    corpus = _corpus_from_args(args)
    report = chatcorpus.extract_addresses_report(corpus)
    run = _Run(Path(args.out), "extract-addresses",
               {"leak_dir": getattr(args, "leak_dir", None),
                "chats": getattr(args, "chats", None)}, {})
    run.emit("addresses.csv", _csv_bytes(["address", "kind", "first_chat_id"], report.rows))
    run.emit_json("extraction_report.json", {
        "detected": report.detected,
        "unique_global": report.unique_global,
        "unique_per_chat_total": report.unique_per_chat_total,
        "checksum_failures": report.checksum_failures,
    })
    run.finish()
    return 0


def _interaction_json(i: chatcorpus.Interaction) -> dict:
    return {
        "chat_id": i.chat_id,
        "start": i.start,
        "end": i.end,
        "messages": [{"msg_id": m.msg_id, "sender_role": m.sender_role,
                      "timestamp": m.timestamp} for m in i.messages],
    }


def cmd_segment(args) -> int:
    corpus = _corpus_from_args(args)
    interactions = chatcorpus.segment_corpus(corpus, args.gap_seconds)
    run = _Run(Path(args.out), "segment",
               {"leak_dir": getattr(args, "leak_dir", None),
                "chats": getattr(args, "chats", None)},
               {"gap_seconds": args.gap_seconds})
    lines = "".join(json.dumps(_interaction_json(i), sort_keys=True) + "\n"
                    for i in interactions)
    run.emit("interactions.jsonl", lines)
    run.emit_json("segment_report.json", {
        "chats": len(corpus.chats),
        "interactions": len(interactions),
    })
    run.finish()
    return 0


def _read_interactions(path: Path) -> list[chatcorpus.Interaction]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            msgs = tuple(
                chatcorpus.ChatMessage(obj["chat_id"], m["msg_id"], m["sender_role"],
                                       "", m["timestamp"])
                for m in obj["messages"])
            out.append(chatcorpus.Interaction(obj["chat_id"], msgs))
    return out


def cmd_preprocess(args) -> int:
    cfg = textprep.default_config()
    if args.stopwords or args.lemmas:
        cfg = textprep.TextPrepConfig(
            stopwords=textprep.load_stopwords(args.stopwords) if args.stopwords else cfg.stopwords,
            lemma_table=textprep.load_lemma_table(args.lemmas) if args.lemmas else cfg.lemma_table,
        )
    seqs = []
    if args.messages:
        with open(args.messages, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    seqs.append(textprep.normalize(obj["text"], cfg, msg_id=str(obj["msg_id"])))
    else:
        corpus = _corpus_from_args(args)
        role = None if args.role == "all" else args.role
        for chat_id in corpus.chat_ids():
            for msg in corpus.messages(chat_id, role=role):
                seqs.append(textprep.normalize(msg.body, cfg, msg_id=msg.msg_id))
    run = _Run(Path(args.out), "preprocess",
               {"messages": args.messages, "chats": getattr(args, "chats", None),
                "leak_dir": getattr(args, "leak_dir", None),
                "stopwords": args.stopwords, "lemmas": args.lemmas},
               {"role": args.role})
    buf = io.StringIO()
    textprep.write_token_records(seqs, buf)
    run.emit("tokens.jsonl", buf.getvalue())
    run.finish()
    return 0


def _metrics_csv(rows) -> str:
    return _csv_bytes(
        ["k", "inertia", "silhouette", "ch", "db"],
        [(r.k, repr(r.inertia), repr(r.silhouette), repr(r.calinski_harabasz),
          repr(r.davies_bouldin)) for r in rows],
    )


def _read_metrics_csv(path: Path) -> list[cluster.MetricsRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"k", "inertia", "silhouette", "ch", "db"}
        if set(reader.fieldnames or ()) != expected:
            raise UsageError(f"metrics csv must have columns {sorted(expected)}")
        for row in reader:
            rows.append(cluster.MetricsRow(
                k=int(row["k"]), inertia=float(row["inertia"]),
                silhouette=float(row["silhouette"]),
                calinski_harabasz=float(row["ch"]),
                davies_bouldin=float(row["db"])))
    return rows


def cmd_cluster_sweep(args) -> int:
    if args.precomputed:
        rows = _read_metrics_csv(Path(args.precomputed))
        result = cluster.recommend_k(rows)
        inputs = {"precomputed": args.precomputed}
    else:
        if not args.embeddings:
            raise UsageError("provide --embeddings or --precomputed")
        with open(args.embeddings, encoding="utf-8") as fh:
            emb, warnings = cluster.read_embeddings(fh)
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
        result = cluster.sweep_and_recommend(emb, args.k_min, args.k_max,
                                             seed=args.seed, restarts=args.restarts)
        inputs = {"embeddings": args.embeddings}
    run = _Run(Path(args.out), "cluster-sweep", inputs,
               {"k_min": args.k_min, "k_max": args.k_max, "restarts": args.restarts},
               seed=args.seed)
    run.emit("metrics.csv", _metrics_csv(result.rows))
    run.emit_json("recommendation.json", {
        "recommended_k": result.recommended_k,
        "elbow_k": result.elbow_k,
    })
    run.finish()
    return 0


def cmd_cluster(args) -> int:
    with open(args.embeddings, encoding="utf-8") as fh:
        emb, warnings = cluster.read_embeddings(fh)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    model = cluster.kmeans_fit(emb, args.k, seed=args.seed, restarts=args.restarts)
    run = _Run(Path(args.out), "cluster", {"embeddings": args.embeddings},
               {"k": args.k, "restarts": args.restarts}, seed=args.seed)
    lines = "".join(
        json.dumps({"msg_id": mid, "cluster": int(c)}, sort_keys=True) + "\n"
        for mid, c in zip(emb.ids, model.assignments))
    run.emit("assignments.jsonl", lines)
    run.emit_json("model.json", {
        "k": model.k, "seed": model.seed, "inertia": model.inertia,
        "iterations": model.iterations, "repaired_clusters": model.repaired_clusters,
        "degenerate": model.degenerate,
    })
    run.finish()
    return 0


def _read_assignments(path: Path) -> dict[str, int]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out[str(obj["msg_id"])] = int(obj["cluster"])
    return out


def cmd_label(args) -> int:
    assignments = _read_assignments(Path(args.assignments))
    clusters: dict[int, list[str]] = {c: [] for c in sorted(set(assignments.values()))}
    if args.messages:
        with open(args.messages, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                mid = str(obj["msg_id"])
                if mid in assignments:
                    text = obj.get("text") or " ".join(obj.get("tokens", []))
                    clusters[assignments[mid]].append(text)
    excluded = set(args.excluded or [])
    mapping = None
    if args.mapping:
        mapping = {int(k): v for k, v in
                   json.loads(Path(args.mapping).read_text(encoding="utf-8")).items()}
    labels = playbook_mod.label_clusters(clusters, args.mode, mapping=mapping,
                                         excluded=excluded)
    run = _Run(Path(args.out), "label",
               {"assignments": args.assignments, "messages": args.messages,
                "mapping": args.mapping},
               {"mode": args.mode, "excluded": sorted(excluded)})
    run.emit_json("labels.json", playbook_mod.labels_to_json(labels))
    run.finish()
    return 0


def cmd_playbook(args) -> int:
    interactions = _read_interactions(Path(args.interactions))
    assignments = _read_assignments(Path(args.assignments))
    labels = playbook_mod.labels_from_json(
        json.loads(Path(args.labels).read_text(encoding="utf-8")))
    g = playbook_mod.build_transition_graph(interactions, assignments, labels,
                                            collapse_runs=args.collapse_runs)
    q = float(_fraction_flag(args.q))
    filt = (playbook_mod.filter_playbook_per_source(g, q) if args.per_source
            else playbook_mod.filter_playbook(g, q))
    run = _Run(Path(args.out), "playbook",
               {"interactions": args.interactions, "assignments": args.assignments,
                "labels": args.labels},
               {"q": args.q, "collapse_runs": args.collapse_runs,
                "per_source": args.per_source})
    buf = io.StringIO()
    playbook_mod.write_graph_json(g, buf)
    run.emit("transitions.json", buf.getvalue())
    run.emit("transitions.dot", playbook_mod.graph_to_dot(g, drop_isolated=True))
    buf = io.StringIO()
    playbook_mod.write_graph_json(filt, buf)
    run.emit("playbook.json", buf.getvalue())
    run.emit("playbook.dot", playbook_mod.graph_to_dot(filt))
    run.emit_json("diagnostics.json", {
        "isolated_nodes": list(g.isolated_nodes()),
        "entry_only_nodes": list(filt.source_nodes()),
        "sink_nodes": list(filt.sink_nodes()),
        "edges_total": len(g.edges),
        "edges_kept": len(filt.edges),
    })
    run.finish()
    return 0


def cmd_ttp_diff(args) -> int:
    set_a = (ttp.load_technique_file(args.a) if args.a
             else sorted(ttp.lockbit20_techniques()))
    set_b = (ttp.load_technique_file(args.b) if args.b
             else sorted(ttp.lockbit30_techniques()))
    try:
        diff = ttp.ttp_diff(set_a, set_b)
    except ttp.InvalidTechniqueId as e:
        raise UsageError(str(e)) from e
    obj = {"both": list(diff.both), "only_a": list(diff.only_a), "only_b": list(diff.only_b)}
    print(json.dumps(obj, indent=2, sort_keys=True))
    if args.out:
        run = _Run(Path(args.out), "ttp-diff", {"a": args.a, "b": args.b}, {})
        run.emit_json("ttp_diff.json", obj)
        run.finish()
    return 0


def cmd_report(args) -> int:
    if not args.cases and not args.leak_dir:
        raise UsageError("provide --cases and/or --leak-dir")
    run = _Run(Path(args.out), "report",
               {"cases": args.cases, "ledger": args.ledger, "leak_dir": args.leak_dir}, {})
    if args.cases:
        if not args.ledger:
            raise UsageError("--cases needs --ledger for exact amount accounting")
        led = _load_ledger(Path(args.ledger))
        with open(args.cases, encoding="utf-8") as fh:
            cases = [json.loads(line) for line in fh if line.strip()]
        by_pattern: dict[str, int] = {}
        total_lba = 0
        shares = []
        for case in cases:
            by_pattern[case["pattern"]] = by_pattern.get(case["pattern"], 0) + 1
            split = case.get("split")
            if split:
                tx = led.tx(split["txid"])
                total_lba += sum(s.value_sats for s in tx.outputs
                                 if s.address == split["lba_address"])
                shares.append(split["lba_share"])
        run.emit_json("patterns_summary.json", {
            "cases": len(cases),
            "patterns": by_pattern,
            "drained": sum(1 for c in cases if c["drained"]),
            "total_lba_sats": total_lba,
            "total_lba_btc": total_lba / ledger_mod.SATS_PER_BTC,
            "lba_share_range": [min(shares), max(shares)] if shares else None,
        })
    if args.leak_dir:
        corpus = chatcorpus.ingest_leak_tables(Path(args.leak_dir))
        addr_report = chatcorpus.extract_addresses_report(corpus)
        run.emit_json("overview.json", {
            "row_counts": corpus.row_counts,
            "user_tags": corpus.user_tag_counts(),
            "chat_addresses": {
                "detected": addr_report.detected,
                "unique_global": addr_report.unique_global,
                "unique_per_chat_total": addr_report.unique_per_chat_total,
            },
        })
        daily: dict[tuple[str, str], int] = {}
        for username, ts in corpus.visits:
            day = datetime.fromtimestamp(ts, tz=timezone.utc).date().isoformat()
            daily[(username, day)] = daily.get((username, day), 0) + 1
        run.emit("visits_activity.csv", _csv_bytes(
            ["username", "date", "visits"],
            [(u, d, c) for (u, d), c in sorted(daily.items())]))
        durations = []
        for chat_id in corpus.chat_ids():
            msgs = corpus.messages(chat_id)
            durations.append((chat_id, msgs[0].timestamp, msgs[-1].timestamp,
                              msgs[-1].timestamp - msgs[0].timestamp))
        run.emit("chat_durations.csv", _csv_bytes(
            ["chat_id", "start", "end", "duration_seconds"], durations))
    run.finish()
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ransomtrace",
        description="Ransom-flow graph forensics and negotiation-playbook mining.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--out", default="out", help="output directory (default: out)")
        return p

    p = add("gen-fixture", cmd_gen_fixture, help="generate a synthetic ledger fixture")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--name", default="fixture")

    p = add("ingest-ledger", cmd_ingest_ledger, help="parse and summarize a ledger file")
    p.add_argument("--ledger", required=True)

    p = add("explore", cmd_explore, help="build and export an address-transaction graph")
    p.add_argument("--ledger", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--direction", choices=chaingraph.DIRECTIONS, default="both")
    p.add_argument("--format", choices=chaingraph.EXPORT_FORMATS, default="dot")

    p = add("detect-patterns", cmd_detect_patterns, help="classify seed flows into patterns")
    p.add_argument("--ledger", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--dust", type=int, default=flowpatterns.DEFAULT_DUST_SATS)
    p.add_argument("--band-low", default="0.19")
    p.add_argument("--band-high", default="0.20")
    p.add_argument("--k-min", type=int, default=10, help="aggregator input threshold")

    p = add("temporality", cmd_temporality, help="phase-offset histogram from case reports")
    p.add_argument("--ledger", required=True)
    p.add_argument("--cases", required=True)

    p = add("extract-addresses", cmd_extract_addresses, help="pull valid addresses out of chats")
    p.add_argument("--leak-dir")
    p.add_argument("--chats")

    p = add("segment", cmd_segment, help="split chats into interactions on time gaps")
    p.add_argument("--leak-dir")
    p.add_argument("--chats")
    p.add_argument("--gap-seconds", type=int, default=chatcorpus.DEFAULT_GAP_SECONDS)

    p = add("preprocess", cmd_preprocess, help="normalize message text into tokens")
    p.add_argument("--messages", help="jsonl with msg_id + text")
    p.add_argument("--leak-dir")
    p.add_argument("--chats")
    p.add_argument("--role", default="attacker",
                   choices=list(chatcorpus.SENDER_ROLES) + ["all"])
    p.add_argument("--stopwords")
    p.add_argument("--lemmas")

    p = add("cluster-sweep", cmd_cluster_sweep, help="sweep k and recommend one")
    p.add_argument("--embeddings")
    p.add_argument("--precomputed", help="metrics csv to rank instead of fitting")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)

    p = add("cluster", cmd_cluster, help="fit one K-Means model and write assignments")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)

    p = add("label", cmd_label, help="attach behavioral labels to clusters")
    p.add_argument("--assignments", required=True)
    p.add_argument("--messages")
    p.add_argument("--mode", choices=["file", "service"], required=True)
    p.add_argument("--mapping")
    p.add_argument("--excluded", type=int, nargs="*", default=[])

    p = add("playbook", cmd_playbook, help="build the transition graph and filter it")
    p.add_argument("--interactions", required=True)
    p.add_argument("--assignments", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--q", default="0.15")
    p.add_argument("--collapse-runs", action="store_true")
    p.add_argument("--per-source", action="store_true")

    p = add("ttp-diff", cmd_ttp_diff, help="partition two technique-id sets")
    p.add_argument("--a", help="technique list file (default: shipped 2.0 list)")
    p.add_argument("--b", help="technique list file (default: shipped 3.0 list)")
    p.set_defaults(out=None)

    p = add("report", cmd_report, help="aggregate case and corpus reports")
    p.add_argument("--cases")
    p.add_argument("--ledger")
    p.add_argument("--leak-dir")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except ttp.InvalidTechniqueId as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
