"""embedtool: generate embedding files and optional cluster labels.

Two subcommands:

* ``embed``: read ``{"msg_id", "text"|"tokens"}`` lines, write
  ``{"msg_id", "vec"}`` lines the analysis toolkit ingests directly.
* ``label-clusters``: send each cluster's messages to a chat-completion
  endpoint and write a labels.json skeleton.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backends import DEFAULT_MODEL, ModelUnavailable, make_backend
from .labeling import (
    LabelClient,
    MalformedServiceReply,
    ServiceUnreachable,
    label_clusters,
    write_labels,
)
from .records import (
    BadRecord,
    EmptyInput,
    read_cluster_assignments,
    read_message_records,
    write_embedding_records,
)


def embed_messages(in_path, backend, out_path, field: str = "auto") -> int:
    """Embed every input record, preserving order; returns the count written."""
    records = read_message_records(in_path, field=field)
    vectors = backend.encode([text for _, text in records])
    count = write_embedding_records(out_path, [mid for mid, _ in records], vectors)
    print(f"wrote {count} embeddings (dim {vectors.shape[1]}, backend {backend.name})",
          file=sys.stderr)
    return count


def cmd_embed(args) -> int:
    backend = make_backend(args.backend, model_name=args.model, dim=args.dim)
    embed_messages(Path(args.infile), backend, Path(args.out), field=args.field)
    return 0


def cmd_label_clusters(args) -> int:
    assignments = read_cluster_assignments(Path(args.assignments))
    records = dict(read_message_records(Path(args.messages), field=args.field))
    clusters: dict[int, list[str]] = {}
    for mid, cluster in assignments.items():
        if mid in records:
            clusters.setdefault(cluster, []).append(records[mid])
    if not clusters:
        raise EmptyInput("no assigned messages to label")
    client = LabelClient(model=args.service_model)
    labels = label_clusters(clusters, client)
    write_labels(Path(args.out), labels)
    flagged = sum(1 for l in labels if l["needs_review"])
    print(f"labeled {len(labels)} clusters ({flagged} flagged for review)",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embedtool",
                                     description="Embedding and labeling companion tool.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("embed", help="embed message records into a vector file")
    p.set_defaults(func=cmd_embed)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=DEFAULT_MODEL)
    p.add_argument("--backend", choices=["transformer", "hash"], default="transformer")
    p.add_argument("--dim", type=int, default=384, help="hash backend dimension")
    p.add_argument("--field", choices=["auto", "text", "tokens"], default="auto",
                   help="which input field to embed (auto prefers tokens)")

    p = sub.add_parser("label-clusters", help="label clusters via a chat service")
    p.set_defaults(func=cmd_label_clusters)
    p.add_argument("--assignments", required=True)
    p.add_argument("--messages", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--field", choices=["auto", "text", "tokens"], default="auto")
    p.add_argument("--service-model", default="gpt-4o-mini")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except (ModelUnavailable, EmptyInput, BadRecord, ServiceUnreachable,
            MalformedServiceReply, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
