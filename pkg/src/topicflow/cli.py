"""Command-line interface.

Pipeline commands (ingest, fit, graph) take --config and honor the manifest
resume logic; query commands (topics, events, find-topic, trace, report)
read a completed run directory via --out. Exit codes are a stable contract:
0 success, 1 validation, 2 runtime stage failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .corpus import load_epochs, load_vocabulary
from .errors import ConfigError, FetchError, QueryError, StageError, \
    TopicflowError
from .graph import SimilarityGraph, TopicNode, find_topic, trace_lineage, \
    write_dot, write_graph_json
from .hdp import load_topics
from .pipeline import RunLayout, run_pipeline
from .synth import archive_records, generate_corpus, load_spec, \
    save_ground_truth
from . import corpus as corpus_mod

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for runtime
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _load_run_graph(layout: RunLayout) -> SimilarityGraph:
    if not layout.graph_json.exists():
        raise QueryError(
            f"run {layout.root} has no graph stage output; run "
            f"`topicflow graph --config ...` first")
    payload = json.loads(layout.graph_json.read_text(encoding="utf-8"))
    graph = SimilarityGraph(payload["meta"]["measure"],
                            payload["meta"]["threshold"],
                            payload["epochs"])
    epoch_topics = {}
    for epoch in payload["epochs"]:
        path = layout.topics_file(epoch)
        if path.exists():
            _, topics = load_topics(path)
            epoch_topics[epoch] = {t.topic_id: t for t in topics}
    for entry in payload["nodes"]:
        topic = epoch_topics.get(entry["epoch"], {}).get(entry["topic_id"])
        graph.add_node(TopicNode(entry["epoch"], entry["topic_id"], topic))
    for entry in payload["edges"]:
        graph.add_edge(tuple(entry["from"]), tuple(entry["to"]),
                       entry["weight"])
    return graph


def _epoch_topics_from_run(layout: RunLayout, epoch: int | None = None):
    if not layout.epochs_json.exists():
        raise QueryError(f"run {layout.root} has no corpus stage output")
    epochs = load_epochs(layout.epochs_json)
    wanted = [e for e in epochs if epoch is None or e.index == epoch]
    if epoch is not None and not wanted:
        raise QueryError(f"epoch {epoch} does not exist in this run")
    out = []
    for e in wanted:
        path = layout.topics_file(e.index)
        if not path.exists():
            raise QueryError(
                f"epoch {e.index} topics missing; run the fit stage first")
        index, topics = load_topics(path)
        out.append((index, topics))
    return out


# ---------------------------------------------------------------------------
# commands

def _cmd_pipeline(args, through: str) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    if args.jobs is not None:
        config.jobs = args.jobs
    run_dir = run_pipeline(config, out_dir=args.out, jobs=args.jobs,
                           through=through)
    print(f"{through} stage complete: {run_dir}")
    return EXIT_OK


def _cmd_topics(args) -> int:
    layout = RunLayout(args.out)
    for epoch, topics in _epoch_topics_from_run(layout, args.epoch):
        print(f"epoch {epoch}: {len(topics)} topics")
        for t in sorted(topics, key=lambda t: -t.mass):
            head = " ".join(term for term, _ in t.top_terms[:8])
            print(f"  {epoch}:{t.topic_id}  mass={t.mass:<8d} {head}")
    return EXIT_OK


def _cmd_events(args) -> int:
    layout = RunLayout(args.out)
    if not layout.events_csv.exists():
        raise QueryError(f"run {layout.root} has no events report; "
                         f"run the graph stage first")
    with open(layout.events_csv, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = [row for row in reader
                if args.kind is None or row["kind"] == args.kind]
    writer = csv.DictWriter(sys.stdout,
                            fieldnames=["kind", "epoch", "topic_id", "related"])
    writer.writeheader()
    writer.writerows(rows)
    return EXIT_OK


def _cmd_find_topic(args) -> int:
    layout = RunLayout(args.out)
    if not layout.vocabulary.exists():
        raise QueryError(f"run {layout.root} has no vocabulary; "
                         f"run the ingest stage first")
    vocab = load_vocabulary(layout.vocabulary, 1.0)
    terms = {t.strip() for t in args.terms.split(",") if t.strip()}
    epoch_topics = _epoch_topics_from_run(layout, args.epoch)
    node = find_topic(epoch_topics, terms, vocab)
    print(f"best match: topic {node.epoch}:{node.topic_id} "
          f"(mass {node.topic.mass})")
    for term, prob in node.topic.top_terms[:10]:
        print(f"  {term:20s} {prob:.4f}")
    return EXIT_OK


def _cmd_trace(args) -> int:
    try:
        epoch_s, topic_s = args.node.split(":")
        key = (int(epoch_s), int(topic_s))
    except ValueError:
        raise ConfigError(f"--node must look like <epoch>:<topic_id>, "
                          f"got {args.node!r}") from None
    layout = RunLayout(args.out)
    graph = _load_run_graph(layout)
    sub = trace_lineage(graph, key, args.direction, args.depth)
    stem = f"trace_{key[0]}_{key[1]}_{args.direction}{args.depth}"
    json_path = Path(args.export) if args.export \
        else layout.graph / f"{stem}.json"
    json_path.parent.mkdir(parents=True, exist_ok=True)
    write_graph_json(sub, json_path, __version__, None)
    write_dot(sub, [], json_path.with_suffix(".dot"))
    print(f"sub-graph: {sub.n_nodes} nodes, {sub.n_edges} edges")
    print(f"wrote {json_path} and {json_path.with_suffix('.dot')}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    docs_by_epoch, planted = generate_corpus(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus_mod.save_archive(archive_records(docs_by_epoch),
                            out / "archive.jsonl")
    save_ground_truth(planted, out / "ground_truth.json")
    n_docs = sum(len(d) for d in docs_by_epoch)
    print(f"wrote {n_docs} documents over {len(docs_by_epoch)} epochs "
          f"to {out / 'archive.jsonl'}")
    return EXIT_OK


def _cmd_report(args) -> int:
    layout = RunLayout(args.out)
    manifest_path = layout.root / "manifest.json"
    if not manifest_path.exists():
        raise QueryError(f"{layout.root} is not a run directory "
                         f"(no manifest)")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    print(f"run {layout.root} (engine {manifest.get('engine_version')})")
    for stage, info in sorted(manifest.get("stages", {}).items()):
        print(f"  stage {stage:7s} done in {info.get('seconds', '?')}s, "
              f"{len(info.get('outputs', []))} outputs")
    if layout.epochs_json.exists():
        for epoch, topics in _epoch_topics_from_run(layout):
            print(f"  epoch {epoch}: {len(topics)} topics, "
                  f"{sum(t.mass for t in topics)} tokens")
    if layout.events_csv.exists():
        with open(layout.events_csv, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        kinds = {}
        for row in rows:
            kinds[row["kind"]] = kinds.get(row["kind"], 0) + 1
        summary = ", ".join(f"{k}={v}" for k, v in sorted(kinds.items())) \
            or "none"
        print(f"  events: {summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topicflow",
                     description="temporal topic evolution engine")
    parser.add_argument("--version", action="version",
                        version=f"topicflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, **kwargs):
        p = sub.add_parser(name, help=help_, **kwargs)
        return p

    for name, through, help_ in (
            ("ingest", "corpus", "ingest + preprocess + slice epochs"),
            ("fit", "fit", "fit one HDP per epoch (runs ingest if needed)"),
            ("graph", "graph", "build similarity graph + classify events")):
        p = add(name, help_)
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--out", default=None, help="run directory override")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed override")
        p.add_argument("--jobs", type=int, default=None,
                       help="concurrent epoch fits")
        p.set_defaults(func=lambda a, t=through: _cmd_pipeline(a, t))

    p = add("topics", "list topics of an epoch by mass")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--epoch", type=int, default=None)
    p.set_defaults(func=_cmd_topics)

    p = add("events", "filter the event report")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--kind", default=None,
                   choices=["emergence", "disappearance", "split", "merge"])
    p.set_defaults(func=_cmd_events)

    p = add("find-topic", "argmax topic for a set of query terms")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--terms", required=True,
                   help="comma-separated query terms")
    p.add_argument("--epoch", type=int, default=None,
                   help="restrict to one epoch")
    p.set_defaults(func=_cmd_find_topic)

    p = add("trace", "lineage sub-graph from a topic node")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--node", required=True, help="<epoch>:<topic_id>")
    p.add_argument("--direction", default="backward",
                   choices=["forward", "backward"])
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--export", default=None, help="sub-graph JSON path")
    p.set_defaults(func=_cmd_trace)

    p = add("synth", "generate a synthetic corpus archive + ground truth")
    p.add_argument("--spec", required=True, help="generative spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="seed override")
    p.set_defaults(func=_cmd_synth)

    p = add("report", "summarize a run directory")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StageError, QueryError, FetchError, TopicflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
