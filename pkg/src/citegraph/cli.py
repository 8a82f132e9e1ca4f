"""Command-line interface: ingest, train, retrieve, evaluate, serve.

Exit codes: 0 on success, 2 on usage errors (argparse), 1 on runtime
failures (bad files, inconsistent graphs, degenerate inputs).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import instructions as instr
from . import metrics, service
from .embeddings import (
    EmbeddingTable,
    HashingProvider,
    RemoteProvider,
    load_embeddings,
    node_embedding,
    save_embeddings,
)
from .exceptions import CitegraphError
from .graph import (
    build_graph,
    load_graph,
    load_split,
    save_graph,
    save_split,
    split_edges,
)
from .ingest import build_corpus, load_interchange_dir, load_latex_dir
from .pipeline import GenerationParams, generate_related_work, run_task
from .retriever import (
    Retriever,
    TrainConfig,
    build_index,
    load_checkpoint,
    retrieve,
    save_checkpoint,
    save_history,
    train,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citegraph",
        description="Citation-graph retrieval and literature-task engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw LaTeX or interchange JSONL into a corpus")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--format", choices=("latex", "jsonl"), default="latex")
    p.add_argument("--out", dest="out_dir", required=True)

    p = sub.add_parser("build-graph", help="validate a corpus and optionally split edges")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--split-out")
    p.add_argument("--ratios", default="0.7,0.15,0.15")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("embed", help="compute node embeddings into a CGEM file")
    p.add_argument("--nodes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--provider", choices=("stub", "remote"), default="stub")
    p.add_argument("--endpoint", help="encoder service URL for --provider remote")
    p.add_argument("--dim", type=int, default=16, help="stub embedding dimension")

    p = sub.add_parser("train", help="train the graph retriever")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--split", help="existing split manifest (default: fresh split)")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--history", help="JSONL training-history output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--negatives", type=int, default=10)
    p.add_argument("--max-neighbors", type=int, default=10)
    p.add_argument("--lambda-re", type=float, default=1.0)
    p.add_argument("--ablate-pseudo", action="store_true")
    p.add_argument("--ablate-neighbor", action="store_true")
    p.add_argument("--include-positive", action="store_true",
                   help="include the positive term in the contrastive denominator")

    p = sub.add_parser("retrieve", help="rank papers for a query text")
    _add_artifact_args(p)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("eval", help="retrieval P@k on held-out edges")
    _add_artifact_args(p)
    p.add_argument("--split", required=True)
    p.add_argument("--k", default="5,10")
    p.add_argument("--which", choices=("val", "test"), default="test")
    p.add_argument("--ablate", default="", help="comma list: pseudo,neighbor")

    p = sub.add_parser("build-instructions", help="emit the instruction-tuning dataset")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--one-plus-ten", action="store_true",
                   help="recommendation candidates = true target + 10 negatives")

    p = sub.add_parser("run-task", help="run one grounded literature task")
    _add_artifact_args(p)
    p.add_argument("--task", required=True, choices=instr.ALL_TASKS)
    p.add_argument("--inputs", required=True,
                   help="JSON file with task inputs, or '-' for stdin")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--client", help="completion endpoint URL or scripted:FILE")

    p = sub.add_parser("related-work", help="generate a related-work section")
    _add_artifact_args(p)
    p.add_argument("--text-file", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--k2", type=int, default=5)
    p.add_argument("--client", help="completion endpoint URL or scripted:FILE")

    p = sub.add_parser("stats", help="related-work text statistics")
    p.add_argument("--text-file", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--bind", help="host:port override")

    return parser


def _add_artifact_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--checkpoint", required=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (CitegraphError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"citegraph: error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "ingest":
        return _cmd_ingest(args)
    if args.command == "build-graph":
        return _cmd_build_graph(args)
    if args.command == "embed":
        return _cmd_embed(args)
    if args.command == "train":
        return _cmd_train(args)
    if args.command == "retrieve":
        return _cmd_retrieve(args)
    if args.command == "eval":
        return _cmd_eval(args)
    if args.command == "build-instructions":
        return _cmd_build_instructions(args)
    if args.command == "run-task":
        return _cmd_run_task(args)
    if args.command == "related-work":
        return _cmd_related_work(args)
    if args.command == "stats":
        return _cmd_stats(args)
    if args.command == "serve":
        return _cmd_serve(args)
    raise AssertionError(f"unhandled command {args.command}")


def _cmd_ingest(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "latex":
        raws = load_latex_dir(args.in_dir)
        papers, edges, report = build_corpus(raws)
        print(
            f"ingested {report.documents} documents: {len(papers)} papers, "
            f"{report.emitted_edges} edges "
            f"({report.resolved_mentions} resolved mentions, "
            f"{report.dropped_resolved} dropped, "
            f"{report.unresolved_mentions} unresolved)",
            file=sys.stderr,
        )
    else:
        papers, edges = load_interchange_dir(args.in_dir)
    graph = build_graph(papers, edges)
    save_graph(graph, out_dir / "nodes.jsonl", out_dir / "edges.jsonl")
    print(f"wrote {out_dir / 'nodes.jsonl'} and {out_dir / 'edges.jsonl'}")
    return 0


def _cmd_build_graph(args) -> int:
    graph = load_graph(args.nodes, args.edges)
    print(json.dumps({
        "papers": len(graph),
        "edges": len(graph.edges),
        "duplicates_dropped": graph.duplicate_count,
    }))
    if args.split_out:
        ratios = tuple(float(x) for x in args.ratios.split(","))
        split = split_edges(graph, ratios=ratios, seed=args.seed)
        save_split(split, args.split_out)
        print(f"wrote split manifest {args.split_out} "
              f"({len(split.train_edges)}/{len(split.val_edges)}/{len(split.test_edges)})",
              file=sys.stderr)
    return 0


def _cmd_embed(args) -> int:
    graph = load_graph(args.nodes)
    if args.provider == "remote":
        if not args.endpoint:
            raise CitegraphError("--provider remote requires --endpoint")
        provider = RemoteProvider(args.endpoint)
    else:
        provider = HashingProvider(args.dim)
    table = EmbeddingTable(provider.dim())
    for pid in graph.node_ids:
        table.add(pid, node_embedding(provider, graph.papers[pid]))
    save_embeddings(table, args.out)
    print(f"wrote {len(table)} embeddings (dim {table.dim}) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    graph = load_graph(args.nodes, args.edges)
    table = load_embeddings(args.embeddings)
    split = load_split(args.split) if args.split else split_edges(graph, seed=args.seed)
    config = TrainConfig(
        learning_rate=args.lr,
        epochs_max=args.epochs,
        patience=args.patience,
        num_negatives=args.negatives,
        max_neighbors=args.max_neighbors,
        lambda_re=args.lambda_re,
        seed=args.seed,
        ablate_pseudo_query=args.ablate_pseudo,
        ablate_neighbor_aware=args.ablate_neighbor,
        infonce_include_positive=args.include_positive,
    )
    params, history = train(graph, table, split, config)
    save_checkpoint(params, args.out, config.stable_hash())
    if args.history:
        save_history(history, args.history)
    best = max(history, key=lambda h: h["val_p_at_5"])
    print(f"trained {len(history)} epochs; best val P@5 {best['val_p_at_5']:.4f} "
          f"at epoch {best['epoch']}; checkpoint {args.out}")
    return 0


def _load_artifacts(args):
    graph = load_graph(args.nodes, args.edges)
    table = load_embeddings(args.embeddings)
    params, _ = load_checkpoint(args.checkpoint)
    provider = HashingProvider(table.dim)
    return graph, table, params, Retriever(params, provider)


def _cmd_retrieve(args) -> int:
    graph, table, params, retriever = _load_artifacts(args)
    index = build_index(params, graph, table)
    result = retrieve(index, params, retriever.query_vector(args.query), args.k)
    for pid, score in result.ranked:
        print(json.dumps({"id": pid, "score": score}))
    return 0


def _cmd_eval(args) -> int:
    graph, table, params, _ = _load_artifacts(args)
    split = load_split(args.split)
    ks = tuple(int(x) for x in str(args.k).split(","))
    ablations = tuple(x for x in args.ablate.split(",") if x)
    reports = metrics.eval_retriever(graph, table, params, split, ks=ks,
                                     which=args.which, ablations=ablations)
    for report in reports:
        print(json.dumps(report.as_dict()))
    return 0


def _cmd_build_instructions(args) -> int:
    graph = load_graph(args.nodes, args.edges)
    records = instr.build_training_set(graph, node_budget=args.budget,
                                       seed=args.seed,
                                       one_plus_ten=args.one_plus_ten)
    instr.save_instructions(records, args.out)
    counts = {}
    for r in records:
        counts[r.task] = counts.get(r.task, 0) + 1
    print(json.dumps({"records": len(records), "by_task": counts}))
    return 0


def _cmd_run_task(args) -> int:
    graph, table, params, retriever = _load_artifacts(args)
    index = build_index(params, graph, table)
    client = service.make_client(args.client)
    raw = sys.stdin.read() if args.inputs == "-" else Path(args.inputs).read_text(encoding="utf-8")
    inputs = json.loads(raw)
    result = run_task(args.task, inputs, graph, retriever, index, client,
                      args.k, GenerationParams())
    print(json.dumps({"task": args.task, "result": result}))
    return 0


def _cmd_related_work(args) -> int:
    graph, table, params, retriever = _load_artifacts(args)
    index = build_index(params, graph, table)
    client = service.make_client(args.client)
    text = Path(args.text_file).read_text(encoding="utf-8")
    draft = generate_related_work(graph, retriever, index, client, text,
                                  k=args.k, k2=args.k2)
    print(json.dumps({
        "summary": draft.summary,
        "retrieved": draft.retrieved,
        "recommended": draft.recommended,
        "citation_sentences": draft.citation_sentences,
        "groups": draft.groups,
        "final_text": draft.final_text,
        "stripped_markers": draft.stripped_markers,
    }, ensure_ascii=False))
    return 0


def _cmd_stats(args) -> int:
    text = Path(args.text_file).read_text(encoding="utf-8")
    print(json.dumps(metrics.related_work_stats(text)))
    return 0


def _cmd_serve(args) -> int:
    overrides = {"bind_address": args.bind} if args.bind else None
    config = service.load_config(args.config, overrides)
    service.serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
