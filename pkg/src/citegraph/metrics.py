"""Evaluation metrics: P@k, Hits@k, accuracy, ROUGE-L, and text statistics.

ROUGE-L is the longest-common-subsequence variant over lowercased
whitespace tokens (no stemming). The retrieval evaluation ranks, for every
query node with held-out edges, all nodes that are not already its train
neighbors, and averages Precision@k over queries.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .embeddings import EmbeddingTable
from .exceptions import ShapeError
from .graph import CitationGraph, SplitAssignment
from .retriever.index import build_index, rank_order, score_query
from .retriever.model import query_embedding
from .retriever.params import RetrieverParams
from .retriever.train import undirected_view

# Citation markers are bracketed ids/keys: no whitespace inside an item,
# comma-separated items count individually. Configurable for external texts.
DEFAULT_MARKER_PATTERN = r"\[([^\[\]\s,][^\[\]\s]*(?:\s*,\s*[^\[\]\s,][^\[\]\s]*)*)\]"


@dataclass
class MetricReport:
    """One named metric value with the number of cases behind it."""

    name: str
    value: float
    support: int
    config: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value,
                "support": self.support, "config": self.config}


def precision_at_k(ranked: list[str], relevant: set[str], k: int) -> float:
    """Fraction of the top-k ranked ids that are relevant."""
    if k < 1:
        raise ShapeError(f"k must be >= 1, got {k}")
    if not ranked:
        raise ShapeError("empty ranking")
    top = ranked[:k]
    return sum(1 for pid in top if pid in relevant) / k


def hits_at_k(ranked: list[str], true_id: str, k: int) -> int:
    """1 iff the single true id appears within the top-k."""
    if k < 1:
        raise ShapeError(f"k must be >= 1, got {k}")
    return 1 if true_id in ranked[:k] else 0


def accuracy(preds: list[bool], labels: list[bool]) -> float:
    """Matching fraction between predictions and labels."""
    if len(preds) != len(labels) or not preds:
        raise ShapeError(
            f"accuracy needs equal nonempty lists, got {len(preds)} vs {len(labels)}"
        )
    return sum(1 for p, l in zip(preds, labels) if p == l) / len(preds)


def _tokenize(text: str) -> list[str]:
    return text.lower().split()


def rouge_l(candidate: str, reference: str) -> dict[str, float]:
    """LCS-based precision/recall/F1 over lowercased whitespace tokens."""
    cand = _tokenize(candidate)
    ref = _tokenize(reference)
    if not cand or not ref:
        raise ShapeError("ROUGE-L needs nonempty texts after tokenization")
    vocab: dict[str, int] = {}
    cand_ids = [vocab.setdefault(t, len(vocab)) for t in cand]
    ref_ids = [vocab.setdefault(t, len(vocab)) for t in ref]
    lcs = kernels.lcs_length(cand_ids, ref_ids)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "f1": f1}


def related_work_stats(text: str, marker_pattern: str = DEFAULT_MARKER_PATTERN) -> dict[str, float]:
    """Length, paragraph count, citation-marker count, and cited-paragraph ratio.

    L counts whitespace words; NP counts blank-line-separated paragraphs;
    NC counts bracketed citation items (comma-separated items individually);
    RPC is the fraction of paragraphs containing at least one marker.
    """
    if not text.strip():
        raise ShapeError("empty text")
    marker = re.compile(marker_pattern)
    paragraphs = [p for p in re.split(r"\n\s*\n", text) if p.strip()]
    n_citations = 0
    cited_paragraphs = 0
    for para in paragraphs:
        found = marker.findall(para)
        count = sum(len([x for x in group.split(",") if x.strip()]) for group in found)
        n_citations += count
        if count > 0:
            cited_paragraphs += 1
    return {
        "L": float(len(text.split())),
        "NP": float(len(paragraphs)),
        "NC": float(n_citations),
        "RPC": cited_paragraphs / len(paragraphs) if paragraphs else 0.0,
    }


def heldout_precision_at_k(graph: CitationGraph, embeddings: EmbeddingTable,
                           params: RetrieverParams, split: SplitAssignment,
                           which: str = "test", k: int = 5,
                           ablate_pseudo_query: bool = False,
                           ablate_neighbor_aware: bool = False) -> float:
    """Mean P@k over nodes with held-out edges, ranking non-train-neighbors.

    Candidate rows aggregate train-view neighbors only. For each query node
    the candidate pool excludes the node itself and its train neighbors, so
    the metric measures recovery of held-out links.
    """
    node_ids = graph.node_ids
    train_adj = undirected_view(split.train_edges, node_ids)
    held = {"val": split.val_edges, "test": split.test_edges}[which]
    held_adj = undirected_view(held, node_ids)
    queries = [pid for pid in node_ids if held_adj[pid]]
    if not queries:
        raise ShapeError(f"no {which} edges to evaluate")

    index = build_index(params, graph, embeddings, adjacency=train_adj,
                        ablate_pseudo_query=ablate_pseudo_query,
                        ablate_neighbor_aware=ablate_neighbor_aware)
    row_of = {pid: r for r, pid in enumerate(index.ids)}
    total = 0.0
    for qid in queries:
        q = query_embedding(params, embeddings.get(qid).astype(np.float64))
        scores = score_query(index, q)
        banned = train_adj[qid] | {qid}
        keep = [row_of[pid] for pid in node_ids if pid not in banned]
        sub_scores = scores[keep]
        order = rank_order(sub_scores)
        ranked = [index.ids[keep[i]] for i in order[:k]]
        total += precision_at_k(ranked, held_adj[qid], k)
    return total / len(queries)


def eval_retriever(graph: CitationGraph, embeddings: EmbeddingTable,
                   params: RetrieverParams, split: SplitAssignment,
                   ks: tuple[int, ...] = (5, 10), which: str = "test",
                   ablations: tuple[str, ...] = ()) -> list[MetricReport]:
    """P@k reports for the full model and each requested re-scoring ablation.

    Ablations: "pseudo" drops the pseudo-query from candidate rows;
    "neighbor" drops neighbor aggregation.
    """
    variants = [("full", False, False)]
    for name in ablations:
        if name == "pseudo":
            variants.append(("w/o pseudo-query", True, False))
        elif name == "neighbor":
            variants.append(("w/o neighbor-aware", False, True))
        else:
            raise ShapeError(f"unknown ablation {name!r} (expected 'pseudo' or 'neighbor')")

    held = {"val": split.val_edges, "test": split.test_edges}[which]
    support = len({pid for key in held for pid in key})
    reports = []
    for label, no_pseudo, no_neighbor in variants:
        for k in ks:
            value = heldout_precision_at_k(
                graph, embeddings, params, split, which=which, k=k,
                ablate_pseudo_query=no_pseudo, ablate_neighbor_aware=no_neighbor,
            )
            reports.append(MetricReport(
                name=f"P@{k}",
                value=value,
                support=support,
                config={"variant": label, "split": which},
            ))
    return reports
