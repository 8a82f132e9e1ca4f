"""Exact top-k retrieval over combined candidate + pseudo-query rows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..embeddings import EmbeddingProvider, EmbeddingTable
from ..exceptions import DegenerateEmbeddingError, EmbeddingIOError
from ..graph import CitationGraph
from .model import candidate_embedding, pseudo_query_embedding, query_embedding
from .params import RetrieverParams


@dataclass
class RetrievalIndex:
    """Scoring matrix with one combined row per paper, id-sorted.

    Rows must be rebuilt whenever the parameters or the graph change; the
    parameter fingerprint recorded at build time makes staleness checkable.
    """

    ids: list[str]
    combined: np.ndarray
    params_fingerprint: str
    ablate_pseudo_query: bool = False
    ablate_neighbor_aware: bool = False

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class RetrievalResult:
    """Ranked (paper id, cosine score) pairs, scores non-increasing."""

    ranked: list[tuple[str, float]] = field(default_factory=list)

    def ids(self) -> list[str]:
        return [pid for pid, _ in self.ranked]


def build_index(params: RetrieverParams, graph: CitationGraph, table: EmbeddingTable,
                adjacency: dict[str, set[str]] | None = None,
                ablate_pseudo_query: bool = False,
                ablate_neighbor_aware: bool = False) -> RetrievalIndex:
    """Precompute each node's combined row (candidate + pseudo-query vector).

    ``adjacency`` overrides the neighbor view used for aggregation (training
    and evaluation pass the train-edge view to keep held-out edges out of
    candidate rows); the default is the graph's full undirected adjacency.
    All neighbors are used here: the training-time neighbor cap exists to
    bound per-epoch cost, while index construction is a one-shot pass.
    """
    ids = graph.node_ids
    if not ids:
        raise EmbeddingIOError("cannot build an index over an empty graph")
    rows = np.empty((len(ids), params.d1), dtype=np.float64)
    for r, pid in enumerate(ids):
        neigh = adjacency.get(pid, set()) if adjacency is not None else graph.neighbors(pid)
        missing = [n for n in (pid, *neigh) if n not in table]
        if missing:
            raise EmbeddingIOError(f"no embedding stored for paper {missing[0]!r}")
        neighbor_zs = None
        if neigh and not ablate_neighbor_aware:
            neighbor_zs = np.stack([table.get(n) for n in sorted(neigh)]).astype(np.float64)
        c = candidate_embedding(params, table.get(pid).astype(np.float64), neighbor_zs,
                                ablate_neighbor_aware=ablate_neighbor_aware)
        if ablate_pseudo_query:
            rows[r] = c
        else:
            rows[r] = c + pseudo_query_embedding(params, c)
    return RetrievalIndex(
        ids=ids,
        combined=rows,
        params_fingerprint=params.fingerprint(),
        ablate_pseudo_query=ablate_pseudo_query,
        ablate_neighbor_aware=ablate_neighbor_aware,
    )


def retrieve(index: RetrievalIndex, params: RetrieverParams,
             query_text_embedding: np.ndarray, k: int) -> RetrievalResult:
    """Exact (non-approximate) cosine ranking of the query against all rows.

    Returns the top-k with deterministic tie-breaks by ascending paper id;
    ``k`` beyond the index size returns the full ranking.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(index) == 0:
        raise EmbeddingIOError("retrieval over an empty index")
    q = query_embedding(params, np.asarray(query_text_embedding, dtype=np.float64))
    scores = score_query(index, q)
    order = rank_order(scores)
    top = order[:min(k, len(index))]
    clipped = np.clip(scores, -1.0, 1.0)
    return RetrievalResult(ranked=[(index.ids[i], float(clipped[i])) for i in top])


def score_query(index: RetrievalIndex, q: np.ndarray) -> np.ndarray:
    """Cosine scores of a query-space vector against every index row."""
    try:
        return kernels.cosine_scores(index.combined, q)
    except ValueError as exc:
        msg = str(exc)
        if "zero-norm row" in msg:
            row = int(msg.rsplit(" ", 1)[1])
            raise DegenerateEmbeddingError(
                f"degenerate combined embedding for paper {index.ids[row]!r}",
                ids=[index.ids[row]],
            ) from exc
        if "zero-norm query" in msg:
            raise DegenerateEmbeddingError("degenerate query embedding") from exc
        raise


def rank_order(scores: np.ndarray) -> np.ndarray:
    """Indices sorted by descending score, ties by ascending position (= id order)."""
    return np.lexsort((np.arange(scores.shape[0]), -scores))


class Retriever:
    """Bundles trained parameters with the text encoder used for queries."""

    def __init__(self, params: RetrieverParams, provider: EmbeddingProvider):
        self.params = params
        self.provider = provider

    def query_vector(self, text: str) -> np.ndarray:
        return np.asarray(self.provider.embed(text), dtype=np.float64)

    def retrieve_text(self, index: RetrievalIndex, text: str, k: int) -> RetrievalResult:
        return retrieve(index, self.params, self.query_vector(text), k)
