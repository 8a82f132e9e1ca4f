"""In-memory citation graph: nodes, annotated edges, splits, and sampling.

The graph is immutable after construction. Edges are directed (citing paper
-> cited paper) and carry the citing sentence plus its local context; most
algorithms consume the undirected neighbor view, which treats every citation
as a symmetric relatedness signal, while dataset emission keeps direction.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import GraphError

logger = logging.getLogger(__name__)

DEFAULT_SPLIT_RATIOS = (0.7, 0.15, 0.15)


@dataclass(frozen=True)
class Paper:
    """One node: a paper with its textual attributes."""

    id: str
    title: str
    abstract: str = ""
    related_work: str | None = None
    category: str | None = None

    def __post_init__(self):
        if not self.id:
            raise GraphError("paper id must be nonempty")
        if not self.title:
            raise GraphError(f"paper {self.id!r}: title must be nonempty")


@dataclass(frozen=True)
class CitationEdge:
    """One directed citation, annotated with its citing sentence and context."""

    source: str
    target: str
    sentence: str = ""
    preceding: str | None = None
    following: str | None = None
    in_related_work: bool = False

    def __post_init__(self):
        if self.source == self.target:
            raise GraphError(f"self-citation edge not allowed: {self.source!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.source, self.target)


class CitationGraph:
    """Deduplicated, indexed citation graph with directed and undirected views."""

    def __init__(self, papers: dict[str, Paper], edges: list[CitationEdge],
                 duplicate_count: int = 0):
        self.papers = papers
        self.edges = edges
        self.duplicate_count = duplicate_count
        self._adjacency: dict[str, set[str]] = {pid: set() for pid in papers}
        self._out_adjacency: dict[str, set[str]] = {pid: set() for pid in papers}
        for e in edges:
            self._adjacency[e.source].add(e.target)
            self._adjacency[e.target].add(e.source)
            self._out_adjacency[e.source].add(e.target)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self.papers

    def __len__(self) -> int:
        return len(self.papers)

    @property
    def node_ids(self) -> list[str]:
        return sorted(self.papers)

    def neighbors(self, paper_id: str) -> set[str]:
        """Undirected neighbor set (cited-by and citing alike)."""
        if paper_id not in self._adjacency:
            raise GraphError(f"unknown paper id {paper_id!r}")
        return set(self._adjacency[paper_id])

    def out_neighbors(self, paper_id: str) -> set[str]:
        """Directed view: papers cited by ``paper_id``."""
        if paper_id not in self._out_adjacency:
            raise GraphError(f"unknown paper id {paper_id!r}")
        return set(self._out_adjacency[paper_id])

    def degree(self, paper_id: str) -> int:
        if paper_id not in self._adjacency:
            raise GraphError(f"unknown paper id {paper_id!r}")
        return len(self._adjacency[paper_id])


def build_graph(papers: Iterable[Paper], edges: Iterable[CitationEdge]) -> CitationGraph:
    """Index papers and edges, dropping parallel duplicate (source, target) pairs.

    Raises GraphError listing all dangling endpoints, if any.
    """
    paper_map: dict[str, Paper] = {}
    for p in papers:
        if p.id in paper_map:
            raise GraphError(f"duplicate paper id {p.id!r}")
        paper_map[p.id] = p

    dangling: list[str] = []
    seen: set[tuple[str, str]] = set()
    kept: list[CitationEdge] = []
    duplicates = 0
    for e in edges:
        missing = [x for x in (e.source, e.target) if x not in paper_map]
        if missing:
            dangling.extend(missing)
            continue
        if e.key in seen:
            duplicates += 1
            continue
        seen.add(e.key)
        kept.append(e)
    if dangling:
        raise GraphError(f"edges reference unknown paper ids: {sorted(set(dangling))}")
    return CitationGraph(paper_map, kept, duplicate_count=duplicates)


def neighbors(graph: CitationGraph, paper_id: str) -> set[str]:
    return graph.neighbors(paper_id)


@dataclass
class SplitAssignment:
    """Disjoint train/val/test edge sets covering all edges of a graph."""

    train_edges: list[tuple[str, str]]
    val_edges: list[tuple[str, str]]
    test_edges: list[tuple[str, str]]
    seed: int
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS

    def edge_sets(self) -> tuple[set, set, set]:
        return (set(self.train_edges), set(self.val_edges), set(self.test_edges))


def split_edges(graph: CitationGraph,
                ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS,
                seed: int = 0) -> SplitAssignment:
    """Randomly partition edges into train/val/test by the given ratios.

    Sizes use floor(n * ratio) for train and val; test takes the remainder,
    keeping every size within one edge of its exact fraction. Deterministic
    for a given seed.
    """
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9:
        raise GraphError(f"split ratios must be three fractions summing to 1, got {ratios}")
    n = len(graph.edges)
    if n < 3:
        raise GraphError(f"need at least 3 edges to split, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    n_train = int(np.floor(n * ratios[0]))
    n_val = int(np.floor(n * ratios[1]))
    keys = [graph.edges[i].key for i in order]
    return SplitAssignment(
        train_edges=keys[:n_train],
        val_edges=keys[n_train:n_train + n_val],
        test_edges=keys[n_train + n_val:],
        seed=seed,
        ratios=tuple(ratios),
    )


def sample_test_subgraph(graph: CitationGraph, n: int = 2000, seed: int = 0) -> set[str]:
    """Grow a connected induced node set of size ``n``.

    Starts from a random node of the largest connected component and expands
    a frontier preferring high-degree nodes, so the sampled region stays
    dense. If no component reaches ``n`` nodes, the largest one is returned
    with a warning.
    """
    if n <= 0:
        raise GraphError(f"subgraph size must be positive, got {n}")
    if len(graph) == 0:
        raise GraphError("cannot sample from an empty graph")

    components = _connected_components(graph)
    largest = max(components, key=lambda c: (len(c), min(c)))
    if len(largest) < n:
        logger.warning(
            "largest connected component has %d nodes < requested %d; returning it whole",
            len(largest), n,
        )
        return set(largest)

    rng = np.random.Generator(np.random.PCG64(seed))
    start = sorted(largest)[int(rng.integers(len(largest)))]
    selected = {start}
    # frontier keyed by (-degree, id): highest degree first, ties by ascending id
    frontier: dict[str, int] = {}
    for nb in graph.neighbors(start):
        frontier[nb] = graph.degree(nb)
    while len(selected) < n and frontier:
        pick = min(frontier, key=lambda x: (-frontier[x], x))
        del frontier[pick]
        selected.add(pick)
        for nb in graph.neighbors(pick):
            if nb not in selected and nb not in frontier:
                frontier[nb] = graph.degree(nb)
    return selected


def sample_negatives(graph: CitationGraph, paper_id: str, m: int, seed: int = 0) -> set[str]:
    """Sample ``m`` distinct non-neighbors of ``paper_id`` (excluding itself)."""
    if paper_id not in graph:
        raise GraphError(f"unknown paper id {paper_id!r}")
    if m < 0:
        raise GraphError(f"negative sample count must be >= 0, got {m}")
    if m == 0:
        return set()
    excluded = graph.neighbors(paper_id) | {paper_id}
    pool = sorted(pid for pid in graph.papers if pid not in excluded)
    if len(pool) < m:
        raise GraphError(
            f"negative pool for {paper_id!r} has {len(pool)} nodes, need {m}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    picks = rng.choice(len(pool), size=m, replace=False)
    return {pool[i] for i in picks}


def _connected_components(graph: CitationGraph) -> list[set[str]]:
    seen: set[str] = set()
    components = []
    for start in graph.papers:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nb in graph._adjacency[node]:
                if nb not in comp:
                    comp.add(nb)
                    stack.append(nb)
        seen |= comp
        components.append(comp)
    return components


# --- interchange persistence -------------------------------------------------

def save_graph(graph: CitationGraph, nodes_path: str | Path, edges_path: str | Path) -> None:
    """Write the canonical nodes.jsonl / edges.jsonl interchange files."""
    nodes_path = Path(nodes_path)
    edges_path = Path(edges_path)
    with nodes_path.open("w", encoding="utf-8") as f:
        for pid in graph.node_ids:
            p = graph.papers[pid]
            rec = {
                "id": p.id,
                "title": p.title,
                "abstract": p.abstract,
                "related_work": p.related_work,
                "category": p.category,
            }
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with edges_path.open("w", encoding="utf-8") as f:
        for e in graph.edges:
            rec = {
                "source": e.source,
                "target": e.target,
                "sentence": e.sentence,
                "preceding": e.preceding,
                "following": e.following,
                "in_related_work": e.in_related_work,
            }
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_graph(nodes_path: str | Path, edges_path: str | Path | None = None) -> CitationGraph:
    """Load a graph from nodes.jsonl (+ optional edges.jsonl)."""
    papers = [paper_from_record(rec) for rec in _read_jsonl(nodes_path)]
    edges = []
    if edges_path is not None:
        edges = [edge_from_record(rec) for rec in _read_jsonl(edges_path)]
    return build_graph(papers, edges)


def paper_from_record(rec: dict) -> Paper:
    return Paper(
        id=str(rec["id"]),
        title=rec["title"],
        abstract=rec.get("abstract") or "",
        related_work=rec.get("related_work"),
        category=rec.get("category"),
    )


def edge_from_record(rec: dict) -> CitationEdge:
    return CitationEdge(
        source=str(rec["source"]),
        target=str(rec["target"]),
        sentence=rec.get("sentence") or "",
        preceding=rec.get("preceding"),
        following=rec.get("following"),
        in_related_work=bool(rec.get("in_related_work", False)),
    )


def _read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with Path(path).open("r", encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise GraphError(f"{path}:{i}: invalid JSON ({exc})") from exc
    return out


def save_split(split: SplitAssignment, path: str | Path) -> None:
    payload = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "train": [list(k) for k in split.train_edges],
        "val": [list(k) for k in split.val_edges],
        "test": [list(k) for k in split.test_edges],
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_split(path: str | Path) -> SplitAssignment:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return SplitAssignment(
        train_edges=[tuple(k) for k in payload["train"]],
        val_edges=[tuple(k) for k in payload["val"]],
        test_edges=[tuple(k) for k in payload["test"]],
        seed=int(payload["seed"]),
        ratios=tuple(payload.get("ratios", DEFAULT_SPLIT_RATIOS)),
    )
