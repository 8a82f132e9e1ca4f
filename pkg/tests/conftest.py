"""Shared fixtures: small graphs and the planted-cluster benchmark."""

from __future__ import annotations

import numpy as np
import pytest

from citegraph.embeddings import EmbeddingTable
from citegraph.graph import CitationEdge, CitationGraph, Paper, build_graph


def make_planted_benchmark(seed: int, n_clusters: int = 4, cluster_size: int = 50,
                           p_intra: float = 0.2, p_inter: float = 0.01,
                           dim: int = 16, noise: float = 0.3):
    """Planted-cluster benchmark: community graph + centroid-plus-noise vectors.

    Every node's embedding is its cluster's basis vector plus seeded Gaussian
    noise; edges are sampled independently with the intra/inter probabilities.
    Returns (graph, embedding table, {id: cluster index}).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    ids = [f"p{c:02d}{i:03d}" for c in range(n_clusters) for i in range(cluster_size)]
    cluster = {pid: int(pid[1:3]) for pid in ids}
    papers = [Paper(id=pid, title=f"paper {pid}") for pid in ids]
    edges = []
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            p = p_intra if cluster[ids[a]] == cluster[ids[b]] else p_inter
            if rng.random() < p:
                edges.append(CitationEdge(source=ids[a], target=ids[b], sentence="s"))
    table = EmbeddingTable(dim)
    for pid in ids:
        z = np.zeros(dim)
        z[cluster[pid]] = 1.0
        z = z + noise * rng.normal(size=dim)
        table.add(pid, z.astype(np.float32))
    return build_graph(papers, edges), table, cluster


def make_two_cluster_toy(seed: int = 0, size: int = 20, dim: int = 8,
                         noise: float = 0.1):
    """Tiny, nearly-noiseless two-community graph for fast metric tests."""
    return make_planted_benchmark(seed, n_clusters=2, cluster_size=size,
                                  p_intra=0.4, p_inter=0.02, dim=dim, noise=noise)


@pytest.fixture(scope="session")
def trained_artifacts(tmp_path_factory):
    """On-disk artifact set (graph, embeddings, checkpoint, split) shared by
    CLI and service tests."""
    from citegraph.embeddings import EmbeddingTable as _Table
    from citegraph.embeddings import HashingProvider, node_embedding, save_embeddings
    from citegraph.graph import save_graph, save_split, split_edges
    from citegraph.retriever import TrainConfig, save_checkpoint, train

    out = tmp_path_factory.mktemp("artifacts")
    rng = np.random.default_rng(0)
    papers = [
        Paper(id=f"p{i:02d}", title=f"topic {'alpha' if i < 12 else 'beta'} paper {i}",
              abstract=f"a study of {'alpha methods' if i < 12 else 'beta systems'} "
                       f"with details {i} " + " ".join(f"w{i}{j}" for j in range(12)))
        for i in range(24)
    ]
    edges = []
    for i in range(24):
        for j in range(i + 1, 24):
            same = (i < 12) == (j < 12)
            if rng.random() < (0.45 if same else 0.04):
                edges.append(CitationEdge(source=f"p{i:02d}", target=f"p{j:02d}",
                                          sentence=f"sentence {i} cites {j}."))
    graph = build_graph(papers, edges)
    save_graph(graph, out / "nodes.jsonl", out / "edges.jsonl")

    provider = HashingProvider(16)
    table = _Table(16)
    for pid in graph.node_ids:
        table.add(pid, node_embedding(provider, graph.papers[pid]))
    save_embeddings(table, out / "emb.cgem")

    split = split_edges(graph, seed=0)
    save_split(split, out / "split.json")

    config = TrainConfig(seed=0, epochs_max=8, patience=8)
    params, _ = train(graph, table, split, config)
    save_checkpoint(params, out / "ckpt.cgrp", config.stable_hash())
    return {
        "dir": out,
        "nodes": out / "nodes.jsonl",
        "edges": out / "edges.jsonl",
        "embeddings": out / "emb.cgem",
        "split": out / "split.json",
        "checkpoint": out / "ckpt.cgrp",
        "graph": graph,
        "table": table,
        "params": params,
    }


@pytest.fixture
def path_graph() -> CitationGraph:
    papers = [Paper(id=f"n{i}", title=f"paper {i}") for i in range(10)]
    edges = [CitationEdge(source=f"n{i}", target=f"n{i+1}", sentence="s")
             for i in range(9)]
    return build_graph(papers, edges)


@pytest.fixture
def small_graph() -> CitationGraph:
    papers = [
        Paper(id="A", title="alpha methods survey",
              abstract="a survey of alpha methods for graphs with many words "
                       "covering history practice and outlook in detail"),
        Paper(id="B", title="beta systems analysis",
              abstract="analysis of beta systems and their scaling behavior "
                       "with extensive experiments across domains"),
        Paper(id="C", title="gamma theory notes",
              abstract="short gamma notes"),
        Paper(id="D", title="delta applications",
              abstract="delta applied to industrial settings with case studies "
                       "and deployment guidance for practitioners"),
    ]
    edges = [
        CitationEdge(source="A", target="B",
                     sentence="Alpha builds on beta systems \\cite{b}.",
                     preceding="Context first.", following="More context.",
                     in_related_work=True),
        CitationEdge(source="B", target="C", sentence="Beta cites gamma \\cite{c}."),
        CitationEdge(source="A", target="D", sentence="Alpha also uses delta \\cite{d}."),
    ]
    return build_graph(papers, edges)
