"""Graph construction, splits, and sampling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from citegraph.exceptions import GraphError
from citegraph.graph import (
    CitationEdge,
    Paper,
    build_graph,
    load_graph,
    load_split,
    neighbors,
    sample_negatives,
    sample_test_subgraph,
    save_graph,
    save_split,
    split_edges,
)


def line_graph(n):
    papers = [Paper(id=f"n{i}", title=f"p{i}") for i in range(n)]
    edges = [CitationEdge(source=f"n{i}", target=f"n{i+1}") for i in range(n - 1)]
    return build_graph(papers, edges)


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    papers = [Paper(id=f"n{i:03d}", title=f"p{i}") for i in range(n)]
    edges = [CitationEdge(source=f"n{i:03d}", target=f"n{j:03d}")
             for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return build_graph(papers, edges)


class TestBuild:
    def test_adjacency_from_edges(self):
        g = build_graph(
            [Paper(id=x, title=x) for x in "ABC"],
            [CitationEdge(source="A", target="B"), CitationEdge(source="B", target="C")])
        assert g.neighbors("A") == {"B"}
        assert g.neighbors("B") == {"A", "C"}
        assert g.out_neighbors("B") == {"C"}

    def test_duplicate_edge_dropped_and_counted(self):
        g = build_graph(
            [Paper(id=x, title=x) for x in "AB"],
            [CitationEdge(source="A", target="B"), CitationEdge(source="A", target="B")])
        assert len(g.edges) == 1
        assert g.duplicate_count == 1

    def test_dangling_endpoint_errors_with_offenders(self):
        with pytest.raises(GraphError) as err:
            build_graph([Paper(id="A", title="A")],
                        [CitationEdge(source="A", target="MISSING")])
        assert "MISSING" in str(err.value)

    def test_self_loop_rejected(self):
        with pytest.raises(GraphError):
            CitationEdge(source="A", target="A")

    def test_duplicate_paper_id_errors(self):
        with pytest.raises(GraphError):
            build_graph([Paper(id="A", title="x"), Paper(id="A", title="y")], [])


class TestNeighbors:
    def test_path_neighbors(self):
        g = line_graph(3)
        assert neighbors(g, "n1") == {"n0", "n2"}

    def test_isolated_node(self):
        g = build_graph([Paper(id="A", title="a")], [])
        assert neighbors(g, "A") == set()

    def test_star_center(self):
        papers = [Paper(id=f"s{i}", title="t") for i in range(6)]
        edges = [CitationEdge(source="s0", target=f"s{i}") for i in range(1, 6)]
        g = build_graph(papers, edges)
        assert len(neighbors(g, "s0")) == 5

    def test_unknown_id_errors(self):
        with pytest.raises(GraphError):
            neighbors(line_graph(3), "ghost")

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_symmetry(self, seed):
        g = random_graph(15, 0.25, seed)
        for a in g.papers:
            for b in g.neighbors(a):
                assert a in g.neighbors(b)


class TestSplits:
    def test_exact_ratio_arithmetic(self):
        g = line_graph(21)  # exactly 20 edges
        split = split_edges(g, seed=0)
        assert (len(split.train_edges), len(split.val_edges), len(split.test_edges)) == (14, 3, 3)

    def test_ten_edges_rounding(self):
        g = line_graph(11)
        assert len(g.edges) == 10
        split = split_edges(g, seed=1)
        sizes = (len(split.train_edges), len(split.val_edges), len(split.test_edges))
        assert sizes == (7, 1, 2)
        assert sum(sizes) == 10

    def test_deterministic(self):
        g = random_graph(30, 0.2, 7)
        a = split_edges(g, seed=42)
        b = split_edges(g, seed=42)
        assert a.train_edges == b.train_edges
        assert a.val_edges == b.val_edges
        assert a.test_edges == b.test_edges

    def test_partition_exact(self):
        g = random_graph(30, 0.2, 9)
        split = split_edges(g, seed=5)
        train, val, test = split.edge_sets()
        assert train.isdisjoint(val) and train.isdisjoint(test) and val.isdisjoint(test)
        assert train | val | test == {e.key for e in g.edges}

    def test_too_few_edges(self):
        with pytest.raises(GraphError):
            split_edges(line_graph(3), seed=0)

    def test_manifest_round_trip(self, tmp_path):
        g = random_graph(25, 0.2, 11)
        split = split_edges(g, seed=3)
        save_split(split, tmp_path / "split.json")
        loaded = load_split(tmp_path / "split.json")
        assert loaded.train_edges == split.train_edges
        assert loaded.seed == split.seed


class TestSubgraphSampling:
    def test_n_at_least_v_returns_all(self):
        g = line_graph(8)
        assert sample_test_subgraph(g, n=8, seed=0) == set(g.papers)

    def test_connected_triple_on_path(self):
        g = line_graph(10)
        picked = sample_test_subgraph(g, n=3, seed=4)
        assert len(picked) == 3
        ranks = sorted(int(p[1:]) for p in picked)
        assert ranks[2] - ranks[0] == 2  # contiguous on a path graph

    def test_deterministic(self):
        g = random_graph(40, 0.15, 2)
        assert sample_test_subgraph(g, 10, seed=9) == sample_test_subgraph(g, 10, seed=9)

    def test_small_component_returned_with_warning(self, caplog):
        papers = [Paper(id=f"c{i}", title="t") for i in range(4)]
        edges = [CitationEdge(source="c0", target="c1"),
                 CitationEdge(source="c2", target="c3")]
        g = build_graph(papers, edges)
        with caplog.at_level("WARNING"):
            picked = sample_test_subgraph(g, n=3, seed=0)
        assert len(picked) == 2
        assert any("largest connected component" in r.message for r in caplog.records)

    def test_invalid_n(self):
        with pytest.raises(GraphError):
            sample_test_subgraph(line_graph(4), n=0, seed=0)


class TestNegativeSampling:
    def test_forced_unique_non_neighbor(self):
        # complete graph on 4 nodes minus one edge: the unique non-neighbor
        papers = [Paper(id=x, title=x) for x in "ABCD"]
        edges = [CitationEdge(source=a, target=b)
                 for a, b in ("AB", "AC", "AD", "BC", "BD")]  # CD missing
        g = build_graph(papers, edges)
        assert sample_negatives(g, "C", 1, seed=0) == {"D"}

    def test_zero_negatives(self):
        assert sample_negatives(line_graph(5), "n0", 0, seed=0) == set()

    def test_pool_too_small_errors(self):
        g = line_graph(3)
        with pytest.raises(GraphError):
            sample_negatives(g, "n1", 5, seed=0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_disjoint_from_neighbors_brute_force(self, seed):
        g = random_graph(40, 0.1, 1234)
        node = "n000"
        picked = sample_negatives(g, node, 10, seed=seed)
        assert len(picked) == 10
        banned = g.neighbors(node) | {node}
        assert picked.isdisjoint(banned)

    def test_deterministic(self):
        g = random_graph(40, 0.1, 77)
        assert sample_negatives(g, "n001", 7, seed=5) == sample_negatives(g, "n001", 7, seed=5)


class TestPersistence:
    def test_jsonl_round_trip(self, tmp_path, small_graph=None):
        g = random_graph(12, 0.3, 5)
        save_graph(g, tmp_path / "nodes.jsonl", tmp_path / "edges.jsonl")
        loaded = load_graph(tmp_path / "nodes.jsonl", tmp_path / "edges.jsonl")
        assert set(loaded.papers) == set(g.papers)
        assert {e.key for e in loaded.edges} == {e.key for e in g.edges}
