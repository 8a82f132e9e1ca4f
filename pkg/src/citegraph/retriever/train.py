"""Self-supervised retriever training over a citation graph's train edges.

Each epoch walks the anchors (nodes incident to a train edge) in a seeded
shuffle. An anchor's positives are its train-edge neighbors; negatives are
resampled every epoch from the non-neighbors. One Adam step is taken per
anchor. After every epoch, Precision@5 on the held-out validation edges
drives model selection and early stopping: the best-scoring parameters are
kept and returned once ``patience`` epochs pass without improvement.

Only train edges feed candidate aggregation here, so held-out edges never
leak into candidate rows during validation.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..embeddings import EmbeddingTable
from ..exceptions import ShapeError, TrainingError
from ..graph import CitationGraph, SplitAssignment
from .losses import AnchorExample, CandidateInput, LossConfig, gradients
from .params import RetrieverParams, config_hash, init_params

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Retriever training hyperparameters (defaults follow the reference setup)."""

    d1: int | None = None  # None: equal to the embedding dim (required for the 1-norm term)
    learning_rate: float = 1e-3
    epochs_max: int = 500
    patience: int = 5
    num_negatives: int = 10
    max_neighbors: int = 10
    lambda_re: float = 1.0
    seed: int = 0
    ablate_pseudo_query: bool = False
    ablate_neighbor_aware: bool = False
    infonce_include_positive: bool = False

    def __post_init__(self):
        if self.epochs_max < 1:
            raise ShapeError(f"epochs_max must be >= 1, got {self.epochs_max}")
        if self.patience < 1:
            raise ShapeError(f"patience must be >= 1, got {self.patience}")
        if self.num_negatives < 1:
            raise ShapeError(f"num_negatives must be >= 1, got {self.num_negatives}")
        if self.max_neighbors < 0:
            raise ShapeError(f"max_neighbors must be >= 0, got {self.max_neighbors}")

    def loss_config(self) -> LossConfig:
        return LossConfig(
            lambda_re=self.lambda_re,
            infonce_include_positive=self.infonce_include_positive,
            ablate_pseudo_query=self.ablate_pseudo_query,
            ablate_neighbor_aware=self.ablate_neighbor_aware,
        )

    def stable_hash(self) -> int:
        return config_hash(asdict(self))


class AdamOptimizer:
    """Adam with bias correction, applied blockwise to the parameter set."""

    def __init__(self, params: RetrieverParams, learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = params.zeros_like()
        self.v = params.zeros_like()

    def step(self, params: RetrieverParams, grads: RetrieverParams) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params.arrays(), grads.arrays(),
                              self.m.arrays(), self.v.arrays()):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def undirected_view(edge_keys, node_ids) -> dict[str, set[str]]:
    """Symmetric adjacency over the given edge keys, defined for every node."""
    adj: dict[str, set[str]] = {pid: set() for pid in node_ids}
    for src, dst in edge_keys:
        adj[src].add(dst)
        adj[dst].add(src)
    return adj


def train(graph: CitationGraph, embeddings: EmbeddingTable, split: SplitAssignment,
          config: TrainConfig | None = None, val_metric_fn=None,
          params: RetrieverParams | None = None) -> tuple[RetrieverParams, list[dict]]:
    """Train the retriever; returns the best-validation parameters and history.

    ``val_metric_fn(params, epoch) -> float`` overrides the validation probe
    (tests use it to drive crafted schedules); the default computes P@5 on
    the validation edges with ranking restricted to non-train-neighbors.
    Deterministic: equal inputs and seed give bitwise-identical history.
    """
    config = config or TrainConfig()
    if not split.train_edges:
        raise TrainingError("empty train split")
    d = embeddings.dim
    d1 = config.d1 if config.d1 is not None else d
    if d1 != d:
        raise ShapeError(
            f"hidden dim must equal embedding dim for the 1-norm term (d={d}, d1={d1})"
        )

    node_ids = graph.node_ids
    train_adj = undirected_view(split.train_edges, node_ids)
    anchors = [pid for pid in node_ids if train_adj[pid]]
    if not anchors:
        raise TrainingError("no anchors: train edges reference no nodes")

    z_cache = {pid: embeddings.get(pid).astype(np.float64) for pid in node_ids}
    if params is None:
        params = init_params(d, d1, seed=config.seed)
    loss_cfg = config.loss_config()
    optimizer = AdamOptimizer(params, config.learning_rate)
    rng = np.random.Generator(np.random.PCG64(config.seed))

    if val_metric_fn is None:
        val_metric_fn = _default_validation_probe(graph, embeddings, split, config)

    best_params = params.copy()
    best_metric = -np.inf
    best_epoch = 0
    stale = 0
    history: list[dict] = []

    for epoch in range(1, config.epochs_max + 1):
        capped = _capped_neighbor_lists(train_adj, config.max_neighbors, rng)
        order = rng.permutation(len(anchors))
        epoch_loss = 0.0
        steps = 0
        for idx in order:
            anchor_id = anchors[idx]
            example = _make_example(anchor_id, train_adj, capped, z_cache,
                                    node_ids, config, rng)
            if example is None:
                continue
            try:
                loss, grads = gradients(params, [example], loss_cfg)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}: {exc}") from exc
            if not np.isfinite(loss):
                raise TrainingError(f"epoch {epoch}: non-finite loss at anchor {anchor_id!r}")
            optimizer.step(params, grads)
            epoch_loss += loss
            steps += 1
        if steps == 0:
            raise TrainingError(f"epoch {epoch}: no trainable anchors (negative pools empty)")

        val_metric = float(val_metric_fn(params, epoch))
        history.append({
            "epoch": epoch,
            "train_loss": epoch_loss / steps,
            "val_p_at_5": val_metric,
        })
        if val_metric > best_metric:
            best_metric = val_metric
            best_params = params.copy()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("early stop at epoch %d (best epoch %d, val P@5 %.4f)",
                            epoch, best_epoch, best_metric)
                break

    return best_params, history


def _capped_neighbor_lists(train_adj: dict[str, set[str]], cap: int,
                           rng: np.random.Generator) -> dict[str, list[str]]:
    """Per-epoch neighbor lists, uniformly subsampled down to the cap."""
    capped: dict[str, list[str]] = {}
    for pid in sorted(train_adj):
        neigh = sorted(train_adj[pid])
        if cap and len(neigh) > cap:
            picks = rng.choice(len(neigh), size=cap, replace=False)
            neigh = [neigh[i] for i in sorted(picks)]
        capped[pid] = neigh
    return capped


def _make_example(anchor_id: str, train_adj: dict[str, set[str]],
                  capped: dict[str, list[str]], z_cache: dict[str, np.ndarray],
                  node_ids: list[str], config: TrainConfig,
                  rng: np.random.Generator) -> AnchorExample | None:
    positives = sorted(train_adj[anchor_id])
    excluded = train_adj[anchor_id] | {anchor_id}
    pool = [pid for pid in node_ids if pid not in excluded]
    if not pool:
        return None
    m = min(config.num_negatives, len(pool))
    picks = rng.choice(len(pool), size=m, replace=False)
    negatives = [pool[i] for i in sorted(picks)]

    def candidate(pid: str) -> CandidateInput:
        neigh = capped[pid]
        stack = np.stack([z_cache[n] for n in neigh]) if neigh else None
        return CandidateInput(z=z_cache[pid], neighbor_zs=stack, id=pid)

    return AnchorExample(
        z_query=z_cache[anchor_id],
        positives=[candidate(p) for p in positives],
        negatives=[candidate(n) for n in negatives],
        id=anchor_id,
    )


def _default_validation_probe(graph: CitationGraph, embeddings: EmbeddingTable,
                              split: SplitAssignment, config: TrainConfig):
    def probe(params: RetrieverParams, epoch: int) -> float:
        from ..metrics import heldout_precision_at_k

        return heldout_precision_at_k(
            graph, embeddings, params, split, which="val", k=5,
            ablate_pseudo_query=config.ablate_pseudo_query,
            ablate_neighbor_aware=config.ablate_neighbor_aware,
        )

    return probe


def save_history(history: list[dict], path) -> None:
    """Write the epoch history as JSON lines."""
    import json
    from pathlib import Path

    with Path(path).open("w", encoding="utf-8") as f:
        for rec in history:
            f.write(json.dumps(rec) + "\n")
