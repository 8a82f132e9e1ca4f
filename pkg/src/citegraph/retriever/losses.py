"""Training objective and its exact reverse-mode gradients.

The objective couples a contrastive InfoNCE term over each anchor's
neighbors against sampled non-neighbors with a 1-norm reconstruction term
that pulls every positive candidate's pseudo-query toward the anchor's own
embedding. Gradients are hand-derived (no autodiff framework): cosine,
mean aggregation, and the MLP are backpropagated explicitly, with the
rectifier and absolute-value subgradients at 0 defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DegenerateEmbeddingError, ShapeError, TrainingError
from .params import PARAM_FIELDS, RetrieverParams


@dataclass
class CandidateInput:
    """A candidate paper: its own vector plus the capped neighbor stack."""

    z: np.ndarray
    neighbor_zs: np.ndarray | None = None
    id: str = ""


@dataclass
class AnchorExample:
    """One anchor with its positive (linked) and negative candidates."""

    z_query: np.ndarray
    positives: list[CandidateInput] = field(default_factory=list)
    negatives: list[CandidateInput] = field(default_factory=list)
    id: str = ""


@dataclass
class LossConfig:
    """Flags controlling the objective; mirrors the training configuration."""

    lambda_re: float = 1.0
    infonce_include_positive: bool = False
    ablate_pseudo_query: bool = False
    ablate_neighbor_aware: bool = False


def loss_regularization(z_sources: list[np.ndarray], pseudo: list[np.ndarray]) -> float:
    """Sum of 1-norm gaps between source embeddings and pseudo-queries,
    aligned per linked pair."""
    if len(z_sources) != len(pseudo):
        raise ShapeError(
            f"regularization lists misaligned: {len(z_sources)} sources vs {len(pseudo)} pseudo-queries"
        )
    total = 0.0
    for z, p in zip(z_sources, pseudo):
        z = np.asarray(z, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        if z.shape != p.shape:
            raise ShapeError(f"regularization pair has shapes {z.shape} vs {p.shape}")
        total += float(np.abs(z - p).sum())
    return total


def loss_infonce(sim_pos, sim_negs, include_positive: bool = False) -> float:
    """Contrastive loss for one anchor.

    ``sim_pos`` holds the positive similarities; ``sim_negs`` is either a
    single negative-similarity vector shared by all positives or one row per
    positive. By default the denominator ranges over negatives only; with
    ``include_positive`` each positive's own term joins its denominator
    (making the loss strictly positive). Stabilized by max-subtraction.
    """
    s_pos = np.atleast_1d(np.asarray(sim_pos, dtype=np.float64))
    negs = np.asarray(sim_negs, dtype=np.float64)
    if s_pos.size == 0:
        raise ShapeError("InfoNCE needs at least one positive similarity")
    if negs.size == 0:
        raise ShapeError("InfoNCE needs at least one negative similarity")
    if negs.ndim == 1:
        neg_rows = np.broadcast_to(negs, (s_pos.size, negs.size))
    elif negs.ndim == 2:
        if negs.shape[0] != s_pos.size:
            raise ShapeError(
                f"negative matrix has {negs.shape[0]} rows for {s_pos.size} positives"
            )
        neg_rows = negs
    else:
        raise ShapeError(f"negative similarities must be 1- or 2-D, got shape {negs.shape}")

    total = 0.0
    for j in range(s_pos.size):
        row = neg_rows[j]
        if include_positive:
            pool = np.concatenate([row, s_pos[j:j + 1]])
        else:
            pool = row
        m = float(pool.max())
        lse = m + float(np.log(np.exp(pool - m).sum()))
        total += -(float(s_pos[j]) - lse)
    return total / s_pos.size


def total_loss(params: RetrieverParams, batch: list[AnchorExample],
               config: LossConfig | None = None) -> float:
    """Summed anchor losses: InfoNCE plus lambda_re times the 1-norm term."""
    loss, _ = _forward_backward(params, batch, config or LossConfig(), want_grads=False)
    return loss


def gradients(params: RetrieverParams, batch: list[AnchorExample],
              config: LossConfig | None = None) -> tuple[float, RetrieverParams]:
    """Loss and exact gradients of :func:`total_loss` for every parameter."""
    loss, grads = _forward_backward(params, batch, config or LossConfig(), want_grads=True)
    return loss, grads


def _forward_backward(params: RetrieverParams, batch: list[AnchorExample],
                      cfg: LossConfig, want_grads: bool):
    if not batch:
        raise ShapeError("empty batch")
    use_pseudo = not cfg.ablate_pseudo_query
    if use_pseudo and cfg.lambda_re != 0.0 and params.d1 != params.d:
        raise ShapeError(
            f"1-norm regularization needs d1 == d, got d={params.d}, d1={params.d1}"
        )

    grads = params.zeros_like() if want_grads else None
    total = 0.0
    for anchor in batch:
        total += _anchor_pass(params, anchor, cfg, grads)
    if not np.isfinite(total):
        ids = [a.id for a in batch if a.id]
        raise TrainingError(f"non-finite loss over batch anchors {ids or '(unnamed)'}")
    return total, grads


def _anchor_pass(params: RetrieverParams, anchor: AnchorExample, cfg: LossConfig,
                 grads: RetrieverParams | None) -> float:
    n_pos = len(anchor.positives)
    n_neg = len(anchor.negatives)
    if n_pos < 1 or n_neg < 1:
        raise ShapeError(
            f"anchor {anchor.id!r} needs >=1 positive and >=1 negative "
            f"(got {n_pos}/{n_neg})"
        )
    use_pseudo = not cfg.ablate_pseudo_query
    candidates = anchor.positives + anchor.negatives

    z_i = np.asarray(anchor.z_query, dtype=np.float64)
    if z_i.shape != (params.d,):
        raise ShapeError(f"anchor {anchor.id!r}: z has shape {z_i.shape}, expected ({params.d},)")

    z_c = np.stack([np.asarray(c.z, dtype=np.float64) for c in candidates])
    mean_z = np.zeros_like(z_c)
    if not cfg.ablate_neighbor_aware:
        for idx, cand in enumerate(candidates):
            if cand.neighbor_zs is not None and len(cand.neighbor_zs) > 0:
                mean_z[idx] = np.asarray(cand.neighbor_zs, dtype=np.float64).mean(axis=0)

    # forward
    q = params.Wq @ z_i + params.bq
    c_mat = z_c @ params.Wc1.T + mean_z @ params.Wc2.T + params.bc
    if use_pseudo:
        h = c_mat @ params.mlp1W.T + params.mlp1b
        a = np.maximum(h, 0.0)
        p_mat = a @ params.mlp2W.T + params.mlp2b
        u = c_mat + p_mat
    else:
        p_mat = None
        u = c_mat

    q_norm = float(np.linalg.norm(q))
    u_norms = np.linalg.norm(u, axis=1)
    if q_norm == 0.0 or np.any(u_norms == 0.0):
        bad = [anchor.id] + [candidates[i].id for i in np.flatnonzero(u_norms == 0.0)]
        raise DegenerateEmbeddingError("zero-norm embedding in similarity", ids=bad)
    sims = (u @ q) / (u_norms * q_norm)

    s_pos = sims[:n_pos]
    s_neg = sims[n_pos:]
    loss = loss_infonce(s_pos, s_neg, include_positive=cfg.infonce_include_positive)
    if use_pseudo and cfg.lambda_re != 0.0:
        diff = z_i[None, :] - p_mat[:n_pos]
        loss += cfg.lambda_re * float(np.abs(diff).sum())

    if grads is None:
        return loss

    # backward: d loss / d sims
    d_sims = np.zeros_like(sims)
    if cfg.infonce_include_positive:
        inv_p = 1.0 / n_pos
        for j in range(n_pos):
            pool = np.concatenate([s_neg, s_pos[j:j + 1]])
            m = pool.max()
            w = np.exp(pool - m)
            w /= w.sum()
            d_sims[j] += inv_p * (w[-1] - 1.0)
            d_sims[n_pos:] += inv_p * w[:-1]
    else:
        d_sims[:n_pos] = -1.0 / n_pos
        m = s_neg.max()
        w = np.exp(s_neg - m)
        d_sims[n_pos:] = w / w.sum()

    # cosine backward
    inv = 1.0 / (u_norms * q_norm)
    g_u = d_sims[:, None] * (q[None, :] * inv[:, None] - (sims / u_norms**2)[:, None] * u)
    g_q = (d_sims * inv) @ u - float(d_sims @ sims) / q_norm**2 * q

    g_c = g_u.copy()
    if use_pseudo:
        g_p = g_u.copy()
        if cfg.lambda_re != 0.0:
            # subgradient of |z - p| wrt p, with sign(0) = 0
            g_p[:n_pos] += cfg.lambda_re * np.sign(p_mat[:n_pos] - z_i[None, :])
        grads.mlp2W += g_p.T @ a
        grads.mlp2b += g_p.sum(axis=0)
        g_a = g_p @ params.mlp2W
        g_h = np.where(h > 0.0, g_a, 0.0)
        grads.mlp1W += g_h.T @ c_mat
        grads.mlp1b += g_h.sum(axis=0)
        g_c += g_h @ params.mlp1W

    grads.Wc1 += g_c.T @ z_c
    grads.Wc2 += g_c.T @ mean_z
    grads.bc += g_c.sum(axis=0)
    grads.Wq += np.outer(g_q, z_i)
    grads.bq += g_q

    for name in PARAM_FIELDS:
        block = getattr(grads, name)
        if not np.all(np.isfinite(block)):
            raise TrainingError(
                f"non-finite gradient in {name} at anchor {anchor.id!r}"
            )
    return loss
