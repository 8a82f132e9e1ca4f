"""Forward maps of the retriever: query, candidate, pseudo-query, similarity.

The candidate side aggregates one hop of neighbor vectors (a single message
passing layer); the pseudo-query MLP reconstructs, from a candidate alone,
an embedding that imitates the complete query that would retrieve it. Match
quality is the cosine between the query vector and the candidate-plus-
pseudo-query sum.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import DegenerateEmbeddingError, ShapeError
from .params import RetrieverParams


def query_embedding(params: RetrieverParams, z: np.ndarray) -> np.ndarray:
    """Affine map of a text embedding into the query space: Wq z + bq."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (params.d,):
        raise ShapeError(f"query input has shape {z.shape}, expected ({params.d},)")
    return params.Wq @ z + params.bq


def candidate_embedding(params: RetrieverParams, z: np.ndarray,
                        neighbor_zs: np.ndarray | None = None,
                        ablate_neighbor_aware: bool = False) -> np.ndarray:
    """Neighbor-aware candidate map: Wc1 z + mean_k(Wc2 z_k) + bc.

    ``neighbor_zs`` is the (already capped) stack of neighbor vectors; with
    no neighbors the mean term is the zero vector. Under the neighbor-aware
    ablation the mean term is dropped regardless of neighbors.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (params.d,):
        raise ShapeError(f"candidate input has shape {z.shape}, expected ({params.d},)")
    out = params.Wc1 @ z + params.bc
    if not ablate_neighbor_aware and neighbor_zs is not None and len(neighbor_zs) > 0:
        nz = np.asarray(neighbor_zs, dtype=np.float64)
        if nz.ndim != 2 or nz.shape[1] != params.d:
            raise ShapeError(f"neighbor stack has shape {nz.shape}, expected (*, {params.d})")
        # (1/|N|) sum_k Wc2 z_k  ==  Wc2 @ mean_k z_k
        out = out + params.Wc2 @ nz.mean(axis=0)
    return out


def pseudo_query_embedding(params: RetrieverParams, c: np.ndarray) -> np.ndarray:
    """Two affine layers with a rectifier between: mlp2(relu(mlp1(c)))."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (params.d1,):
        raise ShapeError(f"pseudo-query input has shape {c.shape}, expected ({params.d1},)")
    hidden = params.mlp1W @ c + params.mlp1b
    return params.mlp2W @ np.maximum(hidden, 0.0) + params.mlp2b


def similarity(q: np.ndarray, c: np.ndarray, p: np.ndarray | None = None,
               ids: tuple = ()) -> float:
    """Cosine between the query and the candidate-plus-pseudo-query sum.

    ``p=None`` scores against the candidate alone (pseudo-query ablation).
    Zero-norm operands are degenerate embeddings and raise, carrying ``ids``.
    """
    q = np.asarray(q, dtype=np.float64)
    u = np.asarray(c, dtype=np.float64)
    if p is not None:
        u = u + np.asarray(p, dtype=np.float64)
    if q.shape != u.shape:
        raise ShapeError(f"similarity operands have shapes {q.shape} vs {u.shape}")
    qn = float(np.linalg.norm(q))
    un = float(np.linalg.norm(u))
    if qn == 0.0 or un == 0.0:
        raise DegenerateEmbeddingError(
            f"zero-norm similarity operand (|q|={qn}, |c+p|={un})", ids=ids
        )
    return float(q @ u) / (qn * un)
