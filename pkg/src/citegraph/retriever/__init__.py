"""Trainable citation-graph retriever: model, objective, training, retrieval."""

from .index import RetrievalIndex, RetrievalResult, Retriever, build_index, retrieve
from .losses import (
    AnchorExample,
    CandidateInput,
    LossConfig,
    gradients,
    loss_infonce,
    loss_regularization,
    total_loss,
)
from .model import (
    candidate_embedding,
    pseudo_query_embedding,
    query_embedding,
    similarity,
)
from .params import (
    RetrieverParams,
    config_hash,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .train import AdamOptimizer, TrainConfig, save_history, train, undirected_view

__all__ = [
    "AdamOptimizer",
    "AnchorExample",
    "CandidateInput",
    "LossConfig",
    "RetrievalIndex",
    "RetrievalResult",
    "Retriever",
    "RetrieverParams",
    "TrainConfig",
    "build_index",
    "candidate_embedding",
    "config_hash",
    "gradients",
    "init_params",
    "load_checkpoint",
    "loss_infonce",
    "loss_regularization",
    "pseudo_query_embedding",
    "query_embedding",
    "retrieve",
    "save_checkpoint",
    "save_history",
    "similarity",
    "total_loss",
    "train",
    "undirected_view",
]
