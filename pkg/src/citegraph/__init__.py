"""Citation-graph retrieval and literature-task engine.

The package covers the full path from raw LaTeX sources to a trained
graph retriever and grounded literature tasks: corpus ingestion
(``citegraph.ingest``), the citation graph and its splits
(``citegraph.graph``), node embeddings (``citegraph.embeddings``), the
trainable neighbor-aware retriever (``citegraph.retriever``),
instruction-dataset construction (``citegraph.instructions``), the
retrieval-augmented task pipeline (``citegraph.pipeline``), evaluation
metrics (``citegraph.metrics``), and the CLI/service operator surface
(``citegraph.cli``, ``citegraph.service``).
"""

from .embeddings import (
    EmbeddingTable,
    HashingProvider,
    RemoteProvider,
    load_embeddings,
    node_embedding,
    save_embeddings,
    stub_embed,
)
from .exceptions import (
    CitegraphError,
    CorpusError,
    DegenerateEmbeddingError,
    EmbeddingIOError,
    GraphError,
    MacroExpansionError,
    PipelineError,
    ServiceError,
    ShapeError,
    TrainingError,
)
from .graph import (
    CitationEdge,
    CitationGraph,
    Paper,
    SplitAssignment,
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
from .retriever import (
    RetrievalIndex,
    RetrievalResult,
    Retriever,
    RetrieverParams,
    TrainConfig,
    build_index,
    init_params,
    load_checkpoint,
    retrieve,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
