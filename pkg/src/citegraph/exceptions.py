"""Exception types shared across the package."""


class CitegraphError(Exception):
    """Base class for all citegraph errors."""


class CorpusError(CitegraphError):
    """Raised for malformed raw documents or bibliographies."""


class MacroExpansionError(CorpusError):
    """A user-defined macro exceeded the expansion depth cap."""

    def __init__(self, macro: str, depth: int):
        super().__init__(f"macro '\\{macro}' exceeded expansion depth {depth} (cyclic definition?)")
        self.macro = macro
        self.depth = depth


class GraphError(CitegraphError):
    """Raised for inconsistent graph inputs (dangling edges, unknown ids)."""


class EmbeddingIOError(CitegraphError):
    """Raised for unreadable or corrupt embedding/checkpoint files."""


class ShapeError(CitegraphError):
    """Raised when vector/matrix shapes do not match the configured dims."""


class DegenerateEmbeddingError(CitegraphError):
    """A similarity operand has zero norm; carries the offending ids."""

    def __init__(self, message: str, ids=()):
        super().__init__(message)
        self.ids = tuple(ids)


class TrainingError(CitegraphError):
    """Raised when training diverges (non-finite loss or gradients)."""


class PipelineError(CitegraphError):
    """A chain-of-thought step failed; carries the step name."""

    def __init__(self, step: str, message: str):
        super().__init__(f"{step}: {message}")
        self.step = step


class ServiceError(CitegraphError):
    """Raised for invalid service configuration."""
