"""Trainable retriever parameters and their binary checkpoint format."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..exceptions import EmbeddingIOError, ShapeError

CGRP_MAGIC = b"CGRP"
CGRP_VERSION = 1

# Serialization order of the parameter blocks; fixed by the file format.
PARAM_FIELDS = ("Wq", "bq", "Wc1", "Wc2", "bc", "mlp1W", "mlp1b", "mlp2W", "mlp2b")


@dataclass
class RetrieverParams:
    """All trainable matrices and vectors of the graph retriever.

    ``Wq``/``bq`` map a text embedding to the query space. ``Wc1``, ``Wc2``
    and ``bc`` form the neighbor-aware candidate map (own vector plus the
    mean of neighbor vectors). The two-layer MLP reconstructs a pseudo-query
    from a candidate. Arrays are float64 in memory; checkpoints store
    float32.
    """

    Wq: np.ndarray
    bq: np.ndarray
    Wc1: np.ndarray
    Wc2: np.ndarray
    bc: np.ndarray
    mlp1W: np.ndarray
    mlp1b: np.ndarray
    mlp2W: np.ndarray
    mlp2b: np.ndarray

    def __post_init__(self):
        d1, d = self.Wq.shape
        expected = _expected_shapes(d, d1)
        for name in PARAM_FIELDS:
            arr = getattr(self, name)
            if arr.shape != expected[name]:
                raise ShapeError(
                    f"parameter {name} has shape {arr.shape}, expected {expected[name]}"
                )
            if not np.all(np.isfinite(arr)):
                raise ShapeError(f"parameter {name} has non-finite entries")

    @property
    def d(self) -> int:
        return self.Wq.shape[1]

    @property
    def d1(self) -> int:
        return self.Wq.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in PARAM_FIELDS]

    def copy(self) -> "RetrieverParams":
        return RetrieverParams(*[a.copy() for a in self.arrays()])

    def zeros_like(self) -> "RetrieverParams":
        return RetrieverParams(*[np.zeros_like(a) for a in self.arrays()])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_vector(cls, vec: np.ndarray, d: int, d1: int) -> "RetrieverParams":
        shapes = _expected_shapes(d, d1)
        arrays = []
        offset = 0
        for name in PARAM_FIELDS:
            size = int(np.prod(shapes[name]))
            arrays.append(np.asarray(vec[offset:offset + size], dtype=np.float64).reshape(shapes[name]))
            offset += size
        if offset != vec.size:
            raise ShapeError(f"parameter vector has {vec.size} entries, expected {offset}")
        return cls(*arrays)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for a in self.arrays():
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]


def _expected_shapes(d: int, d1: int) -> dict[str, tuple]:
    return {
        "Wq": (d1, d),
        "bq": (d1,),
        "Wc1": (d1, d),
        "Wc2": (d1, d),
        "bc": (d1,),
        "mlp1W": (d1, d1),
        "mlp1b": (d1,),
        "mlp2W": (d1, d1),
        "mlp2b": (d1,),
    }


def init_params(d: int, d1: int | None = None, seed: int = 0) -> RetrieverParams:
    """Seeded initialization: each matrix uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
    biases zero."""
    if d1 is None:
        d1 = d
    rng = np.random.Generator(np.random.PCG64(seed))

    def mat(rows, cols):
        bound = 1.0 / np.sqrt(cols)
        return rng.uniform(-bound, bound, size=(rows, cols))

    return RetrieverParams(
        Wq=mat(d1, d),
        bq=np.zeros(d1),
        Wc1=mat(d1, d),
        Wc2=mat(d1, d),
        bc=np.zeros(d1),
        mlp1W=mat(d1, d1),
        mlp1b=np.zeros(d1),
        mlp2W=mat(d1, d1),
        mlp2b=np.zeros(d1),
    )


def config_hash(config_dict: dict) -> int:
    """Stable 64-bit hash of a JSON-serializable config mapping."""
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode("utf-8")).digest()
    return struct.unpack("<Q", digest[:8])[0]


def save_checkpoint(params: RetrieverParams, path: str | Path, cfg_hash: int = 0) -> None:
    """Write the binary checkpoint: magic, dims, float32 blocks, config hash."""
    path = Path(path)
    with path.open("wb") as f:
        f.write(CGRP_MAGIC)
        f.write(struct.pack("<HII", CGRP_VERSION, params.d, params.d1))
        for a in params.arrays():
            f.write(np.ascontiguousarray(a, dtype="<f4").tobytes())
        f.write(struct.pack("<Q", cfg_hash))


def load_checkpoint(path: str | Path) -> tuple[RetrieverParams, int]:
    """Read a checkpoint; float32 blocks widen exactly to float64 in memory."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 14 or data[:4] != CGRP_MAGIC:
        raise EmbeddingIOError(f"{path}: not a retriever checkpoint (bad magic)")
    version, d, d1 = struct.unpack_from("<HII", data, 4)
    if version != CGRP_VERSION:
        raise EmbeddingIOError(f"{path}: unsupported checkpoint version {version}")
    shapes = _expected_shapes(d, d1)
    offset = 14
    arrays = []
    for name in PARAM_FIELDS:
        size = int(np.prod(shapes[name]))
        end = offset + 4 * size
        if end > len(data) - 8:
            raise EmbeddingIOError(f"{path}: truncated in block {name}")
        block = np.frombuffer(data, dtype="<f4", count=size, offset=offset)
        arrays.append(block.astype(np.float64).reshape(shapes[name]))
        offset = end
    if offset + 8 != len(data):
        raise EmbeddingIOError(f"{path}: {len(data) - offset - 8} unexpected trailing bytes")
    (cfg_hash,) = struct.unpack_from("<Q", data, offset)
    return RetrieverParams(*arrays), cfg_hash
