"""Node embeddings: provider abstraction, the z-vector table, and its file format.

A node's vector is the elementwise sum of its title embedding and its
abstract embedding, produced by any deterministic text encoder. Three
providers ship here: a seeded hashing stub for tests, a client for a remote
encoder service, and table-backed lookup of precomputed vectors. Vectors are
stored as float32 throughout so the on-disk format round-trips bit-exactly.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Protocol

import numpy as np
import requests

from .exceptions import EmbeddingIOError, ShapeError
from .graph import Paper

CGEM_MAGIC = b"CGEM"
CGEM_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF


class EmbeddingProvider(Protocol):
    """Deterministic text encoder: equal input text yields equal vectors."""

    def embed(self, text: str) -> np.ndarray: ...

    def dim(self) -> int: ...


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64_MASK
    return h


def stub_embed(text: str, dim: int = 16) -> np.ndarray:
    """Deterministic bag-of-tokens hash embedding, identical across platforms.

    Each whitespace token is hashed (64-bit FNV-1a over UTF-8 bytes) into one
    of ``dim`` buckets with a +/-1 contribution taken from the hash's top
    bit, and the bucket sums are L2-normalized. A zero accumulation (e.g.
    empty text) maps to the first basis vector by convention.
    """
    if dim <= 0:
        raise ShapeError(f"embedding dim must be positive, got {dim}")
    acc = np.zeros(dim, dtype=np.float64)
    for token in text.split():
        h = _fnv1a64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        acc[h % dim] += sign
    norm = float(np.sqrt(acc @ acc))
    if norm == 0.0:
        acc[0] = 1.0
        norm = 1.0
    return (acc / norm).astype(np.float32)


class HashingProvider:
    """Test-time provider wrapping :func:`stub_embed` at a fixed dimension."""

    def __init__(self, dim: int = 16):
        self._dim = dim

    def embed(self, text: str) -> np.ndarray:
        return stub_embed(text, self._dim)

    def dim(self) -> int:
        return self._dim


class RemoteProvider:
    """Client for an encoder service speaking the /embed wire protocol.

    POST {endpoint}/embed with {"texts": [...]} returns
    {"dim": d, "vectors": [[...], ...]}. Determinism is the server's
    contract; this client is stateless and safe for concurrent use.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        health = requests.get(f"{self.endpoint}/health", timeout=timeout)
        health.raise_for_status()
        self._dim = int(health.json()["dim"])

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        resp = requests.post(
            f"{self.endpoint}/embed", json={"texts": texts}, timeout=self.timeout
        )
        resp.raise_for_status()
        payload = resp.json()
        if int(payload["dim"]) != self._dim:
            raise ShapeError(
                f"encoder service changed dim: {payload['dim']} != {self._dim}"
            )
        return [np.asarray(v, dtype=np.float32) for v in payload["vectors"]]

    def dim(self) -> int:
        return self._dim


def node_embedding(provider: EmbeddingProvider, paper: Paper) -> np.ndarray:
    """Elementwise sum of the title and abstract embeddings.

    An empty abstract contributes the provider's embedding of the empty
    string, keeping the sum well-defined for every paper.
    """
    try:
        title_vec = provider.embed(paper.title)
        abstract_vec = provider.embed(paper.abstract or "")
    except Exception as exc:
        raise EmbeddingIOError(f"embedding provider failed for paper {paper.id!r}: {exc}") from exc
    return title_vec + abstract_vec


class EmbeddingTable:
    """Immutable-by-convention map from paper id to a float32 vector."""

    def __init__(self, dim: int):
        if dim <= 0:
            raise ShapeError(f"embedding dim must be positive, got {dim}")
        self.dim = dim
        self.vectors: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self.vectors

    def add(self, paper_id: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise ShapeError(
                f"vector for {paper_id!r} has shape {vec.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise ShapeError(f"vector for {paper_id!r} has non-finite entries")
        self.vectors[paper_id] = vec

    def get(self, paper_id: str) -> np.ndarray:
        if paper_id not in self.vectors:
            raise EmbeddingIOError(f"no embedding stored for paper {paper_id!r}")
        return self.vectors[paper_id]

    @classmethod
    def from_papers(cls, provider: EmbeddingProvider, papers: list[Paper]) -> "EmbeddingTable":
        table = cls(provider.dim())
        for p in papers:
            table.add(p.id, node_embedding(provider, p))
        return table

    def checksum(self) -> str:
        h = hashlib.sha256()
        for pid in self.vectors:
            h.update(pid.encode("utf-8"))
            h.update(self.vectors[pid].tobytes())
        return h.hexdigest()


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write the binary embedding file (bit-exact, little-endian float32).

    Layout: magic "CGEM", u16 version, u32 dim, u64 count, then per record a
    u16 id byte length, the UTF-8 id bytes, and dim float32 values.
    """
    path = Path(path)
    with path.open("wb") as f:
        f.write(CGEM_MAGIC)
        f.write(struct.pack("<HIQ", CGEM_VERSION, table.dim, len(table.vectors)))
        for pid, vec in table.vectors.items():
            encoded = pid.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise EmbeddingIOError(f"paper id too long to serialize: {pid[:40]!r}...")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(np.ascontiguousarray(vec, dtype="<f4").tobytes())


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a CGEM file; inverse of :func:`save_embeddings`."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 18 or data[:4] != CGEM_MAGIC:
        raise EmbeddingIOError(f"{path}: not an embedding file (bad magic)")
    version, dim, count = struct.unpack_from("<HIQ", data, 4)
    if version != CGEM_VERSION:
        raise EmbeddingIOError(f"{path}: unsupported version {version}")
    table = EmbeddingTable(dim)
    offset = 18
    vec_bytes = 4 * dim
    for i in range(count):
        if offset + 2 > len(data):
            raise EmbeddingIOError(f"{path}: truncated at record {i}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise EmbeddingIOError(f"{path}: truncated at record {i}")
        pid = data[offset:offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if pid in table.vectors:
            raise EmbeddingIOError(f"{path}: duplicate id {pid!r}")
        table.add(pid, vec)
    if offset != len(data):
        raise EmbeddingIOError(f"{path}: {len(data) - offset} trailing bytes after {count} records")
    return table
