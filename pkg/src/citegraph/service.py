"""Read-mostly HTTP service over trained retrieval artifacts.

Artifacts (graph, embeddings, checkpoint) are loaded once at startup and
served immutably: identical requests yield identical responses. Training
and index rebuilds stay CLI-side; changing artifacts means restarting.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .embeddings import EmbeddingProvider, HashingProvider, RemoteProvider, load_embeddings
from .exceptions import CitegraphError, PipelineError, ServiceError
from .graph import load_graph
from .instructions import ALL_TASKS
from .pipeline import (
    CompletionClient,
    HTTPCompletionClient,
    ScriptedClient,
    generate_related_work,
    run_task,
)
from .retriever import Retriever, build_index, load_checkpoint, retrieve

ENV_PREFIX = "CITEGRAPH_"


@dataclass
class ServiceConfig:
    """Startup configuration; all referenced files must exist."""

    graph_path: str
    embeddings_path: str
    checkpoint_path: str
    edges_path: str | None = None
    k_default: int = 5
    client_endpoint: str | None = None  # http://... or scripted:<path>
    provider_endpoint: str | None = None  # remote encoder; default hashing stub
    bind_address: str = "127.0.0.1:8080"

    def __post_init__(self):
        if self.k_default < 1:
            raise ServiceError(f"k_default must be >= 1, got {self.k_default}")
        for path in (self.graph_path, self.embeddings_path, self.checkpoint_path):
            if not Path(path).exists():
                raise ServiceError(f"missing artifact file: {path}")
        if self.edges_path and not Path(self.edges_path).exists():
            raise ServiceError(f"missing artifact file: {self.edges_path}")

    @property
    def host(self) -> str:
        return self.bind_address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.bind_address.rsplit(":", 1)[1])


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ServiceConfig:
    """Read a JSON or key=value config file, then apply CITEGRAPH_ env vars."""
    values: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        stripped = text.lstrip()
        if stripped.startswith("{"):
            values.update(json.loads(text))
        else:
            for line in text.splitlines():
                line = line.strip()
                if not line or line.startswith("#") or "=" not in line:
                    continue
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
    for key, val in os.environ.items():
        if key.startswith(ENV_PREFIX):
            values[key[len(ENV_PREFIX):].lower()] = val
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    if "k_default" in values:
        values["k_default"] = int(values["k_default"])
    known = {f for f in ServiceConfig.__dataclass_fields__}
    unknown = set(values) - known
    if unknown:
        raise ServiceError(f"unknown config keys: {sorted(unknown)}")
    return ServiceConfig(**values)


def make_client(spec: str | None) -> CompletionClient:
    if spec is None:
        return ScriptedClient({})
    if spec.startswith("scripted:"):
        return ScriptedClient.from_file(spec.split(":", 1)[1])
    return HTTPCompletionClient(spec)


def make_provider(endpoint: str | None, dim: int) -> EmbeddingProvider:
    if endpoint:
        return RemoteProvider(endpoint)
    return HashingProvider(dim)


class RetrieveRequest(BaseModel):
    query: str
    k: int | None = None


class TaskRequest(BaseModel):
    inputs: dict
    k: int | None = None


class RelatedWorkRequest(BaseModel):
    text: str
    k: int | None = None
    k2: int = 5


def create_app(config: ServiceConfig) -> FastAPI:
    graph = load_graph(config.graph_path, config.edges_path)
    table = load_embeddings(config.embeddings_path)
    params, _ = load_checkpoint(config.checkpoint_path)
    provider = make_provider(config.provider_endpoint, table.dim)
    retriever = Retriever(params, provider)
    index = build_index(params, graph, table)
    client = make_client(config.client_endpoint)

    app = FastAPI(title="citegraph", version="0.1.0")

    @app.exception_handler(CitegraphError)
    async def _domain_error(request, exc: CitegraphError):
        if isinstance(exc, PipelineError):
            return JSONResponse(status_code=502, content={"error": str(exc)})
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "papers": len(graph), "dim": table.dim}

    @app.get("/papers/{paper_id}")
    def get_paper(paper_id: str):
        if paper_id not in graph:
            return JSONResponse(status_code=404,
                                content={"error": f"unknown paper id {paper_id!r}"})
        p = graph.papers[paper_id]
        return {"id": p.id, "title": p.title, "abstract": p.abstract,
                "related_work": p.related_work, "category": p.category,
                "neighbors": sorted(graph.neighbors(paper_id))}

    @app.post("/retrieve")
    def retrieve_endpoint(req: RetrieveRequest):
        if not req.query.strip():
            return JSONResponse(status_code=400, content={"error": "empty query"})
        k = req.k if req.k is not None else config.k_default
        if k < 1:
            return JSONResponse(status_code=400, content={"error": f"k must be >= 1, got {k}"})
        result = retrieve(index, params, retriever.query_vector(req.query), k)
        return {"results": [{"id": pid, "score": score} for pid, score in result.ranked]}

    @app.post("/tasks/{task}")
    def task_endpoint(task: str, req: TaskRequest):
        if task not in ALL_TASKS:
            return JSONResponse(status_code=404, content={"error": f"unknown task {task!r}"})
        k = req.k if req.k is not None else config.k_default
        try:
            result = run_task(task, req.inputs, graph, retriever, index, client, k)
        except KeyError as exc:
            return JSONResponse(status_code=400,
                                content={"error": f"missing task input {exc}"})
        return {"task": task, "result": result}

    @app.post("/related-work")
    def related_work_endpoint(req: RelatedWorkRequest):
        if not req.text.strip():
            return JSONResponse(status_code=400, content={"error": "empty text"})
        k = req.k if req.k is not None else config.k_default
        draft = generate_related_work(graph, retriever, index, client,
                                      req.text, k=k, k2=req.k2)
        return {
            "summary": draft.summary,
            "retrieved": draft.retrieved,
            "recommended": draft.recommended,
            "citation_sentences": draft.citation_sentences,
            "groups": draft.groups,
            "final_text": draft.final_text,
            "stripped_markers": draft.stripped_markers,
        }

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
