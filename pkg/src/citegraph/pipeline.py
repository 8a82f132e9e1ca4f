"""Retriever-augmented task execution and the related-work generation chain.

Every task prompt is grounded with papers retrieved from the citation
graph. Related-work generation runs six sequential steps (summarize,
retrieve, recommend, per-paper citation sentences, grouping, organization)
against a pluggable completion client. Citation markers are bracketed node
ids, so the no-fabricated-citations invariant is mechanically checkable:
markers that do not resolve to a recommended paper are stripped and
counted, never silently kept.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import requests

from .exceptions import PipelineError
from .graph import CitationGraph
from .instructions import (
    ABSTRACT_COMPLETION_TEMPLATE,
    ALL_TASKS,
    CITATION_SENTENCE_TEMPLATE,
    LINK_PREDICTION_TEMPLATE,
    RECOMMENDATION_TEMPLATE,
    TASK_ABSTRACT_COMPLETION,
    TASK_CITATION_SENTENCE,
    TASK_LINK_PREDICTION,
    TASK_RECOMMENDATION,
    TASK_TITLE_GENERATION,
    TITLE_GENERATION_TEMPLATE,
)
from .retriever.index import RetrievalIndex, Retriever

logger = logging.getLogger(__name__)

_MARKER_RE = re.compile(r"\[([^\[\]]+)\]")


@dataclass
class GenerationParams:
    """Decoding parameters forwarded to the completion client."""

    max_tokens: int = 1024
    temperature: float = 0.7
    top_p: float = 0.95
    repetition_penalty: float = 1.15

    def as_dict(self) -> dict:
        return {
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "repetition_penalty": self.repetition_penalty,
        }


class CompletionClient(Protocol):
    def complete(self, prompt: str, params: GenerationParams) -> str: ...


class ScriptedClient:
    """Canned prompt -> response map with echo fallback; for tests and demos."""

    def __init__(self, script: dict[str, str] | None = None):
        self.script = dict(script or {})
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedClient":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, prompt: str, params: GenerationParams) -> str:
        self.calls.append(prompt)
        return self.script.get(prompt, prompt)


class HTTPCompletionClient:
    """Client for a completion service: POST {endpoint}/complete."""

    def __init__(self, endpoint: str, timeout: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def complete(self, prompt: str, params: GenerationParams) -> str:
        payload = {"prompt": prompt, **params.as_dict()}
        resp = requests.post(f"{self.endpoint}/complete", json=payload,
                             timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()["text"]


@dataclass
class RelatedWorkDraft:
    """All intermediates of the six-step related-work chain."""

    summary: str
    retrieved: list[str]
    recommended: list[str]
    citation_sentences: dict[str, str]
    groups: list[list[str]]
    final_text: str
    stripped_markers: int = 0
    sentence_failures: list[str] = field(default_factory=list)


SUMMARIZE_TEMPLATE = (
    "Summarize the main arguments of the following paper description in a "
    "few sentences.\n\nText: {text}\n\nSummary:"
)

RECOMMEND_TEMPLATE = (
    "A new paper is summarized below, followed by candidate papers from the "
    "literature. Rank the {k2} candidates most likely to be cited by the new "
    "paper, most likely first. Answer with their bracketed ids, one per "
    "line.\n\nSummary: {summary}\n\n{candidates}\n\nRanking:"
)

PIPELINE_SENTENCE_TEMPLATE = (
    "Write one citation sentence describing the relationship between the new "
    "paper and the cited paper. Cite it as [{id}].\n\n"
    "New paper summary: {summary}\n\n"
    "Cited paper [{id}] Title: {title}\n"
    "Cited paper [{id}] Abstract: {abstract}\n\n"
    "Citation sentence:"
)

GROUP_TEMPLATE = (
    "Group the following citation sentences by topic and relevance. Answer "
    "with one line per group in the form 'Group N: [id], [id]'. Every id "
    "must appear in exactly one group.\n\n{sentences}\n\nGroups:"
)

ORGANIZE_TEMPLATE = (
    "Organize the following citation sentences into one coherent related-work "
    "paragraph. Keep every bracketed citation marker exactly as written.\n\n"
    "{sentences}\n\nParagraph:"
)

# task -> which input fields feed the retrieval query
_QUERY_FIELDS = {
    TASK_TITLE_GENERATION: ("abstract",),
    TASK_ABSTRACT_COMPLETION: ("title", "prefix"),
    TASK_LINK_PREDICTION: (),  # pairwise: union of per-paper retrievals
    TASK_RECOMMENDATION: ("title", "abstract"),
    TASK_CITATION_SENTENCE: (),
}


def render_task_prompt(task: str, inputs: dict) -> str:
    if task == TASK_TITLE_GENERATION:
        return TITLE_GENERATION_TEMPLATE.format(abstract=inputs["abstract"])
    if task == TASK_ABSTRACT_COMPLETION:
        return ABSTRACT_COMPLETION_TEMPLATE.format(
            title=inputs["title"], prefix=inputs["prefix"])
    if task == TASK_LINK_PREDICTION:
        return LINK_PREDICTION_TEMPLATE.format(
            source_title=inputs["source_title"],
            source_abstract=inputs["source_abstract"],
            target_title=inputs["target_title"],
            target_abstract=inputs["target_abstract"])
    if task == TASK_RECOMMENDATION:
        return RECOMMENDATION_TEMPLATE.format(
            title=inputs["title"], abstract=inputs["abstract"],
            candidates=inputs["candidates"])
    if task == TASK_CITATION_SENTENCE:
        return CITATION_SENTENCE_TEMPLATE.format(
            source_title=inputs["source_title"],
            source_abstract=inputs["source_abstract"],
            target_title=inputs["target_title"],
            target_abstract=inputs["target_abstract"])
    raise PipelineError("run_task", f"unknown task {task!r}")


def _pairwise_query_texts(inputs: dict) -> tuple[str, str]:
    a = f"{inputs['source_title']} {inputs['source_abstract']}".strip()
    b = f"{inputs['target_title']} {inputs['target_abstract']}".strip()
    return a, b


def retrieve_references(task: str, inputs: dict, retriever: Retriever,
                        index: RetrievalIndex, k: int) -> list[str]:
    """Top-k reference ids for a task; pairwise tasks take the union of both
    papers' retrievals, interleaved and truncated to k."""
    if k <= 0:
        return []
    if task in (TASK_LINK_PREDICTION, TASK_CITATION_SENTENCE):
        text_a, text_b = _pairwise_query_texts(inputs)
        ids_a = retriever.retrieve_text(index, text_a, k).ids()
        ids_b = retriever.retrieve_text(index, text_b, k).ids()
        merged: list[str] = []
        for a, b in zip(ids_a, ids_b):
            for pid in (a, b):
                if pid not in merged:
                    merged.append(pid)
        return merged[:k]
    text = " ".join(str(inputs[f]) for f in _QUERY_FIELDS[task]).strip()
    return retriever.retrieve_text(index, text, k).ids()


def render_references(graph: CitationGraph, ids: list[str]) -> str:
    lines = [f"- {graph.papers[pid].title}" for pid in ids]
    return "References:\n" + "\n".join(lines)


def run_task(task: str, inputs: dict, graph: CitationGraph, retriever: Retriever,
             index: RetrievalIndex, client: CompletionClient, k: int,
             params: GenerationParams | None = None):
    """Render a grounded task prompt and return the client's completion.

    ``k=0`` renders without references (the no-retrieval ablation). Link
    prediction maps the first YES/NO token of the completion to a bool.
    """
    if task not in ALL_TASKS:
        raise PipelineError("run_task", f"unknown task {task!r}")
    params = params or GenerationParams()
    prompt = render_task_prompt(task, inputs)
    references = retrieve_references(task, inputs, retriever, index, k)
    if references:
        prompt = prompt + "\n\n" + render_references(graph, references)
    completion = client.complete(prompt, params)
    if task == TASK_LINK_PREDICTION:
        return parse_yes_no(completion)
    return completion


def parse_yes_no(text: str) -> bool:
    m = re.search(r"\b(yes|no)\b", text, flags=re.IGNORECASE)
    if not m:
        raise PipelineError("run_task", f"no YES/NO answer in completion: {text[:80]!r}")
    return m.group(1).lower() == "yes"


# --- the six chain-of-thought steps -------------------------------------------

def summarize_query(client: CompletionClient, raw_text: str,
                    params: GenerationParams | None = None) -> str:
    if not raw_text.strip():
        raise PipelineError("summarize", "empty query text")
    params = params or GenerationParams()
    return client.complete(SUMMARIZE_TEMPLATE.format(text=raw_text), params)


def retrieve_candidates(retriever: Retriever, index: RetrievalIndex,
                        summary: str, k: int) -> list[str]:
    if k < 1:
        raise PipelineError("retrieve", f"k must be >= 1, got {k}")
    return retriever.retrieve_text(index, summary, k).ids()


def recommend_cited(client: CompletionClient, graph: CitationGraph, summary: str,
                    candidates: list[str], k2: int,
                    params: GenerationParams | None = None) -> list[str]:
    """Client-ranked subset of the candidates, truncated to ``k2``.

    Ids missing from the candidate list are dropped; an unparseable ranking
    falls back to the first ``k2`` candidates so the chain stays total.
    """
    if not candidates:
        raise PipelineError("recommend", "empty candidate list")
    params = params or GenerationParams()
    lines = [f"Candidate [{pid}]: {graph.papers[pid].title}" for pid in candidates]
    prompt = RECOMMEND_TEMPLATE.format(summary=summary, k2=k2,
                                       candidates="\n".join(lines))
    reply = client.complete(prompt, params)
    allowed = set(candidates)
    ranked: list[str] = []
    for marker in _MARKER_RE.findall(reply):
        pid = marker.strip()
        if pid in allowed and pid not in ranked:
            ranked.append(pid)
    if not ranked:
        logger.warning("recommendation ranking unparseable; falling back to retrieval order")
        ranked = list(candidates)
    return ranked[:k2]


def generate_citation_sentences(client: CompletionClient, graph: CitationGraph,
                                target_summary: str, cited: list[str],
                                params: GenerationParams | None = None,
                                ) -> tuple[dict[str, str], list[str]]:
    """One citation sentence per cited paper; failures are reported, not fatal."""
    if not cited:
        raise PipelineError("sentences", "empty cited list")
    params = params or GenerationParams()
    sentences: dict[str, str] = {}
    failures: list[str] = []
    for pid in cited:
        paper = graph.papers[pid]
        prompt = PIPELINE_SENTENCE_TEMPLATE.format(
            id=pid, summary=target_summary, title=paper.title,
            abstract=paper.abstract)
        try:
            sentences[pid] = client.complete(prompt, params)
        except Exception as exc:
            logger.warning("citation sentence for %s failed: %s", pid, exc)
            failures.append(pid)
    return sentences, failures


def group_sentences(client: CompletionClient, sentences: dict[str, str],
                    params: GenerationParams | None = None) -> list[list[str]]:
    """Client-proposed partition of the cited ids; invalid output collapses
    to a single group."""
    if not sentences:
        raise PipelineError("group", "no citation sentences to group")
    params = params or GenerationParams()
    listing = "\n".join(f"Sentence [{pid}]: {text}" for pid, text in sorted(sentences.items()))
    reply = client.complete(GROUP_TEMPLATE.format(sentences=listing), params)

    ids = set(sentences)
    groups: list[list[str]] = []
    for line in reply.splitlines():
        members = [m.strip() for m in _MARKER_RE.findall(line) if m.strip() in ids]
        deduped = list(dict.fromkeys(members))
        if deduped:
            groups.append(deduped)
    flat = [pid for grp in groups for pid in grp]
    if len(flat) != len(set(flat)) or set(flat) != ids:
        logger.warning("invalid grouping from client; using a single group")
        return [sorted(ids)]
    return groups


def organize_related_work(client: CompletionClient, groups: list[list[str]],
                          sentences: dict[str, str],
                          params: GenerationParams | None = None,
                          ) -> tuple[str, int]:
    """One paragraph per group, blank-line separated.

    Markers in the client text that do not resolve to a grouped id are
    stripped and counted, enforcing the no-fabricated-citations contract.
    """
    params = params or GenerationParams()
    allowed = {pid for grp in groups for pid in grp}
    paragraphs = []
    stripped = 0
    for group in groups:
        listing = "\n".join(f"[{pid}] {sentences[pid]}" for pid in group)
        text = client.complete(ORGANIZE_TEMPLATE.format(sentences=listing), params)
        cleaned, n = _strip_unresolvable_markers(text, allowed)
        stripped += n
        # one group, one paragraph: collapse any blank lines the client emits
        paragraphs.append(re.sub(r"\n\s*\n+", "\n", cleaned.strip()))
    return "\n\n".join(paragraphs), stripped


def _strip_unresolvable_markers(text: str, allowed: set[str]) -> tuple[str, int]:
    count = 0

    def repl(m: re.Match) -> str:
        nonlocal count
        if m.group(1).strip() in allowed:
            return m.group(0)
        count += 1
        return ""

    cleaned = _MARKER_RE.sub(repl, text)
    if count:
        logger.warning("stripped %d unresolvable citation markers", count)
    return cleaned, count


def generate_related_work(graph: CitationGraph, retriever: Retriever,
                          index: RetrievalIndex, client: CompletionClient,
                          raw_text: str, k: int = 10, k2: int = 5,
                          params: GenerationParams | None = None) -> RelatedWorkDraft:
    """Run the six steps in order and return every intermediate product."""
    params = params or GenerationParams()
    try:
        summary = summarize_query(client, raw_text, params)
        retrieved = retrieve_candidates(retriever, index, summary, k)
        recommended = recommend_cited(client, graph, summary, retrieved, k2, params)
        sentences, failures = generate_citation_sentences(
            client, graph, summary, recommended, params)
        groups = group_sentences(client, sentences, params) if sentences else []
        final_text, stripped = organize_related_work(client, groups, sentences, params) \
            if groups else ("", 0)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("related-work", str(exc)) from exc
    return RelatedWorkDraft(
        summary=summary,
        retrieved=retrieved,
        recommended=recommended,
        citation_sentences=sentences,
        groups=groups,
        final_text=final_text,
        stripped_markers=stripped,
        sentence_failures=failures,
    )


def extract_markers(text: str) -> list[str]:
    """All bracketed citation markers appearing in a text."""
    return [m.strip() for m in _MARKER_RE.findall(text)]
