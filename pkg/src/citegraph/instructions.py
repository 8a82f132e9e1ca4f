"""Deterministic construction of the five-task instruction-tuning dataset.

Node-level tasks (title generation, abstract completion) come from sampled
papers; edge-level tasks (link prediction, recommendation, citation
sentence) come from the induced subgraph of the sample. Templates are
versioned constants so regenerated datasets stay byte-comparable; every
record carries its provenance in ``meta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import GraphError
from .graph import CitationEdge, CitationGraph

TEMPLATE_VERSION = "1"

TASK_TITLE_GENERATION = "title_generation"
TASK_ABSTRACT_COMPLETION = "abstract_completion"
TASK_LINK_PREDICTION = "link_prediction"
TASK_RECOMMENDATION = "recommendation"
TASK_CITATION_SENTENCE = "citation_sentence"

ALL_TASKS = (
    TASK_TITLE_GENERATION,
    TASK_ABSTRACT_COMPLETION,
    TASK_LINK_PREDICTION,
    TASK_RECOMMENDATION,
    TASK_CITATION_SENTENCE,
)

TITLE_GENERATION_TEMPLATE = (
    "Write the title of the research paper with the following abstract.\n\n"
    "Abstract: {abstract}\n\n"
    "Title:"
)

ABSTRACT_COMPLETION_TEMPLATE = (
    "Complete the abstract of a research paper. The title and the beginning "
    "of the abstract are given.\n\n"
    "Title: {title}\n\n"
    "Abstract (beginning): {prefix}\n\n"
    "Continuation:"
)

LINK_PREDICTION_TEMPLATE = (
    "Determine whether paper A would cite paper B. Answer YES or NO.\n\n"
    "Paper A Title: {source_title}\n"
    "Paper A Abstract: {source_abstract}\n\n"
    "Paper B Title: {target_title}\n"
    "Paper B Abstract: {target_abstract}\n\n"
    "Answer:"
)

RECOMMENDATION_TEMPLATE = (
    "From the candidate papers below, select the one most likely to be cited "
    "by the source paper. Answer with the candidate's title.\n\n"
    "Source Title: {title}\n"
    "Source Abstract: {abstract}\n\n"
    "{candidates}\n\n"
    "Answer:"
)

CITATION_SENTENCE_TEMPLATE = (
    "Write the sentence with which paper A cites paper B.\n\n"
    "Paper A Title: {source_title}\n"
    "Paper A Abstract: {source_abstract}\n\n"
    "Paper B Title: {target_title}\n"
    "Paper B Abstract: {target_abstract}\n\n"
    "Citation sentence:"
)


@dataclass
class InstructionRecord:
    """One fine-tuning example: prompt, target completion, provenance."""

    task: str
    prompt: str
    completion: str
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"task": self.task, "prompt": self.prompt,
                "completion": self.completion, "meta": self.meta}


def _base_meta(**kwargs) -> dict:
    meta = {"template_version": TEMPLATE_VERSION}
    meta.update(kwargs)
    return meta


def title_generation_instruction(paper) -> InstructionRecord | None:
    """Abstract -> title record; papers without an abstract are skipped."""
    if not paper.abstract.strip():
        return None
    return InstructionRecord(
        task=TASK_TITLE_GENERATION,
        prompt=TITLE_GENERATION_TEMPLATE.format(abstract=paper.abstract),
        completion=paper.title,
        meta=_base_meta(source=paper.id),
    )


def abstract_completion_instruction(paper, fraction: float = 0.10) -> InstructionRecord | None:
    """Title plus the first ceil(fraction * W) abstract words -> the rest."""
    words = paper.abstract.split()
    if len(words) < 10:
        return None
    n_prefix = math.ceil(fraction * len(words))
    prefix = " ".join(words[:n_prefix])
    completion = " ".join(words[n_prefix:])
    if not completion:
        return None
    return InstructionRecord(
        task=TASK_ABSTRACT_COMPLETION,
        prompt=ABSTRACT_COMPLETION_TEMPLATE.format(title=paper.title, prefix=prefix),
        completion=completion,
        meta=_base_meta(source=paper.id, prefix_words=n_prefix,
                        total_words=len(words)),
    )


def link_prediction_instruction(graph: CitationGraph, pair, label: bool,
                                seed: int = 0) -> InstructionRecord:
    """YES/NO record for a true edge or a corrupted (negative) pair."""
    source, target = (pair.source, pair.target) if isinstance(pair, CitationEdge) else pair
    src = graph.papers[source]
    dst = graph.papers[target]
    return InstructionRecord(
        task=TASK_LINK_PREDICTION,
        prompt=LINK_PREDICTION_TEMPLATE.format(
            source_title=src.title, source_abstract=src.abstract,
            target_title=dst.title, target_abstract=dst.abstract,
        ),
        completion="YES" if label else "NO",
        meta=_base_meta(source=source, target=target, label=bool(label),
                        negative=not label, seed=seed),
    )


def recommendation_instruction(graph: CitationGraph, edge: CitationEdge,
                               seed: int = 0, candidate_pool: list[str] | None = None,
                               one_plus_ten: bool = False) -> InstructionRecord:
    """Candidate-set record: the true target hidden among sampled negatives.

    The candidate set holds 10 papers total (true target + 9 negatives) by
    default; ``one_plus_ten`` switches to the 1 + 10 variant. Negatives are
    non-neighbors of the source drawn from ``candidate_pool`` (default: the
    whole graph), and the listed order is a seeded shuffle.
    """
    n_negatives = 10 if one_plus_ten else 9
    source = graph.papers[edge.source]
    pool = candidate_pool if candidate_pool is not None else list(graph.papers)
    banned = graph.neighbors(edge.source) | {edge.source, edge.target}
    eligible = sorted(pid for pid in pool if pid not in banned)
    if len(eligible) < n_negatives:
        raise GraphError(
            f"edge {edge.key}: only {len(eligible)} negatives available, need {n_negatives}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    picks = rng.choice(len(eligible), size=n_negatives, replace=False)
    candidate_ids = [eligible[i] for i in picks] + [edge.target]
    order = rng.permutation(len(candidate_ids))
    candidate_ids = [candidate_ids[i] for i in order]
    lines = [
        f"Candidate {i + 1}: {graph.papers[pid].title}"
        for i, pid in enumerate(candidate_ids)
    ]
    return InstructionRecord(
        task=TASK_RECOMMENDATION,
        prompt=RECOMMENDATION_TEMPLATE.format(
            title=source.title, abstract=source.abstract,
            candidates="\n".join(lines),
        ),
        completion=graph.papers[edge.target].title,
        meta=_base_meta(source=edge.source, target=edge.target,
                        candidates=candidate_ids, seed=seed),
    )


def citation_sentence_instruction(graph: CitationGraph,
                                  edge: CitationEdge) -> InstructionRecord | None:
    """Both papers' texts -> the stored citing sentence; empty sentences skip."""
    if not edge.sentence.strip():
        return None
    src = graph.papers[edge.source]
    dst = graph.papers[edge.target]
    return InstructionRecord(
        task=TASK_CITATION_SENTENCE,
        prompt=CITATION_SENTENCE_TEMPLATE.format(
            source_title=src.title, source_abstract=src.abstract,
            target_title=dst.title, target_abstract=dst.abstract,
        ),
        completion=edge.sentence,
        meta=_base_meta(source=edge.source, target=edge.target),
    )


def build_training_set(graph: CitationGraph, node_budget: int = 20000,
                       seed: int = 0, one_plus_ten: bool = False,
                       ) -> list[InstructionRecord]:
    """The full instruction dataset over a sampled node set.

    Samples min(budget, |V|) nodes, emits node-level records for them and
    edge-level records for the induced subgraph. Link-prediction positives
    and negatives are exactly 1:1 (a positive is dropped when no in-sample
    negative target exists for its source). Pure function of
    (graph, budget, seed): the output order is a final seeded shuffle.
    """
    if len(graph) == 0:
        raise GraphError("empty graph")
    rng = np.random.Generator(np.random.PCG64(seed))
    node_ids = graph.node_ids
    if node_budget < len(node_ids):
        picks = rng.choice(len(node_ids), size=node_budget, replace=False)
        sampled = sorted(node_ids[i] for i in picks)
    else:
        sampled = list(node_ids)
    sampled_set = set(sampled)
    induced = [e for e in graph.edges
               if e.source in sampled_set and e.target in sampled_set]

    records: list[InstructionRecord] = []
    for pid in sampled:
        rec = title_generation_instruction(graph.papers[pid])
        if rec is not None:
            records.append(rec)
        rec = abstract_completion_instruction(graph.papers[pid])
        if rec is not None:
            records.append(rec)

    for edge in induced:
        # negative target: replace the edge's target with an in-sample
        # non-neighbor, keeping positives and negatives exactly 1:1
        banned = graph.neighbors(edge.source) | {edge.source}
        negative_pool = sorted(pid for pid in sampled if pid not in banned)
        if not negative_pool:
            continue
        neg_seed = int(rng.integers(2**63))
        neg_rng = np.random.Generator(np.random.PCG64(neg_seed))
        neg_target = negative_pool[int(neg_rng.integers(len(negative_pool)))]
        records.append(link_prediction_instruction(graph, edge, True, seed=neg_seed))
        records.append(link_prediction_instruction(
            graph, (edge.source, neg_target), False, seed=neg_seed))

        rec_seed = int(rng.integers(2**63))
        try:
            records.append(recommendation_instruction(
                graph, edge, seed=rec_seed, candidate_pool=sampled,
                one_plus_ten=one_plus_ten))
        except GraphError:
            pass
        rec = citation_sentence_instruction(graph, edge)
        if rec is not None:
            records.append(rec)

    order = rng.permutation(len(records))
    return [records[i] for i in order]


def save_instructions(records: list[InstructionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec.as_dict(), ensure_ascii=False) + "\n")


def load_instructions(path: str | Path) -> list[InstructionRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            records.append(InstructionRecord(
                task=rec["task"], prompt=rec["prompt"],
                completion=rec["completion"], meta=rec.get("meta", {}),
            ))
    return records
