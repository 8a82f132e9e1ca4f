"""Corpus assembly: raw documents in, Paper and CitationEdge records out.

LaTeX documents run through cleaning, bibliography resolution, and citation
extraction; interchange documents pass their fields straight through. Edges
are emitted only for mentions whose resolved target id belongs to the same
batch, with dropped/unresolved counts reported alongside.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..exceptions import CorpusError
from ..graph import CitationEdge, Paper
from .bibliography import parse_bibliography
from .citations import (
    RELATED_WORK_TITLES,
    extract_citations,
    extract_related_work,
)
from .latex import _match_brace_group, clean_latex, normalize_whitespace

logger = logging.getLogger(__name__)

_TITLE_RE = re.compile(r"\\title\s*(?:\[[^\]]*\])?\s*\{")
_ABSTRACT_RE = re.compile(r"\\begin\{abstract\}(.*?)\\end\{abstract\}", re.DOTALL)


@dataclass
class RawDocument:
    """One raw input: LaTeX source or a single interchange node record."""

    doc_id: str
    source_text: str
    bib_text: str | None = None
    kind: str = "latex"  # "latex" or "interchange"

    def __post_init__(self):
        if not self.doc_id:
            raise CorpusError("doc_id must be nonempty")
        if self.kind not in ("latex", "interchange"):
            raise CorpusError(f"unknown document kind {self.kind!r}")


@dataclass
class IngestReport:
    """Counters from one corpus build."""

    documents: int = 0
    mentions: int = 0
    resolved_mentions: int = 0
    emitted_edges: int = 0
    dropped_resolved: int = 0  # resolved but target outside batch (or self)
    unresolved_mentions: int = 0
    per_document: dict[str, int] = field(default_factory=dict)


def extract_title(cleaned: str) -> str | None:
    m = _TITLE_RE.search(cleaned)
    if not m:
        return None
    try:
        end = _match_brace_group(cleaned, m.end() - 1)
    except CorpusError:
        logger.warning("unbalanced braces in \\title; skipping title extraction")
        return None
    title = normalize_whitespace(cleaned[m.end():end - 1])
    return title.replace("\n", " ").strip() or None


def extract_abstract(cleaned: str) -> str:
    m = _ABSTRACT_RE.search(cleaned)
    if not m:
        return ""
    return re.sub(r"\s+", " ", m.group(1)).strip()


def detect_bib_kind(bib_text: str) -> str:
    if re.search(r"@[A-Za-z]+\s*[{(]", bib_text):
        return "bib"
    return "bbl"


def parse_latex_document(raw: RawDocument,
                         related_titles: tuple[str, ...] = RELATED_WORK_TITLES):
    """Clean one LaTeX document and pull out paper fields plus mentions."""
    if raw.kind != "latex":
        raise CorpusError(f"{raw.doc_id}: parse_latex_document needs kind='latex'")
    cleaned = clean_latex(raw.source_text)

    bibmap: dict[str, str | None] = {}
    if raw.bib_text and raw.bib_text.strip():
        bibmap = parse_bibliography(raw.bib_text, detect_bib_kind(raw.bib_text))
    elif "\\begin{thebibliography}" in raw.source_text:
        try:
            bibmap = parse_bibliography(raw.source_text, "inline")
        except CorpusError as exc:
            logger.warning("%s: inline bibliography unusable (%s)", raw.doc_id, exc)

    related = extract_related_work(cleaned, related_titles)
    paper = Paper(
        id=raw.doc_id,
        title=extract_title(cleaned) or raw.doc_id,
        abstract=extract_abstract(cleaned),
        related_work=related[1] if related else None,
    )
    mentions = extract_citations(cleaned, bibmap, related_titles)
    return paper, mentions


def interchange_paper(raw: RawDocument) -> Paper:
    try:
        rec = json.loads(raw.source_text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{raw.doc_id}: invalid interchange JSON ({exc})") from exc
    return Paper(
        id=str(rec.get("id", raw.doc_id)),
        title=rec["title"],
        abstract=rec.get("abstract") or "",
        related_work=rec.get("related_work"),
        category=rec.get("category"),
    )


def build_corpus(raws: list[RawDocument],
                 related_titles: tuple[str, ...] = RELATED_WORK_TITLES,
                 ) -> tuple[list[Paper], list[CitationEdge], IngestReport]:
    """Assemble one corpus batch: papers plus in-batch citation edges."""
    seen_ids = set()
    for raw in raws:
        if raw.doc_id in seen_ids:
            raise CorpusError(f"duplicate doc_id {raw.doc_id!r}")
        seen_ids.add(raw.doc_id)

    report = IngestReport(documents=len(raws))
    papers: list[Paper] = []
    doc_mentions: dict[str, list] = {}
    for raw in raws:
        if raw.kind == "interchange":
            papers.append(interchange_paper(raw))
            continue
        paper, mentions = parse_latex_document(raw, related_titles)
        papers.append(paper)
        doc_mentions[paper.id] = mentions

    batch_ids = {p.id for p in papers}
    edges: list[CitationEdge] = []
    for doc_id, mentions in doc_mentions.items():
        emitted = 0
        for mention in mentions:
            report.mentions += 1
            target = mention.resolved_target
            if target is None:
                report.unresolved_mentions += 1
                continue
            report.resolved_mentions += 1
            if target not in batch_ids or target == doc_id:
                report.dropped_resolved += 1
                continue
            edges.append(CitationEdge(
                source=doc_id,
                target=target,
                sentence=mention.sentence,
                preceding=mention.preceding,
                following=mention.following,
                in_related_work=mention.in_related_work,
            ))
            emitted += 1
        report.per_document[doc_id] = emitted
    report.emitted_edges = len(edges)
    logger.info(
        "corpus build: %d papers, %d edges (%d resolved mentions, %d dropped, %d unresolved)",
        len(papers), len(edges), report.resolved_mentions,
        report.dropped_resolved, report.unresolved_mentions,
    )
    return papers, edges, report


# --- directory loading --------------------------------------------------------

_INPUT_RE = re.compile(r"\\(?:input|include)\s*\{([^{}]+)\}")


def flatten_includes(main_text: str, files: dict[str, str], depth: int = 10) -> str:
    """Inline \\input/\\include bodies from a name -> content map."""

    def lookup(name: str) -> str | None:
        for cand in (name, name + ".tex"):
            if cand in files:
                return files[cand]
        return None

    def repl(m: re.Match) -> str:
        body = lookup(m.group(1).strip())
        return body if body is not None else ""

    text = main_text
    for _ in range(depth):
        new = _INPUT_RE.sub(repl, text)
        if new == text:
            return text
        text = new
    return text


def load_latex_dir(path: str | Path) -> list[RawDocument]:
    """Read a directory of LaTeX papers into raw documents.

    Two layouts are accepted: loose ``*.tex`` files (one paper each, with a
    same-stem or solitary ``.bib``/``.bbl`` sibling), or one subdirectory per
    paper whose main file is the one containing ``\\begin{document}``; other
    ``.tex`` files in the subdirectory are available for include flattening.
    """
    path = Path(path)
    if not path.is_dir():
        raise CorpusError(f"{path}: not a directory")
    raws: list[RawDocument] = []
    for tex in sorted(path.glob("*.tex")):
        raws.append(_raw_from_files(tex.stem, [tex], tex.parent))
    for sub in sorted(p for p in path.iterdir() if p.is_dir()):
        texs = sorted(sub.glob("*.tex"))
        if texs:
            raws.append(_raw_from_files(sub.name, texs, sub))
    if not raws:
        raise CorpusError(f"{path}: no .tex files found")
    return raws


def _raw_from_files(doc_id: str, texs: list[Path], base: Path) -> RawDocument:
    files = {p.name: p.read_text(encoding="utf-8", errors="replace") for p in texs}
    main = None
    for p in texs:
        if "\\begin{document}" in files[p.name]:
            main = p
            break
    main = main or texs[0]
    text = flatten_includes(files[main.name], files)

    bib_text = None
    stem_matches = [p for p in (base / f"{main.stem}.bib", base / f"{main.stem}.bbl") if p.exists()]
    candidates = stem_matches or sorted(base.glob("*.bib")) or sorted(base.glob("*.bbl"))
    if candidates:
        bib_text = candidates[0].read_text(encoding="utf-8", errors="replace")
    return RawDocument(doc_id=doc_id, source_text=text, bib_text=bib_text, kind="latex")


def load_interchange_dir(path: str | Path) -> tuple[list[Paper], list[CitationEdge]]:
    """Load nodes.jsonl / edges.jsonl from a directory."""
    from ..graph import edge_from_record, paper_from_record, _read_jsonl

    path = Path(path)
    nodes_path = path / "nodes.jsonl"
    edges_path = path / "edges.jsonl"
    if not nodes_path.exists():
        raise CorpusError(f"{nodes_path}: missing nodes.jsonl")
    papers = [paper_from_record(r) for r in _read_jsonl(nodes_path)]
    edges = []
    if edges_path.exists():
        edges = [edge_from_record(r) for r in _read_jsonl(edges_path)]
    return papers, edges
