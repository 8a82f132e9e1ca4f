"""Corpus ingestion: LaTeX cleaning, bibliographies, citations, assembly."""

from .bibliography import find_arxiv_id, parse_bibliography
from .citations import (
    PROTECTED_ABBREVIATIONS,
    RELATED_WORK_TITLES,
    CitationMention,
    extract_citations,
    extract_related_work,
    split_sentences,
)
from .corpus import (
    IngestReport,
    RawDocument,
    build_corpus,
    extract_abstract,
    extract_title,
    flatten_includes,
    load_interchange_dir,
    load_latex_dir,
    parse_latex_document,
)
from .latex import (
    MACRO_EXPANSION_DEPTH_CAP,
    clean_latex,
    collect_macros,
    expand_macros,
    normalize_citations,
    normalize_whitespace,
    strip_comments,
)

__all__ = [
    "CitationMention",
    "IngestReport",
    "MACRO_EXPANSION_DEPTH_CAP",
    "PROTECTED_ABBREVIATIONS",
    "RELATED_WORK_TITLES",
    "RawDocument",
    "build_corpus",
    "clean_latex",
    "collect_macros",
    "expand_macros",
    "extract_abstract",
    "extract_citations",
    "extract_related_work",
    "extract_title",
    "find_arxiv_id",
    "flatten_includes",
    "load_interchange_dir",
    "load_latex_dir",
    "normalize_citations",
    "normalize_whitespace",
    "parse_bibliography",
    "parse_latex_document",
    "split_sentences",
    "strip_comments",
]
