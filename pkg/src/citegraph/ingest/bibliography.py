"""Bibliography parsing: map citation keys to external (arXiv-style) ids.

Three source kinds are supported, in the fallback order real corpora need:
BibTeX (.bib) entries, compiled .bbl files, and an inline
``thebibliography`` environment pulled out of the document itself. An entry
resolves when any recognizable arXiv identifier appears in its body; the
rest map to ``None`` so callers can count unresolved keys.
"""

from __future__ import annotations

import re

from ..exceptions import CorpusError

# new-style (2007+) ids like 1804.03999 / 2402.07245v2, and old-style
# archive/paper ids like hep-th/9901001 or math.GT/0309136
_ARXIV_NEW_RE = re.compile(r"\b(\d{4}\.\d{4,5})(?:v\d+)?\b")
_ARXIV_OLD_RE = re.compile(r"\b([a-z][a-z-]+(?:\.[A-Z]{2})?/\d{7})(?:v\d+)?\b")

_BIB_ENTRY_RE = re.compile(r"@([A-Za-z]+)\s*[{(]\s*([^,\s{}()]+)\s*,", re.DOTALL)
_BIBITEM_RE = re.compile(r"\\bibitem\s*(?:\[[^\]]*\])?\s*\{([^{}]+)\}")
_THEBIB_RE = re.compile(
    r"\\begin\{thebibliography\}(?:\s*\{[^{}]*\})?(.*?)\\end\{thebibliography\}",
    re.DOTALL,
)


def find_arxiv_id(text: str) -> str | None:
    """First arXiv identifier appearing in the text, if any."""
    new = _ARXIV_NEW_RE.search(text)
    old = _ARXIV_OLD_RE.search(text)
    if new and old:
        return new.group(1) if new.start() <= old.start() else old.group(1)
    if new:
        return new.group(1)
    if old:
        return old.group(1)
    return None


def parse_bibliography(bib_text: str, kind: str = "bib") -> dict[str, str | None]:
    """Parse a bibliography into {citation key: external id or None}.

    ``kind`` is one of "bib", "bbl", "inline". Raises CorpusError when no
    entries parse at all (malformed bibliography) or the text is empty.
    """
    if not bib_text or not bib_text.strip():
        raise CorpusError("empty bibliography text")
    if kind == "bib":
        mapping = _parse_bibtex(bib_text)
    elif kind == "bbl":
        mapping = _parse_bibitems(bib_text)
    elif kind == "inline":
        m = _THEBIB_RE.search(bib_text)
        body = m.group(1) if m else bib_text
        mapping = _parse_bibitems(body)
    else:
        raise CorpusError(f"unknown bibliography kind {kind!r}")
    if not mapping:
        raise CorpusError(f"no bibliography entries parsed (kind={kind})")
    return mapping


def _parse_bibtex(text: str) -> dict[str, str | None]:
    mapping: dict[str, str | None] = {}
    entries = list(_BIB_ENTRY_RE.finditer(text))
    for i, m in enumerate(entries):
        entry_type = m.group(1).lower()
        if entry_type in ("string", "comment", "preamble"):
            continue
        key = m.group(2)
        end = entries[i + 1].start() if i + 1 < len(entries) else len(text)
        body = text[m.end():end]
        mapping[key] = find_arxiv_id(body)
    return mapping


def _parse_bibitems(text: str) -> dict[str, str | None]:
    mapping: dict[str, str | None] = {}
    items = list(_BIBITEM_RE.finditer(text))
    for i, m in enumerate(items):
        key = m.group(1).strip()
        end = items[i + 1].start() if i + 1 < len(items) else len(text)
        body = text[m.end():end]
        mapping[key] = find_arxiv_id(body)
    return mapping
