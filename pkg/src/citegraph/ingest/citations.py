"""Citing-sentence extraction with local context and section membership.

Sentences are segmented on '.', '!' or '?' followed by whitespace and an
uppercase letter, digit, or LaTeX command, with a fixed abbreviation list
("et al.", "Fig.", "e.g.", ...) protected and periods inside brace groups
ignored. Each citation command occurrence yields one mention per key,
carrying the full citing sentence and the adjacent sentences of the same
section (absent at section boundaries).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Abbreviations that never end a sentence. Checked case-insensitively with a
# word boundary before them, so "final." is not protected by "al.".
PROTECTED_ABBREVIATIONS = (
    "et al.", "e.g.", "i.e.", "Fig.", "Figs.", "Eq.", "Eqs.", "Sec.",
    "Secs.", "Tab.", "Tabs.", "Ref.", "Refs.", "cf.", "vs.", "resp.",
    "ca.", "w.r.t.", "Dr.", "Prof.", "No.", "pp.", "Vol.", "Ch.", "approx.",
)

# Section titles treated as the related-work section, checked after
# normalization (lowercase, punctuation stripped). Extendable by callers.
RELATED_WORK_TITLES = (
    "related work",
    "related works",
    "related research",
    "related studies",
    "related literature",
    "related efforts",
    "literature review",
    "literature survey",
    "literature overview",
    "prior work",
    "prior works",
    "prior art",
    "prior research",
    "previous work",
    "previous works",
    "previous research",
    "existing research",
    "existing work",
    "existing works",
    "existing methods",
    "background",
    "background and related work",
    "related work and background",
    "state of the art",
    "review of the literature",
    "review of literature",
    "review of related work",
    "survey of related work",
    "relation to prior work",
    "relationship to prior work",
    "comparison with related work",
)

_SECTION_RE = re.compile(r"\\section\*?\s*\{")
_CITE_KEYS_RE = re.compile(r"\\cite\{([^{}]*)\}")


@dataclass
class CitationMention:
    """One citation occurrence: key, citing sentence, and local context."""

    citation_key: str
    sentence: str
    preceding: str | None = None
    following: str | None = None
    in_related_work: bool = False
    resolved_target: str | None = None


@dataclass
class Section:
    title: str | None  # None for front matter before the first \section
    text: str


def split_into_sections(cleaned: str) -> list[Section]:
    """Cut cleaned LaTeX at top-level \\section boundaries."""
    from .latex import _match_brace_group

    sections: list[Section] = []
    matches = list(_SECTION_RE.finditer(cleaned))
    if not matches:
        return [Section(title=None, text=cleaned)]
    if matches[0].start() > 0:
        front = cleaned[:matches[0].start()].strip()
        if front:
            sections.append(Section(title=None, text=front))
    for i, m in enumerate(matches):
        try:
            title_end = _match_brace_group(cleaned, m.end() - 1)
            title = cleaned[m.end():title_end - 1].strip()
        except Exception:
            title_end = m.end()
            title = ""
        body_end = matches[i + 1].start() if i + 1 < len(matches) else len(cleaned)
        sections.append(Section(title=title, text=cleaned[title_end:body_end].strip()))
    return sections


def normalize_title(title: str) -> str:
    title = re.sub(r"\\[A-Za-z]+", " ", title)
    title = re.sub(r"[^a-z0-9 ]", " ", title.lower())
    return re.sub(r"\s+", " ", title).strip()


def split_sentences(text: str) -> list[str]:
    """Segment whitespace-normalized text into sentences."""
    text = re.sub(r"\s+", " ", text).strip()
    if not text:
        return []
    sentences = []
    depth = 0
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\\" and i + 1 < n:
            i += 2
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth = max(0, depth - 1)
        elif ch in ".!?" and depth == 0:
            j = i + 1
            if j < n and text[j] == " ":
                k = j
                while k < n and text[k] == " ":
                    k += 1
                follows = k < n and (text[k].isupper() or text[k] == "\\" or text[k].isdigit())
                if follows and not (ch == "." and _protected_at(text, i)):
                    piece = text[start:i + 1].strip()
                    if piece:
                        sentences.append(piece)
                    start = k
                    i = k
                    continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _protected_at(text: str, dot_idx: int) -> bool:
    prefix = text[:dot_idx + 1]
    lower = prefix.lower()
    for abbr in PROTECTED_ABBREVIATIONS:
        a = abbr.lower()
        if not lower.endswith(a):
            continue
        before = len(prefix) - len(a) - 1
        if before < 0 or not (prefix[before].isalnum() or prefix[before] == "\\"):
            return True
    return False


def extract_citations(cleaned: str, bibmap: dict[str, str | None] | None = None,
                      related_titles: tuple[str, ...] = RELATED_WORK_TITLES,
                      ) -> list[CitationMention]:
    """One mention per (\\cite occurrence x key) over the whole document.

    ``preceding``/``following`` are the adjacent sentences within the same
    section; mentions inside the section selected as related work carry
    ``in_related_work=True``. Resolution uses ``bibmap`` when given.
    """
    bibmap = bibmap or {}
    sections = split_into_sections(cleaned)
    rw_index = _related_work_index(sections, related_titles)
    mentions: list[CitationMention] = []
    for s_idx, section in enumerate(sections):
        sentences = split_sentences(section.text)
        for i, sentence in enumerate(sentences):
            for m in _CITE_KEYS_RE.finditer(sentence):
                keys = [k.strip() for k in m.group(1).split(",") if k.strip()]
                for key in keys:
                    mentions.append(CitationMention(
                        citation_key=key,
                        sentence=sentence,
                        preceding=sentences[i - 1] if i > 0 else None,
                        following=sentences[i + 1] if i + 1 < len(sentences) else None,
                        in_related_work=(s_idx == rw_index),
                        resolved_target=bibmap.get(key),
                    ))
    return mentions


def _related_work_index(sections: list[Section],
                        related_titles: tuple[str, ...]) -> int | None:
    wanted = {normalize_title(t) for t in related_titles}
    for idx, sec in enumerate(sections):
        if sec.title is not None and normalize_title(sec.title) in wanted:
            return idx
    for idx, sec in enumerate(sections):
        if sec.title is not None and normalize_title(sec.title) == "introduction":
            return idx
    return None


def extract_related_work(cleaned: str,
                         related_titles: tuple[str, ...] = RELATED_WORK_TITLES,
                         ) -> tuple[str, str] | None:
    """The first section matching the related-work title list.

    Falls back to the Introduction section; returns None when neither
    exists.
    """
    sections = split_into_sections(cleaned)
    idx = _related_work_index(sections, related_titles)
    if idx is None:
        return None
    section = sections[idx]
    return (section.title or "", section.text)
