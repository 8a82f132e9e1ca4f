"""LaTeX source cleaning: comments, user macros, citation normalization.

The cleaner prepares raw LaTeX for citation and section extraction. It
removes comments, expands user-defined macros to a fixpoint (depth-capped),
rewrites the whole citation-command family to a canonical ``\\cite{...}``
form, strips presentation-only commands and float environments, and
normalizes whitespace. Structural markup that extraction relies on
(``\\section``, ``\\title``, the abstract environment, ``\\cite``) survives.
Cleaning is idempotent.
"""

from __future__ import annotations

import logging
import re

from ..exceptions import CorpusError, MacroExpansionError

logger = logging.getLogger(__name__)

MACRO_EXPANSION_DEPTH_CAP = 32

# natbib / biblatex / plain citation commands folded into canonical \cite
CITE_COMMANDS = (
    "citep", "citet", "citealp", "citealt", "citeauthor", "citeyearpar",
    "citeyear", "citenum", "parencite", "textcite", "autocite", "smartcite",
    "footcite", "supercite", "Citep", "Citet", "Parencite", "Textcite",
    "Autocite", "cite",
)
_CITE_RE = re.compile(
    r"\\(?:" + "|".join(CITE_COMMANDS) + r")\*?\s*(?:\[[^\]]*\]\s*){0,2}\{([^{}]*)\}"
)

# wrappers whose argument is kept
_UNWRAP_COMMANDS = (
    "textbf", "textit", "textsc", "texttt", "textsf", "textrm", "textup",
    "textsl", "emph", "underline", "mbox", "hbox", "uline", "textnormal",
)
# commands removed together with their argument
_DROP_ARG_COMMANDS = (
    "vspace", "hspace", "includegraphics", "label", "pagestyle",
    "thispagestyle", "setlength", "addtolength", "input", "include",
    "bibliographystyle", "footnote", "footnotetext", "url", "resizebox",
    "subfigure", "documentclass", "usepackage", "author", "date", "thanks",
)
# bare commands removed outright
_DROP_BARE_COMMANDS = (
    "noindent", "centering", "clearpage", "newpage", "maketitle",
    "tableofcontents", "bigskip", "medskip", "smallskip", "hfill", "vfill",
    "unskip", "allowbreak", "linebreak", "nolinebreak", "pagebreak",
    "xspace", "indent", "relax", "small", "large", "Large", "LARGE", "huge",
    "Huge", "normalsize", "footnotesize", "scriptsize", "tiny", "em", "bf",
    "it", "sc", "tt", "rm", "itshape", "bfseries", "scshape", "ttfamily",
    "rmfamily", "sffamily", "upshape", "mdseries", "raggedright",
    "raggedleft", "onecolumn", "twocolumn", "flushbottom", "sloppy",
)
# environments deleted with their whole body (floats only; content survives)
_DROP_ENVIRONMENTS = ("figure", "figure*", "table", "table*", "wrapfigure",
                      "tikzpicture")

_NEWCOMMAND_RE = re.compile(
    r"\\(?:re)?newcommand\*?\s*\{?\\([A-Za-z@]+)\}?\s*(?:\[(\d)\])?\s*(?:\[([^\]]*)\])?\s*\{"
)
_PROVIDECOMMAND_RE = re.compile(
    r"\\providecommand\*?\s*\{?\\([A-Za-z@]+)\}?\s*(?:\[(\d)\])?\s*(?:\[([^\]]*)\])?\s*\{"
)
_DEF_RE = re.compile(r"\\def\s*\\([A-Za-z@]+)\s*((?:#\d)*)\s*\{")


class MacroDef:
    __slots__ = ("name", "nargs", "default", "body")

    def __init__(self, name, nargs, default, body):
        self.name = name
        self.nargs = nargs
        self.default = default
        self.body = body


def clean_latex(text: str) -> str:
    """Full cleaning pass over one LaTeX source string."""
    text = strip_comments(text)
    macros, text = collect_macros(text)
    text = expand_macros(text, macros)
    text = normalize_citations(text)
    text = strip_presentation(text)
    return normalize_whitespace(text)


def strip_comments(text: str) -> str:
    """Remove % comments; comment-only lines vanish entirely."""
    out_lines = []
    for line in text.split("\n"):
        cut = _comment_start(line)
        if cut is None:
            out_lines.append(line)
            continue
        kept = line[:cut]
        if kept.strip():
            out_lines.append(kept)
        # else: the whole line was a comment; drop it with its newline
    return "\n".join(out_lines)


def _comment_start(line: str) -> int | None:
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == "\\":
            i += 2
            continue
        if ch == "%":
            return i
        i += 1
    return None


def _match_brace_group(text: str, open_idx: int) -> int:
    """Index one past the matching '}' for the '{' at ``open_idx``."""
    depth = 0
    i = open_idx
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            i += 2
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    raise CorpusError("unbalanced braces in LaTeX source")


def collect_macros(text: str) -> tuple[dict[str, MacroDef], str]:
    """Extract \\newcommand/\\renewcommand/\\providecommand/\\def definitions.

    Definitions are removed from the returned text. Later definitions of the
    same name win (matching \\renewcommand semantics); \\providecommand only
    fills gaps.
    """
    macros: dict[str, MacroDef] = {}
    out = []
    pos = 0
    while True:
        candidates = []
        for regex, provide in ((_NEWCOMMAND_RE, False), (_PROVIDECOMMAND_RE, True),
                               (_DEF_RE, None)):
            m = regex.search(text, pos)
            if m:
                candidates.append((m.start(), regex, m, provide))
        if not candidates:
            out.append(text[pos:])
            break
        start, regex, m, provide = min(candidates, key=lambda c: c[0])
        out.append(text[pos:start])
        try:
            end = _match_brace_group(text, m.end() - 1)
        except CorpusError:
            logger.warning("unbalanced braces in macro definition near %r; keeping raw text",
                           text[start:m.end()][:60])
            out.append(text[start:m.end()])
            pos = m.end()
            continue
        body = text[m.end():end - 1]
        if regex is _DEF_RE:
            name = m.group(1)
            nargs = len(re.findall(r"#\d", m.group(2) or ""))
            definition = MacroDef(name, nargs, None, body)
        else:
            name = m.group(1)
            nargs = int(m.group(2)) if m.group(2) else 0
            definition = MacroDef(name, nargs, m.group(3), body)
        if not (provide is True and name in macros):
            macros[name] = definition
        pos = end
    return macros, "".join(out)


def expand_macros(text: str, macros: dict[str, MacroDef],
                  depth_cap: int = MACRO_EXPANSION_DEPTH_CAP) -> str:
    """Expand user macros until fixpoint; error past the depth cap."""
    if not macros:
        return text
    names = sorted(macros, key=len, reverse=True)
    pattern = re.compile(r"\\(" + "|".join(re.escape(n) for n in names) + r")(?![A-Za-z@])")
    for _ in range(depth_cap):
        changed, text = _expand_once(text, macros, pattern)
        if not changed:
            return text
    leftover = pattern.search(text)
    name = leftover.group(1) if leftover else names[0]
    raise MacroExpansionError(name, depth_cap)


def _expand_once(text: str, macros: dict[str, MacroDef], pattern) -> tuple[bool, str]:
    out = []
    pos = 0
    changed = False
    while True:
        m = pattern.search(text, pos)
        if not m:
            out.append(text[pos:])
            break
        macro = macros[m.group(1)]
        out.append(text[pos:m.start()])
        cursor = m.end()
        args = []
        if macro.nargs:
            remaining = macro.nargs
            if macro.default is not None:
                if cursor < len(text) and text[cursor] == "[":
                    close = text.find("]", cursor)
                    if close == -1:
                        raise CorpusError(f"unterminated optional argument for \\{macro.name}")
                    args.append(text[cursor + 1:close])
                    cursor = close + 1
                else:
                    args.append(macro.default)
                remaining -= 1
            for _ in range(remaining):
                while cursor < len(text) and text[cursor] in " \t\n":
                    cursor += 1
                if cursor >= len(text) or text[cursor] != "{":
                    args.append("")
                    continue
                end = _match_brace_group(text, cursor)
                args.append(text[cursor + 1:end - 1])
                cursor = end
        body = macro.body
        for idx, val in enumerate(args, start=1):
            body = body.replace(f"#{idx}", val)
        out.append(body)
        changed = True
        pos = cursor
    return changed, "".join(out)


def normalize_citations(text: str) -> str:
    """Rewrite every citation-command variant to canonical \\cite{k1,k2}."""

    def repl(m: re.Match) -> str:
        keys = [k.strip() for k in m.group(1).split(",") if k.strip()]
        return "\\cite{" + ",".join(keys) + "}"

    return _CITE_RE.sub(repl, text)


def strip_presentation(text: str) -> str:
    """Drop float environments and presentation-only commands."""
    for env in _DROP_ENVIRONMENTS:
        text = _drop_environment(text, env)

    # unwrap one level at a time so nested wrappers eventually disappear
    unwrap = re.compile(r"\\(?:" + "|".join(_UNWRAP_COMMANDS) + r")\s*\{([^{}]*)\}")
    while True:
        text, n = unwrap.subn(r"\1", text)
        if n == 0:
            break
    text = re.sub(r"\\textcolor\s*\{[^{}]*\}\s*\{([^{}]*)\}", r"\1", text)
    text = re.sub(r"\\color\s*\{[^{}]*\}", "", text)
    text = re.sub(
        r"\\(?:" + "|".join(_DROP_ARG_COMMANDS) + r")\*?\s*(?:\[[^\]]*\]\s*)*\{[^{}]*\}",
        "", text)
    text = re.sub(r"\\(?:" + "|".join(_DROP_BARE_COMMANDS) + r")\b\*?", "", text)
    text = re.sub(r"\\item\s*(?:\[[^\]]*\])?", "", text)
    passthrough = ("itemize|enumerate|description|quote|flushleft|flushright"
                   "|center|minipage|document")
    text = re.sub(r"\\begin\{(?:" + passthrough + r")\}(?:\s*\{[^{}]*\})*", "", text)
    text = re.sub(r"\\end\{(?:" + passthrough + r")\}", "", text)
    text = text.replace("\\\\", " ").replace("~", " ")
    text = re.sub(r"\\[,;:!]", " ", text)
    text = re.sub(r"\\(?:quad|qquad)\b", " ", text)
    # an empty group is pure spacing glue once macros are gone
    text = text.replace("{}", "")
    return text


def _drop_environment(text: str, env: str) -> str:
    begin = "\\begin{" + env + "}"
    end = "\\end{" + env + "}"
    while True:
        s = text.find(begin)
        if s == -1:
            return text
        e = text.find(end, s)
        if e == -1:
            # unbalanced environment: drop to end of text, best effort
            return text[:s]
        text = text[:s] + text[e + len(end):]


def normalize_whitespace(text: str) -> str:
    """Collapse space runs, cap blank runs at one empty line, strip edges."""
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(r" ?\n ?", "\n", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip()
