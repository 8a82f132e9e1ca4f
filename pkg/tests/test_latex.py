"""LaTeX cleaning: comments, macros, citation normalization, idempotence."""

import pytest
from hypothesis import given, strategies as st

from citegraph.exceptions import MacroExpansionError
from citegraph.ingest import (
    clean_latex,
    collect_macros,
    expand_macros,
    normalize_citations,
    strip_comments,
)


class TestComments:
    def test_comment_only_line_removed(self):
        assert clean_latex("% a comment\nHello") == "Hello"

    def test_inline_comment_stripped(self):
        assert clean_latex("Hello % trailing\nWorld") == "Hello\nWorld"

    def test_escaped_percent_survives(self):
        assert strip_comments("95\\% kept % gone") == "95\\% kept "

    def test_double_backslash_then_percent_is_comment(self):
        # \\ ends an escape pair, so the following % starts a comment
        assert strip_comments("a\\\\% gone") == "a\\\\"


class TestMacros:
    def test_zero_arg_expansion(self):
        assert clean_latex("\\newcommand{\\mynet}{U-Net}\\mynet{} rocks") == "U-Net rocks"

    def test_positional_arguments(self):
        out = clean_latex("\\newcommand{\\pair}[2]{(#1, #2)}\\pair{x}{y}")
        assert out == "(x, y)"

    def test_optional_argument_default_and_override(self):
        src = "\\newcommand{\\greet}[2][Hello]{#1, #2!}\\greet{World} \\greet[Hi]{World}"
        assert clean_latex(src) == "Hello, World! Hi, World!"

    def test_def_form(self):
        assert clean_latex("\\def\\x{abc}\\x.") == "abc."

    def test_chained_macros_expand_to_fixpoint(self):
        src = "\\newcommand{\\a}{\\b}\\newcommand{\\b}{done}\\a{}"
        assert clean_latex(src) == "done"

    def test_cyclic_macro_hits_depth_cap(self):
        macros, text = collect_macros("\\newcommand{\\loop}{\\loop x}\\loop")
        with pytest.raises(MacroExpansionError) as err:
            expand_macros(text, macros)
        assert "loop" in str(err.value)

    def test_renewcommand_wins(self):
        src = "\\newcommand{\\v}{one}\\renewcommand{\\v}{two}\\v{}"
        assert clean_latex(src) == "two"

    def test_providecommand_does_not_override(self):
        src = "\\newcommand{\\v}{one}\\providecommand{\\v}{two}\\v{}"
        assert clean_latex(src) == "one"

    def test_name_boundary_respected(self):
        # \net must not expand inside \network
        src = "\\newcommand{\\net}{X}\\network \\net"
        assert clean_latex(src) == "\\network X"


class TestCitationNormalization:
    def test_citep_citet(self):
        assert clean_latex("\\citep{a}\\citet{b}") == "\\cite{a}\\cite{b}"

    def test_optional_arguments_dropped(self):
        assert normalize_citations("\\citep[see][p. 5]{a}") == "\\cite{a}"

    def test_multi_key_spacing_normalized(self):
        assert normalize_citations("\\cite{a, b , c}") == "\\cite{a,b,c}"

    def test_starred_and_biblatex_variants(self):
        assert normalize_citations("\\citet*{a} \\parencite{b} \\textcite{c}") == \
            "\\cite{a} \\cite{b} \\cite{c}"

    def test_already_canonical_unchanged(self):
        assert normalize_citations("\\cite{a,b}") == "\\cite{a,b}"


class TestPresentation:
    def test_wrappers_unwrapped(self):
        assert clean_latex("\\textbf{bold} and \\emph{it}") == "bold and it"

    def test_nested_wrappers(self):
        assert clean_latex("\\textbf{\\emph{x}}") == "x"

    def test_floats_dropped_wholly(self):
        src = "before\n\\begin{figure}\\caption{gone \\cite{x}}\\end{figure}\nafter"
        assert clean_latex(src) == "before\n\nafter"

    def test_structural_markup_survives(self):
        src = "\\section{Intro}\nText \\cite{k} here."
        assert clean_latex(src) == src

    def test_spacing_commands_removed(self):
        assert clean_latex("a\\hfill b\\vspace{1em} c~d") == "a b c d"


class TestIdempotence:
    @pytest.mark.parametrize("fixture", [
        "appendix_cs", "macros", "citenorm", "abbrev", "comments",
        "floats", "relwork_fallback", "multikey", "sections_boundary",
        "braces_math",
    ])
    def test_fixture_idempotent(self, fixture):
        from pathlib import Path

        src = Path(__file__).parent / "fixtures" / "latex" / f"{fixture}.tex"
        cleaned = clean_latex(src.read_text())
        assert clean_latex(cleaned) == cleaned

    @given(st.lists(st.sampled_from(
        list("abcDEF \n.{}%\\") + ["\\cite{k}", "\\textbf{x}", "% c\n", "\\citep{q}"]),
        max_size=40).map("".join))
    def test_generated_idempotent(self, soup):
        try:
            cleaned = clean_latex(soup)
        except MacroExpansionError:
            return
        assert clean_latex(cleaned) == cleaned
