import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugsem.astcore import normalize_whitespace, parse, tokens_on_lines
from bugsem.errors import UnparseableSource

from conftest import DEMO_CODE, DEMO_NORMALIZED


def test_normalize_demo_program():
    assert normalize_whitespace(DEMO_CODE).text == DEMO_NORMALIZED


def test_normalize_two_terminals():
    assert normalize_whitespace("x;").text == "x ;"


def test_normalize_line_table():
    result = normalize_whitespace("a  +\n\tb")
    assert result.text == "a + b"
    assert result.token_lines == (1, 1, 2)


def test_normalize_drops_comments():
    result = normalize_whitespace("a /* gone */ + b // eol\n;")
    assert result.text == "a + b ;"


def test_empty_input_unparseable():
    with pytest.raises(UnparseableSource):
        parse("")
    with pytest.raises(UnparseableSource):
        normalize_whitespace("  /* only a comment */  ")


def test_parse_call_node():
    ast = parse("malloc ( 10 ) ;")
    kinds = [n.kind for n in ast.root.walk()]
    assert "call_expression" in kinds
    call = next(n for n in ast.root.walk() if n.kind == "call_expression")
    callee = call.children[0]
    assert callee.is_leaf
    assert ast.terminals[callee.token_index].text == "malloc"


def test_parse_subscript_and_assignment():
    ast = parse("a [ i ] = 0 ;")
    kinds = [n.kind for n in ast.root.walk()]
    assert kinds.count("subscript_expression") == 1
    assert kinds.count("assignment_expression") == 1


def test_terminal_spans_reslice_normalized():
    ast = parse("void f ( int n ) { if ( n > 0 ) n -- ; }")
    for tok in ast.terminals:
        assert ast.normalized[tok.span[0]:tok.span[1]] == tok.text


def test_span_monotonicity():
    ast = parse(DEMO_CODE)
    starts = [t.span[0] for t in ast.terminals]
    assert starts == sorted(starts)
    assert len(set(starts)) == len(starts)


def test_concatenation_reproduces_normalized():
    ast = parse(DEMO_CODE)
    assert " ".join(t.text for t in ast.terminals) == ast.normalized


def test_tokens_on_lines_whole_function():
    ast = parse("int f ( ) { return 1 ; }")
    assert tokens_on_lines(ast, {1}) == list(range(len(ast.terminals)))


def test_tokens_on_lines_empty_query():
    ast = parse("x ;")
    assert tokens_on_lines(ast, set()) == []


def test_tokens_on_lines_middle_line():
    ast = parse("a;\nb;\nc;")
    idx = tokens_on_lines(ast, {2})
    assert [ast.terminals[i].text for i in idx] == ["b", ";"]


def test_tokens_on_lines_unknown_line():
    ast = parse("a;\nb;\nc;")
    assert tokens_on_lines(ast, {99}) == []


def test_tokens_on_lines_union_merges():
    ast = parse("a;\nb;\nc;\nd;")
    merged = sorted(set(tokens_on_lines(ast, {1})) | set(tokens_on_lines(ast, {3})))
    assert tokens_on_lines(ast, {1, 3}) == merged


simple_snippets = st.sampled_from([
    "int f() { return a + b; }",
    "void g(char *s) { while (*s) s++; }",
    "x = y[3] * 2;",
    "#include <stdio.h>\nint main() { puts(\"hi\"); }",
    "struct s { int a; };",
    "for (i = 0; i < n; ++i) sum += v[i];",
    "if (p != NULL) { free(p); }",
    "a->b.c = d ? e : f;",
    "int x = sizeof(struct foo);",
    "broken ( [ } ;; ->",
])


@settings(max_examples=50, deadline=None)
@given(simple_snippets)
def test_normalize_idempotent(code):
    once = normalize_whitespace(code).text
    twice = normalize_whitespace(once).text
    assert once == twice


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet="abx10*+-></()[]{};=&,. \n\t", min_size=1, max_size=80))
def test_tokens_survive_arbitrary_soup(code):
    try:
        ast = parse(code)
    except UnparseableSource:
        return
    # every token appears exactly once as a leaf, in order
    leaf_indices = [leaf.token_index for leaf in ast.root.leaves()]
    assert leaf_indices == list(range(len(ast.terminals)))
    assert " ".join(t.text for t in ast.terminals) == ast.normalized
