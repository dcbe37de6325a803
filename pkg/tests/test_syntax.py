from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LISTINGS
from qumin import syntax as S
from qumin.errors import ParseError, TrailingInput

LISTING_FILES = sorted(LISTINGS.glob("*.qum"))


def test_let_with_infix():
    (node,) = S.parse_program("let six = (3 + 3)")
    assert node == S.Assignment("six", S.InfixCall(S.IntLit(3), "+", S.IntLit(3)))


def test_empty_program():
    assert S.parse_program("") == ()
    assert S.parse_program("   // only a comment\n") == ()


def test_composition():
    (node,) = S.parse_program("logTwo . length(string)")
    assert node == S.Composition(("logTwo", "length"), (S.Name("string"),))


def test_annotated_lambda():
    node = S.parse_expr("lambda(q : qubit, U : operator[1]){ measure(apply(U,q)) }")
    assert isinstance(node, S.Lambda)
    assert [p.name for p in node.params] == ["q", "U"]
    assert node.params[0].annotation == S.QubitAnn()
    assert node.params[1].annotation == S.OperatorAnn(1)
    assert node.annotated


@pytest.mark.parametrize("src, expected", [
    ("[1 0]", S.ListLit((S.IntLit(1), S.IntLit(0)))),
    ("1+5i", S.ComplexLit(1, 5)),
    ("-3.2-5i", S.ComplexLit(-3.2, -5)),
    ("#t", S.BoolLit(True)),
    ("#f", S.BoolLit(False)),
    ('"Hello world!"', S.StringLit("Hello world!")),
    ("-7", S.IntLit(-7)),
    ("2.5", S.FloatLit(2.5)),
    ("⊗", S.Name("⊗")),
    ("·", S.Name("·")),
    ("+(3,5)", S.Call(S.Name("+"), (S.IntLit(3), S.IntLit(5)))),
    ("-(10,-3)", S.Call(S.Name("-"), (S.IntLit(10), S.IntLit(-3)))),
    ("(op ⊗ other)", S.InfixCall(S.Name("op"), "⊗", S.Name("other"))),
    ("(sqrt 4)", S.PrefixCall("sqrt", S.IntLit(4))),
    ("f(1)(2)", S.Call(S.Call(S.Name("f"), (S.IntLit(1),)), (S.IntLit(2),))),
])
def test_parse_expr_forms(src, expected):
    assert S.parse_expr(src) == expected


def test_load_directives():
    nodes = S.parse_program("--qload deutschTypes\n--load operators")
    assert nodes == (S.Load(True, "deutschTypes"), S.Load(False, "operators"))


def test_immediate_invocation():
    node = S.parse_expr("lambda(x,y){ (x + y) }(3,5)")
    assert node.immediate_args == (S.IntLit(3), S.IntLit(5))


def test_named_function_sugar():
    a = S.parse_expr("let f(x,y){ (x + y) }")
    b = S.parse_expr("let f = lambda(x,y){ (x + y) }")
    assert a == b


def test_if_else():
    node = S.parse_expr("if((x = 1)){ 2 } else { 3 }")
    assert node == S.IfElse(S.InfixCall(S.Name("x"), "=", S.IntLit(1)),
                            (S.IntLit(2),), (S.IntLit(3),))


def test_equals_name_vs_assignment():
    # the let-form wins over a bare "=" name
    assert isinstance(S.parse_expr("let x = 1"), S.Assignment)
    assert S.parse_expr("=(1, 1)") == S.Call(S.Name("="), (S.IntLit(1), S.IntLit(1)))


def test_tensor_and_bang_lets():
    assert S.parse_expr("let u ⊗ v = M") == S.TensorLet("u", "v", S.Name("M"))
    node = S.parse_expr("let u : qubit * qubit ⊗ v = M")
    assert node.left_type == S.TensorAnn(S.QubitAnn(), S.QubitAnn())
    assert S.parse_expr("let !v = M") == S.BangLet("v", S.Name("M"))
    assert S.parse_expr("!measure(q)") == S.Promote(S.Call(S.Name("measure"), (S.Name("q"),)))


@pytest.mark.parametrize("src, expected", [
    ("qubit * qubit", S.TensorAnn(S.QubitAnn(), S.QubitAnn())),
    ("!{operator[2]}", S.BangAnn(S.OperatorAnn(2))),
    ("qubit > qubit", S.ArrowAnn(S.QubitAnn(), S.QubitAnn())),
    ("qubit > int > list", S.ArrowAnn(S.QubitAnn(), S.ArrowAnn(S.IntAnn(), S.ListAnn()))),
    ("qubit * int * list", S.TensorAnn(S.TensorAnn(S.QubitAnn(), S.IntAnn()), S.ListAnn())),
])
def test_type_annotations(src, expected):
    assert S.parse_type_annotation(src) == expected


@pytest.mark.parametrize("src", ["operator[0]", "operator[]", "qubit *", "!{qubit", "float"])
def test_bad_type_annotations(src):
    with pytest.raises(ParseError):
        S.parse_type_annotation(src)


def test_type_annotation_round_trip():
    for src in ["qubit * qubit", "!{operator[2]}", "(qubit > qubit) > int", "qubit * (int * list)"]:
        ann = S.parse_type_annotation(src)
        assert S.parse_type_annotation(S.unparse_type(ann)) == ann


@pytest.mark.parametrize("path", LISTING_FILES, ids=lambda p: p.stem)
def test_listing_parses_and_round_trips(path):
    source = path.read_text(encoding="utf-8")
    nodes = S.parse_program(source)
    assert nodes
    assert S.parse_program(S.unparse_program(nodes)) == nodes
    for node in nodes:
        S.walk(node, lambda n: _assert_span(n, source))


def _assert_span(node, source):
    start, end = node.span
    assert 0 <= start <= end <= len(source)


def test_listing_corpus_is_complete():
    assert len(LISTING_FILES) >= 30


MALFORMED = [
    "let = 5",
    "let x 5",
    "lambda(x { x }",
    "lambda(x){ x",
    "lambda(x,){ x }",
    "lambda(x, x){ x }",
    "f(1,",
    "f(,1)",
    "[1 2",
    "(1 +",
    "if((x = 1)){ 1 }",
    "if((x = 1)){ 1 } else",
    "--load",
    "--qload 42",
    '"unterminated',
    '"bad @ char"',
    "let q = lambda(q : qubit, U : operator[0]){ q }",
    "let q = lambda(q : ){ q }",
    "}",
    "let x = 1 )",
    # the stray closing brace as printed in the Deutsch program
    "let Uf = oracle(generateMatrix(fConstant,2))\n\n}",
    "let f = lambda(string){\n  if((string = s)){\n    [1 0]\n   else{\n    [0 1]\n  }\n}",
]


@pytest.mark.parametrize("src", MALFORMED)
def test_malformed_inputs_report_in_bounds_span(src):
    with pytest.raises(ParseError) as info:
        S.parse_program(src)
    start, end = info.value.span
    assert 0 <= start <= end <= len(src)


def test_malformed_corpus_size():
    assert len(MALFORMED) >= 20


def test_farthest_failure_position():
    src = "let x = [1 2 3"
    with pytest.raises(ParseError) as info:
        S.parse_program(src)
    assert info.value.span[0] == len(src)
    assert "']'" in info.value.expected


def test_duplicate_parameters_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        S.parse_expr("lambda(x, y, x){ x }")


def test_trailing_input():
    with pytest.raises(TrailingInput) as info:
        S.parse_expr("f(1) g(2)")
    assert info.value.span == (5, 9)


def test_longest_match_complex():
    # one literal, not a subtraction of two numbers
    assert S.parse_program("-3.2-5i") == (S.ComplexLit(-3.2, -5),)


def test_comments_are_whitespace():
    src = "// header\nlet x = 1 // trailing\n// footer"
    assert S.parse_program(src) == (S.Assignment("x", S.IntLit(1)),)


def test_line_col():
    src = "ab\ncd\n"
    assert S.line_col(src, 0) == (1, 1)
    assert S.line_col(src, 3) == (2, 1)
    assert S.line_col(src, 4) == (2, 2)


def test_spans_point_at_source():
    src = "let six = (3 + 3)"
    (node,) = S.parse_program(src)
    s, e = node.expr.span
    assert src[s:e] == "(3 + 3)"


# -- generated trees ---------------------------------------------------------

_lvalues = st.from_regex(r"[a-zA-Z]{1,6}", fullmatch=True).filter(
    lambda s: s not in {"let", "lambda", "if", "else"})
_ops = st.sampled_from(["+", "-", "*", "/", "=", "⊗", "·", "myOp"])
_leaf = st.one_of(
    st.integers(-10**6, 10**6).map(S.IntLit),
    st.floats(-1e6, 1e6, allow_nan=False).filter(lambda x: x != int(x)).map(
        lambda x: S.FloatLit(float(repr(x)))),
    st.booleans().map(S.BoolLit),
    st.from_regex(r"[a-zA-Z0-9 !#$?]{0,8}", fullmatch=True).map(S.StringLit),
    st.builds(S.ComplexLit, st.integers(0, 99), st.integers(-99, 99)),
    _lvalues.map(S.Name),
)


def _extend(children):
    names = _lvalues.map(S.Name)
    return st.one_of(
        st.lists(children, max_size=4).map(lambda xs: S.ListLit(tuple(xs))),
        st.builds(lambda c, a: S.Call(c, tuple(a)), names, st.lists(children, min_size=1, max_size=3)),
        st.builds(S.InfixCall, children, _ops, children),
        st.builds(lambda c, t, e: S.IfElse(c, tuple(t), tuple(e)),
                  children, st.lists(children, max_size=2), st.lists(children, max_size=2)),
        st.builds(lambda ps, body: S.Lambda(tuple(S.Param(p) for p in ps), tuple(body)),
                  st.lists(_lvalues, min_size=1, max_size=3, unique=True),
                  st.lists(children, max_size=3)),
        st.builds(S.Assignment, _lvalues, children),
    )


_trees = st.recursive(_leaf, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(_trees)
def test_generated_trees_round_trip(tree):
    text = S.unparse(tree)
    assert S.parse_expr(text) == tree


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="lambd(){}[]=+-,.#tf\"xyz 0123456789\n⊗", max_size=40))
def test_random_text_never_crashes(text):
    try:
        nodes = S.parse_program(text)
    except ParseError as err:
        start, end = err.span
        assert 0 <= start <= end <= len(text)
    else:
        for node in nodes:
            S.walk(node, lambda n: _assert_span(n, text))
