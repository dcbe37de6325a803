from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LISTINGS, PROGRAMS, make_interp
from qumin import qcore
from qumin.errors import (
    ArityError, ConstraintViolation, CyclicLoad, DivideByZero, LinearityViolation,
    ModuleNotFound, ParseError, RebindError, RecursionLimit, TypeErrorDynamic, UnboundName,
)
from qumin.interp import Interpreter
from qumin.values import Closure, show


def run(src, seed=0):
    interp, _ = make_interp(seed)
    return interp.run_source(src)


# -- classical evaluation ------------------------------------------------------

@pytest.mark.parametrize("listing, expected", [
    ("lambda_immediate", 8),
    ("lambda_higher_order", 10),
    ("partial_application", 40),
])
def test_listing_values(listing, expected):
    assert run((LISTINGS / f"{listing}.qum").read_text(encoding="utf-8")) == expected


@pytest.mark.parametrize("src, expected", [
    ("(3 + 5)", 8),
    ("+(3,5)", 8),
    ("let six = (3 + 3)\nsix", 6),
    ("lambda(x){ (x + 5) }(30)", 35),
    ("let f = lambda(x){ (x + 5) }\nf(8)", 13),
    ("(sqrt 16)", 4.0),
    ("(10 / 4)", 2.5),
    ("(7 - 10)", -3),
    ("=([1 0], [1 0])", True),
    ("(1 = 2)", False),
    ('"Hello world!"', "Hello world!"),
    ("if((1 = 1)){ 2 } else { 3 }", 2),
    ("if((1 = 2)){ 2 } else { 3 }", 3),
    ("length([1 2 3])", 3),
    ("len([])", 0),
    ("car([7 8 9])", 7),
    ("cdr([7 8 9])", [8, 9]),
    ("append(1, [2 3])", [1, 2, 3]),
    ("prepend(1, [2 3])", [2, 3, 1]),
    ("fold(+, [1 2 3 4])", 10),
    ("fold(*, [2 3 4])", 24),
    ("toInt(sqrt(8))", 2),
    ("toInt(-2.7)", -2),
    ("logTwo(8)", 3),
    ("logTwo . length([1 2 3 4])", 2),
    ("(2 * [1 2])", [2, 4]),
    ("([1 2] + [3 4])", [4, 6]),
])
def test_expression_values(src, expected):
    assert run(src) == expected


def test_exp_of_imaginary_pi():
    assert abs(run("exp((pi * 0+1i))") + 1) < 1e-12


def test_closures_capture_definition_scope():
    src = """
let make = lambda(n){ lambda(x){ (x + n) } }
let addTwo = make(2)
let n = 100
addTwo(5)
"""
    assert run(src) == 7


def test_recursion():
    src = """
let fact = lambda(n){ if((n = 0)){ 1 } else { (n * fact((n - 1))) } }
fact(20)
"""
    assert run(src) == math.factorial(20)


def test_deep_recursion_within_limit():
    src = """
let count = lambda(n){ if((n = 0)){ 0 } else { (1 + count((n - 1))) } }
count(5000)
"""
    assert run(src) == 5000


def test_partial_application_of_builtin():
    assert run("let inc = +(1)\ninc(41)") == 42


def test_matrix_applied_as_function():
    assert run("let X = [[0 1] [1 0]]\nX([1 0])") == [0, 1]


_small = st.integers(-1000, 1000)


@settings(max_examples=100, deadline=None)
@given(_small, _small, _small)
def test_currying_coherence(a, b, c):
    interp, _ = make_interp()
    f = interp.run_source("lambda(x,y,z){ ((x * y) - z) }")
    whole = interp.call(f, a, b, c)
    assert interp.call(interp.call(f, a), b, c) == whole
    assert interp.call(interp.call(interp.call(f, a), b), c) == whole
    assert interp.call(interp.call(f, a, b), c) == whole


def test_show_forms():
    assert show(True) == "#t"
    assert show([1, [2, 3]]) == "[1 [2 3]]"
    assert show(complex(1, 5)) == "1.0+5.0i"
    assert show(complex(1, -5)) == "1.0-5.0i"
    assert show(run("lambda(x,y){ x }(1)")) == "<lambda(y)>"


# -- runtime errors ------------------------------------------------------------

@pytest.mark.parametrize("src, error", [
    ("nope", UnboundName),
    ("lambda(x){ x }(1, 2)", ArityError),
    ("car(1, 2)", ArityError),
    ("(1 / 0)", DivideByZero),
    ("(1 + #t)", TypeErrorDynamic),
    ("let five = 5\nfive(1)", TypeErrorDynamic),
    ("if(1){ 2 } else { 3 }", TypeErrorDynamic),
    ("car([])", TypeErrorDynamic),
    ("let x = 1\nlet x = 2", RebindError),
    ("let f(x){ f(x) }\nf(1)", RecursionLimit),
])
def test_runtime_errors(src, error):
    with pytest.raises(error) as info:
        run(src)
    assert info.value.exit_code == 4


def test_error_span_points_at_call():
    src = "let x = 1\n(x / 0)"
    with pytest.raises(DivideByZero) as info:
        run(src)
    start, end = info.value.span
    assert src[start:end] == "(x / 0)"


def test_inner_scopes_may_shadow():
    assert run("let x = 1\nlambda(x){ let y = x\n y }(2)") == 2


def test_recursion_limit_is_configurable():
    interp, _ = make_interp(max_depth=50)
    with pytest.raises(RecursionLimit):
        interp.run_source("let count = lambda(n){ if((n = 0)){ 0 } else { count((n - 1)) } }\ncount(100)")


# -- modules -------------------------------------------------------------------

def test_load_is_idempotent(session):
    interp, _ = session
    interp.run_source("--load operators\n--load operators")
    interp.load_module("operators")
    assert "hadamard" in interp.globals


def test_missing_module():
    with pytest.raises(ModuleNotFound) as info:
        run("--load doesNotExist")
    assert info.value.exit_code == 5


def test_cyclic_load(tmp_path):
    (tmp_path / "a.qum").write_text("--load b\nlet x = 1\n", encoding="utf-8")
    (tmp_path / "b.qum").write_text("--load a\nlet y = 2\n", encoding="utf-8")
    interp = Interpreter(seed=0, out=lambda s: None, search_path=[tmp_path])
    with pytest.raises(CyclicLoad, match="a -> b -> a"):
        interp.run_source("--load a")


def test_module_search_path_env(tmp_path, monkeypatch):
    (tmp_path / "extra.qum").write_text("let fromEnv = 9\n", encoding="utf-8")
    monkeypatch.setenv("QUMIN_PATH", str(tmp_path))
    interp = Interpreter(seed=0, out=lambda s: None)
    assert interp.run_source("--load extra\nfromEnv") == 9


def test_qload_type_error_stops_before_classical_code():
    interp, out = make_interp()
    with pytest.raises(LinearityViolation):
        interp.run_source('print("ran")\n--qload cloning')
    assert out.text == ""


def test_generator_module_matches_builtin(session):
    interp, _ = session
    interp.run_source("--load generator\n--load operators")
    for name, dim in [("hadamard", 2), ("identity", 4), ("pauliX", 2)]:
        ours = interp.run_source(f"generate({name}, {dim})")
        native = interp.run_source(f"generateMatrix({name}, {dim})")
        assert np.allclose(np.array(ours, dtype=complex), np.array(native, dtype=complex))


# -- routines and constraints -----------------------------------------------------

def test_routine_is_installed_with_signature(session):
    interp, _ = session
    interp.run_source("--qload deutschTypes")
    routine = interp.globals.lookup("deutschRoutine")
    assert isinstance(routine, Closure) and routine.signature is not None
    assert "deutschRoutine" in interp.signatures


def test_simple_routine_runs():
    interp, out = make_interp()
    state = interp.run_file(PROGRAMS / "simple.qum")
    assert "Probability of state 0 is 0.64" in out.text
    assert "Probability of state 1 is 0.36" in out.text
    assert state in ([1, 0], [0, 1])


def test_deutsch_rejects_three_element_state(session):
    interp, _ = session
    interp.run_source("--qload deutschTypes")
    with pytest.raises(ConstraintViolation) as info:
        interp.run_source("deutschRoutine([1 0 0], [[1 0] [0 1]], [[1 0] [0 1]], [[1 0 0 0] [0 1 0 0] [0 0 1 0] [0 0 0 1]])")
    assert info.value.position == 1
    assert info.value.exit_code == 3


def test_simple_rejects_unnormalized_state(session):
    interp, _ = session
    interp.run_source("--qload simpleTypes")
    with pytest.raises(ConstraintViolation) as info:
        interp.run_source("simpleRoutine([1 1], [[0 1] [1 0]])")
    assert info.value.position == 1


def test_simple_rejects_non_unitary(session):
    interp, _ = session
    interp.run_source("--qload simpleTypes")
    with pytest.raises(ConstraintViolation) as info:
        interp.run_source("simpleRoutine([1 0], [[1 1] [0 1]])")
    assert info.value.position == 2


def test_partial_application_checks_early(session):
    interp, _ = session
    interp.run_source("--qload simpleTypes")
    with pytest.raises(ConstraintViolation):
        interp.run_source("simpleRoutine([1 1 1])")


def test_routine_operator_must_be_a_matrix(session):
    interp, _ = session
    interp.run_source("--qload simpleTypes\n--load operators")
    with pytest.raises(ConstraintViolation) as info:
        interp.run_source("simpleRoutine([1 0], pauliX)")
    assert info.value.position == 2
    assert interp.run_source("simpleRoutine([1 0], generateMatrix(pauliX, 2))") == [0, 1]


def test_grover_rejects_non_integer_count(session):
    interp, _ = session
    interp.run_source("--qload groverTypes")
    eye = np.eye(8, dtype=int).tolist()
    state = [1] + [0] * 7
    with pytest.raises(ConstraintViolation) as info:
        interp.call(interp.globals.lookup("groverRoutine"), state, eye, 1.5)
    assert info.value.position == 3


_malformed_state = st.one_of(
    st.integers(-5, 5),
    st.lists(st.integers(0, 3), min_size=1, max_size=8).filter(
        lambda xs: len(xs) != 2 or sum(x * x for x in xs) != 1),
    st.just("text"),
    st.just([[1, 0], [0, 1]]),
)
_malformed_op = st.one_of(
    st.integers(-5, 5),
    st.lists(st.integers(0, 3), min_size=1, max_size=4),
    st.lists(st.lists(st.integers(-2, 2), min_size=2, max_size=2), min_size=2, max_size=2).filter(
        lambda m: not qcore.is_unitary(np.array(m), 1e-6)),
)


@settings(max_examples=150, deadline=None)
@given(_malformed_state, _malformed_op, st.booleans())
def test_constraint_fuzzing(bad_state, bad_op, break_state):
    interp, _ = make_interp()
    interp.run_source("--qload simpleTypes")
    routine = interp.globals.lookup("simpleRoutine")
    args = (bad_state, [[0, 1], [1, 0]]) if break_state else ([1, 0], bad_op)
    with pytest.raises(ConstraintViolation) as info:
        interp.call(routine, *args)
    assert info.value.position == (1 if break_state else 2)


# -- quantum programs ------------------------------------------------------------

def test_measure_prints_report_and_collapses():
    interp, out = make_interp(seed=7)
    state = interp.run_source("measure([0.6 0.8])")
    assert out.text.splitlines()[:2] == ["Probability of state 0 is 0.36",
                                         "Probability of state 1 is 0.64"]
    assert state in ([1, 0], [0, 1])


def test_tensor_let_splits_product_state():
    value = run("let u ⊗ v = tensor([0 1], [1 0])\n[u v]")
    assert value == [[0, 1], [1, 0]]


def test_oracle_builtin_is_exact_integers():
    U = run("oracle([[1 1] [0 0]])")
    assert U == np.eye(4, dtype=int).tolist()


def test_qft_program_matches_matrix(session):
    interp, _ = session
    interp.run_source("--load qft")
    qft = interp.globals.lookup("qft")
    v = [0.5, 0.5j, -0.5, 0.5]
    ours = np.array(interp.call(qft, v), dtype=complex)
    assert np.allclose(ours, qcore.qft_matrix(4) @ np.array(v), atol=1e-12)


def test_parse_errors_surface_unchanged():
    with pytest.raises(ParseError):
        run("let = 5")
