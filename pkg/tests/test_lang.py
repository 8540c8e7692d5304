import pytest
from hypothesis import given, settings, strategies as st

from refine_enc.lang import (
    SKIP, ArrayIndex, ArrayOf, Assign, Choice, EvalFault, IntLit, IntRange, Length,
    SetOver, SortError, Sum2, Var, eval_expr, head_tail, seq, show_decl, show_stmt,
    subterm_closure,
)
from refine_enc.semantics import StateSpace, denote
from refine_enc.syntax import (
    ParseError, parse_assertion, parse_directive, parse_guard, parse_program, parse_stmt,
    parse_triple,
)
from refine_enc.testkit import Gen, GenConfig

BIT_MASK = """
const a0 : int[0..3] = 1;
const a1 : int[0..3] = 2;
var x : int[0..7];
x := 0;
x := x | (1 << a0);
x := x | (1 << a1);
"""


def test_parse_bit_mask():
    d = parse_program(BIT_MASK)
    assert d.vars == (("x", IntRange(0, 7)),)
    assert d.const_env == {"a0": 1, "a1": 2}
    assert show_stmt(d.body).splitlines() == [
        "x := 0;", "x := x | 1 << a0;", "x := x | 1 << a1;"]


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_print_parse_round_trip(seed, depth):
    d = Gen(GenConfig(seed=seed, max_depth=depth)).program()
    text = show_decl(d)
    d2 = parse_program(text)
    assert show_decl(d2) == text
    # set literals may come back as singleton expressions; the meaning is fixed
    assert denote(d.body, StateSpace(d)) == denote(d2.body, StateSpace(d2))


def test_seq_is_right_nested():
    a, b, c = (Assign("x", IntLit(i)) for i in range(3))
    assert seq(seq(a, b), c) == seq(a, seq(b, c))
    assert seq(a) == a
    assert head_tail(seq(a, b, c)) == (a, seq(b, c))
    assert head_tail(a) == (a, None)


def test_subterm_closure_of_loop_contains_unrolling():
    w = parse_stmt("while (x < 2) { x := x + 1 }")
    cl = subterm_closure(w)
    assert w in cl and SKIP in cl
    assert seq(w.body, w) in cl


@pytest.mark.parametrize("text, msg", [
    ("var x : int[0..3];\ns := 1;", "undeclared"),
    ("var x : int[0..3];\nx := {1};", "set"),
    ("var x : int[0..3];\nvar x : int[0..1];\nskip", "duplicate"),
    ("const c : int[0..1] = 5;\nvar x : int[0..3];\nskip", "not in"),
])
def test_sort_errors(text, msg):
    with pytest.raises(SortError, match=msg):
        parse_program(text)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as ei:
        parse_program("var x : int[0..3];\nx := ;")
    assert (ei.value.line, ei.value.column) == (2, 6)
    assert str(ei.value).count("line 2") == 1


def test_bitwise_or_and_disjunction_lex_apart():
    g = parse_guard("x == 1 || x | 2 == 3")
    assert g.fn({"x": 1}) and g.fn({"x": 1 | 0}) and not g.fn({"x": 0})
    assert g.fn({"x": 3})


def test_eval_faults():
    arr = Var("a")
    with pytest.raises(EvalFault):
        eval_expr(ArrayIndex(arr, IntLit(2)), {"a": (0, 1)})
    assert eval_expr(Length(arr), {"a": (0, 1)}) == 2
    assert eval_expr(Sum2(Var("s")), {"s": frozenset({0, 2})}) == 5


def test_sorts_enumerate_values():
    assert IntRange(1, 3).values() == (1, 2, 3)
    assert len(SetOver((0, 1, 2)).values()) == 8
    assert ArrayOf(2, IntRange(0, 1)).card == 4


def test_choice_and_loop_statements_parse():
    c = parse_stmt("choice({ x := 1 }, x := 2); while (x < 3) { x := x + 1 }")
    first, rest = head_tail(c)
    assert isinstance(first, Choice)
    assert rest.cond.fn({"x": 2})


def test_directives():
    assert parse_directive("exec assign") == ("rule", "assign")
    assert parse_directive("exintro a b") == ("exintro", ("a", "b"))
    assert parse_directive("exec skip") == ("skip",)
    kind, a = parse_directive("assert x == 0 && Exec[ s == {} ; skip ]")
    assert kind == "assert"
    with pytest.raises(ParseError):
        parse_directive("exec frobnicate")


def test_assertion_forms():
    a = parse_assertion("exists l : set{0..1}. L[x == sum2(l)] && H[s == l] && prog[skip]")
    assert type(a).__name__ == "Exists"


def test_triple_file_sections():
    spec = parse_triple("""
    low { var x : int[0..2]; x := nondet(0, 1) }
    high { var y : int[0..2]; y := nondet(0, 2) }
    pre: prog[ y := nondet(0, 2) ]
    post: exists n : int[0..1]. L[x == n] && H[y == n] && prog[skip]
    """)
    assert spec.low.vars == (("x", IntRange(0, 2)),)
    assert spec.high.vars == (("y", IntRange(0, 2)),)
