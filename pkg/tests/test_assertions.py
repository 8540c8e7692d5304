import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from refine_enc.assertions import (
    MissingX, NotDecomposable, compose_bin, decompose, enc, enc_syntactic, entails, holds,
    link_bin_unary, rel_sem, sat_at, sat_unary, show_assertion,
)
from refine_enc.lang import SKIP
from refine_enc.semantics import StateSpace, XFamily
from refine_enc.syntax import parse_assertion, parse_program, parse_triple
from refine_enc.testkit import Gen, GenConfig, gen_rel_triple, run_property

BITMASK = """
const a0 : int[0..3] = 1;
const a1 : int[0..3] = 2;
proc set_union { s := {}; s := s ∪ {a0}; s := s ∪ {a1}; }
low { var x : int[0..7]; x := 0; x := x | (1 << a0); x := x | (1 << a1) }
high { var s : set{0..3}; set_union }
pre: prog[ set_union ]
post: exists l : set{0..3}. L[ x == sum2(l) ] && H[ s == l ] && prog[ skip ]
"""


def spaces(spec):
    return StateSpace(spec.low), StateSpace(spec.high)


def test_bitmask_encoding_syntax():
    spec = parse_triple(BITMASK)
    low, high = spaces(spec)
    post = enc_syntactic(decompose(spec.post, low, high))
    assert show_assertion(post) == "exists l : set{0..3}. x == sum2(l) && Exec[ s == l ; skip ]"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_enc_matches_direct_evaluation(seed):
    g = Gen(GenConfig(seed=seed, max_states=6))
    t = gen_rel_triple(g)
    low, high = StateSpace(t.low), StateSpace(t.high)
    X = g.subset(len(high))
    Xt = {high.states[i] for i in X}
    # generated pre/post pin exactly these two programs
    progs = [t.high.body, SKIP]
    for a in (t.pre, t.post):
        got = {low.states[i] for i in enc(rel_sem(a, low, high), X)}
        assert got == oracles.enc(a, t.low, t.high, progs, Xt)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_syntactic_enc_denotes_semantic_enc(seed):
    g = Gen(GenConfig(seed=seed))
    t = gen_rel_triple(g)
    low, high = StateSpace(t.low), StateSpace(t.high)
    fam = XFamily.all(high)
    for a in (t.pre, t.post):
        syn = enc_syntactic(decompose(a, low, high))
        sem = rel_sem(a, low, high)
        for k in range(0, len(fam), max(1, len(fam) // 16)):
            X = fam.subset(k)
            assert sat_at(syn, X, low, high) == enc(sem, X)


def test_transformation_suite():
    recs = list(run_property("thm16", seed=1, count=150))
    assert all(r["ok"] for r in recs)
    assert {k for r in recs for k in r["checks"]} == {"a", "b", "c", "d", "syn"}


def test_transformation_suite_detects_injected_bug():
    recs = list(run_property("thm16", seed=1, count=60, inject_bug=True))
    bad = [r for r in recs if not r["ok"]]
    assert bad and all(not r["checks"]["d"] for r in bad)
    assert "P1:" in bad[0]["replay"]


def test_mixed_predicate_is_not_decomposable():
    spec = parse_triple(BITMASK)
    low, high = spaces(spec)
    a = parse_assertion("exists l : set{0..3}. x == sum2(s) && prog[skip]")
    with pytest.raises(NotDecomposable):
        decompose(a, low, high)
    with pytest.raises(NotDecomposable):
        decompose(parse_assertion("L[x == 0]"), low, high)


def test_exec_needs_x():
    low = StateSpace(parse_program("var x : int[0..1]; skip"))
    high = StateSpace(parse_program("var s : int[0..1]; skip"))
    a = parse_assertion("x == 0 && Exec[ s == 0 ; s := 1 ]")
    with pytest.raises(MissingX):
        holds(a, 0, None, low, high)
    assert holds(a, 0, {1}, low, high)
    assert not holds(a, 0, {0}, low, high)
    assert not holds(a, 1, {1}, low, high)


def test_exec_reads_wlp():
    low = StateSpace(parse_program("var x : int[0..1]; skip"))
    high = StateSpace(parse_program("var s : int[0..2]; skip"))
    a = parse_assertion("Exec[ s == 0 ; s := nondet(1, 2) ]")
    # the nondet program must land inside X on every run
    assert sat_at(a, {1}, low, high) == frozenset()
    assert sat_at(a, {1, 2}, low, high) == frozenset({0, 1})


def test_entailment_modes():
    low = StateSpace(parse_program("var x : int[0..3]; skip"))
    high = StateSpace(parse_program("var s : int[0..1]; skip"))
    a1 = parse_assertion("x == 1 && Exec[ s == 0 ; s := 1 ]")
    a2 = parse_assertion("x <= 1 && Exec[ s == 0 || s == 1 ; s := 1 ]")
    assert entails(a1, a2, low, high)
    assert not entails(a2, a1, low, high)
    assert entails(a1, a2, low, high, mode="structural")
    assert entails(parse_assertion("x == 1"), parse_assertion("x < 2"), low)


def test_linking_and_composition():
    # P relates low x to high s when x == s; linking picks the preimage
    low = StateSpace(parse_program("var x : int[0..2]; skip"))
    P = np.eye(3, dtype=bool)
    assert link_bin_unary(P, {2}) == frozenset({2})
    shift = np.zeros((3, 3), dtype=bool)
    shift[0, 1] = shift[1, 2] = True
    assert np.array_equal(compose_bin(shift, shift), np.array(
        [[0, 0, 1], [0, 0, 0], [0, 0, 0]], dtype=bool))
    with pytest.raises(ValueError):
        compose_bin(P, np.zeros((2, 2), dtype=bool))
    assert sat_unary(parse_assertion("x < 2"), low) == frozenset({0, 1})
