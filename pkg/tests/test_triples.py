import collections

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from refine_enc.assertions import bin_sem, sat_unary
from refine_enc.lang import SKIP, IntRange, Not, Eq, SetLit, Var, TRUE
from refine_enc.semantics import StateSpace
from refine_enc.syntax import parse_assertion, parse_guard, parse_program, parse_triple
from refine_enc.triples import (
    PremiseFails, Refinement, RelTriple, SpaceMismatch, StdTriple, StoreShape,
    check_encoding_equiv, rel_valid, std_valid, std_valid_all_x, std_valid_sets, vc_fc,
    vc_refine, vc_store_rule,
)
from refine_enc.testkit import Gen, GenConfig, gen_rel_triple, run_property

NONDET = """
low { var x : int[0..2]; x := nondet(0, 1) }
high { var y : int[0..2]; y := nondet(0, 2) }
pre: prog[ y := nondet(0, 2) ]
post: exists n : int[0..1]. L[ x == n ] && H[ y == n ] && prog[ skip ]
"""

NONDET_BAD = """
low { var x : int[0..2]; x := nondet(0, 2) }
high { var y : int[0..2]; y := nondet(0, 1) }
pre: prog[ y := nondet(0, 1) ]
post: exists n : int[0..2]. L[ x == n ] && H[ y == n ] && prog[ skip ]
"""

SET_UNION = "s := {}; s := s ∪ {a0}; s := s ∪ {a1}"
BITMASK_LOW = """
const a0 : int[0..3] = 1;
const a1 : int[0..3] = 2;
var x : int[0..7];
x := 0; x := x | (1 << a0); x := x | (1 << a1);
"""
BITMASK_HIGH = f"""
const a0 : int[0..3] = 1;
const a1 : int[0..3] = 2;
var s : set{{0..3}};
{SET_UNION};
"""


def explicit(a, low_decl, high_decl, progs):
    out = []
    for l in oracles.all_envs(low_decl):
        for h in oracles.all_envs(high_decl):
            le, he = {**low_decl.const_env, **l}, {**high_decl.const_env, **h}
            for c in progs:
                if oracles.assertion_holds(a, le, he, c):
                    out.append((tuple(l.values()), tuple(h.values()), c))
    return out


def test_nondet_example_is_valid():
    t = RelTriple.from_spec(parse_triple(NONDET))
    assert rel_valid(t)
    rep = check_encoding_equiv(t)
    assert (rep.relational, rep.encoded_all_x, rep.agree) == (True, True, True)
    assert rep.mode == "exhaustive" and rep.x_checked == 8


def test_nondet_negative_control():
    t = RelTriple.from_spec(parse_triple(NONDET_BAD))
    v = rel_valid(t)
    assert not v and "{x=2}" in v.counterexample
    rep = check_encoding_equiv(t)
    assert not rep.relational and not rep.encoded_all_x and rep.agree
    assert "X = " in rep.counterexample


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_rel_valid_matches_definition(seed):
    g = Gen(GenConfig(seed=seed, max_states=6))
    t = gen_rel_triple(g, perturb=0.5)
    pre = explicit(t.pre, t.low, t.high, [t.high.body])
    post = explicit(t.post, t.low, t.high, [SKIP])
    assert bool(rel_valid(t.rel())) == oracles.rel_valid(pre, t.low, t.low.body, post, t.high)


def test_encoding_equivalence_suite():
    recs = list(run_property("thm4", seed=5, count=150))
    assert all(r["ok"] for r in recs)
    verdicts = collections.Counter(r["relational"] for r in recs)
    # both outcomes must be well represented for the agreement to mean much
    assert min(verdicts.values()) >= 30


def test_encoding_suite_detects_dropped_errors():
    recs = list(run_property("thm4", seed=5, count=300, inject_bug=True))
    assert any(not r["ok"] for r in recs)


def test_sampled_mode_when_cap_is_small():
    t = RelTriple.from_spec(parse_triple(NONDET))
    rep = check_encoding_equiv(t, cap=2, samples=32)
    assert rep.mode == "sampled" and rep.agree


def test_std_validity():
    low = StateSpace(parse_program("var x : int[0..3]; skip"))
    high = StateSpace(parse_program("var s : int[0..1]; skip"))
    c = parse_guard("x < 3")
    t = StdTriple(parse_assertion("x < 3"), parse_program("var x : int[0..3]; x := x + 1").body,
                  parse_assertion("x > 0"))
    assert std_valid(t, low)
    assert not std_valid(StdTriple(parse_assertion("true"), t.stmt, t.post), low)
    enc_t = StdTriple(parse_assertion("x == 0 && Exec[ s == 0 ; s := 1 ]"), t.stmt,
                      parse_assertion("x == 1 && Exec[ s == 1 ; skip ]"))
    assert std_valid_all_x(enc_t, low, high)
    assert std_valid_sets(low.sat(c), t.stmt, {1, 2, 3}, low)


def bitmask_spaces():
    return (StateSpace(parse_program(BITMASK_LOW)), StateSpace(parse_program(BITMASK_HIGH)))


def test_example_chain_with_store_rule():
    """{true} set_union {s nonempty} composed with the bit-mask refinement
    yields {true} bit_mask {x > 0}."""
    low, high = bitmask_spaces()
    l_sort = high.decl.var_sorts["s"]
    shape = StoreShape(("u", IntRange(0, 0)), parse_assertion("true"), parse_assertion("true"),
                       ("l", l_sort), parse_assertion("x == sum2(l)"),
                       parse_assertion("s == l"), low.decl.body, high.decl.body)
    res = vc_store_rule(shape, TRUE, Not(Eq(Var("l"), SetLit(frozenset()))), low, high)
    assert res.verdict.valid
    assert res.pre == frozenset(range(len(low)))
    # consequence into x > 0
    assert res.post <= sat_unary(parse_assertion("x > 0"), low)
    assert std_valid_sets(res.pre, low.decl.body, sat_unary(parse_assertion("x > 0"), low), low)


def test_example_chain_with_linking():
    low, high = bitmask_spaces()
    pre = np.ones((len(low), len(high)), dtype=bool)
    post = np.zeros_like(pre)
    for l in high.decl.var_sorts["s"].values():
        post |= bin_sem(parse_assertion("x == sum2(l) && s == l"), low, high, {"l": l})
    ref = Refinement(pre, low.decl.body, high.decl.body, post, low, high)
    nonempty = frozenset(i for i, env in enumerate(high.envs) if env["s"])
    res = vc_fc(ref, frozenset(range(len(high))), nonempty)
    assert res.verdict.valid
    assert res.post <= sat_unary(parse_assertion("x > 0"), low)
    assert {low.envs[i]["x"] for i in res.post} == set(range(1, 8))
    with pytest.raises(PremiseFails):
        vc_fc(ref, frozenset(range(len(high))), frozenset())


def test_refinement_chain_mismatch():
    low, high = bitmask_spaces()
    pre = np.ones((len(low), len(high)), dtype=bool)
    r = Refinement(pre, low.decl.body, high.decl.body, pre, low, high)
    with pytest.raises(SpaceMismatch):
        vc_refine(r, r)


def test_vertical_composition_suites():
    recs = list(run_property("vc", seed=2, count=300))
    assert all(r["ok"] for r in recs)
    acc = collections.Counter(r["rule"] for r in recs if r["accepted"])
    assert all(acc[k] >= 15 for k in ("fc", "refine", "store"))


def test_vertical_composition_injection():
    recs = list(run_property("vc", seed=2, count=300, inject_bug=True))
    broken = {r["rule"] for r in recs if not r["ok"]}
    assert broken == {"fc", "refine", "store"}
