"""Seeded generators for programs, assertions and triples over tiny state
spaces, and the property suites that the fuzz command runs."""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .assertions import (
    Exists, HighA, LowA, Pred, ProgA, a_and, a_or, as_mask, decompose, enc_matrix,
    enc_syntactic, rel_sem, sat_matrix, sat_unary, show_assertion,
)
from .execpred import (
    ExecAssign, ExecAssume, ExecChoiceL, ExecChoiceR, ExecNondet, ExecPred,
    ExecPure, ExecSeq, ExecWhileEnd, ExecWhileUnroll, HighAssert, HighFocus,
    RuleError, apply_rule,
)
from .lang import (
    FALSE, SKIP, TRUE, Add, And, Assert, Assign, Choice, Eq, IntLit, IntRange,
    Le, Lt, Member, NondetAssign, Not, Or, ProgramDecl, SetLit, SetOver, SetSingleton,
    SetUnion, Stmt, Sub, Test, Var, While, conj, seq, show_decl, show_stmt,
)
from .semantics import (
    DEFAULT_X_CAP, StateSpace, XFamily, check_decomposition, denote,
)
from .triples import (
    InhabitantFails, PremiseFails, Refinement, RelTriple, StoreShape,
    check_encoding_equiv, std_valid_sets, vc_fc, vc_refine, vc_store_rule,
)

SORT_POOL = (IntRange(0, 1), IntRange(0, 2), IntRange(0, 3), SetOver((0, 1)))

WEIGHTS = {"skip": 1, "assign": 4, "nondet": 2, "test": 2, "assert": 1,
           "choice": 2, "seq": 3, "while": 1}


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_depth: int = 3
    max_vars: int = 2
    sorts: tuple = SORT_POOL
    weights: tuple = tuple(sorted(WEIGHTS.items()))
    allow_assert_in_loops: bool = False
    max_states: int = 12


class Gen:
    """One generator stream; the same config always yields the same items."""

    def __init__(self, cfg: GenConfig = GenConfig()):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)

    # -- declarations
    def decl(self, prefix: str = "x", body: Stmt = SKIP, limit: int | None = None) -> ProgramDecl:
        limit = limit or self.cfg.max_states
        n = self.rng.randint(1, self.cfg.max_vars)
        vars_, size = [], 1
        for k in range(n):
            fits = [s for s in self.cfg.sorts if size * s.card <= limit]
            if not fits:
                break
            s = self.rng.choice(fits)
            vars_.append((f"{prefix}{k}", s))
            size *= s.card
        return ProgramDecl(tuple(vars_), (), body)

    # -- expressions and guards
    def _lit(self, s):
        if isinstance(s, SetOver):
            return SetLit(self.rng.choice(s.values()))
        return IntLit(self.rng.choice(s.values()))

    def expr(self, decl: ProgramDecl, target: str):
        s = decl.var_sorts[target]
        same = [v for v, t in decl.vars if t.kind == s.kind]
        r = self.rng.random()
        if isinstance(s, SetOver):
            if r < 0.3:
                return self._lit(s)
            v = Var(self.rng.choice(same))
            return SetUnion(v, SetSingleton(IntLit(self.rng.choice(s.universe))))
        if r < 0.35:
            return self._lit(s)
        v = Var(self.rng.choice(same))
        if r < 0.55:
            return v
        op = Add if self.rng.random() < 0.6 else Sub
        return op(v, IntLit(1))

    def guard(self, decl: ProgramDecl, depth: int = 1):
        r = self.rng.random()
        if depth > 0 and r < 0.15:
            return Not(self.guard(decl, depth - 1))
        if depth > 0 and r < 0.25:
            op = And if self.rng.random() < 0.5 else Or
            return op(self.guard(decl, depth - 1), self.guard(decl, depth - 1))
        name, s = self.rng.choice(decl.vars)
        if isinstance(s, SetOver):
            return Member(IntLit(self.rng.choice(s.universe)), Var(name))
        op = self.rng.choice((Eq, Lt, Le))
        return op(Var(name), self._lit(s)) if self.rng.random() < 0.7 \
            else op(self._lit(s), Var(name))

    # -- statements
    def stmt(self, decl: ProgramDecl, depth: int | None = None, in_loop=False) -> Stmt:
        depth = self.cfg.max_depth if depth is None else depth
        if depth <= 0:
            return SKIP
        kinds = dict(self.cfg.weights)
        if in_loop and not self.cfg.allow_assert_in_loops:
            kinds.pop("assert", None)
        ints = [v for v, s in decl.vars if isinstance(s, IntRange)]
        if depth < 2:
            for k in ("choice", "seq", "while"):
                kinds.pop(k, None)
        if not ints:
            kinds.pop("nondet", None)
            kinds.pop("while", None)
        names, ws = zip(*sorted(kinds.items()))
        k = self.rng.choices(names, ws)[0]
        sub = lambda: self.stmt(decl, depth - 1, in_loop)
        match k:
            case "skip":
                return SKIP
            case "assign":
                x = self.rng.choice(decl.vars)[0]
                return Assign(x, self.expr(decl, x))
            case "nondet":
                x = self.rng.choice(ints)
                s = decl.var_sorts[x]
                lo = self.rng.randint(s.lo, s.hi)
                hi = self.rng.randint(lo, s.hi + (1 if self.rng.random() < 0.15 else 0))
                return NondetAssign(x, IntLit(lo), IntLit(hi))
            case "test":
                return Test(self.guard(decl))
            case "assert":
                return Assert(self.guard(decl))
            case "choice":
                return Choice(sub(), sub())
            case "seq":
                return seq(sub(), sub())
            case "while":
                # a bounded counter keeps the fixpoint short
                x = self.rng.choice(ints)
                bound = IntLit(decl.var_sorts[x].hi)
                body = self.stmt(decl, depth - 1, True)
                return While(Lt(Var(x), bound), seq(body, Assign(x, Add(Var(x), IntLit(1)))))
        raise AssertionError(k)

    def program(self, prefix="x", limit=None) -> ProgramDecl:
        d = self.decl(prefix, limit=limit)
        return ProgramDecl(d.vars, (), self.stmt(d))

    def subset(self, n: int, p: float = 0.5) -> frozenset:
        return frozenset(i for i in range(n) if self.rng.random() < p)


def gen_stmt(cfg: GenConfig, decl: ProgramDecl | None = None) -> Stmt:
    g = Gen(cfg)
    decl = decl or g.decl()
    return g.stmt(decl)


def rename(node, names: dict):
    """Rename program variables in a statement or expression."""
    match node:
        case Var(n):
            return Var(names.get(n, n))
        case Assign(x, e):
            return Assign(names.get(x, x), rename(e, names))
        case NondetAssign(x, lo, hi):
            return NondetAssign(names.get(x, x), rename(lo, names), rename(hi, names))
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        return dataclasses.replace(node, **{
            f.name: rename(getattr(node, f.name), names)
            for f in dataclasses.fields(node)
            if dataclasses.is_dataclass(getattr(node, f.name))})
    return node


# ---------------------------------------------------------------- assertions from state sets


def state_pred(space: StateSpace, i: int):
    parts = []
    for n, s, v in zip(space.names, space.sorts, space.states[i]):
        parts.append(Eq(Var(n), SetLit(v) if isinstance(v, frozenset) else IntLit(v)))
    return conj(*parts)


def state_set_pred(space: StateSpace, states) -> Pred:
    states = sorted(states)
    if not states:
        return Pred(FALSE)
    if len(states) == len(space):
        return Pred(TRUE)
    out = state_pred(space, states[0])
    for i in states[1:]:
        out = Or(out, state_pred(space, i))
    return Pred(out)


@dataclass
class GeneratedTriple:
    low: ProgramDecl
    high: ProgramDecl
    pre: object
    post: object
    perturbed: bool = False

    def text(self) -> str:
        def block(kw, d):
            inner = [f"  var {n} : {s};" for n, s in d.vars]
            inner += ["  " + ln for ln in show_stmt(d.body).splitlines()]
            return f"{kw} {{\n" + "\n".join(inner) + "\n}\n"
        return (block("low", self.low) + block("high", self.high)
                + f"pre: {show_assertion(self.pre)}\n"
                + f"post: {show_assertion(self.post)}\n")

    def rel(self) -> RelTriple:
        low, high = StateSpace(self.low), StateSpace(self.high)
        return RelTriple(self.pre, self.low.body, self.post, low, high)


def gen_rel_triple(g: Gen, perturb: float = 0.25) -> GeneratedTriple:
    """Decomposed pre/post; the post is read off sampled joint executions, so
    unperturbed instances tend to be valid."""
    low, high = g.program("x"), g.program("y")
    sl, sh = StateSpace(low), StateSpace(high)
    ch = high.body
    dl, dh = denote(low.body, sl), denote(ch, sh)
    pre_parts, post_rows = [], {}
    for _ in range(g.rng.randint(1, 2)):
        L = g.subset(len(sl), 0.4) or frozenset({g.rng.randrange(len(sl))})
        H = g.subset(len(sh), 0.4) or frozenset({g.rng.randrange(len(sh))})
        pre_parts.append(a_and(LowA(state_set_pred(sl, L)), HighA(state_set_pred(sh, H)),
                               ProgA(ch)))
        for l1 in L:
            for h1 in H:
                t = sorted(dh.succ[h1])
                for l2 in dl.succ[l1]:
                    if t:
                        post_rows.setdefault(l2, set()).add(g.rng.choice(t))
    perturbed = g.rng.random() < perturb
    if perturbed and post_rows:
        l2 = g.rng.choice(sorted(post_rows))
        if g.rng.random() < 0.5:
            del post_rows[l2]
        else:
            post_rows[l2] = set(g.subset(len(sh), 0.3))
    post = a_or(*(a_and(LowA(state_set_pred(sl, {l2})), HighA(state_set_pred(sh, hs)),
                        ProgA(SKIP))
                  for l2, hs in sorted(post_rows.items()) if hs))
    return GeneratedTriple(low, high, a_or(*pre_parts), post, perturbed)


# ---------------------------------------------------------------- decomposition pairs


@dataclass
class ConfigPair:
    decl: ProgramDecl
    i1: int
    c1: Stmt
    i2: int
    c2: Stmt


def gen_config_pair(g: Gen) -> ConfigPair:
    decl = g.decl("y", limit=10)
    sp = StateSpace(decl)
    c1 = g.stmt(decl)
    i1 = g.rng.randrange(len(sp))
    r = g.rng.random()
    d1 = denote(c1, sp)
    if r < 0.25 and d1.succ[i1]:
        # jump to an outcome: refines by construction
        return ConfigPair(decl, i1, c1, g.rng.choice(sorted(d1.succ[i1])), SKIP)
    if r < 0.45 and isinstance(c1, Choice):
        return ConfigPair(decl, i1, c1, i1, g.rng.choice((c1.left, c1.right)))
    if r < 0.6:
        return ConfigPair(decl, i1, c1, i1, seq(Test(g.guard(decl)), c1))
    return ConfigPair(decl, i1, c1, g.rng.randrange(len(sp)), g.stmt(decl))


# ---------------------------------------------------------------- rule applications

RULE_KINDS = ("assign", "nondet", "choice-left", "choice-right", "assume",
              "while-end", "while-unroll", "assert", "seq", "pure", "focus")


@dataclass
class RuleCase:
    space: StateSpace
    pred: ExecPred
    rule: object


def gen_rule_case(g: Gen, kind: str) -> RuleCase:
    decl = g.decl("y", limit=12)
    sp = StateSpace(decl)
    n = len(sp)
    states = g.subset(n, 0.4) or frozenset({g.rng.randrange(n)})
    small = lambda: g.stmt(decl, 2)
    x0 = decl.vars[0][0]
    tail = g.stmt(decl, 2)
    if tail == SKIP:
        tail = Assign(x0, Var(x0))
    match kind:
        case "assign":
            x = g.rng.choice(decl.vars)[0]
            prog, rule = Assign(x, g.expr(decl, x)), ExecAssign()
        case "nondet":
            ints = [v for v, s in decl.vars if isinstance(s, IntRange)]
            if not ints:
                return gen_rule_case(g, kind)
            x = g.rng.choice(ints)
            s = decl.var_sorts[x]
            lo = g.rng.randint(s.lo, s.hi)
            hi = g.rng.randint(lo, s.hi)
            prog, rule = NondetAssign(x, IntLit(lo), IntLit(hi)), ExecNondet(g.rng.randint(lo, hi))
        case "choice-left" | "choice-right":
            prog = Choice(small(), small())
            rule = ExecChoiceL() if kind == "choice-left" else ExecChoiceR()
        case "assume" | "assert":
            b = g.guard(decl)
            prog = Test(b) if kind == "assume" else Assert(b)
            rule = ExecAssume() if kind == "assume" else HighAssert()
            if kind == "assume" and g.rng.random() < 0.7:
                states = (states & sp.sat(b)) or sp.sat(b)
        case "while-end" | "while-unroll":
            prog = g.stmt(decl, 3)
            if not isinstance(prog, While):
                b = g.guard(decl)
                prog = While(b, small())
            sat = sp.sat(prog.cond)
            want = sat if kind == "while-unroll" else frozenset(range(n)) - sat
            if g.rng.random() < 0.7:
                states = (states & want) or want
            rule = ExecWhileUnroll() if kind == "while-unroll" else ExecWhileEnd()
        case "seq":
            h = g.rng.choice(("assign", "choice", "assume"))
            if h == "assign":
                x = g.rng.choice(decl.vars)[0]
                head, chain = Assign(x, g.expr(decl, x)), (ExecAssign(),)
            elif h == "choice":
                x = g.rng.choice(decl.vars)[0]
                a1 = Assign(x, g.expr(decl, x))
                head, chain = Choice(a1, small()), (ExecChoiceL(), ExecAssign())
            else:
                b = g.guard(decl)
                head, chain = Test(b), (ExecAssume(),)
                states = (states & sp.sat(b)) or sp.sat(b)
            prog, rule = seq(head, tail), ExecSeq(chain)
        case "pure":
            c = small()
            r = g.rng.random()
            if r < 0.35:
                a, b = small(), small()
                c, rule = Choice(a, b), ExecPure(a, (ExecChoiceL(),))
            elif r < 0.7:
                rule = ExecPure(seq(Test(g.guard(decl)), c), None)
            else:
                rule = ExecPure(small(), None)
            prog = c
        case "focus":
            head = small()
            d = denote(head, sp)
            q = set(g.subset(n, 0.2))
            for i in states:
                if d.succ[i] and g.rng.random() < 0.85:
                    q.add(g.rng.choice(sorted(d.succ[i])))
            prog = seq(head, tail) if g.rng.random() < 0.7 else head
            rule = HighFocus(frozenset(q))
        case _:
            raise ValueError(f"unknown rule kind {kind}")
    return RuleCase(sp, ExecPred(frozenset(states), prog), rule)


def exec_matrix(p: ExecPred, fam: XFamily) -> np.ndarray:
    w = fam.wlp(p.prog)
    if not p.states:
        return np.zeros(len(fam), dtype=bool)
    return w[sorted(p.states)].any(axis=0)


# ---------------------------------------------------------------- property suites


def _thm4(g: Gen, k: int, cap: int, inject_bug: bool) -> dict:
    t = gen_rel_triple(g)
    rt = t.rel()
    rep = check_encoding_equiv(rt, cap=cap, inject_bug=inject_bug)
    rec = {"property": "thm4", "case": k, "ok": rep.agree, **rep.record(),
           "perturbed": t.perturbed, "lowStates": len(rt.low), "highStates": len(rt.high)}
    if not rep.agree:
        rec["replay"] = t.text()
    return rec


def _decomp(g: Gen, k: int, cap: int, inject_bug: bool) -> dict:
    p = gen_config_pair(g)
    sp = StateSpace(p.decl)
    r = check_decomposition(p.i1, p.c1, p.i2, p.c2, sp, cap)
    ok = r.agree
    if inject_bug:
        ok = check_decomposition(p.i1, p.c1, p.i2, p.c2, sp, cap, errors=False).wlp_implication \
            == (r.source_errs or r.refines)
    rec = {"property": "decomp", "case": k, "ok": bool(ok), "refines": r.refines,
           "wlpImplication": r.wlp_implication, "sourceErrs": r.source_errs,
           "witnessFalsifies": r.witness_falsifies, "states": len(sp)}
    if not ok:
        rec["replay"] = (show_decl(ProgramDecl(p.decl.vars, (), p.c1))
                         + f"// from {sp.show(p.i1)} against {sp.show(p.i2)}:\n"
                         + show_stmt(p.c2) + "\n")
    return rec


def _exec_rules(g: Gen, k: int, cap: int, inject_bug: bool) -> dict:
    kind = RULE_KINDS[k % len(RULE_KINDS)]
    case = gen_rule_case(g, kind)
    try:
        q = apply_rule(case.pred, case.rule, case.space)
    except RuleError as e:
        return {"property": "exec-rules", "case": k, "rule": kind, "ok": True,
                "accepted": False, "reason": type(e).__name__}
    if inject_bug and q.states:
        q = ExecPred(q.states - {min(q.states)}, q.prog)
    fam = XFamily.all(case.space, cap)
    old, new = exec_matrix(case.pred, fam), exec_matrix(q, fam)
    bad = np.flatnonzero(old & ~new)
    rec = {"property": "exec-rules", "case": k, "rule": kind, "ok": not len(bad),
           "accepted": True}
    if len(bad):
        x = fam.subset(int(bad[0]))
        rec["replay"] = (f"{case.pred.show(case.space)} --{kind}--> {q.show(case.space)}\n"
                         f"X = {{{', '.join(case.space.show(i) for i in sorted(x))}}}\n")
    return rec


def _joint_post(g: Gen, P: np.ndarray, cl, ch, sl, sh) -> np.ndarray:
    dl, dh = denote(cl, sl), denote(ch, sh)
    Q = np.zeros((len(sl), len(sh)), dtype=bool)
    for l1, h1 in zip(*np.nonzero(P)):
        t = sorted(dh.succ[int(h1)])
        for l2 in dl.succ[int(l1)]:
            if t:
                Q[l2, g.rng.choice(t)] = True
    return Q


def _vc(g: Gen, k: int, cap: int, inject_bug: bool) -> dict:
    which = ("fc", "refine", "store")[k % 3]
    rec = {"property": "vc", "case": k, "rule": which, "ok": True, "accepted": False}
    try:
        match which:
            case "fc":
                low, high = g.program("x"), g.program("y")
                sl, sh = StateSpace(low), StateSpace(high)
                P = np.array([[g.rng.random() < 0.3 for _ in range(len(sh))]
                              for _ in range(len(sl))], dtype=bool).reshape(len(sl), len(sh))
                Q = _joint_post(g, P, low.body, high.body, sl, sh)
                ref = Refinement(P, low.body, high.body, Q, sl, sh)
                dh = denote(high.body, sh)
                hpre = frozenset(i for i in g.subset(len(sh), 0.5) if i not in dh.err)
                hpost = frozenset().union(*(dh.succ[i] for i in hpre))
                res = vc_fc(ref, hpre, hpost)
                ok = res.verdict.valid
                if inject_bug:
                    ok = std_valid_sets(res.pre, low.body, frozenset(), sl).valid
                rec.update(accepted=True, ok=ok)
            case "refine":
                mid = g.program("m")
                low, high = g.program("x"), g.program("y")
                sl, sm, sh = StateSpace(low), StateSpace(mid), StateSpace(high)
                P1 = np.array([[g.rng.random() < 0.3 for _ in range(len(sm))]
                               for _ in range(len(sl))], dtype=bool).reshape(len(sl), len(sm))
                P2 = np.array([[g.rng.random() < 0.3 for _ in range(len(sh))]
                               for _ in range(len(sm))], dtype=bool).reshape(len(sm), len(sh))
                r1 = Refinement(P1, low.body, mid.body,
                                _joint_post(g, P1, low.body, mid.body, sl, sm), sl, sm)
                r2 = Refinement(P2, mid.body, high.body,
                                _joint_post(g, P2, mid.body, high.body, sm, sh), sm, sh)
                out = vc_refine(r1, r2)
                if inject_bug:
                    out.post[:] = False
                rec.update(accepted=True, ok=out.valid().valid)
            case "store":
                # one variable per side; the low program is a renamed copy of
                # (a branch of) the high one, so the premise usually holds
                hd = g.decl("y", limit=4)
                hd = ProgramDecl(hd.vars[:1], (), SKIP)
                (yh, th), = hd.vars
                if th.kind != "int":
                    return rec
                c = g.stmt(hd)
                ch = Choice(c, g.stmt(hd)) if g.rng.random() < 0.5 else c
                xl = "x0"
                low = ProgramDecl(((xl, th),), (), rename(c, {yh: xl}))
                high = ProgramDecl(hd.vars, (), ch)
                sl, sh = StateSpace(low), StateSpace(high)
                dom = IntRange(0, 3)
                shape = StoreShape(("u", dom), Pred(Eq(Var(xl), Var("u"))),
                                   Pred(Eq(Var(yh), Var("u"))),
                                   ("v", dom), Pred(Eq(Var(xl), Var("v"))),
                                   Pred(Eq(Var(yh), Var("v"))), low.body, high.body)
                b1 = Le(Var("u"), IntLit(g.rng.randint(0, 3)))
                b2 = Le(IntLit(g.rng.randint(0, 2)), Var("v"))
                res = vc_store_rule(shape, b1, b2, sl, sh)
                ok = res.verdict.valid
                if inject_bug:
                    ok = std_valid_sets(frozenset(range(len(sl))), low.body,
                                        res.post, sl).valid
                rec.update(accepted=True, ok=ok)
    except (PremiseFails, InhabitantFails):
        pass
    return rec


def _bound_pred(g: Gen, space: StateSpace, a: str):
    """A predicate over one side that may mention the logical variable a."""
    name, srt = g.rng.choice(list(zip(space.names, space.sorts)))
    r = g.rng.random()
    if r < 0.35:
        return state_set_pred(space, g.subset(len(space), 0.5))
    if isinstance(srt, SetOver):
        return Pred(Member(Var(a), Var(name)))
    op = g.rng.choice((Eq, Le, Lt))
    return Pred(op(Var(name), Var(a)) if r < 0.7 else op(Var(a), Var(name)))


_BINDER = ("a", IntRange(0, 2))


def _thm16_disjunct(g: Gen, sl, sh, progs):
    a, dom = _BINDER
    pure = Le(Var(a), IntLit(g.rng.randint(0, 2))) if g.rng.random() < 0.6 else TRUE
    body = a_and(LowA(_bound_pred(g, sl, a)), HighA(_bound_pred(g, sh, a)),
                 ProgA(g.rng.choice(progs)))
    return pure, body, Exists(a, dom, a_and(Pred(pure), body))


def _thm16(g: Gen, k: int, cap: int, inject_bug: bool) -> dict:
    low, high = g.decl("x", limit=8), g.program("y", limit=8)
    sl, sh = StateSpace(low), StateSpace(high)
    progs = [high.body, SKIP, g.stmt(high)]
    fam = XFamily.all(sh, cap)
    E = lambda a, env={}: enc_matrix(rel_sem(a, sl, sh, env=env), fam)
    a, dom = _BINDER
    pure, body, P1 = _thm16_disjunct(g, sl, sh, progs)
    _, _, P2 = _thm16_disjunct(g, sl, sh, progs)
    lhat = state_set_pred(sl, g.subset(len(sl), 0.6))
    zero = np.zeros((len(sl), len(fam)), dtype=bool)
    checks = {}
    # (a) an existential is the union over its witnesses
    union = zero.copy()
    for v in dom.values():
        union |= E(a_and(Pred(pure), body), {a: v})
    checks["a"] = np.array_equal(E(P1), union)
    # (b) a pure conjunct is a constant factor
    checks["b"] = all(
        np.array_equal(E(a_and(Pred(pure), body), {a: v}),
                       E(body, {a: v}) if pure.fn({a: v}) else zero)
        for v in dom.values())
    # (c) a low conjunct intersects
    low_rows = as_mask(sat_unary(lhat, sl), len(sl))[:, None]
    checks["c"] = np.array_equal(E(a_and(LowA(lhat), P1)), low_rows & E(P1))
    # (d) disjunction is union
    rhs = E(P1) if inject_bug else E(P1) | E(P2)
    checks["d"] = np.array_equal(E(a_or(P1, P2)), rhs)
    # the syntactic encoding denotes the semantic one
    checks["syn"] = all(
        np.array_equal(sat_matrix(enc_syntactic(decompose(q, sl, sh)), sl, fam), E(q))
        for q in (P1, a_or(P1, P2), a_and(LowA(lhat), P1)))
    rec = {"property": "thm16", "case": k, "ok": all(checks.values()),
           "checks": {n: bool(v) for n, v in checks.items()}, "xChecked": len(fam)}
    if not rec["ok"]:
        rec["replay"] = (show_decl(low) + show_decl(high)
                         + f"P1: {show_assertion(P1)}\nP2: {show_assertion(P2)}\n"
                         + f"low: {show_assertion(lhat)}\n")
    return rec


PROPERTIES = {"thm4": _thm4, "decomp": _decomp, "exec-rules": _exec_rules, "vc": _vc,
              "thm16": _thm16}


def run_property(name: str, seed: int = 0, count: int = 100, depth: int = 3,
                 cap: int = DEFAULT_X_CAP, inject_bug: bool = False) -> Iterator[dict]:
    """Yield one record per generated case. The stream is a pure function of
    the arguments."""
    fn = PROPERTIES[name]
    g = Gen(GenConfig(seed=seed, max_depth=depth))
    for k in range(count):
        yield fn(g, k, cap, inject_bug)


def dumps(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, default=_jsonable)


def _jsonable(v):
    if isinstance(v, (frozenset, set)):
        return sorted(v)
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v))
