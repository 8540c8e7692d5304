"""The execution predicate and its update rules.

``ExecPred(states, prog)`` holds at X when some high state in ``states`` lies
in wlp(prog, X). Rules rewrite an ExecPred into one that is implied by it for
every X; no rule ever looks at X.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .lang import (
    SKIP, Assert, Assign, Choice, EvalFault, NondetAssign, Seq, Skip, Stmt, Test,
    While, head_tail, seq, show_stmt_inline,
)
from .semantics import StateSpace, config_refines, denote, wlp


@dataclass(frozen=True)
class ExecPred:
    states: frozenset  # high states satisfying the high-level assertion
    prog: Stmt

    def show(self, space: StateSpace | None = None) -> str:
        if space is None:
            st = "{" + ",".join(map(str, sorted(self.states))) + "}"
        else:
            st = "{" + ", ".join(space.show(i) for i in sorted(self.states)) + "}"
        return f"Exec({st}, {show_stmt_inline(self.prog)})"


def exec_holds(p: ExecPred, X, space: StateSpace) -> bool:
    w = wlp(p.prog, X, space)
    return not p.states.isdisjoint(w)


def angelic_valid(pre, c: Stmt, post, space: StateSpace) -> bool:
    """Every pre state avoids errors and has some run into post."""
    d = denote(c, space)
    post = frozenset(post)
    return all(i not in d.err and not d.succ[i].isdisjoint(post) for i in pre)


# ---------------------------------------------------------------- rules


class RuleError(Exception):
    pass


class HeadMismatch(RuleError):
    pass


class SideConditionFails(RuleError):
    def __init__(self, msg: str, state: int | None = None):
        super().__init__(msg)
        self.state = state


class NondetOutOfRange(RuleError):
    pass


class RuleApp:
    __slots__ = ()
    name = "?"


@dataclass(frozen=True)
class ExecAssign(RuleApp):
    name = "assign"


@dataclass(frozen=True)
class ExecNondet(RuleApp):
    value: int
    name = "nondet"


@dataclass(frozen=True)
class ExecChoiceL(RuleApp):
    name = "choice-left"


@dataclass(frozen=True)
class ExecChoiceR(RuleApp):
    name = "choice-right"


@dataclass(frozen=True)
class ExecAssume(RuleApp):
    name = "assume"


@dataclass(frozen=True)
class ExecWhileEnd(RuleApp):
    name = "while-end"


@dataclass(frozen=True)
class ExecWhileUnroll(RuleApp):
    name = "while-unroll"


@dataclass(frozen=True)
class HighAssert(RuleApp):
    name = "assert"


@dataclass(frozen=True)
class ExecPure(RuleApp):
    """Replace the head by ``replacement``; justified by a nested chain that
    ends in the replacement, or (chain=None) by configuration refinement."""
    replacement: Stmt
    chain: tuple | None = None
    name = "pure"


@dataclass(frozen=True)
class ExecSeq(RuleApp):
    """Run a chain on the head of a sequence; it must end in skip."""
    chain: tuple = ()
    name = "seq"


@dataclass(frozen=True)
class HighFocus(RuleApp):
    """Jump over the head using an angelic triple into ``intermediate``."""
    intermediate: frozenset = field(default_factory=frozenset)
    name = "focus"


def _need(p: ExecPred, kind, rule: RuleApp):
    if not isinstance(p.prog, kind):
        raise HeadMismatch(f"rule {rule.name} does not apply to {show_stmt_inline(p.prog)}")


def _check_all(p: ExecPred, space: StateSpace, b, want: bool, what: str):
    for i in sorted(p.states):
        try:
            ok = bool(b.fn(space.envs[i])) == want
        except EvalFault:
            ok = False
        if not ok:
            raise SideConditionFails(f"{what} fails at {space.show(i)}", i)


def apply_rule(p: ExecPred, r: RuleApp, space: StateSpace) -> ExecPred:
    c = p.prog
    match r:
        case ExecAssign():
            _need(p, Assign, r)
            out = set()
            for i in p.states:
                try:
                    j = space.update(i, c.var, c.expr.fn(space.envs[i]))
                except EvalFault:
                    j = None
                if j is not None:
                    out.add(j)
            return ExecPred(frozenset(out), SKIP)
        case ExecNondet(v):
            _need(p, NondetAssign, r)
            if not space.decl.var_sorts[c.var].contains(v):
                raise NondetOutOfRange(f"{v} is outside the sort of {c.var}")
            out = set()
            for i in sorted(p.states):
                env = space.envs[i]
                try:
                    ok = c.lo.fn(env) <= v <= c.hi.fn(env)
                except EvalFault:
                    ok = False
                if not ok:
                    raise SideConditionFails(f"{v} not within the nondet range at "
                                             f"{space.show(i)}", i)
                out.add(space.update(i, c.var, v))
            return ExecPred(frozenset(out), SKIP)
        case ExecChoiceL():
            _need(p, Choice, r)
            return ExecPred(p.states, c.left)
        case ExecChoiceR():
            _need(p, Choice, r)
            return ExecPred(p.states, c.right)
        case ExecAssume():
            _need(p, Test, r)
            _check_all(p, space, c.cond, True, "assumed guard")
            return ExecPred(p.states, SKIP)
        case ExecWhileEnd():
            _need(p, While, r)
            _check_all(p, space, c.cond, False, "negated loop guard")
            return ExecPred(p.states, SKIP)
        case ExecWhileUnroll():
            _need(p, While, r)
            _check_all(p, space, c.cond, True, "loop guard")
            return ExecPred(p.states, seq(c.body, c))
        case HighAssert():
            _need(p, Assert, r)
            return ExecPred(space.sat(c.cond) & p.states, SKIP)
        case ExecSeq(chain):
            _need(p, Seq, r)
            q = apply_chain(ExecPred(p.states, c.first), chain, space)
            if not isinstance(q.prog, Skip):
                raise SideConditionFails("sequenced chain ends in "
                                         f"{show_stmt_inline(q.prog)}, not skip")
            return ExecPred(q.states, c.second)
        case ExecPure(repl, chain):
            h, t = head_tail(c)
            if chain is None:
                for i in sorted(p.states):
                    if not config_refines(i, h, i, repl, space):
                        raise SideConditionFails(
                            f"{show_stmt_inline(repl)} does not refine "
                            f"{show_stmt_inline(h)} at {space.show(i)}", i)
            else:
                q = apply_chain(ExecPred(p.states, h), chain, space)
                if q.prog != repl:
                    raise SideConditionFails("pure chain ends in "
                                             f"{show_stmt_inline(q.prog)}, expected "
                                             f"{show_stmt_inline(repl)}")
                if not q.states <= p.states:
                    bad = min(q.states - p.states)
                    raise SideConditionFails("pure chain changes the high state", bad)
            return ExecPred(p.states, repl if t is None else seq(repl, t))
        case HighFocus(q):
            h, t = head_tail(c)
            d = denote(h, space)
            for i in sorted(p.states):
                if i in d.err or d.succ[i].isdisjoint(q):
                    raise SideConditionFails("no angelic run of "
                                             f"{show_stmt_inline(h)} from "
                                             f"{space.show(i)} reaches the focus set", i)
            return ExecPred(frozenset(q), SKIP if t is None else t)
    raise TypeError(f"unknown rule {r!r}")


def apply_chain(p: ExecPred, chain: Sequence[RuleApp], space: StateSpace) -> ExecPred:
    for r in chain:
        p = apply_rule(p, r, space)
    return p


_LEAF = (ExecAssign, ExecNondet, ExecAssume, ExecWhileEnd, HighAssert)


def lift(r: RuleApp, prog: Stmt) -> RuleApp:
    """Adapt a rule aimed at the first command of ``prog``: leaf rules are
    wrapped in a sequencing step, program-shaping rules in a pure step."""
    h, t = head_tail(prog)
    if t is None:
        return r
    if isinstance(r, _LEAF):
        return ExecSeq((r,))
    match r, h:
        case ExecChoiceL(), Choice(a, _):
            return ExecPure(a, (r,))
        case ExecChoiceR(), Choice(_, b):
            return ExecPure(b, (r,))
        case ExecWhileUnroll(), While(_, body):
            return ExecPure(seq(body, h), (r,))
    return r


# ---------------------------------------------------------------- framed steps


@dataclass
class StepResult:
    ok: bool
    message: str = ""
    low_state: int | None = None
    env: dict = field(default_factory=dict)


# a chain entry is either a concrete RuleApp or a function of the logical
# environment producing one (for arguments that mention logical variables)
ChainItem = RuleApp | Callable[[Mapping[str, Any], Stmt], RuleApp]


def resolve_chain(chain: Sequence[ChainItem], p: ExecPred, env, space) -> ExecPred:
    for item in chain:
        r = item(env, p.prog) if callable(item) else item
        p = apply_rule(p, r, space)
    return p


def framed_step(pre, chain: Sequence[ChainItem], c: Stmt, post,
                low: StateSpace, high: StateSpace | None,
                env: Mapping[str, Any] = {}) -> StepResult:
    """Check, without choosing any X, that {pre} c {post} holds for every X
    after first rewriting the Exec atom of pre by ``chain``.

    For every instance of pre the rewritten Exec state set must be covered,
    at each low outcome, by Exec atoms of post over the same program (or post
    must hold there without an Exec atom). An instance whose Exec state set
    becomes empty holds for no X and is skipped, as is one whose low states
    all block in c."""
    from .assertions import instances  # local: assertions imports this module

    d = denote(c, low)
    free_ok = [False] * len(low)
    cover: list[dict] = [dict() for _ in range(len(low))]
    for ins in instances(post, low, high, env):
        for s in ins.low:
            if ins.exec is None:
                free_ok[s] = True
            else:
                cv = cover[s]
                cv[ins.exec.prog] = cv.get(ins.exec.prog, frozenset()) | ins.exec.states
    for ins in instances(pre, low, high, env):
        ienv = {**env, **dict(ins.env)}
        if not any(d.succ[s] or s in d.err for s in ins.low):
            continue  # every low state blocks: nothing to simulate
        e = ins.exec
        if e is not None:
            try:
                e = resolve_chain(chain, e, ienv, high)
            except RuleError as ex:
                return StepResult(False, f"Exec rule: {ex}", None, ienv)
            if not e.states:
                continue
        for s in sorted(ins.low):
            if s in d.err:
                return StepResult(False, f"low step may fault at {low.show(s)}", s, ienv)
            for s2 in sorted(d.succ[s]):
                if free_ok[s2]:
                    continue
                if e is not None and e.states <= cover[s2].get(e.prog, frozenset()):
                    continue
                what = "" if e is None else f" with {e.show(high)}"
                return StepResult(False, f"{low.show(s)} reaches {low.show(s2)}"
                                  f"{what}, not covered by the target", s, ienv)
    return StepResult(True)
