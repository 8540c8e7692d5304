"""Checker for annotated refinement proofs.

A proof script is a triple file whose low-level program carries comment
directives::

    // @assert <assertion>      intermediate assertion (closes every open path)
    // @invariant <assertion>   invariant of the next while loop
    // @exintro n m             open the leading existentials of the assertion
    // @exec <rule> [args]      update the Exec atom (assign, nondet e, ...)

The script is compiled into obligations of the form {P} chain; c {Q}: the
Exec atom of P is rewritten by the rule chain, the low-level statements c
run, and Q must cover the result. Each obligation is discharged without
choosing an X; only the optional oracle enumerates X.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

from .assertions import (
    AAnd, AOr, ExecAtom, Exists, SynAssertion, TwoExecAtoms,
    check_assertion, decompose, enc_syntactic, sat_unary, show_assertion,
    NotDecomposable,
)
from .execpred import (
    ExecAssign, ExecAssume, ExecChoiceL, ExecChoiceR, ExecNondet, ExecPure,
    ExecSeq, ExecWhileEnd, ExecWhileUnroll, HighAssert, HighFocus, RuleError,
    framed_step, lift,
)
from .lang import (
    SKIP, EvalFault, Not, SortError, Stmt, Test, check_stmt, eval_expr, seq,
    show_stmt_inline,
)
from .semantics import DEFAULT_X_CAP, StateSpace
from .syntax import (
    Annot, BlockI, ChoiceI, IfI, ParseError, SimpleI, TripleSpec, WhileI,
    parse_directive, parse_triple,
)
from .triples import RelTriple, StdTriple, Verdict, rel_valid, std_valid_all_x


class StructureMismatch(Exception):
    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


EXIT_OK, EXIT_FAIL, EXIT_STRUCTURE, EXIT_ORACLE = 0, 1, 2, 3

RULES = {
    "assign": ExecAssign, "choice-left": ExecChoiceL, "choice-right": ExecChoiceR,
    "assume": ExecAssume, "while-unroll": ExecWhileUnroll, "while-end": ExecWhileEnd,
    "assert": HighAssert,
}


@dataclass(frozen=True)
class Directive:
    """An Exec update from the script; builds its rule once the logical
    environment and the current high program are known."""
    text: str
    make: Callable[[dict, Stmt], Any] = field(compare=False)

    def __call__(self, env, prog):
        return self.make(env, prog)


@dataclass(frozen=True)
class Obligation:
    index: int
    kind: str  # conseq | step | loop-init | loop-preserve | post
    line: int
    pre: SynAssertion
    chain: tuple
    stmt: Stmt
    post: SynAssertion
    scope: tuple = ()  # ((name, Sort), ...) opened by exintro

    @property
    def shape(self) -> str:
        return "entailment" if self.stmt == SKIP else "subtriple"

    @property
    def frames_exec(self) -> bool:
        # an Exec atom is carried unchanged across low-level commands
        return self.stmt != SKIP and _mentions_exec(self.pre)

    @property
    def label(self) -> str:
        return f"#{self.index} {self.kind} (line {self.line})"

    def describe(self) -> str:
        chain = "; ".join(d.text for d in self.chain) or "-"
        return (f"{self.label}: {{{show_assertion(self.pre)}}} [{chain}] "
                f"{show_stmt_inline(self.stmt)} {{{show_assertion(self.post)}}}")


def _mentions_exec(a) -> bool:
    match a:
        case ExecAtom():
            return True
        case AAnd(x, y) | AOr(x, y):
            return _mentions_exec(x) or _mentions_exec(y)
        case Exists(_, _, b):
            return _mentions_exec(b)
    return False


@dataclass
class ProofScript:
    spec: TripleSpec
    low: StateSpace
    high: StateSpace
    goal: StdTriple

    @classmethod
    def from_spec(cls, spec: TripleSpec) -> "ProofScript":
        low, high = StateSpace(spec.low), StateSpace(spec.high)
        try:
            pre = enc_syntactic(decompose(spec.pre, low, high))
            post = enc_syntactic(decompose(spec.post, low, high))
        except NotDecomposable as e:
            raise StructureMismatch(f"goal is not in decomposed form: {e}") from None
        return cls(spec, low, high, StdTriple(pre, spec.low.body, post))


def load_script(text: str) -> ProofScript:
    try:
        spec = parse_triple(text)
    except (ParseError, SortError) as e:
        raise StructureMismatch(str(e), getattr(e, "line", None)) from None
    return ProofScript.from_spec(spec)


# ---------------------------------------------------------------- obligations


@dataclass(frozen=True)
class _Thread:
    assertion: SynAssertion
    chain: tuple
    pending: tuple
    scope: tuple
    line: int

    def then(self, *stmts) -> "_Thread":
        return _Thread(self.assertion, self.chain, self.pending + stmts, self.scope, self.line)


class _Gen:
    def __init__(self, ps: ProofScript):
        self.ps = ps
        self.obs: list[Obligation] = []
        self.inv = None
        lo = ps.spec.low
        self.low_scope = lo.scope()
        self.high_scope = ps.spec.high.scope()
        self.high_sorts = ps.spec.high.var_sorts

    # -- helpers
    def close(self, th: _Thread, target, kind: str, line: int):
        if th.assertion == target and not th.chain and not th.pending:
            return
        if kind == "auto":
            kind = "step" if th.pending else "conseq"
        self.obs.append(Obligation(len(self.obs), kind, line, th.assertion, th.chain,
                                   seq(*th.pending), target, th.scope))

    def check(self, a, scope, line):
        sc = {**self.low_scope, **{v: s.kind for v, s in scope}}
        try:
            check_assertion(a, sc, high_scope=self.high_scope, allow_exec=True,
                            low_scope=self.low_scope)
            for prog in _exec_progs(a):
                check_stmt(prog, self.high_sorts, self.high_scope)
        except SortError as e:
            raise StructureMismatch(str(e), line) from None

    def directive(self, it: Annot, scope):
        body = it.text
        try:
            return parse_directive(body, self.ps.spec.procs)
        except (ParseError, SortError) as e:
            raise StructureMismatch(f"bad directive '{body.strip()}': {e}", it.line) from None

    def exec_item(self, d, scope, line) -> Directive:
        high = self.ps.high
        match d:
            case ("rule", name):
                base = RULES[name]()
                return Directive(f"exec {name}", lambda env, prog: lift(base, prog))
            case ("nondet", e):
                def make(env, prog, e=e):
                    try:
                        v = eval_expr(e, {**high.consts, **env})
                    except EvalFault as ex:
                        raise RuleError(f"nondet value: {ex}") from None
                    return lift(ExecNondet(v), prog)
                return Directive("exec nondet", make)
            case ("focus", q):
                self.check_high(q, scope, line)
                return Directive(f"exec focus {{ {show_assertion(q)} }}",
                                 lambda env, prog: HighFocus(sat_unary(q, high, env)))
            case ("pure", c):
                try:
                    check_stmt(c, self.high_sorts, self.high_scope)
                except SortError as e:
                    raise StructureMismatch(str(e), line) from None
                rule = ExecPure(c, None)
                return Directive(f"exec pure -> {show_stmt_inline(c)}", lambda env, prog: rule)
            case ("skip",):
                return Directive("exec skip", lambda env, prog: ExecSeq(()))
        raise StructureMismatch(f"unknown directive {d!r}", line)

    def check_high(self, q, scope, line):
        sc = {**self.high_scope, **{v: s.kind for v, s in scope}}
        try:
            check_assertion(q, sc)
        except SortError as e:
            raise StructureMismatch(str(e), line) from None

    # -- the walk
    def walk(self, items, threads: list[_Thread], scope: tuple) -> list[_Thread]:
        for it in items:
            if self.inv is not None and not isinstance(it, (WhileI, Annot)):
                raise StructureMismatch("invariant is not followed by a loop", self.inv[1])
            match it:
                case Annot(_, line):
                    d = self.directive(it, scope)
                    match d:
                        case ("assert", a):
                            self.check(a, scope, line)
                            for th in threads:
                                self.close(th, a, "auto", line)
                            threads = [_Thread(a, (), (), scope, line)]
                        case ("invariant", a):
                            self.check(a, scope, line)
                            self.inv = (a, line)
                        case ("exintro", names):
                            threads, scope = self.exintro(threads, names, scope, line)
                        case _:
                            item = self.exec_item(d, scope, line)
                            threads = [_Thread(t.assertion, t.chain + (item,), t.pending,
                                               t.scope, t.line) for t in threads]
                case SimpleI(c, _):
                    threads = [t.then(c) for t in threads]
                case BlockI(inner, _):
                    threads = self.walk(inner, threads, scope)
                case IfI(b, then, other, _):
                    a = self.walk(then, [t.then(Test(b)) for t in threads], scope)
                    e = self.walk(other, [t.then(Test(Not(b))) for t in threads], scope)
                    threads = a + e
                case ChoiceI(left, right, _):
                    threads = (self.walk(left, threads, scope)
                               + self.walk(right, threads, scope))
                case WhileI(b, body, line):
                    if self.inv is None:
                        raise StructureMismatch("loop without an @invariant", line)
                    inv, _ = self.inv
                    self.inv = None
                    for th in threads:
                        self.close(th, inv, "loop-init", line)
                    out = self.walk(body, [_Thread(inv, (), (Test(b),), scope, line)], scope)
                    for th in out:
                        self.close(th, inv, "loop-preserve", line)
                    threads = [_Thread(inv, (), (Test(Not(b)),), scope, line)]
        if self.inv is not None:
            raise StructureMismatch("invariant is not followed by a loop", self.inv[1])
        return threads

    def exintro(self, threads, names, scope, line):
        if len(threads) != 1 or threads[0].chain or threads[0].pending:
            raise StructureMismatch("exintro must directly follow an assertion", line)
        a = threads[0].assertion
        taken = {v for v, _ in scope}
        for name in names:
            a, binder = _open(a, name)
            if binder is None:
                raise StructureMismatch(f"no leading existential binds {name}", line)
            if name in taken:
                raise StructureMismatch(f"{name} is already open", line)
            scope = scope + (binder,)
            taken.add(name)
        return [_Thread(a, (), (), scope, line)], scope


def _open(a, name):
    """Strip the binder ``name`` from the leading existential prefix."""
    match a:
        case Exists(v, srt, body) if v == name:
            return body, (v, srt)
        case Exists(v, srt, body):
            inner, b = _open(body, name)
            return Exists(v, srt, inner), b
    return a, None


def _exec_progs(a):
    match a:
        case ExecAtom(_, c):
            yield c
        case AAnd(x, y) | AOr(x, y):
            yield from _exec_progs(x)
            yield from _exec_progs(y)
        case Exists(_, _, b):
            yield from _exec_progs(b)


def generate_obligations(ps: ProofScript) -> list[Obligation]:
    g = _Gen(ps)
    threads = [_Thread(ps.goal.pre, (), (), (), 0)]
    threads = g.walk(ps.spec.low_items, threads, ())
    end = max((it.line for it in _flat(ps.spec.low_items)), default=0)
    for th in threads:
        g.close(th, ps.goal.post, "post", end)
    return g.obs


def _flat(items):
    for it in items:
        yield it
        match it:
            case BlockI(inner, _):
                yield from _flat(inner)
            case IfI(_, a, b, _) | ChoiceI(a, b, _):
                yield from _flat(a)
                yield from _flat(b)
            case WhileI(_, body, _):
                yield from _flat(body)


# ---------------------------------------------------------------- discharge


def discharge(ob: Obligation, ps: ProofScript) -> Verdict:
    names = [v for v, _ in ob.scope]
    for vals in itertools.product(*(s.values() for _, s in ob.scope)):
        env = dict(zip(names, vals))
        try:
            r = framed_step(ob.pre, ob.chain, ob.stmt, ob.post, ps.low, ps.high, env)
        except (TwoExecAtoms, SortError) as e:
            return Verdict(False, str(e))
        if not r.ok:
            where = ", ".join(f"{k}={v!r}" for k, v in sorted(r.env.items()))
            return Verdict(False, r.message + (f" [{where}]" if where else ""))
    return Verdict(True)


@dataclass
class Report:
    obligations: list
    results: list
    exit_code: int
    structure_error: str | None = None
    oracle: dict | None = None

    @property
    def certified(self) -> bool:
        return self.exit_code in (EXIT_OK, EXIT_ORACLE)

    def failed(self) -> list[Obligation]:
        return [o for o, r in zip(self.obligations, self.results) if not r.valid]

    def records(self) -> list[dict]:
        out = [{"obligation": o.index, "kind": o.kind, "line": o.line, "shape": o.shape,
                "framesExec": o.frames_exec, "ok": r.valid, "counterexample": r.counterexample}
               for o, r in zip(self.obligations, self.results)]
        summary = {"verdict": {0: "certified", 1: "failed", 2: "structure-error",
                               3: "oracle-disagreement"}[self.exit_code],
                   "exitCode": self.exit_code, "obligations": len(self.obligations)}
        if self.structure_error:
            summary["error"] = self.structure_error
        if self.oracle is not None:
            summary["oracle"] = self.oracle
        return out + [summary]

    def text(self) -> str:
        lines = []
        if self.structure_error:
            lines.append(f"structure error: {self.structure_error}")
        for o, r in zip(self.obligations, self.results):
            tail = "" if r.valid else f": {r.counterexample}"
            lines.append(f"{'ok  ' if r.valid else 'FAIL'} {o.label} {o.shape}{tail}")
        if self.oracle is not None:
            lines.append("oracle: " + ", ".join(f"{k}={v}" for k, v in self.oracle.items()))
        verdict = {0: "certified", 1: "not certified", 2: "not checked",
                   3: "certified, but the oracle disagrees (internal error)"}
        lines.append(verdict[self.exit_code])
        return "\n".join(lines) + "\n"


def check_proof(ps: ProofScript | str, oracle: bool = True,
                cap: int = DEFAULT_X_CAP) -> Report:
    try:
        if isinstance(ps, str):
            ps = load_script(ps)
        obs = generate_obligations(ps)
    except StructureMismatch as e:
        return Report([], [], EXIT_STRUCTURE, str(e))
    results = [discharge(o, ps) for o in obs]
    ok = all(r.valid for r in results)
    code = EXIT_OK if ok else EXIT_FAIL
    info = None
    if oracle:
        info = {}
        rv = rel_valid(RelTriple.from_spec(ps.spec))
        info["relational"] = rv.valid
        if len(ps.high) <= cap:
            info["encodedAllX"] = std_valid_all_x(ps.goal, ps.low, ps.high, cap).valid
        if ok and not all(info.values()):
            code = EXIT_ORACLE
    return Report(obs, results, code, None, info)
