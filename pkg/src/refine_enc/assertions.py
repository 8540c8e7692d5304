"""Unary and relational assertions, the Exec-parameterised encoding and the
linking operators.

A unary low-level assertion may contain Exec atoms. Its meaning is computed
through *instances*: for every choice of its existential witnesses it denotes
a set of low states conjoined with at most one concrete Exec predicate. The
instance list never depends on X; X only enters when an instance's Exec
predicate is finally evaluated.

Relational assertions denote sets of (low state, high state, high program)
triples and are represented as a map from high program to a boolean matrix
indexed by (low state, high state).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

import numpy as np

from .execpred import ExecPred, exec_holds
from .lang import (
    FALSE, TRUE, BoolExpr, BoolLit, EvalFault, Expr, Sort, SortError, Stmt,
    Var, check_bool, conj, show_bool, show_stmt_inline, subterm_closure,
)
from .semantics import DEFAULT_X_CAP, StateSpace, XFamily, wlp


class MissingX(Exception):
    pass


class NotDecomposable(Exception):
    pass


# ---------------------------------------------------------------- syntax


class SynAssertion:
    __slots__ = ()

    def __and__(self, other):
        return AAnd(self, other)

    def __or__(self, other):
        return AOr(self, other)


@dataclass(frozen=True)
class Pred(SynAssertion):
    """A guard over program variables, constants and logical variables. With
    only logical variables and constants it is a pure fact."""
    cond: BoolExpr


@dataclass(frozen=True)
class AAnd(SynAssertion):
    a: SynAssertion
    b: SynAssertion


@dataclass(frozen=True)
class AOr(SynAssertion):
    a: SynAssertion
    b: SynAssertion


@dataclass(frozen=True)
class Exists(SynAssertion):
    var: str
    sort: Sort
    body: SynAssertion


@dataclass(frozen=True)
class ExecAtom(SynAssertion):
    high: SynAssertion
    prog: Stmt


# lifting into relational assertions
@dataclass(frozen=True)
class LowA(SynAssertion):
    a: SynAssertion


@dataclass(frozen=True)
class HighA(SynAssertion):
    a: SynAssertion


@dataclass(frozen=True)
class ProgA(SynAssertion):
    prog: Stmt


ATRUE = Pred(TRUE)
AFALSE = Pred(FALSE)


def a_and(*parts: SynAssertion) -> SynAssertion:
    parts = [p for p in parts if p != ATRUE]
    if not parts:
        return ATRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = AAnd(p, out)
    return out


def a_or(*parts: SynAssertion) -> SynAssertion:
    if not parts:
        return AFALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = AOr(p, out)
    return out


def exists(binders, body: SynAssertion) -> SynAssertion:
    for v, s in reversed(list(binders)):
        body = Exists(v, s, body)
    return body


def names_of(node) -> set[str]:
    """Variable names read by an expression, guard or assertion (bound
    logical variables excluded)."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Exists):
        return names_of(node.body) - {node.var}
    if isinstance(node, (ExecAtom, ProgA)):
        return names_of(node.high) if isinstance(node, ExecAtom) else set()
    out: set[str] = set()
    if dataclasses.is_dataclass(node):
        for f in dataclasses.fields(node):
            v = getattr(node, f.name)
            if isinstance(v, (Expr, BoolExpr, SynAssertion)):
                out |= names_of(v)
    return out


def has_exec(a: SynAssertion) -> bool:
    match a:
        case ExecAtom():
            return True
        case AAnd(x, y) | AOr(x, y):
            return has_exec(x) or has_exec(y)
        case Exists(_, _, body):
            return has_exec(body)
    return False


def show_assertion(a: SynAssertion, ctx: int = 0) -> str:
    match a:
        case Pred(b):
            return show_bool(b, 3 if ctx else 0)
        case AOr(x, y):
            s, p = f"{show_assertion(x, 1)} || {show_assertion(y, 2)}", 1
        case AAnd(x, y):
            s, p = f"{show_assertion(x, 2)} && {show_assertion(y, 3)}", 2
        case Exists(v, srt, body):
            s, p = f"exists {v} : {srt}. {show_assertion(body)}", 0
        case ExecAtom(h, c):
            return f"Exec[ {show_assertion(h)} ; {show_stmt_inline(c)} ]"
        case LowA(x):
            return f"L[ {show_assertion(x)} ]"
        case HighA(x):
            return f"H[ {show_assertion(x)} ]"
        case ProgA(c):
            return f"prog[ {show_stmt_inline(c)} ]"
        case _:
            raise TypeError(f"not an assertion: {a!r}")
    return f"({s})" if p < ctx or (p == 0 and ctx) else s


def check_assertion(a: SynAssertion, scope: Mapping[str, str], *,
                    high_scope: Mapping[str, str] | None = None,
                    relational: bool = False, allow_exec: bool = False,
                    low_scope: Mapping[str, str] | None = None) -> None:
    """Sort-check an assertion. ``scope`` holds what bare predicates may read.
    Exec atoms are checked against ``high_scope``; in relational mode the
    lifts L[..] and H[..] use ``low_scope``/``high_scope``."""
    match a:
        case Pred(b):
            check_bool(b, scope)
        case AAnd(x, y) | AOr(x, y):
            for z in (x, y):
                check_assertion(z, scope, high_scope=high_scope, relational=relational,
                                allow_exec=allow_exec, low_scope=low_scope)
        case Exists(v, srt, body):
            sub = lambda sc: None if sc is None else {**sc, v: srt.kind}
            check_assertion(body, sub(scope), high_scope=sub(high_scope),
                            relational=relational, allow_exec=allow_exec,
                            low_scope=sub(low_scope))
        case ExecAtom(h, _):
            if not allow_exec:
                raise SortError("Exec atoms are only allowed in low-level assertions")
            logical = {k: v for k, v in scope.items() if k not in (low_scope or {})}
            check_assertion(h, {**(high_scope or {}), **logical})
        case LowA(x) | HighA(x):
            if not relational:
                raise SortError("L[..]/H[..] only appear in relational assertions")
            side = low_scope if isinstance(a, LowA) else high_scope
            logical = {k: v for k, v in scope.items()
                       if k not in (low_scope or {}) and k not in (high_scope or {})}
            check_assertion(x, {**side, **logical})
        case ProgA(_):
            if not relational:
                raise SortError("prog[..] only appears in relational assertions")
        case _:
            raise TypeError(f"not an assertion: {a!r}")


# ---------------------------------------------------------------- unary semantics


def _envkey(env: Mapping[str, Any]) -> tuple:
    return tuple(sorted(env.items()))


def sat_unary(a: SynAssertion, space: StateSpace, env: Mapping[str, Any] = {}) -> frozenset:
    """States of ``space`` satisfying an Exec-free assertion under ``env``."""
    cache = space.__dict__.setdefault("_sat", {})
    key = (a, _envkey(env))
    r = cache.get(key)
    if r is not None:
        return r
    match a:
        case Pred(BoolLit(v)):
            r = frozenset(range(len(space))) if v else frozenset()
        case Pred(b):
            r = space.sat(b, env)
        case AAnd(x, y):
            r = sat_unary(x, space, env)
            if r:
                r = r & sat_unary(y, space, env)
        case AOr(x, y):
            r = sat_unary(x, space, env) | sat_unary(y, space, env)
        case Exists(v, srt, body):
            r = frozenset().union(*(sat_unary(body, space, {**env, v: d})
                                    for d in srt.values()))
        case ExecAtom():
            raise MissingX("Exec atom in a position that needs an X-free assertion")
        case _:
            raise TypeError(f"cannot evaluate {a!r} as a unary assertion")
    cache[key] = r
    return r


@dataclass(frozen=True)
class Instance:
    """One witness choice of a low-level assertion: the low states ``low``
    together with the Exec predicate ``exec`` (None when there is none)."""
    env: tuple  # logical bindings as sorted items
    low: frozenset
    exec: ExecPred | None


class TwoExecAtoms(Exception):
    pass


def instances(a: SynAssertion, low: StateSpace, high: StateSpace | None,
              env: Mapping[str, Any] = {}, prune: bool = True) -> list[Instance]:
    """Instances of a low-level assertion. With prune, instances whose low
    set or Exec state set is empty are dropped (they hold nowhere)."""
    out = _inst(a, low, high, dict(env))
    if prune:
        out = [i for i in out if i.low and (i.exec is None or i.exec.states)]
    return out


def _inst(a, low, high, env) -> list[Instance]:
    if not has_exec(a):
        return [Instance(_envkey(env), sat_unary(a, low, env), None)]
    match a:
        case ExecAtom(h, c):
            if high is None:
                raise SortError("Exec atom without a high-level space")
            st = sat_unary(h, high, env)
            return [Instance(_envkey(env), frozenset(range(len(low))), ExecPred(st, c))]
        case AAnd(x, y):
            out = []
            for i in _inst(x, low, high, env):
                if not i.low:
                    continue
                for j in _inst(y, low, high, env):
                    if i.exec is not None and j.exec is not None:
                        raise TwoExecAtoms("a conjunction may carry at most one Exec atom")
                    out.append(Instance(_envkey(env), i.low & j.low, i.exec or j.exec))
            return out
        case AOr(x, y):
            return _inst(x, low, high, env) + _inst(y, low, high, env)
        case Exists(v, srt, body):
            out = []
            for d in srt.values():
                out += _inst(body, low, high, {**env, v: d})
            return out
    raise TypeError(f"not a low-level assertion: {a!r}")


def sat_at(a: SynAssertion, X, low: StateSpace, high: StateSpace | None = None,
           env: Mapping[str, Any] = {}) -> frozenset:
    """Low states satisfying ``a`` when its Exec atoms are read at X."""
    out: set = set()
    for ins in instances(a, low, high, env):
        if ins.exec is None:
            out |= ins.low
        else:
            if X is None:
                raise MissingX("assertion has Exec atoms but no X was given")
            if exec_holds(ins.exec, X, high):
                out |= ins.low
    return frozenset(out)


def holds(a: SynAssertion, i: int, X=None, low: StateSpace | None = None,
          high: StateSpace | None = None, env: Mapping[str, Any] = {}) -> bool:
    if has_exec(a) and X is None:
        raise MissingX("assertion has Exec atoms but no X was given")
    return i in sat_at(a, X, low, high, env)


def sat_matrix(a: SynAssertion, low: StateSpace, fam: XFamily | None,
               env: Mapping[str, Any] = {}) -> np.ndarray:
    """M[s, k]: low state s satisfies ``a`` at the k-th X of the family."""
    k = len(fam) if fam is not None else 1
    m = np.zeros((len(low), k), dtype=bool)
    for ins in instances(a, low, fam.space if fam else None, env):
        rows = list(ins.low)
        if ins.exec is None:
            m[rows, :] = True
        else:
            w = fam.wlp(ins.exec.prog)
            ev = w[list(ins.exec.states)].any(axis=0)
            m[rows, :] |= ev[None, :]
    return m


def entails(a1: SynAssertion, a2: SynAssertion, low: StateSpace,
            high: StateSpace | None = None, mode: str = "semantic",
            cap: int = DEFAULT_X_CAP, chain=(), env: Mapping[str, Any] = {}) -> bool:
    """a1 entails a2. In semantic mode Exec atoms are read at every X within
    the cap; in structural mode X is never enumerated and the Exec atom of
    a1 is first rewritten by the rule chain ``chain``."""
    if mode == "structural":
        from .execpred import framed_step
        from .lang import SKIP
        return framed_step(a1, chain, SKIP, a2, low, high, env).ok
    if mode != "semantic":
        raise ValueError(f"unknown entailment mode {mode}")
    if not (has_exec(a1) or has_exec(a2)):
        return sat_unary(a1, low, env) <= sat_unary(a2, low, env)
    fam = XFamily.all(high, cap)
    m1 = sat_matrix(a1, low, fam, env)
    m2 = sat_matrix(a2, low, fam, env)
    return bool(np.all(~m1 | m2))


# ---------------------------------------------------------------- relational


class RelSem:
    """Semantic relational assertion: high program -> bool matrix over
    (low state, high state)."""

    def __init__(self, low: StateSpace, high: StateSpace, parts: Mapping[Stmt, np.ndarray]):
        self.low, self.high = low, high
        self.parts = {c: m for c, m in parts.items() if m.any()}

    def __eq__(self, other):
        if set(self.parts) != set(other.parts):
            return False
        return all(np.array_equal(m, other.parts[c]) for c, m in self.parts.items())

    def __or__(self, other):
        out = dict(self.parts)
        for c, m in other.parts.items():
            out[c] = out[c] | m if c in out else m
        return RelSem(self.low, self.high, out)

    def triples(self) -> Iterable[tuple[int, int, Stmt]]:
        for c, m in self.parts.items():
            for l, h in zip(*np.nonzero(m)):
                yield int(l), int(h), c

    def programs(self) -> set[Stmt]:
        return set(self.parts)

    def restrict_low(self, s) -> "RelSem":
        rows = np.zeros(len(self.low), dtype=bool)
        rows[list(s)] = True
        return RelSem(self.low, self.high, {c: m & rows[:, None] for c, m in self.parts.items()})

    @classmethod
    def empty(cls, low, high):
        return cls(low, high, {})


def closure_of(*items) -> frozenset:
    """Subterm closure of every high program mentioned in the given
    assertions or statements."""
    progs: set[Stmt] = set()

    def walk(a):
        if isinstance(a, Stmt):
            progs.add(a)
        elif isinstance(a, (ProgA,)):
            progs.add(a.prog)
        elif isinstance(a, ExecAtom):
            progs.add(a.prog)
        elif isinstance(a, (AAnd, AOr)):
            walk(a.a)
            walk(a.b)
        elif isinstance(a, Exists):
            walk(a.body)
        elif isinstance(a, DecomposedRelAssertion):
            for d in a.disjuncts:
                progs.add(d.prog)

    for it in items:
        walk(it)
    out: set[Stmt] = set()
    for p in progs:
        out |= subterm_closure(p)
    return frozenset(out)


def _split_names(b, low: StateSpace, high: StateSpace, env) -> tuple[bool, bool]:
    ns = names_of(b) - set(env)
    lv, hv = set(low.names), set(high.names)
    uses_l, uses_h = bool(ns & lv), bool(ns & hv)
    if uses_l and uses_h and ns & lv & hv:
        raise SortError(f"name(s) {sorted(ns & lv & hv)} are ambiguous between the "
                        "two programs; use L[..] / H[..]")
    return uses_l, uses_h


def _pred_matrix(b, low, high, env) -> np.ndarray:
    uses_l, uses_h = _split_names(b, low, high, env)
    nl, nh = len(low), len(high)
    if not uses_h:
        rows = np.zeros(nl, dtype=bool)
        rows[list(low.sat(b, env))] = True
        return np.repeat(rows[:, None], nh, axis=1)
    if not uses_l:
        cols = np.zeros(nh, dtype=bool)
        cols[list(high.sat(b, env))] = True
        return np.repeat(cols[None, :], nl, axis=0)
    m = np.zeros((nl, nh), dtype=bool)
    f = b.fn
    for i, el in enumerate(low.envs):
        for j, eh in enumerate(high.envs):
            try:
                m[i, j] = bool(f({**el, **eh, **env}))
            except EvalFault:
                pass
    return m


def rel_sem(a: SynAssertion, low: StateSpace, high: StateSpace,
            closure: Iterable[Stmt] | None = None, env: Mapping[str, Any] = {}) -> RelSem:
    """Denotation of a relational assertion. Disjuncts that do not pin the
    high program range over ``closure`` (default: the closure of ``a``)."""
    if closure is None:
        closure = closure_of(a)
    parts: dict[Stmt, np.ndarray] = {}
    for m, c in _rel(a, low, high, dict(env)):
        for p in ([c] if c is not None else closure):
            parts[p] = parts[p] | m if p in parts else m
    return RelSem(low, high, parts)


_ANY = None
_CLASH = object()


def _rel(a, low, high, env) -> list[tuple[np.ndarray, Any]]:
    nl, nh = len(low), len(high)
    match a:
        case Pred(b):
            return [(_pred_matrix(b, low, high, env), _ANY)]
        case LowA(x):
            rows = np.zeros(nl, dtype=bool)
            rows[list(sat_unary(x, low, env))] = True
            return [(np.repeat(rows[:, None], nh, axis=1), _ANY)]
        case HighA(x):
            cols = np.zeros(nh, dtype=bool)
            cols[list(sat_unary(x, high, env))] = True
            return [(np.repeat(cols[None, :], nl, axis=0), _ANY)]
        case ProgA(c):
            return [(np.ones((nl, nh), dtype=bool), c)]
        case AAnd(x, y):
            out = []
            for m1, c1 in _rel(x, low, high, env):
                if not m1.any():
                    continue
                for m2, c2 in _rel(y, low, high, env):
                    if c1 is not None and c2 is not None and c1 != c2:
                        continue
                    out.append((m1 & m2, c1 if c1 is not None else c2))
            return out
        case AOr(x, y):
            return _rel(x, low, high, env) + _rel(y, low, high, env)
        case Exists(v, srt, body):
            out = []
            for d in srt.values():
                out += _rel(body, low, high, {**env, v: d})
            return out
        case ExecAtom():
            raise SortError("Exec atoms do not belong in relational assertions")
    raise TypeError(f"not a relational assertion: {a!r}")


# ---------------------------------------------------------------- decomposed form


@dataclass(frozen=True)
class Disjunct:
    binders: tuple  # ((name, Sort), ...)
    pure: BoolExpr
    low: SynAssertion
    high: SynAssertion
    prog: Stmt

    def to_assertion(self) -> SynAssertion:
        body = a_and(Pred(self.pure), LowA(self.low), HighA(self.high), ProgA(self.prog))
        return exists(self.binders, body)


@dataclass(frozen=True)
class DecomposedRelAssertion:
    disjuncts: tuple

    def to_assertion(self) -> SynAssertion:
        return a_or(*(d.to_assertion() for d in self.disjuncts))

    def __or__(self, other):
        return DecomposedRelAssertion(self.disjuncts + other.disjuncts)


def decompose(a: SynAssertion, low: StateSpace, high: StateSpace) -> DecomposedRelAssertion:
    """Bring a relational assertion into the decomposed disjunctive form.
    Raises NotDecomposable for predicates that mix low and high variables or
    disjuncts that do not fix the high program."""
    out = []
    for binders, atoms in _flatten(a):
        pure, lows, highs, progs = [], [], [], set()
        bound = {v for v, _ in binders}
        for at in atoms:
            match at:
                case LowA(x):
                    lows.append(x)
                case HighA(x):
                    highs.append(x)
                case ProgA(c):
                    progs.add(c)
                case Pred(b):
                    uses_l, uses_h = _split_names(b, low, high, bound)
                    if uses_l and uses_h:
                        raise NotDecomposable(f"predicate {show_bool(b)} relates both programs")
                    (lows if uses_l else highs if uses_h else pure).append(
                        at if uses_l or uses_h else b)
                case _:
                    raise NotDecomposable(f"unexpected conjunct {at!r}")
        if not progs:
            raise NotDecomposable("a disjunct does not fix the high-level program")
        if len(progs) > 1:
            continue  # two different programs: the disjunct is empty
        out.append(Disjunct(tuple(binders), conj(*pure), a_and(*lows),
                            a_and(*highs), progs.pop()))
    return DecomposedRelAssertion(tuple(out))


def _flatten(a) -> list[tuple[list, list]]:
    match a:
        case AOr(x, y):
            return _flatten(x) + _flatten(y)
        case AAnd(x, y):
            out = []
            for b1, c1 in _flatten(x):
                for b2, c2 in _flatten(y):
                    clash = {v for v, _ in b1} & {v for v, _ in b2}
                    if clash:
                        raise NotDecomposable(f"binder(s) {sorted(clash)} bound twice")
                    out.append((b1 + b2, c1 + c2))
            return out
        case Exists(v, srt, body):
            return [([(v, srt)] + b, c) for b, c in _flatten(body)]
        case Pred(BoolLit(False)):
            return []
    return [([], [a])]


def enc_syntactic(p: DecomposedRelAssertion) -> SynAssertion:
    """Replace H[..] and prog[..] of every disjunct by one Exec atom."""
    parts = []
    for d in p.disjuncts:
        body = a_and(Pred(d.pure), d.low, ExecAtom(d.high, d.prog))
        parts.append(exists(d.binders, body))
    return a_or(*parts)


def enc_matrix(p: RelSem, fam: XFamily) -> np.ndarray:
    """E[s, k]: low state s is in the encoding of p at the k-th X."""
    out = np.zeros((len(p.low), len(fam)), dtype=bool)
    for c, m in p.parts.items():
        w = fam.wlp(c)
        out |= (m.astype(np.float32) @ w.astype(np.float32)) > 0.5
    return out


def enc(p: RelSem, X) -> frozenset:
    """Low states having some related (high state, program) pair whose wlp
    towards X contains the high state."""
    out = set()
    for c, m in p.parts.items():
        w = wlp(c, X, p.high)
        for l, h in zip(*np.nonzero(m)):
            if int(h) in w:
                out.add(int(l))
    return frozenset(out)


# ---------------------------------------------------------------- linking


def bin_sem(a: SynAssertion, low: StateSpace, high: StateSpace,
            env: Mapping[str, Any] = {}) -> np.ndarray:
    """A binary assertion (no prog[..]) as a bool matrix over the two spaces."""
    parts = _rel(a, low, high, dict(env))
    m = np.zeros((len(low), len(high)), dtype=bool)
    for mm, c in parts:
        if c is not None:
            raise SortError("binary assertions do not mention programs")
        m |= mm
    return m


def as_mask(s, n: int) -> np.ndarray:
    v = np.zeros(n, dtype=bool)
    if s:
        v[list(s)] = True
    return v


def link_bin_unary(p: np.ndarray, q) -> frozenset:
    """Low states related by p to some high state in q."""
    qm = as_mask(q, p.shape[1])
    return frozenset(np.flatnonzero((p & qm[None, :]).any(axis=1)).tolist())


def compose_bin(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    if p1.shape[1] != p2.shape[0]:
        raise ValueError("middle spaces differ")
    return (p1.astype(np.float32) @ p2.astype(np.float32)) > 0.5
