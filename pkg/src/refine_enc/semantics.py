"""Error-aware denotational semantics over an enumerated finite state space.

States are identified by their index in ``StateSpace.states``; a denotation
stores, for every state, the frozenset of normal successors plus the set of
states that may fault.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .lang import (
    Assert, Assign, Choice, EvalFault, NondetAssign, ProgramDecl, Seq, Skip,
    Stmt, Test, While, show_value,
)

DEFAULT_X_CAP = 16


class CapExceeded(Exception):
    pass


class StateSpace:
    def __init__(self, decl: ProgramDecl):
        self.decl = decl
        self.names = tuple(n for n, _ in decl.vars)
        self.sorts = tuple(s for _, s in decl.vars)
        self.consts = decl.const_env
        self.states = list(itertools.product(*(s.values() for s in self.sorts)))
        self.index = {st: i for i, st in enumerate(self.states)}
        self.envs = []
        for st in self.states:
            env = dict(self.consts)
            env.update(zip(self.names, st))
            self.envs.append(env)
        self._pos = {n: k for k, n in enumerate(self.names)}
        self._deno: dict[Stmt, Denotation] = {}

    def __len__(self):
        return len(self.states)

    def __repr__(self):
        return f"StateSpace({', '.join(self.names)}; {len(self)} states)"

    def state(self, **kw) -> int:
        """Index of the state with the given bindings (all vars required)."""
        return self.index[tuple(kw[n] for n in self.names)]

    def find(self, **kw) -> list[int]:
        return [i for i, env in enumerate(self.envs)
                if all(env[k] == v for k, v in kw.items())]

    def update(self, i: int, var: str, v) -> int | None:
        """Index of state i with var set to v, or None when v is out of sort."""
        k = self._pos[var]
        if not self.sorts[k].contains(v):
            return None
        st = list(self.states[i])
        st[k] = v
        return self.index[tuple(st)]

    def show(self, i: int) -> str:
        return "{" + ", ".join(f"{n}={show_value(v)}"
                               for n, v in zip(self.names, self.states[i])) + "}"

    def sat(self, b, extra=None) -> frozenset:
        """States where guard b holds (faults count as false)."""
        out = []
        for i, env in enumerate(self.envs):
            if extra:
                env = {**env, **extra}
            try:
                if b.fn(env):
                    out.append(i)
            except EvalFault:
                pass
        return frozenset(out)


@dataclass(frozen=True, eq=True)
class Denotation:
    succ: tuple  # succ[i] = frozenset of normal successors of state i
    err: frozenset

    @property
    def nrm(self) -> frozenset:
        return frozenset((i, j) for i, s in enumerate(self.succ) for j in s)

    def matrix(self) -> np.ndarray:
        n = len(self.succ)
        m = np.zeros((n, n), dtype=bool)
        for i, s in enumerate(self.succ):
            if s:
                m[i, list(s)] = True
        return m

    def err_vector(self) -> np.ndarray:
        v = np.zeros(len(self.succ), dtype=bool)
        if self.err:
            v[list(self.err)] = True
        return v


def _guard(b, env):
    """True/False, or None on a fault."""
    try:
        return bool(b.fn(env))
    except EvalFault:
        return None


def denote(c: Stmt, space: StateSpace) -> Denotation:
    d = space._deno.get(c)
    if d is None:
        d = _denote(c, space)
        space._deno[c] = d
    return d


def _denote(c: Stmt, sp: StateSpace) -> Denotation:
    n = len(sp)
    match c:
        case Skip():
            return Denotation(tuple(frozenset((i,)) for i in range(n)), frozenset())
        case Assign(x, e):
            succ, err = [], set()
            for i, env in enumerate(sp.envs):
                try:
                    j = sp.update(i, x, e.fn(env))
                except EvalFault:
                    j = None
                if j is None:
                    err.add(i)
                    succ.append(frozenset())
                else:
                    succ.append(frozenset((j,)))
            return Denotation(tuple(succ), frozenset(err))
        case NondetAssign(x, e1, e2):
            sort = sp.decl.var_sorts[x]
            succ, err = [], set()
            for i, env in enumerate(sp.envs):
                try:
                    lo, hi = e1.fn(env), e2.fn(env)
                except EvalFault:
                    err.add(i)
                    succ.append(frozenset())
                    continue
                if lo <= hi and (lo < sort.lo or hi > sort.hi):
                    err.add(i)
                vals = range(max(lo, sort.lo), min(hi, sort.hi) + 1)
                succ.append(frozenset(sp.update(i, x, v) for v in vals))
            return Denotation(tuple(succ), frozenset(err))
        case Test(b) | Assert(b):
            succ, err = [], set()
            for i, env in enumerate(sp.envs):
                g = _guard(b, env)
                succ.append(frozenset((i,)) if g else frozenset())
                if g is None or (g is False and isinstance(c, Assert)):
                    err.add(i)
            return Denotation(tuple(succ), frozenset(err))
        case Choice(a, b):
            da, db = denote(a, sp), denote(b, sp)
            return Denotation(tuple(x | y for x, y in zip(da.succ, db.succ)),
                              da.err | db.err)
        case Seq(a, b):
            da, db = denote(a, sp), denote(b, sp)
            succ = tuple(frozenset().union(*(db.succ[j] for j in s)) for s in da.succ)
            err = da.err | {i for i, s in enumerate(da.succ) if s & db.err}
            return Denotation(succ, frozenset(err))
        case While():
            *_, last = kleene_iterates(c, sp)
            return last
    raise TypeError(f"not a statement: {c!r}")


def kleene_iterates(w: While, sp: StateSpace) -> Iterator[Denotation]:
    """Kleene chain of the loop functional, starting from the empty relation;
    the last element yielded is the least fixpoint."""
    body = denote(w.body, sp)
    guard = [_guard(w.cond, env) for env in sp.envs]
    n = len(sp)
    succ = [frozenset()] * n
    err: set = set()
    while True:
        nsucc, nerr = [], set()
        for i in range(n):
            g = guard[i]
            if g is None:
                nerr.add(i)
                nsucc.append(frozenset())
            elif not g:
                nsucc.append(frozenset((i,)))
            else:
                s = body.succ[i]
                nsucc.append(frozenset().union(*(succ[j] for j in s)))
                if i in body.err or any(j in err for j in s):
                    nerr.add(i)
        cur = Denotation(tuple(succ), frozenset(err))
        nxt = Denotation(tuple(nsucc), frozenset(nerr))
        yield cur
        if nxt == cur:
            return
        succ, err = nsucc, nerr


def terminal_set(i: int, c: Stmt, space: StateSpace) -> frozenset:
    return denote(c, space).succ[i]


def config_refines(i1: int, c1: Stmt, i2: int, c2: Stmt, space: StateSpace) -> bool:
    """(i1, c1) is refined by (i2, c2): every outcome of the right one is an
    outcome of the left one, and errors on the right are matched on the left."""
    d1, d2 = denote(c1, space), denote(c2, space)
    if not d2.succ[i2] <= d1.succ[i1]:
        return False
    return i2 not in d2.err or i1 in d1.err


def all_subsets(n: int, cap: int = DEFAULT_X_CAP) -> np.ndarray:
    """Boolean matrix whose rows are all subsets of range(n)."""
    if n > cap:
        raise CapExceeded(f"{n} states exceed the exhaustive cap {cap}")
    xs = np.arange(1 << n, dtype=np.int64)
    return ((xs[:, None] >> np.arange(n)) & 1).astype(bool)


def wlp_matrix(c: Stmt, space: StateSpace, xm: np.ndarray,
               errors: bool = True) -> np.ndarray:
    """W[s, k] is true iff state s is in wlp(c, X_k) for the rows X_k of xm.
    With errors=False the error component is ignored (the core semantics)."""
    d = denote(c, space)
    bad = d.matrix().astype(np.float32) @ (~xm).T.astype(np.float32)
    w = bad < 0.5
    return w & ~d.err_vector()[:, None] if errors else w


@dataclass(frozen=True)
class DecompositionResult:
    refines: bool           # proposition (a)
    wlp_implication: bool   # proposition (b)
    source_errs: bool       # i1 is an error state of c1
    witness_falsifies: bool | None  # X = T(i1, c1) refutes (b), when (a) fails

    @property
    def agree(self) -> bool:
        # with errors, (b) is vacuous when the left configuration may fault,
        # so the equivalence reads (b) <=> (left faults or (a))
        ok = self.wlp_implication == (self.source_errs or self.refines)
        if not self.refines and not self.source_errs:
            ok = ok and bool(self.witness_falsifies)
        return ok

    def __bool__(self):
        return self.agree


def check_decomposition(i1: int, c1: Stmt, i2: int, c2: Stmt, space: StateSpace,
                        cap: int = DEFAULT_X_CAP, errors: bool = True
                        ) -> DecompositionResult:
    """Compare configuration refinement against the wlp characterisation over
    every X. errors=False checks the error-free projection."""
    xm = all_subsets(len(space), cap)
    w1 = wlp_matrix(c1, space, xm, errors)[i1]
    w2 = wlp_matrix(c2, space, xm, errors)[i2]
    b = bool(np.all(~w1 | w2))
    d1, d2 = denote(c1, space), denote(c2, space)
    e1 = errors and i1 in d1.err
    e2 = errors and i2 in d2.err
    a = d2.succ[i2] <= d1.succ[i1] and (not e2 or e1)
    wit = None
    if not a:
        t1 = d1.succ[i1]
        wit = not e1 and not (not e2 and d2.succ[i2] <= t1)
    return DecompositionResult(a, b, e1, wit)


def dump(c: Stmt, space: StateSpace) -> str:
    d = denote(c, space)
    lines = [f"{space.show(i)} -> {space.show(j)}"
             for i, s in enumerate(d.succ) for j in sorted(s)]
    lines.append("err:")
    lines += [f"  {space.show(i)}" for i in sorted(d.err)]
    return "\n".join(lines) + "\n"


class XFamily:
    """A batch of postcondition sets X over a space, as rows of a bool matrix,
    with wlp matrices cached per program."""

    def __init__(self, space: StateSpace, xm: np.ndarray, exhaustive: bool,
                 errors: bool = True):
        self.space = space
        self.xm = xm
        self.exhaustive = exhaustive
        self.errors = errors
        self._w: dict[Stmt, np.ndarray] = {}

    @classmethod
    def all(cls, space: StateSpace, cap: int = DEFAULT_X_CAP) -> "XFamily":
        return cls(space, all_subsets(len(space), cap), True)

    @classmethod
    def of(cls, space: StateSpace, sets) -> "XFamily":
        xm = np.zeros((len(sets), len(space)), dtype=bool)
        for k, s in enumerate(sets):
            if s:
                xm[k, list(s)] = True
        return cls(space, xm, False)

    def __len__(self):
        return self.xm.shape[0]

    def subset(self, k: int) -> frozenset:
        return frozenset(np.flatnonzero(self.xm[k]).tolist())

    def wlp(self, c: Stmt) -> np.ndarray:
        w = self._w.get(c)
        if w is None:
            w = self._w[c] = wlp_matrix(c, self.space, self.xm, self.errors)
        return w


def wlp(c: Stmt, X, space: StateSpace) -> frozenset:
    d = denote(c, space)
    X = frozenset(X)
    return frozenset(i for i, s in enumerate(d.succ) if i not in d.err and s <= X)
