"""Sorts, abstract syntax and expression evaluation for the shared language.

Low- and high-level programs use the same syntax. Values are plain Python
objects: ``int`` for integers, ``frozenset`` for sets and ``tuple`` for
fixed-length arrays.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Mapping

# shifts beyond this are treated as faults so a stray `1 << x` cannot eat memory
MAX_SHIFT = 256


class EvalFault(Exception):
    """Expression evaluation went wrong (bad index, negative shift, ...)."""


class SortError(Exception):
    pass


# ---------------------------------------------------------------- sorts


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int
    kind = "int"

    def __post_init__(self):
        if self.lo > self.hi:
            raise SortError(f"empty range int[{self.lo}..{self.hi}]")

    def values(self) -> tuple:
        return tuple(range(self.lo, self.hi + 1))

    def contains(self, v) -> bool:
        return type(v) is int and self.lo <= v <= self.hi

    @property
    def card(self) -> int:
        return self.hi - self.lo + 1

    def __str__(self):
        return f"int[{self.lo}..{self.hi}]"


@dataclass(frozen=True)
class SetOver:
    universe: tuple
    kind = "set"

    def __post_init__(self):
        u = tuple(self.universe)
        if list(u) != sorted(set(u)):
            raise SortError("set universe must be sorted and duplicate-free")
        object.__setattr__(self, "universe", u)

    def values(self) -> tuple:
        u = self.universe
        # ordered by bitmask over the universe, so {} first
        return tuple(
            frozenset(u[i] for i in range(len(u)) if m >> i & 1)
            for m in range(1 << len(u))
        )

    def contains(self, v) -> bool:
        return isinstance(v, frozenset) and v <= frozenset(self.universe)

    @property
    def card(self) -> int:
        return 1 << len(self.universe)

    def __str__(self):
        u = self.universe
        if u and list(u) == list(range(u[0], u[-1] + 1)):
            return f"set{{{u[0]}..{u[-1]}}}"
        return "set{" + ",".join(map(str, u)) + "}"


@dataclass(frozen=True)
class ArrayOf:
    length: int
    elem: IntRange
    kind = "array"

    def __post_init__(self):
        if self.length < 1:
            raise SortError("array length must be positive")

    def values(self) -> tuple:
        return tuple(itertools.product(self.elem.values(), repeat=self.length))

    def contains(self, v) -> bool:
        return (isinstance(v, tuple) and len(v) == self.length
                and all(self.elem.contains(x) for x in v))

    @property
    def card(self) -> int:
        return self.elem.card ** self.length

    def __str__(self):
        return f"array[{self.length}] of {self.elem}"


Sort = IntRange | SetOver | ArrayOf


def value_kind(v) -> str:
    if type(v) is int:
        return "int"
    if isinstance(v, frozenset):
        return "set"
    if isinstance(v, tuple):
        return "array"
    raise TypeError(f"not a value: {v!r}")


def show_value(v) -> str:
    if isinstance(v, frozenset):
        return "{" + ",".join(map(str, sorted(v))) + "}"
    if isinstance(v, tuple):
        return "[" + ",".join(map(str, v)) + "]"
    return str(v)


# ---------------------------------------------------------------- expressions


class Expr:
    __slots__ = ()

    @cached_property
    def fn(self) -> Callable[[Mapping[str, Any]], Any]:
        return _compile_expr(self)


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class SetLit(Expr):
    value: frozenset


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class BitOr(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Shl(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class SetUnion(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class SetSingleton(Expr):
    a: Expr


@dataclass(frozen=True)
class ArrayIndex(Expr):
    arr: Expr
    idx: Expr


@dataclass(frozen=True)
class Length(Expr):
    arr: Expr


@dataclass(frozen=True)
class Sum2(Expr):
    """sum of 2^a over the elements a of a set (used by the bitmask examples)"""
    a: Expr


# ---------------------------------------------------------------- guards


class BoolExpr:
    __slots__ = ()

    @cached_property
    def fn(self) -> Callable[[Mapping[str, Any]], bool]:
        return _compile_bool(self)


@dataclass(frozen=True)
class BoolLit(BoolExpr):
    value: bool


@dataclass(frozen=True)
class Eq(BoolExpr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Lt(BoolExpr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Le(BoolExpr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Member(BoolExpr):
    a: Expr
    s: Expr


@dataclass(frozen=True)
class And(BoolExpr):
    a: BoolExpr
    b: BoolExpr


@dataclass(frozen=True)
class Or(BoolExpr):
    a: BoolExpr
    b: BoolExpr


@dataclass(frozen=True)
class Not(BoolExpr):
    a: BoolExpr


TRUE = BoolLit(True)
FALSE = BoolLit(False)


def conj(*bs: BoolExpr) -> BoolExpr:
    bs = [b for b in bs if b != TRUE]
    if not bs:
        return TRUE
    out = bs[-1]
    for b in reversed(bs[:-1]):
        out = And(b, out)
    return out


# ---------------------------------------------------------------- statements


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Stmt):
    pass


@dataclass(frozen=True)
class Assign(Stmt):
    var: str
    expr: Expr


@dataclass(frozen=True)
class NondetAssign(Stmt):
    var: str
    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class Test(Stmt):
    cond: BoolExpr


@dataclass(frozen=True)
class Assert(Stmt):
    cond: BoolExpr


@dataclass(frozen=True)
class Choice(Stmt):
    left: Stmt
    right: Stmt


@dataclass(frozen=True)
class While(Stmt):
    cond: BoolExpr
    body: Stmt


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt


SKIP = Skip()


def seq(*cs: Stmt) -> Stmt:
    """Right-associated sequence; nested Seq heads are flattened."""
    flat: list[Stmt] = []

    def push(c):
        if isinstance(c, Seq):
            push(c.first)
            push(c.second)
        else:
            flat.append(c)

    for c in cs:
        push(c)
    if not flat:
        return SKIP
    out = flat[-1]
    for c in reversed(flat[:-1]):
        out = Seq(c, out)
    return out


def if_then_else(b: BoolExpr, c1: Stmt, c2: Stmt) -> Stmt:
    return Choice(Seq(Test(b), c1), Seq(Test(Not(b)), c2))


def head_tail(c: Stmt) -> tuple[Stmt, Stmt | None]:
    if isinstance(c, Seq):
        return c.first, c.second
    return c, None


def assigned_vars(c: Stmt) -> set[str]:
    match c:
        case Assign(v, _) | NondetAssign(v, _, _):
            return {v}
        case Choice(a, b) | Seq(a, b):
            return assigned_vars(a) | assigned_vars(b)
        case While(_, body):
            return assigned_vars(body)
    return set()


def subterm_closure(c: Stmt) -> set[Stmt]:
    """Programs a configuration starting at ``c`` can be rewritten to by the
    Exec rules: suffixes, branches, loop unrollings, plus skip."""
    out: set[Stmt] = {SKIP}
    todo = [c]
    while todo:
        p = todo.pop()
        if p in out:
            continue
        out.add(p)
        h, t = head_tail(p)
        if t is None:
            match p:
                case Choice(a, b):
                    todo += [a, b]
                case While(_, body):
                    todo.append(seq(body, p))
        else:
            todo.append(t)
            match h:
                case Choice(a, b):
                    todo += [seq(a, t), seq(b, t)]
                case While(_, body):
                    todo.append(seq(body, h, t))
                case Seq():
                    todo.append(seq(h, t))
    return out


# ---------------------------------------------------------------- evaluation


def _bin(fa, fb, op):
    return lambda env: op(fa(env), fb(env))


def _shl(a, b):
    if b < 0 or b > MAX_SHIFT:
        raise EvalFault(f"bad shift amount {b}")
    return a << b


def _index(arr, i):
    if not 0 <= i < len(arr):
        raise EvalFault(f"index {i} out of bounds for length {len(arr)}")
    return arr[i]


def _sum2(s):
    if any(a < 0 or a > MAX_SHIFT for a in s):
        raise EvalFault("sum2 over out-of-range element")
    return sum(1 << a for a in s)


def _compile_expr(e: Expr):
    match e:
        case IntLit(v) | SetLit(v):
            return lambda env: v
        case Var(n):
            def look(env, n=n):
                try:
                    return env[n]
                except KeyError:
                    raise EvalFault(f"unbound name {n}") from None
            return look
        case Add(a, b):
            return _bin(a.fn, b.fn, lambda x, y: x + y)
        case Sub(a, b):
            return _bin(a.fn, b.fn, lambda x, y: x - y)
        case Mul(a, b):
            return _bin(a.fn, b.fn, lambda x, y: x * y)
        case BitOr(a, b):
            return _bin(a.fn, b.fn, lambda x, y: x | y)
        case Shl(a, b):
            return _bin(a.fn, b.fn, _shl)
        case SetUnion(a, b):
            return _bin(a.fn, b.fn, lambda x, y: x | y)
        case SetSingleton(a):
            fa = a.fn
            return lambda env: frozenset((fa(env),))
        case ArrayIndex(arr, idx):
            return _bin(arr.fn, idx.fn, _index)
        case Length(arr):
            fa = arr.fn
            return lambda env: len(fa(env))
        case Sum2(a):
            fa = a.fn
            return lambda env: _sum2(fa(env))
    raise TypeError(f"not an expression: {e!r}")


def _compile_bool(b: BoolExpr):
    match b:
        case BoolLit(v):
            return lambda env: v
        case Eq(x, y):
            return _bin(x.fn, y.fn, lambda p, q: p == q)
        case Lt(x, y):
            return _bin(x.fn, y.fn, lambda p, q: p < q)
        case Le(x, y):
            return _bin(x.fn, y.fn, lambda p, q: p <= q)
        case Member(x, s):
            return _bin(x.fn, s.fn, lambda p, q: p in q)
        case And(x, y):
            fx, fy = x.fn, y.fn
            return lambda env: fx(env) and fy(env)
        case Or(x, y):
            fx, fy = x.fn, y.fn
            return lambda env: fx(env) or fy(env)
        case Not(x):
            fx = x.fn
            return lambda env: not fx(env)
    raise TypeError(f"not a guard: {b!r}")


def eval_expr(e: Expr, env: Mapping[str, Any]):
    """Evaluate ``e``; raises EvalFault on a runtime fault."""
    return e.fn(env)


def eval_bool(b: BoolExpr, env: Mapping[str, Any]) -> bool:
    return b.fn(env)


# ---------------------------------------------------------------- sort checking


def expr_kind(e: Expr, scope: Mapping[str, str]) -> str:
    """Kind (int/set/array) of ``e`` given the kinds of names in scope."""

    def need(x, k):
        got = expr_kind(x, scope)
        if got != k:
            raise SortError(f"expected {k}, got {got} in {show_expr(x)}")

    match e:
        case IntLit(_):
            return "int"
        case SetLit(v):
            if not all(type(a) is int for a in v):
                raise SortError("set literal of non-integers")
            return "set"
        case Var(n):
            if n not in scope:
                raise SortError(f"undeclared name {n}")
            return scope[n]
        case Add(a, b) | Sub(a, b) | Mul(a, b) | BitOr(a, b) | Shl(a, b):
            need(a, "int")
            need(b, "int")
            return "int"
        case SetUnion(a, b):
            need(a, "set")
            need(b, "set")
            return "set"
        case SetSingleton(a):
            need(a, "int")
            return "set"
        case ArrayIndex(arr, idx):
            need(arr, "array")
            need(idx, "int")
            return "int"
        case Length(arr):
            need(arr, "array")
            return "int"
        case Sum2(a):
            need(a, "set")
            return "int"
    raise TypeError(f"not an expression: {e!r}")


def check_bool(b: BoolExpr, scope: Mapping[str, str]) -> None:
    match b:
        case BoolLit(_):
            return
        case Eq(x, y):
            kx, ky = expr_kind(x, scope), expr_kind(y, scope)
            if kx != ky:
                raise SortError(f"comparing {kx} with {ky}")
        case Lt(x, y) | Le(x, y):
            for z in (x, y):
                if expr_kind(z, scope) != "int":
                    raise SortError(f"ordering on non-integer {show_expr(z)}")
        case Member(x, s):
            if expr_kind(x, scope) != "int" or expr_kind(s, scope) != "set":
                raise SortError("membership needs int in set")
        case And(x, y) | Or(x, y):
            check_bool(x, scope)
            check_bool(y, scope)
        case Not(x):
            check_bool(x, scope)
        case _:
            raise TypeError(f"not a guard: {b!r}")


def check_stmt(c: Stmt, sorts: Mapping[str, Sort], scope: Mapping[str, str]) -> None:
    """``sorts`` are the assignable variables; ``scope`` everything readable."""
    match c:
        case Skip():
            return
        case Assign(v, e):
            if v not in sorts:
                raise SortError(f"assignment to undeclared variable {v}")
            k = expr_kind(e, scope)
            if k != sorts[v].kind:
                raise SortError(f"assigning {k} to {sorts[v].kind} variable {v}")
        case NondetAssign(v, lo, hi):
            if v not in sorts:
                raise SortError(f"assignment to undeclared variable {v}")
            if sorts[v].kind != "int":
                raise SortError(f"nondet into non-integer variable {v}")
            for z in (lo, hi):
                if expr_kind(z, scope) != "int":
                    raise SortError("nondet bounds must be integers")
        case Test(b) | Assert(b):
            check_bool(b, scope)
        case Choice(a, b) | Seq(a, b):
            check_stmt(a, sorts, scope)
            check_stmt(b, sorts, scope)
        case While(b, body):
            check_bool(b, scope)
            check_stmt(body, sorts, scope)
        case _:
            raise TypeError(f"not a statement: {c!r}")


@dataclass(frozen=True)
class ProgramDecl:
    vars: tuple  # ((name, Sort), ...) in declaration order
    constants: tuple = ()  # ((name, Sort, value), ...)
    body: Stmt = SKIP

    @property
    def var_sorts(self) -> dict[str, Sort]:
        return dict(self.vars)

    @property
    def const_env(self) -> dict[str, Any]:
        return {n: v for n, _, v in self.constants}

    def scope(self, extra: Mapping[str, str] = {}) -> dict[str, str]:
        sc = {n: s.kind for n, s, _ in self.constants}
        sc.update((n, s.kind) for n, s in self.vars)
        sc.update(extra)
        return sc

    def check(self) -> None:
        seen = set()
        for n, *_ in self.vars + self.constants:
            if n in seen:
                raise SortError(f"duplicate declaration of {n}")
            seen.add(n)
        for n, s, v in self.constants:
            if not s.contains(v):
                raise SortError(f"constant {n} = {show_value(v)} is not in {s}")
        check_stmt(self.body, self.var_sorts, self.scope())


def parse_program(text: str) -> ProgramDecl:
    from .syntax import parse_program as _pp
    return _pp(text)


# ---------------------------------------------------------------- printing

_EPREC = {BitOr: 1, SetUnion: 1, Shl: 2, Add: 3, Sub: 3, Mul: 4}
_EOP = {BitOr: "|", SetUnion: "∪", Shl: "<<", Add: "+", Sub: "-", Mul: "*"}


def show_expr(e: Expr, ctx: int = 0) -> str:
    p = _EPREC.get(type(e))
    if p is not None:
        s = f"{show_expr(e.a, p)} {_EOP[type(e)]} {show_expr(e.b, p + 1)}"
        return f"({s})" if p < ctx else s
    match e:
        case IntLit(v):
            return str(v) if v >= 0 else f"({v})"
        case SetLit(v):
            return show_value(v)
        case Var(n):
            return n
        case SetSingleton(a):
            return "{" + show_expr(a) + "}"
        case ArrayIndex(arr, idx):
            return f"{show_expr(arr, 9)}[{show_expr(idx)}]"
        case Length(arr):
            return f"len({show_expr(arr)})"
        case Sum2(a):
            return f"sum2({show_expr(a)})"
    raise TypeError(f"not an expression: {e!r}")


def show_bool(b: BoolExpr, ctx: int = 0) -> str:
    match b:
        case BoolLit(v):
            return "true" if v else "false"
        case Eq(x, y):
            s, p = f"{show_expr(x)} == {show_expr(y)}", 4
        case Lt(x, y):
            s, p = f"{show_expr(x)} < {show_expr(y)}", 4
        case Le(x, y):
            s, p = f"{show_expr(x)} <= {show_expr(y)}", 4
        case Member(x, y):
            s, p = f"{show_expr(x)} in {show_expr(y)}", 4
        case Or(x, y):
            s, p = f"{show_bool(x, 1)} || {show_bool(y, 2)}", 1
        case And(x, y):
            s, p = f"{show_bool(x, 2)} && {show_bool(y, 3)}", 2
        case Not(x):
            s, p = f"!{show_bool(x, 5)}", 3
        case _:
            raise TypeError(f"not a guard: {b!r}")
    return f"({s})" if p < ctx else s


def show_stmt(c: Stmt, indent: int = 0) -> str:
    return "\n".join(_stmt_lines(c, indent))


def show_stmt_inline(c: Stmt) -> str:
    return " ".join(line.strip() for line in _stmt_lines(c, 0)).removesuffix(";")


def _block(c: Stmt, ind: int) -> list[str]:
    return _stmt_lines(c, ind + 1)


def _stmt_lines(c: Stmt, ind: int) -> list[str]:
    pad = "  " * ind
    match c:
        case Skip():
            return [pad + "skip;"]
        case Assign(v, e):
            return [f"{pad}{v} := {show_expr(e)};"]
        case NondetAssign(v, lo, hi):
            return [f"{pad}{v} := nondet({show_expr(lo)}, {show_expr(hi)});"]
        case Test(b):
            return [f"{pad}assume({show_bool(b)});"]
        case Assert(b):
            return [f"{pad}assert({show_bool(b)});"]
        case Choice(a, b):
            return ([pad + "choice({"] + _block(a, ind) + [pad + "}, {"]
                    + _block(b, ind) + [pad + "});"])
        case While(b, body):
            return ([f"{pad}while ({show_bool(b)}) {{"] + _block(body, ind)
                    + [pad + "}"])
        case Seq(a, b):
            if isinstance(a, Seq):
                first = [pad + "{"] + _block(a, ind) + [pad + "}"]
            else:
                first = _stmt_lines(a, ind)
            return first + _stmt_lines(b, ind)
    raise TypeError(f"not a statement: {c!r}")


def show_decl(d: ProgramDecl) -> str:
    lines = [f"const {n} : {s} = {show_value(v)};" for n, s, v in d.constants]
    lines += [f"var {n} : {s};" for n, s in d.vars]
    return "\n".join(lines + [show_stmt(d.body)]) + "\n"
