"""Concrete syntax: programs, assertions, triple files and proof scripts.

One LALR grammar covers everything. Boolean guards and assertions share the
formula syntax; the transformer keeps a formula as a plain guard as long as
it only uses guard constructs and promotes it to an assertion otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from .assertions import (
    AAnd, AOr, ExecAtom, Exists, HighA, LowA, Pred, ProgA, SynAssertion,
    check_assertion,
)
from .lang import (
    FALSE, TRUE, Add, And, ArrayIndex, ArrayOf, Assert, Assign, BitOr, BoolExpr,
    Choice, Eq, Expr, IntLit, IntRange, Le, Length, Lt, Member, Mul, Not, NondetAssign,
    Or, ProgramDecl, SetLit, SetOver, SetSingleton, SetUnion, Shl, SKIP,
    SortError, Stmt, Sub, Sum2, Test, Var, While, if_then_else, seq,
)

GRAMMAR = r"""
start: decl* stmts
triple_file: tsection*
formula_only: formula
stmts_only: stmts
directive_only: directive

?tsection: decl
    | "low" "{" vdecl* stmts "}"        -> low_block
    | "high" "{" vdecl* stmts "}"       -> high_block
    | "pre" ":" formula ";"?            -> pre
    | "post" ":" formula ";"?           -> post

?decl: vdecl
    | "const" NAME ":" sort "=" value ";"   -> const_decl
    | "proc" NAME block                     -> proc_decl
vdecl: "var" NAME ":" sort ";"

sort: "int" "[" sint ".." sint "]"                       -> int_sort
    | "set" "{" sint ".." sint "}"                       -> set_range_sort
    | "set" "{" [sint ("," sint)*] "}"                   -> set_list_sort
    | "array" "[" SIGNED "]" "of" "int" "[" sint ".." sint "]"   -> array_sort
value: sint                          -> int_value
    | "{" [sint ("," sint)*] "}"     -> set_value
    | "[" [sint ("," sint)*] "]"     -> array_value
sint: SIGNED

stmts: item* simple?
?item: simple ";"
    | compound ";"?
    | ANNOT                           -> annot
?compound: "while" "(" formula ")" block                         -> while_
    | "if" "(" formula ")" "then"? block ("else" block)?          -> if_
    | block
block: "{" stmts "}"
?simple: "skip"                                      -> skip
    | NAME assign_op "nondet" "(" formula "," formula ")" -> nondet
    | NAME assign_op formula                         -> assign
    | "assume" "(" formula ")"                       -> assume
    | "assert" "(" formula ")"                       -> assert_
    | "choice" "(" branch "," branch ")"             -> choice
    | NAME                                           -> call
?branch: block | simple
!assign_op: ":=" | "="
!cmpop: "==" | "!=" | "<=" | ">=" | "<" | ">"

?formula: "exists" binders "." formula    -> exists
    | or_
binders: binder ("," binder)*
binder: NAME ":" sort
?or_: and_ ("||" and_)*
?and_: not_ ("&&" not_)*
?not_: "!" not_                 -> not_
    | cmp
?cmp: arith
    | arith cmpop arith         -> compare
    | arith "in" arith          -> member
?arith: shl
    | arith BOR shl             -> bor
?shl: add
    | shl "<<" add              -> shl
?add: mul
    | add ADDOP mul             -> addop
?mul: unary
    | mul "*" unary             -> mul
?unary: "-" unary               -> neg
    | postfix
?postfix: atom
    | postfix "[" formula "]"   -> index
?atom: SIGNED                   -> num
    | NAME                      -> var
    | "true"                    -> true
    | "false"                   -> false
    | "(" formula ")"
    | "{" [formula ("," formula)*] "}"     -> setlit
    | "len" "(" formula ")"                -> length
    | "sum2" "(" formula ")"               -> sum2
    | "Exec" "[" formula ";" stmts "]"     -> exec_atom
    | "L" "[" formula "]"                  -> low_lift
    | "H" "[" formula "]"                  -> high_lift
    | "prog" "[" stmts "]"                 -> prog_lift

directive: "assert" formula                           -> d_assert
    | "invariant" formula                             -> d_invariant
    | "exintro" NAME+                                 -> d_exintro
    | "exec" RULE                                     -> d_rule
    | "exec" "nondet" formula                         -> d_nondet
    | "exec" "focus" "{" formula "}"                  -> d_focus
    | "exec" "pure" "->" stmts                        -> d_pure
    | "exec" "skip"                                   -> d_skip

RULE.2: "assign" | "choice-left" | "choice-right" | "assume" | "while-unroll"
    | "while-end" | "assert"
BOR: /\|(?!\|)/ | "∪" | "\\/"
ADDOP: "+" | "-"
SIGNED: /\d+/
NAME: /(?!(skip|nondet|assume|assert|choice|while|if|then|else|exists|true|false|in|len|sum2|Exec|prog|var|const|proc|low|high|pre|post|int|set|array|of)\b)[A-Za-z_][A-Za-z_0-9']*/
ANNOT.3: /\/\/[ \t]*@[^\n]*(\n[ \t]*\/\/[ \t]{2,}[^@\s][^\n]*)*/
COMMENT: /\/\/[^\n]*/
%import common.WS
%ignore WS
%ignore COMMENT
"""

_parser = Lark(GRAMMAR, parser="lalr",
               start=["start", "triple_file", "formula_only", "stmts_only", "directive_only"],
               propagate_positions=True, maybe_placeholders=False)


class ParseError(Exception):
    def __init__(self, msg, line=None, column=None):
        loc = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(msg + loc)
        self.line, self.column = line, column


# ---------------------------------------------------------------- raw statement items
# Statements are first parsed into items that still carry proof annotations;
# build() turns them into plain Stmt values.


@dataclass(frozen=True)
class Annot:
    text: str
    line: int


@dataclass(frozen=True)
class SimpleI:
    stmt: Stmt
    line: int


@dataclass(frozen=True)
class WhileI:
    cond: BoolExpr
    body: tuple
    line: int


@dataclass(frozen=True)
class IfI:
    cond: BoolExpr
    then: tuple
    other: tuple
    line: int


@dataclass(frozen=True)
class BlockI:
    items: tuple
    line: int


@dataclass(frozen=True)
class ChoiceI:
    left: tuple
    right: tuple
    line: int


def build(items) -> Stmt:
    parts = []
    for it in items:
        match it:
            case Annot():
                continue
            case SimpleI(s):
                parts.append(s)
            case WhileI(b, body):
                parts.append(While(b, build(body)))
            case IfI(b, t, e):
                parts.append(if_then_else(b, build(t), build(e)))
            case BlockI(inner):
                parts.append(build(inner))
            case ChoiceI(a, b):
                parts.append(Choice(build(a), build(b)))
    return seq(*parts)


# ---------------------------------------------------------------- transformer


def _as_bool(x, what="guard") -> BoolExpr:
    if isinstance(x, BoolExpr):
        return x
    if isinstance(x, Pred):
        return x.cond
    raise SortError(f"expected a boolean {what}")


def _as_assertion(x) -> SynAssertion:
    if isinstance(x, BoolExpr):
        return Pred(x)
    if isinstance(x, SynAssertion):
        return x
    raise SortError("expected a formula, found an expression")


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    raise SortError("expected an expression, found a formula")


def _line(meta):
    return getattr(meta, "line", 0)


@v_args(inline=True)
class _T(Transformer):
    def __init__(self):
        super().__init__()
        self.procs: dict[str, tuple] = {}
        self.vars: list = []
        self.consts: list = []
        self.the_low = None
        self.the_high = None
        self.the_pre = None
        self.the_post = None

    # sorts and values
    def sint(self, t):
        return int(t)

    def int_sort(self, lo, hi):
        return IntRange(lo, hi)

    def set_range_sort(self, lo, hi):
        return SetOver(tuple(range(lo, hi + 1)))

    def set_list_sort(self, *xs):
        return SetOver(tuple(sorted(set(xs))))

    def array_sort(self, n, lo, hi):
        return ArrayOf(int(n), IntRange(lo, hi))

    def int_value(self, v):
        return v

    def set_value(self, *xs):
        return frozenset(xs)

    def array_value(self, *xs):
        return tuple(xs)

    # declarations
    def vdecl(self, name, sort):
        return ("var", str(name), sort)

    def const_decl(self, name, sort, value):
        self.consts.append((str(name), sort, value))
        return ("const",)

    @v_args(inline=True, meta=True)
    def proc_decl(self, meta, name, block):
        if str(name) in self.procs:
            raise SortError(f"procedure {name} defined twice")
        self.procs[str(name)] = block.items
        return ("proc",)

    # statements
    def stmts(self, *items):
        return tuple(items)

    @v_args(inline=True, meta=True)
    def block(self, meta, items):
        return BlockI(items, _line(meta))

    def annot(self, tok):
        # continuation lines are comments indented by two or more spaces
        text = " ".join(re.sub(r"^\s*//[ \t]*@?", "", ln).strip()
                        for ln in str(tok).splitlines())
        return Annot(text, tok.line)

    @v_args(inline=True, meta=True)
    def skip(self, meta):
        return SimpleI(SKIP, _line(meta))

    @v_args(inline=True, meta=True)
    def assign(self, meta, name, _op, e):
        return SimpleI(Assign(str(name), _as_expr(e)), _line(meta))

    @v_args(inline=True, meta=True)
    def nondet(self, meta, name, _op, lo, hi):
        return SimpleI(NondetAssign(str(name), _as_expr(lo), _as_expr(hi)), _line(meta))

    def assign_op(self, tok):
        return str(tok)

    @v_args(inline=True, meta=True)
    def assume(self, meta, b):
        return SimpleI(Test(_as_bool(b)), _line(meta))

    @v_args(inline=True, meta=True)
    def assert_(self, meta, b):
        return SimpleI(Assert(_as_bool(b)), _line(meta))

    @v_args(inline=True, meta=True)
    def choice(self, meta, a, b):
        wrap = lambda x: x.items if isinstance(x, BlockI) else (x,)
        return ChoiceI(wrap(a), wrap(b), _line(meta))

    @v_args(inline=True, meta=True)
    def call(self, meta, name):
        if str(name) not in self.procs:
            raise SortError(f"unknown procedure or statement {name}")
        return BlockI(self.procs[str(name)], _line(meta))

    @v_args(inline=True, meta=True)
    def while_(self, meta, b, body):
        return WhileI(_as_bool(b), body.items, _line(meta))

    @v_args(inline=True, meta=True)
    def if_(self, meta, b, then, other=None):
        return IfI(_as_bool(b), then.items, other.items if other else (), _line(meta))

    # formulas
    def num(self, t):
        return IntLit(int(t))

    def var(self, t):
        return Var(str(t))

    def true(self):
        return TRUE

    def false(self):
        return FALSE

    def neg(self, e):
        if isinstance(e, IntLit):
            return IntLit(-e.value)
        return Sub(IntLit(0), _as_expr(e))

    def setlit(self, *xs):
        xs = [_as_expr(x) for x in xs if x is not None]
        if len(xs) == 1:
            return SetSingleton(xs[0])
        lits = frozenset(x.value for x in xs if isinstance(x, IntLit))
        rest = [SetSingleton(x) for x in xs if not isinstance(x, IntLit)]
        if not rest:
            return SetLit(lits)
        out = rest[0]
        for r in rest[1:]:
            out = SetUnion(out, r)
        return SetUnion(SetLit(lits), out) if lits else out

    def length(self, e):
        return Length(_as_expr(e))

    def sum2(self, e):
        return Sum2(_as_expr(e))

    def index(self, a, i):
        return ArrayIndex(_as_expr(a), _as_expr(i))

    def mul(self, a, b):
        return Mul(_as_expr(a), _as_expr(b))

    def addop(self, a, op, b):
        return (Add if op == "+" else Sub)(_as_expr(a), _as_expr(b))

    def shl(self, a, b):
        return Shl(_as_expr(a), _as_expr(b))

    def bor(self, a, op, b):
        return (BitOr if op == "|" else SetUnion)(_as_expr(a), _as_expr(b))

    def cmpop(self, tok):
        return str(tok)

    def compare(self, a, op, b):
        a, b = _as_expr(a), _as_expr(b)
        return {"==": lambda: Eq(a, b), "!=": lambda: Not(Eq(a, b)),
                "<": lambda: Lt(a, b), "<=": lambda: Le(a, b),
                ">": lambda: Lt(b, a), ">=": lambda: Le(b, a)}[str(op)]()

    def member(self, a, s):
        return Member(_as_expr(a), _as_expr(s))

    def not_(self, b):
        return Not(_as_bool(b, "operand of !"))

    def and_(self, *xs):
        return self._fold(xs, And, AAnd)

    def or_(self, *xs):
        return self._fold(xs, Or, AOr)

    @staticmethod
    def _fold(xs, bop, aop):
        if all(isinstance(x, BoolExpr) for x in xs):
            out = xs[0]
            for x in xs[1:]:
                out = bop(out, x)
            return out
        out = _as_assertion(xs[0])
        for x in xs[1:]:
            out = aop(out, _as_assertion(x))
        return out

    def binder(self, name, sort):
        return (str(name), sort)

    def binders(self, *bs):
        return bs

    def exists(self, bs, body):
        body = _as_assertion(body)
        for v, s in reversed(bs):
            body = Exists(v, s, body)
        return body

    def exec_atom(self, h, items):
        return ExecAtom(_as_assertion(h), build(items))

    def low_lift(self, a):
        return LowA(_as_assertion(a))

    def high_lift(self, a):
        return HighA(_as_assertion(a))

    def prog_lift(self, items):
        return ProgA(build(items))

    # directives
    def d_assert(self, f):
        return ("assert", _as_assertion(f))

    def d_invariant(self, f):
        return ("invariant", _as_assertion(f))

    def d_exintro(self, *names):
        return ("exintro", tuple(map(str, names)))

    def d_rule(self, tok):
        return ("rule", str(tok))

    def d_nondet(self, f):
        return ("nondet", _as_expr(f))

    def d_focus(self, f):
        return ("focus", _as_assertion(f))

    def d_pure(self, items):
        return ("pure", build(items))

    def d_skip(self):
        return ("skip",)

    # files
    def low_block(self, *parts):
        self.the_low = ([p for p in parts[:-1]], parts[-1])
        return ("low",)

    def high_block(self, *parts):
        self.the_high = ([p for p in parts[:-1]], parts[-1])
        return ("high",)

    def pre(self, f):
        self.the_pre = _as_assertion(f)
        return ("pre",)

    def post(self, f):
        self.the_post = _as_assertion(f)
        return ("post",)


def _run(text: str, start: str, t: _T | None = None):
    t = t or _T()
    try:
        tree = _parser.parse(text, start=start)
    except UnexpectedInput as e:
        first = re.sub(r"\s*at line \d+,? col(umn)? \d+\.?$", "", str(e).splitlines()[0])
        raise ParseError(f"syntax error: {first}",
                         getattr(e, "line", None), getattr(e, "column", None)) from None
    try:
        return t.transform(tree), t
    except VisitError as e:
        inner = e.orig_exc
        if isinstance(inner, (SortError, ParseError)):
            raise inner from None
        raise


# ---------------------------------------------------------------- public entry points


def parse_program(text: str) -> ProgramDecl:
    tree, t = _run(text, "start")
    decls, items = tree.children[:-1], tree.children[-1]
    vars_ = tuple((n, s) for kind, *rest in decls if kind == "var" for n, s in [rest])
    d = ProgramDecl(vars_, tuple(t.consts), build(items))
    d.check()
    return d


def parse_stmt(text: str) -> Stmt:
    tree, _ = _run(text, "stmts_only")
    return build(tree.children[0])


def parse_formula(text: str, procs: dict | None = None):
    """Parse a guard or assertion; returns a BoolExpr when it is a plain guard."""
    t = _T()
    if procs:
        t.procs.update(procs)
    tree, _ = _run(text, "formula_only", t)
    return tree.children[0]


def parse_assertion(text: str, procs: dict | None = None) -> SynAssertion:
    return _as_assertion(parse_formula(text, procs))


def parse_guard(text: str) -> BoolExpr:
    return _as_bool(parse_formula(text))


def parse_directive(text: str, procs: dict | None = None):
    t = _T()
    if procs:
        t.procs.update(procs)
    tree, _ = _run(text, "directive_only", t)
    return tree.children[0]


@dataclass
class TripleSpec:
    low: ProgramDecl
    high: ProgramDecl
    pre: SynAssertion
    post: SynAssertion
    low_items: tuple
    procs: dict = field(default_factory=dict)

    def check(self) -> None:
        self.low.check()
        self.high.check()
        clash = set(self.low.var_sorts) & {n for n, *_ in self.low.constants}
        if clash:
            raise SortError(f"variables shadow constants: {sorted(clash)}")
        lo, hi = self.low.scope(), self.high.scope()
        for a in (self.pre, self.post):
            check_assertion(a, {**lo, **hi}, low_scope=lo, high_scope=hi, relational=True)


def parse_triple(text: str) -> TripleSpec:
    _, t = _run(text, "triple_file")
    if t.the_low is None:
        raise ParseError("missing low { ... } block")
    if t.the_high is None:
        raise ParseError("missing high { ... } block")
    if t.the_post is None:
        raise ParseError("missing post: assertion")
    consts = tuple(t.consts)
    lv, litems = t.the_low
    hv, hitems = t.the_high
    low = ProgramDecl(tuple((n, s) for _, n, s in lv), consts, build(litems))
    high = ProgramDecl(tuple((n, s) for _, n, s in hv), consts, build(hitems))
    pre = t.the_pre if t.the_pre is not None else ProgA(high.body)
    spec = TripleSpec(low, high, pre, t.the_post, litems, dict(t.procs))
    spec.check()
    return spec
