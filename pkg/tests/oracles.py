"""Brute-force reference implementations used as test oracles.

Everything here works on plain dict environments and explicit run traces,
sharing nothing with the package except the AST classes and expression
evaluation."""

from __future__ import annotations

import itertools

from refine_enc.lang import (
    Assert, Assign, Choice, EvalFault, NondetAssign, Seq, Skip, Test, While, eval_bool,
    eval_expr,
)

ERR = "err"


def _key(env, names):
    return tuple(env[n] for n in names)


def _guard(b, env):
    try:
        return eval_bool(b, env)
    except EvalFault:
        return None


def step(c, env, sorts) -> list:
    """All outcomes of running c from env: new envs or ERR."""
    match c:
        case Skip():
            return [env]
        case Assign(x, e):
            try:
                v = eval_expr(e, env)
            except EvalFault:
                return [ERR]
            return [{**env, x: v}] if sorts[x].contains(v) else [ERR]
        case NondetAssign(x, lo, hi):
            try:
                a, b = eval_expr(lo, env), eval_expr(hi, env)
            except EvalFault:
                return [ERR]
            return [{**env, x: v} if sorts[x].contains(v) else ERR for v in range(a, b + 1)]
        case Test(b):
            g = _guard(b, env)
            return [ERR] if g is None else [env] if g else []
        case Assert(b):
            g = _guard(b, env)
            return [env] if g else [ERR]
        case Choice(a, b):
            return step(a, env, sorts) + step(b, env, sorts)
        case Seq(a, b):
            out = []
            for r in step(a, env, sorts):
                out += [ERR] if r is ERR else step(b, r, sorts)
            return out
        case While(b, body):
            # explore loop-head environments until no new one appears
            names = sorted(sorts)
            seen, todo, out = set(), [env], []
            while todo:
                e = todo.pop()
                k = _key(e, names)
                if k in seen:
                    continue
                seen.add(k)
                g = _guard(b, e)
                if g is None:
                    out.append(ERR)
                elif not g:
                    out.append(e)
                else:
                    for r in step(body, e, sorts):
                        if r is ERR:
                            out.append(ERR)
                        else:
                            todo.append(r)
            return out
    raise TypeError(c)


def outcomes(c, decl, env) -> tuple[set, bool]:
    """(final states as value tuples, whether some run faults)."""
    sorts = decl.var_sorts
    names = [n for n, _ in decl.vars]
    rs = step(c, {**decl.const_env, **env}, sorts)
    return {_key(r, names) for r in rs if r is not ERR}, any(r is ERR for r in rs)


def all_envs(decl):
    names = [n for n, _ in decl.vars]
    for vals in itertools.product(*(s.values() for _, s in decl.vars)):
        yield dict(zip(names, vals))


def wlp_states(c, decl, X) -> set:
    """Value tuples from which c cannot fault and only ends inside X."""
    names = [n for n, _ in decl.vars]
    out = set()
    for env in all_envs(decl):
        fin, err = outcomes(c, decl, env)
        if not err and fin <= X:
            out.add(_key(env, names))
    return out


def refines(s1, c1, s2, c2, decl) -> bool:
    """Configuration refinement straight from its definition."""
    names = [n for n, _ in decl.vars]
    t1, e1 = outcomes(c1, decl, dict(zip(names, s1)))
    t2, e2 = outcomes(c2, decl, dict(zip(names, s2)))
    return t2 <= t1 and (not e2 or e1)


def rel_valid(triples_pre, low_decl, low_prog, triples_post, high_decl) -> bool:
    """Relational validity over explicit (low tuple, high tuple, program)
    triples: every low run from a related triple is matched by a
    refinement into some post triple, and low faults need high faults."""
    by_low = {}
    for l2, h2, c2 in triples_post:
        by_low.setdefault(l2, []).append((h2, c2))
    lnames = [n for n, _ in low_decl.vars]
    hnames = [n for n, _ in high_decl.vars]
    for l1, h1, c1 in triples_pre:
        fin, lerr = outcomes(low_prog, low_decl, dict(zip(lnames, l1)))
        _, herr = outcomes(c1, high_decl, dict(zip(hnames, h1)))
        if herr:
            continue
        if lerr:
            return False
        for l2 in fin:
            if not any(refines(h1, c1, h2, c2, high_decl) for h2, c2 in by_low.get(l2, ())):
                return False
    return True


def assertion_holds(a, lenv, henv, prog, env=None) -> bool:
    """Direct evaluation of a relational assertion at (low env, high env,
    high program)."""
    from refine_enc.assertions import AAnd, AOr, Exists, HighA, LowA, Pred, ProgA
    env = env or {}
    match a:
        case Pred(b):
            g = _guard(b, {**lenv, **henv, **env})
            return bool(g)
        case LowA(x):
            return assertion_holds(x, lenv, {}, prog, env)
        case HighA(x):
            return assertion_holds(x, {}, henv, prog, env)
        case ProgA(c):
            return prog == c
        case AAnd(x, y):
            return (assertion_holds(x, lenv, henv, prog, env)
                    and assertion_holds(y, lenv, henv, prog, env))
        case AOr(x, y):
            return (assertion_holds(x, lenv, henv, prog, env)
                    or assertion_holds(y, lenv, henv, prog, env))
        case Exists(v, srt, body):
            return any(assertion_holds(body, lenv, henv, prog, {**env, v: d})
                       for d in srt.values())
    raise TypeError(a)


def enc(a, low_decl, high_decl, progs, X) -> set:
    """Low value tuples with some related high state and program whose wlp
    towards X contains that high state."""
    lnames = [n for n, _ in low_decl.vars]
    hnames = [n for n, _ in high_decl.vars]
    wl = {c: wlp_states(c, high_decl, X) for c in progs}
    out = set()
    for lenv in all_envs(low_decl):
        le = {**low_decl.const_env, **lenv}
        for henv in all_envs(high_decl):
            he = {**high_decl.const_env, **henv}
            if any(_key(henv, hnames) in wl[c] and assertion_holds(a, le, he, c)
                   for c in progs):
                out.add(_key(lenv, lnames))
                break
    return out
