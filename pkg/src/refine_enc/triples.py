"""Validity of standard and relational triples, the encoding equivalence
check, and vertical composition."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .assertions import (
    Exists, HighA, LowA, ProgA, RelSem, SynAssertion, a_and, closure_of, enc_matrix,
    rel_sem, sat_at, sat_unary, link_bin_unary, compose_bin,
)
from .lang import SKIP, BoolExpr, Stmt, show_stmt_inline
from .semantics import (
    DEFAULT_X_CAP, CapExceeded, StateSpace, XFamily, config_refines, denote,
)


class PremiseFails(Exception):
    pass


class SpaceMismatch(Exception):
    pass


class InhabitantFails(Exception):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass
class Verdict:
    valid: bool
    counterexample: str | None = None

    def __bool__(self):
        return self.valid


# ---------------------------------------------------------------- standard triples


@dataclass(frozen=True)
class StdTriple:
    pre: SynAssertion
    stmt: Stmt
    post: SynAssertion


def std_valid_sets(pre, c: Stmt, post, space: StateSpace) -> Verdict:
    d = denote(c, space)
    post = frozenset(post)
    for i in sorted(pre):
        if i in d.err:
            return Verdict(False, f"may fault from {space.show(i)}")
        bad = d.succ[i] - post
        if bad:
            return Verdict(False, f"{space.show(i)} reaches {space.show(min(bad))}")
    return Verdict(True)


def std_valid(t: StdTriple, low: StateSpace, high: StateSpace | None = None,
              X=None, env={}) -> Verdict:
    """Validity of {pre} stmt {post}; Exec atoms are read at the given X."""
    pre = sat_at(t.pre, X, low, high, env)
    post = sat_at(t.post, X, low, high, env)
    return std_valid_sets(pre, t.stmt, post, low)


def std_valid_matrix(pre_m: np.ndarray, c: Stmt, post_m: np.ndarray,
                     space: StateSpace) -> np.ndarray:
    """Column k: the triple with pre/post read at the k-th X is valid."""
    d = denote(c, space)
    bad = d.matrix().astype(np.float32) @ (~post_m).astype(np.float32) > 0.5
    viol = pre_m & (d.err_vector()[:, None] | bad)
    return ~viol.any(axis=0)


def std_valid_all_x(t: StdTriple, low: StateSpace, high: StateSpace,
                    cap: int = DEFAULT_X_CAP) -> Verdict:
    from .assertions import sat_matrix
    fam = XFamily.all(high, cap)
    ok = std_valid_matrix(sat_matrix(t.pre, low, fam), t.stmt,
                          sat_matrix(t.post, low, fam), low)
    if ok.all():
        return Verdict(True)
    k = int(np.flatnonzero(~ok)[0])
    x = fam.subset(k)
    why = std_valid(t, low, high, x).counterexample
    return Verdict(False, f"X = {{{', '.join(high.show(i) for i in sorted(x))}}}: {why}")


# ---------------------------------------------------------------- relational triples


@dataclass
class RelTriple:
    pre: SynAssertion
    stmt: Stmt
    post: SynAssertion
    low: StateSpace
    high: StateSpace
    closure: frozenset = field(default=None)

    def __post_init__(self):
        if self.closure is None:
            self.closure = closure_of(self.pre, self.post)

    @classmethod
    def from_spec(cls, spec) -> "RelTriple":
        low, high = StateSpace(spec.low), StateSpace(spec.high)
        return cls(spec.pre, spec.low.body, spec.post, low, high)

    def pre_sem(self) -> RelSem:
        return rel_sem(self.pre, self.low, self.high, self.closure)

    def post_sem(self) -> RelSem:
        return rel_sem(self.post, self.low, self.high, self.closure)


def rel_valid_sem(P: RelSem, c: Stmt, Q: RelSem) -> Verdict:
    """Direct check of relational validity: every low run from a related
    triple is simulated, errors included, by a configuration refinement."""
    low, high = P.low, P.high
    dl = denote(c, low)
    by_low: dict[int, list] = {}
    for l2, h2, c2 in Q.triples():
        by_low.setdefault(l2, []).append((h2, c2))
    for l1, h1, c1 in sorted(P.triples(), key=lambda t: (t[0], t[1], show_stmt_inline(t[2]))):
        herr = h1 in denote(c1, high).err
        if l1 in dl.err and not herr:
            return Verdict(False, f"low faults at {low.show(l1)} but high "
                                  f"{high.show(h1)} with {show_stmt_inline(c1)} does not")
        if herr:
            continue
        for l2 in sorted(dl.succ[l1]):
            if not any(config_refines(h1, c1, h2, c2, high) for h2, c2 in by_low.get(l2, ())):
                return Verdict(False, f"low run {low.show(l1)} -> {low.show(l2)} is not "
                                      f"matched from high {high.show(h1)} with "
                                      f"{show_stmt_inline(c1)}")
    return Verdict(True)


def rel_valid(t: RelTriple) -> Verdict:
    return rel_valid_sem(t.pre_sem(), t.stmt, t.post_sem())


@dataclass
class EncodingReport:
    relational: bool
    encoded_all_x: bool
    mode: str  # exhaustive | sampled
    x_checked: int
    counterexample: str | None = None

    @property
    def agree(self) -> bool:
        return self.relational == self.encoded_all_x

    def record(self) -> dict:
        return {"relational": self.relational, "encodedAllX": self.encoded_all_x,
                "agree": self.agree, "mode": self.mode, "xChecked": self.x_checked,
                "counterexample": self.counterexample}


def _sampled_family(P: RelSem, high: StateSpace, samples: int, seed: int) -> XFamily:
    rng = random.Random(seed)
    sets = []
    seen = set()
    # canonical witnesses: terminal sets of the related high configurations
    for _, h1, c1 in P.triples():
        t = denote(c1, high).succ[h1]
        if t not in seen:
            seen.add(t)
            sets.append(t)
    n = len(high)
    for _ in range(samples):
        sets.append(frozenset(i for i in range(n) if rng.random() < 0.5))
    sets.append(frozenset(range(n)))
    return XFamily.of(high, sets)


def check_encoding_equiv(t: RelTriple, cap: int = DEFAULT_X_CAP, samples: int = 256,
                         seed: int = 0, inject_bug: bool = False) -> EncodingReport:
    """Relational validity against validity of the encoded standard triple
    for every X. ``inject_bug`` makes the encoded route ignore errors in wlp
    (test-only fault injection)."""
    P, Q = t.pre_sem(), t.post_sem()
    rel = rel_valid_sem(P, t.stmt, Q)
    try:
        fam = XFamily.all(t.high, cap)
        mode = "exhaustive"
    except CapExceeded:
        fam = _sampled_family(P, t.high, samples, seed)
        mode = "sampled"
    fam.errors = not inject_bug
    ok = std_valid_matrix(enc_matrix(P, fam), t.stmt, enc_matrix(Q, fam), t.low)
    enc_ok = bool(ok.all())
    cex = None
    if not enc_ok:
        k = int(np.flatnonzero(~ok)[0])
        x = fam.subset(k)
        cex = "X = {" + ", ".join(t.high.show(i) for i in sorted(x)) + "}"
    if not rel.valid:
        cex = rel.counterexample if cex is None else f"{rel.counterexample}; {cex}"
    return EncodingReport(rel.valid, enc_ok, mode, len(fam), cex)


# ---------------------------------------------------------------- vertical composition


@dataclass
class Refinement:
    """<pre /\\ prog[high_prog]> low_prog <post /\\ prog[skip]> with binary
    pre/post given as bool matrices over (low state, high state)."""
    pre: np.ndarray
    low_prog: Stmt
    high_prog: Stmt
    post: np.ndarray
    low: StateSpace
    high: StateSpace

    def valid(self) -> Verdict:
        P = RelSem(self.low, self.high, {self.high_prog: self.pre})
        Q = RelSem(self.low, self.high, {SKIP: self.post})
        return rel_valid_sem(P, self.low_prog, Q)


@dataclass
class VCResult:
    pre: frozenset
    post: frozenset
    verdict: Verdict


def vc_fc(ref: Refinement, high_pre, high_post) -> VCResult:
    """Link a refinement with a high-level triple {high_pre} high_prog {high_post}."""
    v = ref.valid()
    if not v:
        raise PremiseFails(f"refinement premise: {v.counterexample}")
    v = std_valid_sets(high_pre, ref.high_prog, high_post, ref.high)
    if not v:
        raise PremiseFails(f"high-level triple premise: {v.counterexample}")
    pre = link_bin_unary(ref.pre, high_pre)
    post = link_bin_unary(ref.post, high_post)
    return VCResult(pre, post, std_valid_sets(pre, ref.low_prog, post, ref.low))


def vc_refine(r1: Refinement, r2: Refinement) -> Refinement:
    """Chain r1 (low1 refines mid) with r2 (mid refines high2)."""
    if r1.high is not r2.low and r1.high.decl != r2.low.decl:
        raise SpaceMismatch("the middle state spaces differ")
    if r1.high_prog != r2.low_prog:
        raise SpaceMismatch("the middle programs differ")
    for name, r in (("first", r1), ("second", r2)):
        v = r.valid()
        if not v:
            raise PremiseFails(f"{name} refinement: {v.counterexample}")
    return Refinement(compose_bin(r1.pre, r2.pre), r1.low_prog, r2.high_prog,
                      compose_bin(r1.post, r2.post), r1.low, r2.high)


@dataclass
class StoreShape:
    """Refinement <exists u. L[pre_low] /\\ H[pre_high] /\\ prog[high_prog]>
    low_prog <exists v. L[post_low] /\\ H[post_high] /\\ prog[skip]>."""
    u: tuple  # (name, Sort)
    pre_low: SynAssertion
    pre_high: SynAssertion
    v: tuple
    post_low: SynAssertion
    post_high: SynAssertion
    low_prog: Stmt
    high_prog: Stmt

    def triple(self, low, high) -> RelTriple:
        (u, su), (v, sv) = self.u, self.v
        pre = Exists(u, su, a_and(LowA(self.pre_low), HighA(self.pre_high),
                                  ProgA(self.high_prog)))
        post = Exists(v, sv, a_and(LowA(self.post_low), HighA(self.post_high), ProgA(SKIP)))
        return RelTriple(pre, self.low_prog, post, low, high)


def vc_store_rule(shape: StoreShape, b1: BoolExpr, b2: BoolExpr,
                  low: StateSpace, high: StateSpace) -> VCResult:
    (u, su), (v, sv) = shape.u, shape.v
    rv = rel_valid(shape.triple(low, high))
    if not rv:
        raise PremiseFails(f"refinement premise: {rv.counterexample}")
    b1_ok = {d: bool(b1.fn({**low.consts, u: d})) for d in su.values()}
    b2_ok = {d: bool(b2.fn({**low.consts, v: d})) for d in sv.values()}
    for d in su.values():
        if b1_ok[d] and not sat_unary(shape.pre_high, high, {u: d}):
            raise InhabitantFails(f"no high state satisfies the stored precondition "
                                  f"for {u} = {d!r}", d)
    hpre = frozenset().union(*(sat_unary(shape.pre_high, high, {u: d})
                               for d in su.values() if b1_ok[d]))
    hpost = frozenset(i for i in range(len(high))
                      if all(b2_ok[d] or i not in sat_unary(shape.post_high, high, {v: d})
                             for d in sv.values()))
    hv = std_valid_sets(hpre, shape.high_prog, hpost, high)
    if not hv:
        raise PremiseFails(f"high-level triple premise: {hv.counterexample}")
    lpre = frozenset().union(*(sat_unary(shape.pre_low, low, {u: d})
                               for d in su.values() if b1_ok[d]))
    lpost = frozenset().union(*(sat_unary(shape.post_low, low, {v: d})
                                for d in sv.values() if b2_ok[d]))
    return VCResult(lpre, lpost, std_valid_sets(lpre, shape.low_prog, lpost, low))
