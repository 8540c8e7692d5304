"""Command-line front end: refine-enc semantics|check|prove|fuzz|encode."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .assertions import NotDecomposable, decompose, enc_syntactic, show_assertion
from .lang import SortError
from .prover import check_proof
from .semantics import DEFAULT_X_CAP, StateSpace, denote, dump
from .syntax import ParseError, parse_program, parse_triple
from .testkit import PROPERTIES, dumps, run_property
from .triples import RelTriple, StdTriple, check_encoding_equiv, rel_valid, std_valid_all_x


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _fail(msg: str, code: int = 2):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _emit(ctx, rec: dict, text: str):
    if ctx.obj["format"] == "jsonl":
        click.echo(dumps(rec))
    else:
        click.echo(text.rstrip("\n"))


@click.group()
@click.option("--format", "fmt", type=click.Choice(["text", "jsonl"]), default="text",
              help="Report format.")
@click.option("--cap", type=click.IntRange(min=1), envvar="REFINE_ENC_X_CAP",
              default=DEFAULT_X_CAP, show_default=True,
              help="Largest high-level space whose subsets are enumerated exhaustively.")
@click.pass_context
def main(ctx, fmt, cap):
    """Relational refinement checks through the Exec encoding."""
    ctx.obj = {"format": fmt, "cap": cap}


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def semantics(ctx, file):
    """Dump the denotation of a program: one line per outcome, then errors."""
    try:
        decl = parse_program(_read(file))
    except (ParseError, SortError) as e:
        _fail(str(e))
    sp = StateSpace(decl)
    if ctx.obj["format"] == "jsonl":
        d = denote(decl.body, sp)
        for i, s in enumerate(d.succ):
            for j in sorted(s):
                click.echo(dumps({"from": sp.show(i), "to": sp.show(j)}))
        for i in sorted(d.err):
            click.echo(dumps({"err": sp.show(i)}))
    else:
        click.echo(dump(decl.body, sp), nl=False)


def _load_triple(file):
    try:
        return parse_triple(_read(file))
    except (ParseError, SortError) as e:
        _fail(str(e))


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["std", "rel", "encode-equiv"]), default="rel",
              show_default=True)
@click.option("--samples", default=256, show_default=True,
              help="Random X sets used when the high space exceeds the cap.")
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def check(ctx, file, mode, samples, seed):
    """Check a relational triple file."""
    spec = _load_triple(file)
    t = RelTriple.from_spec(spec)
    cap = ctx.obj["cap"]
    if mode == "rel":
        v = rel_valid(t)
        rec = {"mode": mode, "verdict": "valid" if v.valid else "invalid",
               "counterexample": v.counterexample}
        text = rec["verdict"] + ("" if v.valid else f"\ncounterexample: {v.counterexample}")
        _emit(ctx, rec, text)
        sys.exit(0 if v.valid else 1)
    if mode == "std":
        try:
            pre = enc_syntactic(decompose(spec.pre, t.low, t.high))
            post = enc_syntactic(decompose(spec.post, t.low, t.high))
        except NotDecomposable as e:
            _fail(f"std mode needs decomposed assertions: {e}")
        if len(t.high) > cap:
            _fail(f"{len(t.high)} high states exceed the cap {cap}; use encode-equiv")
        v = std_valid_all_x(StdTriple(pre, spec.low.body, post), t.low, t.high, cap)
        rec = {"mode": mode, "verdict": "valid" if v.valid else "invalid",
               "pre": show_assertion(pre), "post": show_assertion(post),
               "counterexample": v.counterexample}
        text = f"pre:  {rec['pre']}\npost: {rec['post']}\n{rec['verdict']}"
        if not v.valid:
            text += f"\ncounterexample: {v.counterexample}"
        _emit(ctx, rec, text)
        sys.exit(0 if v.valid else 1)
    rep = check_encoding_equiv(t, cap=cap, samples=samples, seed=seed)
    if rep.mode == "sampled":
        click.echo(f"warning: {len(t.high)} high states exceed the cap {cap}; "
                   "X was sampled, so an encoded 'valid' is not a proof", err=True)
    rec = {"mode": mode, **rep.record()}
    word = lambda b: "valid" if b else "invalid"
    text = (f"relational: {word(rep.relational)}\n"
            f"encoded (all X, {rep.mode}, {rep.x_checked} sets): {word(rep.encoded_all_x)}\n"
            f"agree: {str(rep.agree).lower()}")
    if rep.counterexample:
        text += f"\ncounterexample: {rep.counterexample}"
    _emit(ctx, rec, text)
    sys.exit(3 if not rep.agree else 0 if rep.relational else 1)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--oracle/--no-oracle", default=False,
              help="Cross-check a certified goal against the semantic oracles.")
@click.pass_context
def prove(ctx, file, oracle):
    """Check an annotated proof script."""
    rep = check_proof(_read(file), oracle=oracle, cap=ctx.obj["cap"])
    if ctx.obj["format"] == "jsonl":
        for r in rep.records():
            click.echo(dumps(r))
    else:
        click.echo(rep.text(), nl=False)
    sys.exit(rep.exit_code)


@main.command()
@click.option("--property", "prop", type=click.Choice(sorted(PROPERTIES)), required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--count", default=100, show_default=True, type=click.IntRange(min=0))
@click.option("--depth", default=3, show_default=True, type=click.IntRange(min=0))
@click.option("--cases-dir", default="fuzz-cases", show_default=True,
              help="Where failing cases are written.")
@click.option("--inject-bug", is_flag=True, hidden=True)
@click.pass_context
def fuzz(ctx, prop, seed, count, depth, cases_dir, inject_bug):
    """Run a generated property suite."""
    n = ok = accepted = 0
    failures = []
    for rec in run_property(prop, seed, count, depth, ctx.obj["cap"], inject_bug):
        n += 1
        ok += rec["ok"]
        accepted += rec.get("accepted", True)
        if not rec["ok"]:
            failures.append(rec)
        if ctx.obj["format"] == "jsonl":
            click.echo(dumps({k: v for k, v in rec.items() if k != "replay"}))
    d = Path(cases_dir)
    for rec in failures:
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"{prop}-seed{seed}-case{rec['case']}.txt"
        path.write_text(f"// property {prop}, seed {seed}, depth {depth}, case {rec['case']}\n"
                        f"// replay: refine-enc fuzz --property {prop} --seed {seed} "
                        f"--depth {depth} --count {rec['case'] + 1}\n"
                        + rec.get("replay", ""), encoding="utf-8")
    if failures:
        click.echo(f"{len(failures)} failing case(s) written to {d}/", err=True)
    summary = {"property": prop, "seed": seed, "count": n, "ok": ok, "accepted": accepted,
               "failed": n - ok}
    word = "agree" if prop in ("thm4", "decomp", "thm16") else "pass"
    _emit(ctx, {"summary": summary},
          f"{prop}: {ok}/{n} {word} ({accepted} accepted)")
    sys.exit(0 if ok == n else 1)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def encode(ctx, file):
    """Print the Exec encoding of a triple file's pre and post."""
    spec = _load_triple(file)
    low, high = StateSpace(spec.low), StateSpace(spec.high)
    try:
        pre = show_assertion(enc_syntactic(decompose(spec.pre, low, high)))
        post = show_assertion(enc_syntactic(decompose(spec.post, low, high)))
    except NotDecomposable as e:
        _fail(str(e))
    _emit(ctx, {"pre": pre, "post": post}, f"pre:  {pre}\npost: {post}")


if __name__ == "__main__":
    main()
