"""Executable model of relational refinement checked through an Exec encoding."""

from .lang import ProgramDecl, Stmt, SortError
from .semantics import Denotation, StateSpace, denote, wlp
from .syntax import ParseError, parse_program, parse_triple
from .triples import RelTriple, StdTriple, check_encoding_equiv, rel_valid
from .prover import check_proof

__all__ = [
    "Denotation", "ParseError", "ProgramDecl", "RelTriple", "SortError", "StateSpace",
    "StdTriple", "Stmt", "check_encoding_equiv", "check_proof", "denote", "parse_program",
    "parse_triple", "rel_valid", "wlp",
]
