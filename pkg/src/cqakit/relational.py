"""Core relational vocabulary: constants, variables, schemas, ground atoms,
database instances, and ingestion of fact files and CSV relations.

Constants are identifier tokens starting with a lowercase letter, a digit, or
an underscore; distinct lexemes denote distinct individuals (unique names).
Variables start with an uppercase letter and may occur in rules, constraints,
and queries, but never in facts.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .errors import ParseError, SchemaError

CONSTANT_RE = re.compile(r"[a-z0-9_][A-Za-z0-9_]*\Z")
VARIABLE_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")


def is_constant(token: str) -> bool:
    return bool(CONSTANT_RE.match(token))


def is_variable(token: str) -> bool:
    return bool(VARIABLE_RE.match(token))


@dataclass(frozen=True, slots=True, order=True)
class Var:
    """A first-order variable (uppercase-initial)."""

    name: str

    def __str__(self) -> str:
        return self.name


# A term is a variable or a constant lexeme.
Term = Union[Var, str]


def term_str(t: Term) -> str:
    return t.name if isinstance(t, Var) else t


@dataclass(frozen=True, slots=True)
class Atom:
    """A predicate atom whose arguments may mix variables and constants."""

    pred: str
    args: tuple[Term, ...]

    def variables(self) -> tuple[Var, ...]:
        seen: list[Var] = []
        for a in self.args:
            if isinstance(a, Var) and a not in seen:
                seen.append(a)
        return tuple(seen)

    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def substitute(self, sub: dict[Var, str]) -> "Atom":
        return Atom(self.pred, tuple(sub.get(a, a) if isinstance(a, Var) else a for a in self.args))

    def to_ground(self) -> "GroundAtom":
        if not self.is_ground():
            raise ValueError(f"atom {self} is not ground")
        return GroundAtom(self.pred, tuple(str(a) for a in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(term_str(a) for a in self.args)})"


@dataclass(frozen=True, slots=True, order=True)
class GroundAtom:
    """A variable-free atom; doubles as a database tuple."""

    pred: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(self.args)})"


@dataclass(frozen=True, slots=True)
class PredicateSig:
    name: str
    arity: int


@dataclass(frozen=True)
class Schema:
    """A relational schema: predicate signatures plus optionally declared constants.

    Declared constants extend the evaluation domain beyond the active domain
    (used e.g. when a finite underlying domain is fixed up front).
    """

    predicates: tuple[PredicateSig, ...]
    declared_constants: tuple[str, ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.predicates]
        if len(names) != len(set(names)):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate predicate name(s): {', '.join(dup)}")
        for p in self.predicates:
            if not is_constant(p.name):
                raise SchemaError(f"bad predicate name {p.name!r}")
            if p.arity < 0:
                raise SchemaError(f"negative arity for {p.name}")
        for c in self.declared_constants:
            if not is_constant(c):
                raise SchemaError(f"bad constant lexeme {c!r}")

    @staticmethod
    def of(**arities: int) -> "Schema":
        return Schema(tuple(PredicateSig(n, a) for n, a in arities.items()))

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[str, int]], constants: Iterable[str] = ()) -> "Schema":
        return Schema(tuple(PredicateSig(n, a) for n, a in pairs), tuple(constants))

    def has(self, name: str) -> bool:
        return any(p.name == name for p in self.predicates)

    def arity(self, name: str) -> int:
        for p in self.predicates:
            if p.name == name:
                return p.arity
        raise SchemaError(f"unknown predicate {name!r}")

    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.predicates)


@dataclass(frozen=True)
class Instance:
    """A finite set of ground atoms over a schema; set semantics throughout.

    Iteration order is canonical: lexicographic by (predicate name, args).
    """

    atoms: frozenset[GroundAtom]
    schema: Schema

    def __post_init__(self):
        for a in self.atoms:
            if not self.schema.has(a.pred):
                raise SchemaError(f"atom {a} uses predicate absent from the schema")
            if len(a.args) != self.schema.arity(a.pred):
                raise SchemaError(
                    f"atom {a} has arity {len(a.args)}, schema says {self.schema.arity(a.pred)}"
                )

    def __iter__(self) -> Iterator[GroundAtom]:
        return iter(sorted(self.atoms))

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: GroundAtom) -> bool:
        return atom in self.atoms

    def extension(self, pred: str) -> frozenset[tuple[str, ...]]:
        return frozenset(a.args for a in self.atoms if a.pred == pred)

    def with_atoms(self, add: Iterable[GroundAtom] = (), remove: Iterable[GroundAtom] = ()) -> "Instance":
        return Instance(self.atoms.union(add).difference(remove), self.schema)

    def canonical_text(self) -> str:
        return "".join(f"{a}.\n" for a in self)


def active_domain(instance: Instance, extra: Iterable[str] = ()) -> tuple[str, ...]:
    """All constants occurring in the instance, united with `extra`, sorted."""
    dom = {c for a in instance.atoms for c in a.args}
    dom.update(extra)
    return tuple(sorted(dom))


def instance_delta(d: Instance, d_prime: Instance) -> tuple[frozenset[GroundAtom], frozenset[GroundAtom]]:
    """Symmetric-difference split: (deleted, inserted) = (d \\ d', d' \\ d)."""
    if d.schema.predicates != d_prime.schema.predicates:
        raise SchemaError("instance_delta requires both instances to share a schema")
    return d.atoms - d_prime.atoms, d_prime.atoms - d.atoms


_FACT_TOKEN = re.compile(r"%[^\n]*|\s+|[A-Za-z0-9_]+|[(),.]")


def _fact_tokens(text: str):
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _FACT_TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        tok = m.group(0)
        if not tok.startswith("%") and not tok.isspace():
            yield tok, line, col
        nl = tok.count("\n")
        if nl:
            line += nl
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    yield None, line, col


def parse_fact_file(text: str, schema: Schema | None = None) -> Instance:
    """Parse a fact file (`p(a,b). q(c).`, `%` comments) into an Instance.

    With an explicit schema every predicate is arity-checked against it; with
    schema=None a schema is inferred from the facts themselves.  Duplicate
    facts collapse (set semantics).  Variables are rejected.
    """
    toks = _fact_tokens(text)
    atoms: set[GroundAtom] = set()
    arities: dict[str, int] = {}
    tok, line, col = next(toks)
    while tok is not None:
        if not re.match(r"[A-Za-z0-9_]+\Z", tok):
            raise ParseError(f"expected predicate name, got {tok!r}", line, col)
        if not is_constant(tok):
            raise ParseError(f"predicate name {tok!r} must be lowercase-initial", line, col)
        pred, pline, pcol = tok, line, col
        args: list[str] = []
        tok, line, col = next(toks)
        if tok == "(":
            while True:
                tok, line, col = next(toks)
                if tok is None or tok in "(),.":
                    raise ParseError("expected a constant argument", line, col)
                if is_variable(tok):
                    raise ParseError(f"variable {tok!r} not allowed in a fact", line, col)
                args.append(tok)
                tok, line, col = next(toks)
                if tok == ")":
                    break
                if tok != ",":
                    raise ParseError(f"expected ',' or ')', got {tok!r}", line, col)
            tok, line, col = next(toks)
        if tok != ".":
            raise ParseError(f"expected '.' after fact, got {tok!r}", line, col)
        if schema is not None:
            if not schema.has(pred):
                raise SchemaError(f"line {pline}: unknown predicate {pred!r}")
            if schema.arity(pred) != len(args):
                raise SchemaError(
                    f"line {pline}: {pred} written with {len(args)} argument(s), "
                    f"schema arity is {schema.arity(pred)}"
                )
        else:
            if arities.setdefault(pred, len(args)) != len(args):
                raise SchemaError(f"line {pline}: {pred} used with inconsistent arities")
        atoms.add(GroundAtom(pred, tuple(args)))
        tok, line, col = next(toks)
    if schema is None:
        schema = Schema.from_pairs(sorted(arities.items()))
    return Instance(frozenset(atoms), schema)


def atoms_from_csv(pred: str, text: str, header: bool = False) -> list[GroundAtom]:
    """Map each row of an RFC-4180 CSV text to an atom of predicate `pred`."""
    rows = list(csv.reader(io.StringIO(text)))
    if header and rows:
        rows = rows[1:]
    out: list[GroundAtom] = []
    width: int | None = None
    for i, row in enumerate(rows, start=1 + (1 if header else 0)):
        if not row:
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"csv row {i}: expected {width} column(s), got {len(row)}")
        for cell in row:
            if not is_constant(cell):
                raise ParseError(f"csv row {i}: cell {cell!r} is not a valid constant lexeme")
        out.append(GroundAtom(pred, tuple(row)))
    return out
