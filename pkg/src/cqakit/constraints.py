"""Universal integrity constraints, functional and key dependencies, and
violation detection.

A universal constraint has the clausal shape

    body_1, ..., body_m  ->  head_1 | ... | head_n | phi

where the body and head atoms are positive predicate atoms and phi is a
disjunction of =/!= built-ins over body variables.  Denial constraints are
the deletion-only case head = empty; FDs and keys are kept in structured
form as well because the repair machinery treats them specially.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import ParseError, SchemaError
from .relational import Atom, Instance, Schema, Term, Var, is_constant, is_variable

Assignment = tuple[tuple[str, str], ...]  # ((var name, constant), ...) sorted by var


@dataclass(frozen=True, slots=True)
class BuiltinAtom:
    """An equality or inequality between two terms."""

    op: str  # "=" or "!="
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in ("=", "!="):
            raise ValueError(f"bad builtin op {self.op!r}")

    def negated(self) -> "BuiltinAtom":
        return BuiltinAtom("!=" if self.op == "=" else "=", self.lhs, self.rhs)

    def variables(self) -> tuple[Var, ...]:
        return tuple(t for t in (self.lhs, self.rhs) if isinstance(t, Var))

    def substitute(self, sub: dict[Var, str]) -> "BuiltinAtom":
        lhs = sub.get(self.lhs, self.lhs) if isinstance(self.lhs, Var) else self.lhs
        rhs = sub.get(self.rhs, self.rhs) if isinstance(self.rhs, Var) else self.rhs
        return BuiltinAtom(self.op, lhs, rhs)

    def eval_ground(self) -> bool:
        if isinstance(self.lhs, Var) or isinstance(self.rhs, Var):
            raise ValueError(f"builtin {self} is not ground")
        return (self.lhs == self.rhs) if self.op == "=" else (self.lhs != self.rhs)

    def __str__(self) -> str:
        ls = self.lhs.name if isinstance(self.lhs, Var) else self.lhs
        rs = self.rhs.name if isinstance(self.rhs, Var) else self.rhs
        return f"{ls} {self.op} {rs}"


@dataclass(frozen=True)
class UniversalConstraint:
    """Range-restricted universal constraint body -> heads | phi."""

    body: tuple[Atom, ...]
    head_atoms: tuple[Atom, ...] = ()
    head_builtins: tuple[BuiltinAtom, ...] = ()  # the disjunction phi
    label: str = ""

    def __post_init__(self):
        if not self.body:
            raise SchemaError("constraint needs a nonempty body")
        body_vars = {v for a in self.body for v in a.variables()}
        for a in self.head_atoms:
            for v in a.variables():
                if v not in body_vars:
                    raise SchemaError(f"head variable {v} of {a} does not occur in the body")
        for b in self.head_builtins:
            for v in b.variables():
                if v not in body_vars:
                    raise SchemaError(f"builtin variable {v} does not occur in the body")

    @property
    def deletion_only(self) -> bool:
        """True when violations can only be cured by deletions (no head atoms)."""
        return not self.head_atoms

    def variables(self) -> tuple[Var, ...]:
        seen: list[Var] = []
        for a in self.body:
            for v in a.variables():
                if v not in seen:
                    seen.append(v)
        return tuple(seen)

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.body)
        heads = [str(a) for a in self.head_atoms] + [str(b) for b in self.head_builtins]
        if heads:
            return f"ic {body} -> {' | '.join(heads)}."
        return f"denial {body}."


@dataclass(frozen=True, slots=True)
class FD:
    """Functional dependency: lhs positions determine the rhs position (1-based)."""

    predicate: str
    lhs: frozenset[int]
    rhs: int

    def __post_init__(self):
        if not self.lhs:
            raise SchemaError("FD needs at least one lhs position")
        if self.rhs in self.lhs:
            raise SchemaError("FD rhs position must not be an lhs position")

    def check(self, schema: Schema) -> None:
        arity = schema.arity(self.predicate)
        for pos in sorted(self.lhs) + [self.rhs]:
            if not 1 <= pos <= arity:
                raise SchemaError(f"position {pos} out of range for {self.predicate}/{arity}")

    def __str__(self) -> str:
        return f"fd {self.predicate} : {','.join(map(str, sorted(self.lhs)))} -> {self.rhs}."


@dataclass(frozen=True, slots=True)
class KeyConstraint:
    """Key positions determining every other position; expands to a set of FDs."""

    predicate: str
    key: frozenset[int]

    def __post_init__(self):
        if not self.key:
            raise SchemaError("key needs at least one position")

    def check(self, schema: Schema) -> None:
        arity = schema.arity(self.predicate)
        for pos in sorted(self.key):
            if not 1 <= pos <= arity:
                raise SchemaError(f"position {pos} out of range for {self.predicate}/{arity}")

    def expand(self, schema: Schema) -> tuple[FD, ...]:
        arity = schema.arity(self.predicate)
        return tuple(
            FD(self.predicate, self.key, pos) for pos in range(1, arity + 1) if pos not in self.key
        )

    def __str__(self) -> str:
        return f"key {self.predicate} : {','.join(map(str, sorted(self.key)))}."


Constraint = Union[UniversalConstraint, FD, KeyConstraint]


def fd_to_constraint(fd: FD, schema: Schema) -> UniversalConstraint:
    """The clausal form of an FD: two body copies sharing the lhs variables,
    fresh rhs variables y1/y2, pairwise-fresh variables elsewhere, and the
    head disjunction (y1 = y2)."""
    fd.check(schema)
    arity = schema.arity(fd.predicate)
    key = sorted(fd.lhs)
    key_vars = {pos: Var("X" if len(key) == 1 else f"X{i}") for i, pos in enumerate(key, 1)}
    y1, y2 = Var("Y1"), Var("Y2")

    def copy_args(which: int, y: Var) -> tuple[Term, ...]:
        args: list[Term] = []
        for pos in range(1, arity + 1):
            if pos in fd.lhs:
                args.append(key_vars[pos])
            elif pos == fd.rhs:
                args.append(y)
            else:
                args.append(Var(f"W{pos}_{which}"))
        return tuple(args)

    body = (Atom(fd.predicate, copy_args(1, y1)), Atom(fd.predicate, copy_args(2, y2)))
    return UniversalConstraint(body, (), (BuiltinAtom("=", y1, y2),), label=str(fd))


def as_universal(c: Constraint, schema: Schema) -> tuple[UniversalConstraint, ...]:
    """Normalize any constraint to its universal clausal form(s)."""
    if isinstance(c, UniversalConstraint):
        return (c,)
    if isinstance(c, FD):
        return (fd_to_constraint(c, schema),)
    if isinstance(c, KeyConstraint):
        return tuple(fd_to_constraint(fd, schema) for fd in c.expand(schema))
    raise TypeError(f"not a constraint: {c!r}")


def structured_fds(constraints: Sequence[Constraint], schema: Schema) -> list[FD]:
    """Collect the structured FDs, expanding keys; ignores universal constraints."""
    out: list[FD] = []
    for c in constraints:
        if isinstance(c, FD):
            out.append(c)
        elif isinstance(c, KeyConstraint):
            out.extend(c.expand(schema))
    return out


# -- violation detection -------------------------------------------------------


def _match_body(body: Sequence[Atom], by_pred: dict[str, list[tuple[str, ...]]]):
    """Yield all substitutions making every body atom hold in the instance."""

    def extend(i: int, sub: dict[Var, str]):
        if i == len(body):
            yield dict(sub)
            return
        atom = body[i]
        for tup in by_pred.get(atom.pred, ()):
            new = dict(sub)
            ok = True
            for term, const in zip(atom.args, tup):
                if isinstance(term, Var):
                    if new.setdefault(term, const) != const:
                        ok = False
                        break
                elif term != const:
                    ok = False
                    break
            if ok:
                yield from extend(i + 1, new)

    yield from extend(0, {})


def violations(instance: Instance, c: UniversalConstraint) -> frozenset[Assignment]:
    """All assignments to the body variables witnessing a violation: every body
    atom holds, no head atom holds, and the built-in disjunction is false.
    Empty iff the instance satisfies the constraint."""
    by_pred: dict[str, list[tuple[str, ...]]] = {}
    for a in instance.atoms:
        by_pred.setdefault(a.pred, []).append(a.args)
    found: set[Assignment] = set()
    for sub in _match_body(c.body, by_pred):
        if any(b.substitute(sub).eval_ground() for b in c.head_builtins):
            continue
        if any(h.substitute(sub).to_ground() in instance.atoms for h in c.head_atoms):
            continue
        found.add(tuple(sorted((v.name, const) for v, const in sub.items())))
    return frozenset(found)


def satisfies(instance: Instance, constraints: Sequence[Constraint]) -> bool:
    for c in constraints:
        for uc in as_universal(c, instance.schema):
            if violations(instance, uc):
                return False
    return True


# -- the constraint DSL ---------------------------------------------------------
#
#   fd P : i,j -> k.
#   key P : i,j.
#   ic A1, ..., Am -> B1 | ... | Bn [| builtin-disjuncts].
#   denial A1, ..., Am [, builtins].
#
# Variables are uppercase-initial, constants lowercase-initial.

_TOKEN = re.compile(r"%[^\n]*|\s+|->|!=|[A-Za-z0-9_]+|[(),.:|=]")


def _tokens(text: str):
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
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


class _Cursor:
    def __init__(self, text: str):
        self.toks = list(_tokens(text))
        self.i = 0

    def peek(self) -> str | None:
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def pos(self) -> tuple[int, int]:
        if self.i < len(self.toks):
            return self.toks[self.i][1], self.toks[self.i][2]
        return self.toks[-1][1], self.toks[-1][2] if self.toks else (1, 1)

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            line, col = self.toks[-1][1:] if self.toks else (1, 1)
            raise ParseError("unexpected end of input", line, col)
        self.i += 1
        return tok

    def expect(self, want: str) -> None:
        line, col = self.pos()
        tok = self.next()
        if tok != want:
            raise ParseError(f"expected {want!r}, got {tok!r}", line, col)


def _parse_term(cur: _Cursor) -> Term:
    line, col = cur.pos()
    tok = cur.next()
    if is_variable(tok):
        return Var(tok)
    if is_constant(tok):
        return tok
    raise ParseError(f"expected a term, got {tok!r}", line, col)


def _parse_atom(cur: _Cursor, schema: Schema) -> Atom:
    line, col = cur.pos()
    name = cur.next()
    if not is_constant(name):
        raise ParseError(f"expected predicate name, got {name!r}", line, col)
    args: list[Term] = []
    if cur.peek() == "(":
        cur.next()
        while True:
            args.append(_parse_term(cur))
            if cur.peek() == ")":
                cur.next()
                break
            cur.expect(",")
    if not schema.has(name):
        raise SchemaError(f"line {line}: unknown predicate {name!r}")
    if schema.arity(name) != len(args):
        raise SchemaError(
            f"line {line}: {name} written with {len(args)} argument(s), "
            f"schema arity is {schema.arity(name)}"
        )
    return Atom(name, tuple(args))


def _parse_positions(cur: _Cursor) -> list[int]:
    out = []
    while True:
        line, col = cur.pos()
        tok = cur.next()
        if not tok.isdigit():
            raise ParseError(f"expected an attribute position, got {tok!r}", line, col)
        out.append(int(tok))
        if cur.peek() != ",":
            return out
        cur.next()


def _maybe_builtin(cur: _Cursor) -> BuiltinAtom | None:
    # lookahead: TERM (=|!=) TERM
    save = cur.i
    try:
        lhs = _parse_term(cur)
        op = cur.peek()
        if op not in ("=", "!="):
            cur.i = save
            return None
        cur.next()
        rhs = _parse_term(cur)
        return BuiltinAtom(op, lhs, rhs)
    except ParseError:
        cur.i = save
        return None


def parse_constraints(text: str, schema: Schema) -> list[Constraint]:
    """Parse the constraint DSL, one declaration per statement."""
    cur = _Cursor(text)
    out: list[Constraint] = []
    while cur.peek() is not None:
        line, col = cur.pos()
        kw = cur.next()
        if kw == "fd":
            pred = cur.next()
            cur.expect(":")
            lhs = _parse_positions(cur)
            cur.expect("->")
            rhs = _parse_positions(cur)
            cur.expect(".")
            if len(rhs) != 1:
                raise ParseError("an fd declaration has exactly one rhs position", line, col)
            fd = FD(pred, frozenset(lhs), rhs[0])
            if not schema.has(pred):
                raise SchemaError(f"line {line}: unknown predicate {pred!r}")
            fd.check(schema)
            out.append(fd)
        elif kw == "key":
            pred = cur.next()
            cur.expect(":")
            key = KeyConstraint(pred, frozenset(_parse_positions(cur)))
            cur.expect(".")
            if not schema.has(pred):
                raise SchemaError(f"line {line}: unknown predicate {pred!r}")
            key.check(schema)
            out.append(key)
        elif kw == "ic":
            body = [_parse_atom(cur, schema)]
            while cur.peek() == ",":
                cur.next()
                body.append(_parse_atom(cur, schema))
            cur.expect("->")
            heads: list[Atom] = []
            builtins: list[BuiltinAtom] = []
            while True:
                b = _maybe_builtin(cur)
                if b is not None:
                    builtins.append(b)
                else:
                    heads.append(_parse_atom(cur, schema))
                if cur.peek() != "|":
                    break
                cur.next()
            cur.expect(".")
            out.append(
                UniversalConstraint(tuple(body), tuple(heads), tuple(builtins), label=f"ic@{line}")
            )
        elif kw == "denial":
            body: list[Atom] = []
            builtins: list[BuiltinAtom] = []
            while True:
                b = _maybe_builtin(cur)
                if b is not None:
                    builtins.append(b)
                else:
                    body.append(_parse_atom(cur, schema))
                if cur.peek() != ",":
                    break
                cur.next()
            cur.expect(".")
            if not body:
                raise ParseError("denial needs at least one database atom", line, col)
            # not(body & b1 & ...) == body -> (!b1 | ...): flip each builtin into the head
            out.append(
                UniversalConstraint(
                    tuple(body),
                    (),
                    tuple(b.negated() for b in builtins),
                    label=f"denial@{line}",
                )
            )
        else:
            raise ParseError(f"expected fd/key/ic/denial, got {kw!r}", line, col)
    return out
