"""Compilation of integrity constraints and queries into disjunctive repair
programs whose stable models encode exactly the repairs.

Two generators are provided: the general one handles any set of universal
constraints, using t/f/star/double-star annotation predicates, one rule per
head-atom partition of each constraint; the FD-specialized one needs only
the f annotation, because FD violations are cured by deletions alone.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .asp import Literal, Program, Rule
from .constraints import (
    FD,
    Constraint,
    KeyConstraint,
    UniversalConstraint,
    as_universal,
    fd_to_constraint,
    structured_fds,
)
from .errors import SchemaError
from .relational import Atom, Instance, Schema, Var

ANNOTATIONS = ("t", "f", "s", "ds")


@dataclass(frozen=True)
class AnnotationScheme:
    """Maps each base predicate to its generated annotation predicate names.

    Default names are p_t, p_f, p_s, p_ds (inserted, deleted, true-or-inserted,
    true-in-the-repair); a reserved `__` prefix resolves collisions with user
    predicates.
    """

    names: tuple[tuple[str, tuple[str, str, str, str]], ...]  # base -> (t, f, s, ds)

    def _get(self, base: str, i: int) -> str:
        for b, quad in self.names:
            if b == base:
                return quad[i]
        raise SchemaError(f"no annotations for predicate {base!r}")

    def t(self, base: str) -> str:
        return self._get(base, 0)

    def f(self, base: str) -> str:
        return self._get(base, 1)

    def s(self, base: str) -> str:
        return self._get(base, 2)

    def ds(self, base: str) -> str:
        return self._get(base, 3)

    def bases(self) -> tuple[str, ...]:
        return tuple(b for b, _ in self.names)

    def generated(self) -> frozenset[str]:
        return frozenset(n for _, quad in self.names for n in quad)

    def annotation_level(self, pred: str) -> int | None:
        """0 for base predicates, 1 for t/f/star, 2 for double-star."""
        for b, (t, f, s, ds) in self.names:
            if pred == b:
                return 0
            if pred in (t, f, s):
                return 1
            if pred == ds:
                return 2
        return None


def annotation_scheme(schema: Schema, reserved: Iterable[str] = ()) -> AnnotationScheme:
    taken = set(schema.names()) | set(reserved)
    rows = []
    for base in schema.names():
        quad = []
        for suffix in ANNOTATIONS:
            name = f"{base}_{suffix}"
            while name in taken:
                name = "__" + name
            taken.add(name)
            quad.append(name)
        rows.append((base, tuple(quad)))
    return AnnotationScheme(tuple(rows))


def _pos(atom: Atom) -> Literal:
    return Literal(False, atom)


def _neg(atom: Atom) -> Literal:
    return Literal(True, atom)


def _arg_vars(prefix: str, arity: int) -> tuple[Var, ...]:
    return tuple(Var(f"{prefix}{i}") for i in range(1, arity + 1))


def general_sections(
    ics: Sequence[UniversalConstraint],
    schema: Schema,
    scheme: AnnotationScheme | None = None,
    faithful_appendix: bool = False,
) -> dict[str, tuple[Rule, ...]]:
    """The general repair program, split into its rule groups.

    Per constraint, one rule for each of the 2^n partitions (Q', Q'') of its
    head atoms: delete a body atom or insert a head atom whenever every body
    atom is star-true, the Q' heads are deleted, the Q'' heads are absent,
    and the built-in disjunction is false.  Deletion-only constraint sets
    need no insertions, so the t rules and the program constraints are
    omitted unless faithful_appendix forces the full output.
    """
    scheme = scheme or annotation_scheme(schema)
    deletions_suffice = all(ic.deletion_only for ic in ics) and not faithful_appendix

    repair: list[Rule] = []
    for ic in ics:
        body_star = tuple(_pos(Atom(scheme.s(a.pred), a.args)) for a in ic.body)
        phi_bar = tuple(Literal(False, b.negated()) for b in ic.head_builtins)
        head = tuple(
            itertools.chain(
                (Atom(scheme.f(a.pred), a.args) for a in ic.body),
                (Atom(scheme.t(a.pred), a.args) for a in ic.head_atoms),
            )
        )
        n = len(ic.head_atoms)
        for split in range(1 << n):
            absent = [j for j in range(n) if split >> j & 1]
            deleted = [j for j in range(n) if not split >> j & 1]
            body = (
                body_star
                + tuple(_pos(Atom(scheme.f(ic.head_atoms[j].pred), ic.head_atoms[j].args)) for j in deleted)
                + tuple(_neg(ic.head_atoms[j]) for j in absent)
                + phi_bar
            )
            repair.append(Rule(head, body))

    annotation: list[Rule] = []
    interpretation: list[Rule] = []
    constraints: list[Rule] = []
    for base in schema.names():
        xs = _arg_vars("X", schema.arity(base))
        annotation.append(Rule((Atom(scheme.s(base), xs),), (_pos(Atom(base, xs)),)))
        if not deletions_suffice:
            annotation.append(
                Rule((Atom(scheme.s(base), xs),), (_pos(Atom(scheme.t(base), xs)),))
            )
        interpretation.append(
            Rule(
                (Atom(scheme.ds(base), xs),),
                (_pos(Atom(scheme.s(base), xs)), _neg(Atom(scheme.f(base), xs))),
            )
        )
        if not deletions_suffice:
            constraints.append(
                Rule((), (_pos(Atom(scheme.t(base), xs)), _pos(Atom(scheme.f(base), xs))))
            )
    return {
        "repair": tuple(repair),
        "annotation": tuple(annotation),
        "interpretation": tuple(interpretation),
        "constraint": tuple(constraints),
    }


def gen_repair_program_general(
    ics: Sequence[UniversalConstraint],
    schema: Schema,
    scheme: AnnotationScheme | None = None,
    faithful_appendix: bool = False,
) -> Program:
    sections = general_sections(ics, schema, scheme, faithful_appendix)
    rules = (
        sections["repair"]
        + sections["annotation"]
        + sections["interpretation"]
        + sections["constraint"]
    )
    prog = Program(rules)
    prog.check_safety()
    return prog


def fd_sections(
    fds: Sequence[FD],
    schema: Schema,
    scheme: AnnotationScheme | None = None,
) -> dict[str, tuple[Rule, ...]]:
    """The FD-specialized repair program: one disjunctive deletion rule per FD
    (shared key variables, fresh rhs variables, pairwise-fresh elsewhere) and
    one interpretation rule per schema predicate.  No t annotations, no stars,
    no program constraints."""
    scheme = scheme or annotation_scheme(schema)
    by_pred: dict[str, list[FD]] = {}
    for fd in fds:
        fd.check(schema)
        by_pred.setdefault(fd.predicate, []).append(fd)

    repair: list[Rule] = []
    for fd in fds:
        arity = schema.arity(fd.predicate)
        key = sorted(fd.lhs)
        key_vars = {pos: Var("X" if len(key) == 1 else f"X{i}") for i, pos in enumerate(key, 1)}
        y1, y2 = Var("Y1"), Var("Y2")

        def copy_args(which: int, y: Var) -> tuple:
            args = []
            for pos in range(1, arity + 1):
                if pos in fd.lhs:
                    args.append(key_vars[pos])
                elif pos == fd.rhs:
                    args.append(y)
                else:
                    args.append(Var(f"W{pos}_{which}"))
            return tuple(args)

        a1, a2 = copy_args(1, y1), copy_args(2, y2)
        repair.append(
            Rule(
                (Atom(scheme.f(fd.predicate), a1), Atom(scheme.f(fd.predicate), a2)),
                (
                    _pos(Atom(fd.predicate, a1)),
                    _pos(Atom(fd.predicate, a2)),
                    Literal(False, fd_to_constraint(fd, schema).head_builtins[0].negated()),
                ),
            )
        )

    interpretation: list[Rule] = []
    for base in schema.names():
        xs = _arg_vars("X", schema.arity(base))
        interpretation.append(
            Rule(
                (Atom(scheme.ds(base), xs),),
                (_pos(Atom(base, xs)), _neg(Atom(scheme.f(base), xs))),
            )
        )
    return {
        "repair": tuple(repair),
        "annotation": (),
        "interpretation": tuple(interpretation),
        "constraint": (),
    }


def gen_repair_program_fd(
    fds: Sequence[FD],
    schema: Schema,
    scheme: AnnotationScheme | None = None,
) -> Program:
    """FD repair program; falls back to the general generator (on the denial
    forms) when some predicate carries more than one FD."""
    by_pred: dict[str, int] = {}
    for fd in fds:
        by_pred[fd.predicate] = by_pred.get(fd.predicate, 0) + 1
    if any(n > 1 for n in by_pred.values()):
        return gen_repair_program_general(
            [fd_to_constraint(fd, schema) for fd in fds], schema, scheme
        )
    sections = fd_sections(fds, schema, scheme)
    prog = Program(sections["repair"] + sections["interpretation"])
    prog.check_safety()
    return prog


def repair_sections(
    constraints: Sequence[Constraint],
    schema: Schema,
    scheme: AnnotationScheme | None = None,
    faithful_appendix: bool = False,
) -> dict[str, tuple[Rule, ...]]:
    """Dispatch: all-FD/key constraint sets (one FD per predicate) get the
    specialized program, everything else the general one."""
    fds = structured_fds(constraints, schema)
    all_fd = all(isinstance(c, (FD, KeyConstraint)) for c in constraints)
    one_per_pred = len({fd.predicate for fd in fds}) == len(fds)
    if all_fd and one_per_pred and not faithful_appendix:
        return fd_sections(fds, schema, scheme)
    ics = [uc for c in constraints for uc in as_universal(c, schema)]
    return general_sections(ics, schema, scheme, faithful_appendix)


def repair_program(
    constraints: Sequence[Constraint],
    schema: Schema,
    scheme: AnnotationScheme | None = None,
    faithful_appendix: bool = False,
) -> Program:
    sections = repair_sections(constraints, schema, scheme, faithful_appendix)
    prog = Program(
        sections["repair"]
        + sections["annotation"]
        + sections["interpretation"]
        + sections["constraint"]
    )
    prog.check_safety()
    return prog


# -- queries ---------------------------------------------------------------------


@dataclass(frozen=True)
class QuerySpec:
    """A non-recursive stratified normal Datalog query with a designated
    answer predicate that appears only in rule heads."""

    rules: tuple[Rule, ...]
    answer_pred: str = "ans"

    def intensional(self) -> frozenset[str]:
        return frozenset(a.pred for r in self.rules for a in r.head)

    def arity(self) -> int:
        for r in self.rules:
            for a in r.head:
                if a.pred == self.answer_pred:
                    return len(a.args)
        raise SchemaError(f"answer predicate {self.answer_pred!r} never defined")

    def validate(self, schema: Schema) -> None:
        intensional = self.intensional()
        if self.answer_pred not in intensional:
            raise SchemaError(f"answer predicate {self.answer_pred!r} never defined")
        arities: dict[str, int] = {}
        edges: set[tuple[str, str]] = set()
        for rule in self.rules:
            if len(rule.head) != 1:
                raise SchemaError(f"query rules must be normal (one head atom): {rule}")
            rule.check_safety()
            head = rule.head[0]
            for atom in itertools.chain([head], rule.pos_atoms, rule.neg_atoms):
                if arities.setdefault(atom.pred, len(atom.args)) != len(atom.args):
                    raise SchemaError(f"predicate {atom.pred} used with two arities")
            for atom in itertools.chain(rule.pos_atoms, rule.neg_atoms):
                if atom.pred == self.answer_pred:
                    raise SchemaError(
                        f"answer predicate {self.answer_pred!r} may appear only in heads"
                    )
                if atom.pred in intensional:
                    edges.add((atom.pred, head.pred))
                elif not schema.has(atom.pred):
                    raise SchemaError(f"unknown extensional predicate {atom.pred!r}")
                elif schema.arity(atom.pred) != len(atom.args):
                    raise SchemaError(f"{atom} does not match the schema arity")
        # non-recursive: the intensional dependency graph must be acyclic
        seen: dict[str, int] = {}

        def visit(p: str) -> None:
            state = seen.get(p)
            if state == 1:
                raise SchemaError(f"recursive query predicate {p!r}")
            if state == 2:
                return
            seen[p] = 1
            for u, v in edges:
                if v == p:
                    visit(u)
            seen[p] = 2

        for p in intensional:
            visit(p)


def parse_query(text: str, schema: Schema, answer_pred: str = "ans") -> QuerySpec:
    from .asp import parse_program

    q = QuerySpec(parse_program(text).rules, answer_pred)
    q.validate(schema)
    return q


def star_query(q: QuerySpec, schema: Schema, scheme: AnnotationScheme | None = None) -> QuerySpec:
    """Replace every extensional predicate in rule bodies by its double-starred
    (true-in-the-repair) version; intensional predicates stay untouched."""
    scheme = scheme or annotation_scheme(schema)
    intensional = q.intensional()

    def rename(atom: Atom) -> Atom:
        if atom.pred in intensional or not schema.has(atom.pred):
            return atom
        return Atom(scheme.ds(atom.pred), atom.args)

    rules = tuple(
        Rule(
            r.head,
            tuple(
                Literal(l.neg, rename(l.atom)) if isinstance(l.atom, Atom) else l
                for l in r.body
            ),
        )
        for r in q.rules
    )
    return QuerySpec(rules, q.answer_pred)


def assemble_cqa_program(
    d: Instance,
    repair: Program,
    q: QuerySpec | None = None,
) -> Program:
    """The combined program: database facts, repair rules, query rules.

    The query must already be star-transformed.  Query predicates must not
    collide with the repair program's predicates (annotation predicates in
    particular)."""
    if q is not None:
        repair_preds = set(repair.predicates()) | set(d.schema.names())
        clash = q.intensional() & repair_preds
        if clash:
            raise SchemaError(
                f"query predicate(s) collide with the repair program: {sorted(clash)}"
            )
    facts = tuple(
        Rule((Atom(a.pred, a.args),), ()) for a in sorted(d.atoms)
    )
    rules = facts + repair.rules + (q.rules if q is not None else ())
    prog = Program(rules)
    prog.check_safety()
    prog.predicates()  # arity consistency across all three parts
    return prog


def prop_strata(
    program: Program,
    schema: Schema,
    scheme: AnnotationScheme | None = None,
) -> dict[str, int]:
    """The annotation-level stratum map for a generated repair program:
    base predicates at 0, t/f/star at 1, double-star at 2."""
    scheme = scheme or annotation_scheme(schema)
    out: dict[str, int] = {}
    for pred in program.predicates():
        level = scheme.annotation_level(pred)
        if level is None:
            raise SchemaError(f"predicate {pred!r} is not part of the repair vocabulary")
        out[pred] = level
    return out
