"""First-order consistent query answering under functional dependencies.

For an atomic, projection-free query over a predicate with at most one FD,
the consistent answers are the tuples present and in conflict with nothing:
the query atom conjoined with a negated existential asking for a same-key
tuple with a different dependent value.  The rewriting is evaluated on the
inconsistent instance directly; everything outside this fragment falls back,
loudly, to the enumeration and program-based methods.

The companion theory (completions of the predicate and its repair view, the
disjunctive deletion rule, and the surviving-witness sentence) pins the
deletion predicate without second-order quantifiers: its bounded models are
in bijection with the repairs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .constraints import FD, BuiltinAtom
from .errors import RewriteFallbackError, SchemaError
from .logic import (
    Exists,
    FiniteStructure,
    Formula,
    Iff,
    Imp,
    Not,
    PredAtom,
    Theory,
    TheorySentence,
    completion_sentence,
    conj,
    disj,
    eval_fo,
    exists_many,
    forall_many,
    structure_of_instance,
)
from .relational import Atom, GroundAtom, Instance, Schema, Term, Var, active_domain
from .repairgen import QuerySpec, annotation_scheme


@dataclass(frozen=True)
class RewriteResult:
    rewritten: Formula
    applicable: bool
    reason: str = ""
    conjuncts: tuple[tuple[FD, Formula], ...] = ()  # per-FD negative conjunct


def _atom_formula(atom: Atom) -> Formula:
    return PredAtom(atom.pred, atom.args)


def _check_atomic(query_atom: Atom) -> str | None:
    seen: set[Var] = set()
    for t in query_atom.args:
        if isinstance(t, Var):
            if t in seen:
                return "query atom repeats a variable"
            seen.add(t)
    return None


def _witness_conjunct(fd: FD, query_atom: Atom, schema: Schema) -> Formula:
    """not exists: a tuple agreeing with the query atom on the FD's lhs
    positions but carrying a different dependent value (other positions are
    unconstrained, so they get fresh existential variables)."""
    arity = schema.arity(fd.predicate)
    taken = {t.name for t in query_atom.args if isinstance(t, Var)}

    def fresh(base: str) -> Var:
        name = base
        i = 0
        while name in taken:
            i += 1
            name = f"{base}{i}"
        taken.add(name)
        return Var(name)

    z = fresh("Z")
    extras: list[Var] = []
    args: list[Term] = []
    for pos in range(1, arity + 1):
        if pos in fd.lhs:
            args.append(query_atom.args[pos - 1])
        elif pos == fd.rhs:
            args.append(z)
        else:
            w = fresh(f"W{pos}")
            extras.append(w)
            args.append(w)
    witness = PredAtom(fd.predicate, tuple(args))
    rhs_term = query_atom.args[fd.rhs - 1]
    body = conj([witness, BuiltinAtom("!=", z, rhs_term)])
    return Not(Exists(z, exists_many(extras, body)))


def rewrite_atomic(
    fds: FD | Sequence[FD],
    query_atom: Atom,
    schema: Schema,
) -> RewriteResult:
    """Rewrite an atomic query so its plain answers on the inconsistent
    instance are the consistent answers.  Applicable only to a single
    positive atom with pairwise-distinct variables, over a predicate with at
    most one FD; otherwise the result is flagged as a fallback."""
    fd_list = [fds] if isinstance(fds, FD) else list(fds)
    base = _atom_formula(query_atom)
    problem = _check_atomic(query_atom)
    if problem is not None:
        return RewriteResult(base, False, problem)
    relevant = [fd for fd in fd_list if fd.predicate == query_atom.pred]
    if len(relevant) > 1:
        return RewriteResult(
            base, False, f"{query_atom.pred} carries {len(relevant)} FDs; rewriting needs at most one"
        )
    if not schema.has(query_atom.pred) or schema.arity(query_atom.pred) != len(query_atom.args):
        raise SchemaError(f"query atom {query_atom} does not match the schema")
    conjuncts = tuple((fd, _witness_conjunct(fd, query_atom, schema)) for fd in relevant)
    return RewriteResult(conj([base] + [c for _, c in conjuncts]), True, "", conjuncts)


def atomic_query(q: QuerySpec) -> Atom | None:
    """Extract the single positive atom of a projection-free atomic query;
    None when the query does not have that shape."""
    if len(q.rules) != 1:
        return None
    (rule,) = q.rules
    if len(rule.body) != 1 or rule.body[0].neg or not isinstance(rule.body[0].atom, Atom):
        return None
    atom = rule.body[0].atom
    if _check_atomic(atom) is not None:
        return None
    head_vars = [t for t in rule.head[0].args if isinstance(t, Var)]
    atom_vars = [t for t in atom.args if isinstance(t, Var)]
    if len(head_vars) != len(rule.head[0].args):
        return None  # constants in the head
    if set(head_vars) != set(atom_vars) or len(head_vars) != len(atom_vars):
        return None  # projection or duplication
    return atom


def answers_via_rewrite(
    d: Instance,
    fds: Sequence[FD],
    query: QuerySpec | Atom,
    answer_vars: Sequence[Var] | None = None,
) -> frozenset[tuple[str, ...]]:
    """Evaluate the rewritten query on the instance over the active domain.

    Answer tuples follow the query's answer-variable order (the head of the
    query rule, or the atom's variables left to right)."""
    if isinstance(query, QuerySpec):
        atom = atomic_query(query)
        if atom is None:
            raise RewriteFallbackError(
                "query is not an atomic projection-free query; use enumerate or asp"
            )
        if answer_vars is None:
            answer_vars = [t for t in query.rules[0].head[0].args if isinstance(t, Var)]
    else:
        atom = query
        if answer_vars is None:
            answer_vars = [t for t in atom.args if isinstance(t, Var)]
    result = rewrite_atomic(fds, atom, d.schema)
    if not result.applicable:
        raise RewriteFallbackError(result.reason)
    consts = [t for t in atom.args if not isinstance(t, Var)]
    struct = structure_of_instance(d, extra_constants=consts)
    out = set()
    for combo in itertools.product(struct.domain, repeat=len(answer_vars)):
        env = dict(zip(answer_vars, combo))
        if eval_fo(struct, result.rewritten, env):
            out.add(combo)
    return frozenset(out)


# -- the first-order repair theory for one FD ------------------------------------------------


def _kappa_vars(fd: FD, schema: Schema) -> tuple[tuple[Term, ...], Var, tuple[Var, ...], tuple[Term, ...]]:
    """Variables for the deleted tuple, the witness dependent value, the
    witness extras, and the witness argument list."""
    arity = schema.arity(fd.predicate)
    if arity == 2 and fd.lhs == frozenset({1}) and fd.rhs == 2:
        subject: list[Term] = [Var("S"), Var("T")]
    else:
        subject = [Var(f"S{i}") for i in range(1, arity + 1)]
    z = Var("Z")
    extras = tuple(Var(f"W{pos}") for pos in range(1, arity + 1) if pos not in fd.lhs and pos != fd.rhs)
    witness: list[Term] = []
    extra_iter = iter(extras)
    for pos in range(1, arity + 1):
        if pos in fd.lhs:
            witness.append(subject[pos - 1])
        elif pos == fd.rhs:
            witness.append(z)
        else:
            witness.append(next(extra_iter))
    return tuple(subject), z, extras, tuple(witness)


def prop4_theory(fd: FD, d: Instance, schema: Schema | None = None) -> Theory:
    """Completion of the predicate, completion of its repair view, the
    disjunctive deletion rule, and the surviving-witness sentence: every
    deleted tuple participates in a violation whose other tuple survives.
    Proven for binary predicates with a single left-to-right FD; other
    shapes are the positional generalization (see the sentence comments)."""
    schema = schema or d.schema
    fd.check(schema)
    pred = fd.predicate
    arity = schema.arity(pred)
    scheme = annotation_scheme(schema)
    f_name, ds_name = scheme.f(pred), scheme.ds(pred)
    generalized = not (arity == 2 and fd.lhs == frozenset({1}) and fd.rhs == 2)
    note = "positional generalization of the binary key case" if generalized else ""

    subject, z, extras, witness = _kappa_vars(fd, schema)
    subject_vars = tuple(t for t in subject if isinstance(t, Var))
    p_subject = PredAtom(pred, subject)
    pf_subject = PredAtom(f_name, subject)

    # deletion rule: two same-key tuples with different dependent values force
    # one of the two out
    y1_args, y2_args = [], []
    key_vars = {pos: Var("X" if len(fd.lhs) == 1 else f"X{i}") for i, pos in enumerate(sorted(fd.lhs), 1)}
    for pos in range(1, arity + 1):
        if pos in fd.lhs:
            y1_args.append(key_vars[pos])
            y2_args.append(key_vars[pos])
        elif pos == fd.rhs:
            y1_args.append(Var("Y"))
            y2_args.append(Var("Z"))
        else:
            y1_args.append(Var(f"V{pos}_1"))
            y2_args.append(Var(f"V{pos}_2"))
    rule_vars = []
    for t in y1_args + y2_args:
        if isinstance(t, Var) and t not in rule_vars:
            rule_vars.append(t)
    deletion_rule = forall_many(
        rule_vars,
        Imp(
            conj(
                [
                    PredAtom(pred, tuple(y1_args)),
                    PredAtom(pred, tuple(y2_args)),
                    BuiltinAtom("!=", Var("Y"), Var("Z")),
                ]
            ),
            disj([PredAtom(f_name, tuple(y1_args)), PredAtom(f_name, tuple(y2_args))]),
        ),
    )

    # every deleted tuple has a same-key surviving tuple with another value
    witness_sentence = forall_many(
        subject_vars,
        Imp(
            pf_subject,
            Exists(
                z,
                exists_many(
                    extras,
                    conj(
                        [
                            p_subject,
                            PredAtom(pred, witness),
                            BuiltinAtom("!=", z, subject[fd.rhs - 1]),
                            Not(PredAtom(f_name, witness)),
                        ]
                    ),
                ),
            ),
        ),
    )

    xs = tuple(Var(f"X{i}") for i in range(1, arity + 1))
    repair_completion = forall_many(
        xs,
        Iff(
            conj([PredAtom(pred, xs), Not(PredAtom(f_name, xs))]),
            PredAtom(ds_name, xs),
        ),
    )

    return Theory(
        (
            TheorySentence(f"completion:{pred}", completion_sentence(pred, arity, d.extension(pred))),
            TheorySentence(f"dstar-completion:{pred}", repair_completion, note),
            TheorySentence(f"deletion-rule:{pred}", deletion_rule, note),
            TheorySentence(f"surviving-witness:{pred}", witness_sentence, note),
        )
    )


def prop4_models(fd: FD, d: Instance, schema: Schema | None = None) -> list[FiniteStructure]:
    """Bounded models of the FD repair theory: enumerate deletion sets among
    the predicate's tuples, derive the repair view by completion, and keep
    the sets satisfying the deletion rule and the surviving-witness sentence."""
    schema = schema or d.schema
    theory = prop4_theory(fd, d, schema)
    pred = fd.predicate
    arity = schema.arity(pred)
    scheme = annotation_scheme(schema)
    f_name, ds_name = scheme.f(pred), scheme.ds(pred)
    tuples = sorted(d.extension(pred))
    dom = active_domain(d, d.schema.declared_constants)
    sig = tuple(sorted({(pred, arity), (f_name, arity), (ds_name, arity)}))
    checks = [theory.get(f"deletion-rule:{pred}"), theory.get(f"surviving-witness:{pred}")]
    out = []
    for k in range(len(tuples) + 1):
        for combo in itertools.combinations(tuples, k):
            deleted = set(combo)
            atoms = (
                {GroundAtom(pred, t) for t in tuples}
                | {GroundAtom(f_name, t) for t in deleted}
                | {GroundAtom(ds_name, t) for t in tuples if t not in deleted}
            )
            struct = FiniteStructure(tuple(dom), frozenset(atoms), sig)
            if all(eval_fo(struct, c) for c in checks):
                out.append(struct)
    return sorted(out, key=lambda st: sorted(st.atoms))
