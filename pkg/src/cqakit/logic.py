"""Classical first- and second-order logic over finite structures.

Formula ASTs, Tarskian evaluation with active-domain quantification, and the
theory compilers: the Reiter reconstruction of an instance (domain closure,
unique names, predicate completion), the sentence form psi of a program, the
circle transform with predicate variables, the second-order stable sentence
phi whose Herbrand models are the stable models, parallel and prioritized
circumscription, and the circumscriptive closure of a repair program.

Negation is primitive in the AST but treated as (chi -> bot) by the circle
transform; equivalence is expanded to two implications there.  Unless a
theory makes them explicit, domain closure and unique names are built into
the evaluator (Herbrand semantics).
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .asp import Program, Rule
from .constraints import BuiltinAtom, UniversalConstraint
from .errors import GuardExceededError, SchemaError
from .relational import (
    Atom,
    GroundAtom,
    Instance,
    Schema,
    Term,
    Var,
    active_domain,
)

DEFAULT_MAX_SO_ATOMS = 16


# -- formula AST -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PredAtom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class PredVarAtom:
    """A second-order predicate variable applied to terms."""

    var: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class Bot:
    pass


@dataclass(frozen=True, slots=True)
class Not:
    body: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True, slots=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True, slots=True)
class Imp:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True, slots=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    var: Var
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    var: Var
    body: "Formula"


@dataclass(frozen=True, slots=True)
class SOExists:
    """Existential second-order quantifier, as written in theory text."""

    var: str
    arity: int
    body: "Formula"


Formula = Union[
    PredAtom, PredVarAtom, BuiltinAtom, Bot, Not, And, Or, Imp, Iff, Forall, Exists, SOExists
]

TOP = Not(Bot())


def conj(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return TOP
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return Bot()
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def forall_many(vars_: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(vars_):
        body = Forall(v, body)
    return body


def exists_many(vars_: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(vars_):
        body = Exists(v, body)
    return body


_VAR_LETTERS = "XYZWVU"


def arg_vars(arity: int) -> tuple[Var, ...]:
    if arity <= len(_VAR_LETTERS):
        return tuple(Var(_VAR_LETTERS[i]) for i in range(arity))
    return tuple(Var(f"X{i}") for i in range(1, arity + 1))


# -- second-order sentences and theories ----------------------------------------------


@dataclass(frozen=True, slots=True)
class SOVar:
    name: str
    arity: int
    bound_pred: str | None = None  # enumeration is restricted to subsets of its extension


@dataclass(frozen=True)
class SOSentence:
    """base AND NOT EXISTS so_vars (inner); inner None means just the base."""

    base: Formula
    so_vars: tuple[SOVar, ...] = ()
    inner: Formula | None = None

    def to_formula(self) -> Formula:
        if self.inner is None:
            return self.base
        block: Formula = self.inner
        for v in reversed(self.so_vars):
            block = SOExists(v.name, v.arity, block)
        return conj([self.base, Not(block)])


Sentence = Union[Formula, SOSentence]


@dataclass(frozen=True)
class TheorySentence:
    name: str
    sentence: Sentence
    comment: str = ""


@dataclass(frozen=True)
class Theory:
    sentences: tuple[TheorySentence, ...]

    def __post_init__(self):
        names = [s.name for s in self.sentences]
        if len(names) != len(set(names)):
            raise SchemaError("duplicate sentence names in theory")

    def __iter__(self):
        return iter(self.sentences)

    def get(self, name: str) -> Sentence:
        for s in self.sentences:
            if s.name == name:
                return s.sentence
        raise KeyError(name)

    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.sentences)


# -- finite structures and evaluation ---------------------------------------------------


@dataclass(frozen=True)
class FiniteStructure:
    """A finite interpretation: ordered domain plus predicate extensions.

    The signature lists every predicate, including empty ones, so that
    unknown-predicate errors stay meaningful.
    """

    domain: tuple[str, ...]
    atoms: frozenset[GroundAtom]
    signature: tuple[tuple[str, int], ...]

    def __post_init__(self):
        sig = dict(self.signature)
        for a in self.atoms:
            if sig.get(a.pred) != len(a.args):
                raise SchemaError(f"atom {a} does not match the structure signature")
            if not set(a.args) <= set(self.domain):
                raise SchemaError(f"atom {a} uses constants outside the domain")

    @cached_property
    def _ext(self) -> dict[str, frozenset[tuple[str, ...]]]:
        out: dict[str, set] = {p: set() for p, _ in self.signature}
        for a in self.atoms:
            out[a.pred].add(a.args)
        return {p: frozenset(s) for p, s in out.items()}

    def has(self, pred: str) -> bool:
        return any(p == pred for p, _ in self.signature)

    def extension(self, pred: str) -> frozenset[tuple[str, ...]]:
        if pred not in self._ext:
            raise SchemaError(f"unknown predicate {pred!r}")
        return self._ext[pred]

    def with_atoms(self, atoms: Iterable[GroundAtom]) -> "FiniteStructure":
        return FiniteStructure(self.domain, frozenset(atoms), self.signature)


def structure_of_instance(
    inst: Instance,
    extra_predicates: Iterable[tuple[str, int]] = (),
    extra_constants: Iterable[str] = (),
) -> FiniteStructure:
    sig = tuple(sorted({(p.name, p.arity) for p in inst.schema.predicates} | set(extra_predicates)))
    dom = active_domain(inst, tuple(inst.schema.declared_constants) + tuple(extra_constants))
    return FiniteStructure(dom, inst.atoms, sig)


def _resolve(term: Term, env: Mapping[Var, str]) -> str:
    if isinstance(term, Var):
        if term not in env:
            raise SchemaError(f"unbound variable {term}")
        return env[term]
    return term


def eval_fo(
    s: FiniteStructure,
    f: Formula,
    env: Mapping[Var, str] | None = None,
    sovals: Mapping[str, frozenset[tuple[str, ...]]] | None = None,
) -> bool:
    """Tarskian truth over the structure, quantifiers ranging over s.domain."""
    env = dict(env or {})

    def ev(f: Formula, env: dict[Var, str]) -> bool:
        if isinstance(f, PredAtom):
            return tuple(_resolve(t, env) for t in f.args) in s.extension(f.pred)
        if isinstance(f, PredVarAtom):
            if sovals is None or f.var not in sovals:
                raise SchemaError(f"unbound predicate variable {f.var!r}")
            return tuple(_resolve(t, env) for t in f.args) in sovals[f.var]
        if isinstance(f, BuiltinAtom):
            return BuiltinAtom(f.op, _resolve(f.lhs, env), _resolve(f.rhs, env)).eval_ground()
        if isinstance(f, Bot):
            return False
        if isinstance(f, Not):
            return not ev(f.body, env)
        if isinstance(f, And):
            return all(ev(p, env) for p in f.parts)
        if isinstance(f, Or):
            return any(ev(p, env) for p in f.parts)
        if isinstance(f, Imp):
            return (not ev(f.lhs, env)) or ev(f.rhs, env)
        if isinstance(f, Iff):
            return ev(f.lhs, env) == ev(f.rhs, env)
        if isinstance(f, Forall):
            return all(ev(f.body, {**env, f.var: c}) for c in s.domain)
        if isinstance(f, Exists):
            return any(ev(f.body, {**env, f.var: c}) for c in s.domain)
        if isinstance(f, SOExists):
            raise SchemaError("second-order quantifier requires eval_so")
        raise TypeError(f"not a formula: {f!r}")

    return ev(f, env)


def _subsets(tuples: Sequence[tuple[str, ...]]):
    for k in range(len(tuples) + 1):
        yield from (frozenset(c) for c in itertools.combinations(tuples, k))


def eval_so(
    s: FiniteStructure,
    sentence: SOSentence,
    var_pools: Mapping[str, Sequence[tuple[str, ...]]] | None = None,
    max_pool_atoms: int = DEFAULT_MAX_SO_ATOMS,
) -> bool:
    """Evaluate base AND NOT EXISTS vars (inner) by enumerating assignments.

    Predicate variables tied to a predicate range over sub-extensions of it;
    untied (varying) variables need an explicit candidate pool, otherwise the
    quantification is rejected as unrestricted.
    """
    if not eval_fo(s, sentence.base):
        return False
    if sentence.inner is None:
        return True
    pools: list[list[frozenset[tuple[str, ...]]]] = []
    total = 0
    for v in sentence.so_vars:
        if v.bound_pred is not None:
            base = sorted(s.extension(v.bound_pred))
        elif var_pools is not None and v.name in var_pools:
            base = sorted(set(var_pools[v.name]))
        else:
            raise SchemaError(
                f"unrestricted second-order quantification over {v.name!r}; "
                "supply a candidate pool"
            )
        total += len(base)
        if total > max_pool_atoms:
            raise GuardExceededError(
                f"second-order enumeration over {total} atoms exceeds the bound {max_pool_atoms}"
            )
        pools.append(list(_subsets(base)))
    for combo in itertools.product(*pools):
        sovals = {v.name: ext for v, ext in zip(sentence.so_vars, combo)}
        if eval_fo(s, sentence.inner, sovals=sovals):
            return False
    return True


def eval_sentence(s: FiniteStructure, sentence: Sentence, **kw) -> bool:
    if isinstance(sentence, SOSentence):
        return eval_so(s, sentence, **kw)
    return eval_fo(s, sentence)


# -- Reiter reconstruction ---------------------------------------------------------------


def completion_sentence(pred: str, arity: int, tuples: Iterable[tuple[str, ...]]) -> Formula:
    """forall xs (P(xs) <-> disjunction over tuples of pointwise equalities)."""
    xs = arg_vars(arity)
    disjuncts = [
        conj([BuiltinAtom("=", x, c) for x, c in zip(xs, t)]) for t in sorted(tuples)
    ]
    return forall_many(xs, Iff(PredAtom(pred, xs), disj(disjuncts)))


def reiter_theory(d: Instance) -> Theory:
    """Domain closure, unique names, and per-predicate completion: the
    instance is essentially the only model."""
    dom = active_domain(d, d.schema.declared_constants)
    sentences: list[TheorySentence] = []
    if dom:
        x = Var("X")
        sentences.append(
            TheorySentence("DCA", Forall(x, disj([BuiltinAtom("=", x, c) for c in dom])))
        )
    pairs = [
        BuiltinAtom("!=", a, b) for a, b in itertools.combinations(dom, 2)
    ]
    if pairs:
        sentences.append(TheorySentence("UNA", conj(pairs)))
    for sig in sorted(d.schema.predicates, key=lambda p: p.name):
        sentences.append(
            TheorySentence(
                f"completion:{sig.name}",
                completion_sentence(sig.name, sig.arity, d.extension(sig.name)),
            )
        )
    return Theory(tuple(sentences))


def constraint_sentence(c: UniversalConstraint) -> Formula:
    """The universal sentence form of a constraint: body implies the head
    disjunction or the built-in disjunction."""
    body = conj([PredAtom(a.pred, a.args) for a in c.body])
    head = disj(
        [PredAtom(a.pred, a.args) for a in c.head_atoms] + list(c.head_builtins)
    )
    return forall_many(c.variables(), Imp(body, head))


# -- programs as sentences ---------------------------------------------------------------


def _literal_formula(lit) -> Formula:
    if isinstance(lit.atom, BuiltinAtom):
        return lit.atom
    f = PredAtom(lit.atom.pred, lit.atom.args)
    return Not(f) if lit.neg else f


def rule_sentence(rule: Rule) -> Formula:
    """The universal closure of body -> head (head disjunction, empty = bot)."""
    head = disj([PredAtom(a.pred, a.args) for a in rule.head])
    if rule.body:
        body = conj([_literal_formula(l) for l in rule.body])
        matrix: Formula = Imp(body, head)
    else:
        matrix = head
    return forall_many(rule.variables(), matrix)


def psi_of_program(p: Program) -> Formula:
    """Conjunction of the universal closures of the rules; facts contribute atoms."""
    return conj([rule_sentence(r) for r in p.rules])


# -- the circle transform -----------------------------------------------------------------


def is_positive(f: Formula) -> bool:
    """No implication, negation, or equivalence anywhere (hence monotone in
    the circumscribed predicates)."""
    if isinstance(f, (PredAtom, PredVarAtom, BuiltinAtom, Bot)):
        return True
    if isinstance(f, (And, Or)):
        return all(is_positive(p) for p in f.parts)
    if isinstance(f, (Forall, Exists)):
        return is_positive(f.body)
    return False


def circle_transform(f: Formula, varmap: Mapping[str, str], simplify: bool = True) -> Formula:
    """Replace circumscribed predicate atoms by predicate-variable atoms,
    duplicating implications: (F -> G) becomes (F° -> G°) & (F -> G).

    Negation is treated as (chi -> bot).  With simplify, the transform of a
    negative subformula over a positive body collapses back to the original
    (a sub-extension assignment cannot make a positive formula true when the
    full extensions falsify it)."""
    if not varmap:
        return f

    def circ(f: Formula) -> Formula:
        if isinstance(f, PredAtom):
            if f.pred in varmap:
                return PredVarAtom(varmap[f.pred], f.args)
            return f
        if isinstance(f, (PredVarAtom, BuiltinAtom, Bot)):
            return f
        if isinstance(f, And):
            return And(tuple(circ(p) for p in f.parts))
        if isinstance(f, Or):
            return Or(tuple(circ(p) for p in f.parts))
        if isinstance(f, Imp):
            return conj([Imp(circ(f.lhs), circ(f.rhs)), Imp(f.lhs, f.rhs)])
        if isinstance(f, Iff):
            return circ(conj([Imp(f.lhs, f.rhs), Imp(f.rhs, f.lhs)]))
        if isinstance(f, Not):
            if simplify and is_positive(f.body):
                return f
            # (chi -> bot)° = (chi° -> bot) & (chi -> bot)
            return conj([Not(circ(f.body)), f])
        if isinstance(f, Forall):
            return Forall(f.var, circ(f.body))
        if isinstance(f, Exists):
            return Exists(f.var, circ(f.body))
        raise TypeError(f"circle transform undefined for {f!r}")

    return circ(f)


def _circle_rule_conjunct(f: Formula, varmap: Mapping[str, str]) -> Formula:
    """The transform of one rule sentence with the rule-shaped duplicate
    dropped: the (F -> G) copy already holds via the base conjunct psi."""

    def walk(f: Formula) -> Formula:
        if isinstance(f, Forall):
            return Forall(f.var, walk(f.body))
        if isinstance(f, Imp):
            return Imp(
                circle_transform(f.lhs, varmap), circle_transform(f.rhs, varmap)
            )
        return circle_transform(f, varmap)

    return walk(f)


# -- the second-order stable sentence -------------------------------------------------------


def _so_var_name(pred: str) -> str:
    return f"X_{pred}"


def _less_than(pairs: Sequence[tuple[str, str, int]]) -> Formula:
    """(Xbar < Pbar): every variable below its predicate, some strictly."""
    leq = []
    neq = []
    for pred, var, arity in pairs:
        xs = arg_vars(arity)
        leq.append(forall_many(xs, Imp(PredVarAtom(var, xs), PredAtom(pred, xs))))
        neq.append(exists_many(xs, conj([PredAtom(pred, xs), Not(PredVarAtom(var, xs))])))
    return conj([conj(leq), disj(neq)])


def phi_stable(
    p: Program,
    circumscribed: Sequence[str] | None = None,
    simplify: bool = True,
) -> SOSentence:
    """The second-order sentence psi AND NOT EXISTS Xbar ((Xbar < Pbar) AND
    psi°(Xbar)) whose Herbrand models are the stable models.

    Program constraints are excluded from psi° and re-attached to the base as
    universally closed negated bodies."""
    proper = Program(tuple(r for r in p.rules if not r.is_constraint))
    constraints = [r for r in p.rules if r.is_constraint]
    psi = psi_of_program(proper)
    constraint_conjuncts = [
        forall_many(r.variables(), Not(conj([_literal_formula(l) for l in r.body])))
        for r in constraints
    ]
    base = conj([psi] + constraint_conjuncts)

    arities = proper.predicates()
    preds = list(circumscribed) if circumscribed is not None else sorted(arities)
    for pred in preds:
        if pred not in arities:
            raise SchemaError(f"cannot circumscribe unknown predicate {pred!r}")
    varmap = {pred: _so_var_name(pred) for pred in preds}
    so_vars = tuple(SOVar(varmap[p_], arities[p_], bound_pred=p_) for p_ in preds)
    lt = _less_than([(p_, varmap[p_], arities[p_]) for p_ in preds])
    if simplify:
        rule_conjuncts = [
            _circle_rule_conjunct(rule_sentence(r), varmap) for r in proper.rules
        ]
        psi_circle = conj(rule_conjuncts)
    else:
        psi_circle = circle_transform(psi, varmap, simplify=False)
    return SOSentence(base, so_vars, conj([lt, psi_circle]))


class StableSoChecker:
    """Evaluates the stable sentence of one program on candidate Herbrand
    interpretations, enumerating predicate-variable assignments among
    sub-extensions only (sound: the < conjunct restricts them anyway)."""

    def __init__(self, program: Program, simplify: bool = True, max_atoms: int = DEFAULT_MAX_SO_ATOMS):
        self.program = program
        self.phi = phi_stable(program, simplify=simplify)
        self.domain = program.constants()
        self.signature = tuple(sorted(program.predicates().items()))
        self.max_atoms = max_atoms

    def check(self, candidate: Iterable[GroundAtom]) -> bool:
        candidate = frozenset(candidate)
        if len(candidate) > self.max_atoms:
            raise GuardExceededError(
                f"candidate with {len(candidate)} atoms exceeds the bound {self.max_atoms}"
            )
        s = FiniteStructure(self.domain, candidate, self.signature)
        return eval_so(s, self.phi, max_pool_atoms=self.max_atoms)


def check_stable_so(
    p: Program,
    candidate: Iterable[GroundAtom],
    max_atoms: int = DEFAULT_MAX_SO_ATOMS,
    simplify: bool = True,
) -> bool:
    return StableSoChecker(p, simplify=simplify, max_atoms=max_atoms).check(candidate)


# -- circumscription -------------------------------------------------------------------------


def substitute_predicates(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Plain replacement of predicate atoms by predicate-variable atoms."""
    if isinstance(f, PredAtom):
        if f.pred in mapping:
            return PredVarAtom(mapping[f.pred], f.args)
        return f
    if isinstance(f, (PredVarAtom, BuiltinAtom, Bot)):
        return f
    if isinstance(f, Not):
        return Not(substitute_predicates(f.body, mapping))
    if isinstance(f, And):
        return And(tuple(substitute_predicates(p, mapping) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute_predicates(p, mapping) for p in f.parts))
    if isinstance(f, Imp):
        return Imp(
            substitute_predicates(f.lhs, mapping), substitute_predicates(f.rhs, mapping)
        )
    if isinstance(f, Iff):
        return Iff(
            substitute_predicates(f.lhs, mapping), substitute_predicates(f.rhs, mapping)
        )
    if isinstance(f, Forall):
        return Forall(f.var, substitute_predicates(f.body, mapping))
    if isinstance(f, Exists):
        return Exists(f.var, substitute_predicates(f.body, mapping))
    raise TypeError(f"cannot substitute in {f!r}")


def circumscribe(
    sigma: Formula,
    minimized: Sequence[str],
    varying: Sequence[str] = (),
    mode: str = "parallel",
    arities: Mapping[str, int] | None = None,
) -> SOSentence:
    """Circ(sigma; minimized; varying): sigma holds and no pointwise smaller
    extension of the minimized predicates satisfies sigma for any value of
    the varying ones.

    Parallel mode compares componentwise; prioritized mode lets an earlier
    predicate's equality gate the comparison of the next."""
    if set(minimized) & set(varying):
        raise SchemaError("minimized and varying predicates must be disjoint")
    if mode not in ("parallel", "prioritized"):
        raise SchemaError(f"unknown circumscription mode {mode!r}")
    if not minimized:
        return SOSentence(sigma)
    if arities is None:
        arities = {}
        _collect_arities(sigma, arities)
    mapping = {p: f"U_{p}" for p in minimized}
    mapping.update({p: f"V_{p}" for p in varying})
    inner_sigma = substitute_predicates(sigma, mapping)

    def xs_of(p: str) -> tuple[Var, ...]:
        if p not in arities:
            raise SchemaError(f"arity of {p!r} unknown; pass arities=")
        return arg_vars(arities[p])

    leq = {
        p: forall_many(xs_of(p), Imp(PredVarAtom(mapping[p], xs_of(p)), PredAtom(p, xs_of(p))))
        for p in minimized
    }
    if mode == "parallel":
        preorder = conj([leq[p] for p in minimized])
        neq = disj(
            [
                exists_many(
                    xs_of(p), conj([PredAtom(p, xs_of(p)), Not(PredVarAtom(mapping[p], xs_of(p)))])
                )
                for p in minimized
            ]
        )
    else:
        eq = {
            p: forall_many(xs_of(p), Iff(PredVarAtom(mapping[p], xs_of(p)), PredAtom(p, xs_of(p))))
            for p in minimized
        }
        steps = []
        for i, p in enumerate(minimized):
            gate = conj([eq[q] for q in minimized[:i]])
            steps.append(Imp(gate, leq[p]) if i else leq[p])
        preorder = conj(steps)
        neq = disj(
            [
                exists_many(
                    xs_of(p),
                    Not(Iff(PredVarAtom(mapping[p], xs_of(p)), PredAtom(p, xs_of(p)))),
                )
                for p in minimized
            ]
        )
    # in parallel mode the preorder pins each minimized variable below its
    # predicate, so sub-extension enumeration is exhaustive; varying variables
    # stay unrestricted and need explicit pools at evaluation time
    bound = (lambda p: p) if mode == "parallel" else (lambda p: None)
    so_vars = tuple(SOVar(mapping[p], arities[p], bound_pred=bound(p)) for p in minimized)
    so_vars += tuple(SOVar(mapping[p], arities[p], bound_pred=None) for p in varying)
    return SOSentence(sigma, so_vars, conj([inner_sigma, preorder, neq]))


def _collect_arities(f: Formula, out: dict[str, int]) -> None:
    if isinstance(f, PredAtom):
        out.setdefault(f.pred, len(f.args))
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            _collect_arities(p, out)
    elif isinstance(f, (Imp, Iff)):
        _collect_arities(f.lhs, out)
        _collect_arities(f.rhs, out)
    elif isinstance(f, (Not,)):
        _collect_arities(f.body, out)
    elif isinstance(f, (Forall, Exists)):
        _collect_arities(f.body, out)
    elif isinstance(f, SOExists):
        _collect_arities(f.body, out)


# -- the circumscriptive closure of a repair program -------------------------------------------


def prop2_closure(
    ics: Sequence[UniversalConstraint],
    schema: Schema,
    d: Instance,
    explicit_una: bool = False,
) -> Theory:
    """The classical reconstruction of the repair program: the instance
    reconstruction, completions of the star and double-star predicates,
    coherence (never inserted and deleted), and the parallel circumscription
    of the deletion/insertion predicates with the star predicates varying,
    relative to the facts, repair rules, and star rules as sentences."""
    from .repairgen import annotation_scheme, general_sections

    scheme = annotation_scheme(schema)
    sentences: list[TheorySentence] = []
    reiter = reiter_theory(d)
    for ts in reiter:
        if ts.name in ("DCA", "UNA") and not explicit_una:
            continue  # Herbrand semantics is built into the evaluator
        sentences.append(ts)
    for base in schema.names():
        xs = arg_vars(schema.arity(base))
        sentences.append(
            TheorySentence(
                f"star-completion:{base}",
                forall_many(
                    xs,
                    Iff(
                        disj([PredAtom(base, xs), PredAtom(scheme.t(base), xs)]),
                        PredAtom(scheme.s(base), xs),
                    ),
                ),
            )
        )
        sentences.append(
            TheorySentence(
                f"dstar-completion:{base}",
                forall_many(
                    xs,
                    Iff(
                        conj([PredAtom(scheme.s(base), xs), Not(PredAtom(scheme.f(base), xs))]),
                        PredAtom(scheme.ds(base), xs),
                    ),
                ),
            )
        )
        sentences.append(
            TheorySentence(
                f"coherence:{base}",
                forall_many(
                    xs, Not(conj([PredAtom(scheme.t(base), xs), PredAtom(scheme.f(base), xs)]))
                ),
            )
        )
    # Theta: facts + repair rules + star rules (the rules that drive t and f)
    sections = general_sections(ics, schema, scheme, faithful_appendix=True)
    theta_rules = tuple(
        Rule((Atom(a.pred, a.args),), ()) for a in sorted(d.atoms)
    ) + sections["repair"] + sections["annotation"]
    theta = psi_of_program(Program(theta_rules))
    minimized = [scheme.t(b) for b in schema.names()] + [scheme.f(b) for b in schema.names()]
    varying = [scheme.s(b) for b in schema.names()]
    arities = {scheme.t(b): schema.arity(b) for b in schema.names()}
    arities.update({scheme.f(b): schema.arity(b) for b in schema.names()})
    arities.update({scheme.s(b): schema.arity(b) for b in schema.names()})
    arities.update({b: schema.arity(b) for b in schema.names()})
    sentences.append(
        TheorySentence(
            "circ:update-predicates",
            circumscribe(theta, minimized, varying, "parallel", arities),
            comment="theta = facts, repair rules, star rules",
        )
    )
    return Theory(tuple(sentences))


def prop2_models(
    ics: Sequence[UniversalConstraint],
    schema: Schema,
    d: Instance,
    max_candidate_atoms: int = 20,
) -> list[FiniteStructure]:
    """Bounded models of the circumscriptive closure.

    Candidates enumerate the insertion pool for the t predicates and the
    affected atoms for the f predicates; the star extension is the least
    closure of the star rules (the only rules with star heads; star atoms
    occur elsewhere only in rule bodies, so larger choices never help).
    Satisfying pairs are collected, then filtered to the pointwise-minimal
    ones, exactly the circumscription semantics."""
    from .oracle import insertion_pool
    from .repairgen import annotation_scheme, general_sections

    scheme = annotation_scheme(schema)
    pool_t = sorted(insertion_pool(d, ics))
    pool_f_base = sorted(d.atoms)
    if len(pool_t) + len(pool_f_base) > max_candidate_atoms:
        raise GuardExceededError("candidate space exceeds the bound")

    sections = general_sections(ics, schema, scheme, faithful_appendix=True)
    repair_psi = psi_of_program(Program(sections["repair"]))
    sig = [(p.name, p.arity) for p in schema.predicates]
    for b in schema.names():
        for name in (scheme.t(b), scheme.f(b), scheme.s(b), scheme.ds(b)):
            sig.append((name, schema.arity(b)))
    dom = active_domain(d, d.schema.declared_constants)

    def annotated(pred_of: str, atoms: Iterable[GroundAtom]) -> set[GroundAtom]:
        out = set()
        for a in atoms:
            name = getattr(scheme, pred_of)(a.pred)
            out.add(GroundAtom(name, a.args))
        return out

    satisfying: list[tuple[frozenset[GroundAtom], frozenset[GroundAtom]]] = []
    for t_mask in range(1 << len(pool_t)):
        t_set = frozenset(a for i, a in enumerate(pool_t) if t_mask >> i & 1)
        pool_f = sorted(set(pool_f_base) | t_set)
        for f_mask in range(1 << len(pool_f)):
            f_set = frozenset(a for i, a in enumerate(pool_f) if f_mask >> i & 1)
            if t_set & f_set:
                continue  # coherence
            s_set = d.atoms | t_set  # least closure of the star rules
            atoms = (
                set(d.atoms)
                | annotated("t", t_set)
                | annotated("f", f_set)
                | annotated("s", s_set)
            )
            struct = FiniteStructure(tuple(dom), frozenset(atoms), tuple(sorted(set(sig))))
            if eval_fo(struct, repair_psi):
                satisfying.append((t_set, f_set))
    kept: list[tuple[frozenset, frozenset]] = []
    for t_set, f_set in sorted(satisfying, key=lambda p: (len(p[0]) + len(p[1]), sorted(p[0] | p[1]))):
        if not any(kt <= t_set and kf <= f_set for kt, kf in kept):
            kept.append((t_set, f_set))
    out = []
    for t_set, f_set in kept:
        s_set = d.atoms | t_set
        ds_set = {a for a in s_set if a not in f_set}
        atoms = (
            set(d.atoms)
            | annotated("t", t_set)
            | annotated("f", f_set)
            | annotated("s", s_set)
            | annotated("ds", ds_set)
        )
        out.append(FiniteStructure(tuple(dom), frozenset(atoms), tuple(sorted(set(sig)))))
    return sorted(out, key=lambda st: sorted(st.atoms))


def repair_of_structure(struct: FiniteStructure, schema: Schema) -> frozenset[GroundAtom]:
    """Project the double-star predicates of an annotated structure back onto
    the base vocabulary."""
    from .repairgen import annotation_scheme

    scheme = annotation_scheme(schema)
    ds_of = {scheme.ds(b): b for b in schema.names()}
    return frozenset(
        GroundAtom(ds_of[a.pred], a.args) for a in struct.atoms if a.pred in ds_of
    )
