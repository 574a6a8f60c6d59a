"""Disjunctive Datalog with negation at desk scale.

Implements the textbook semantics literally: mechanical grounding over an
explicit domain, models and minimal models of ground programs, the reduct,
stable models, cautious entailment, stratification, and head-cycle-freeness.

The stable-model search enumerates candidates among the minimal models of
the ground program restricted to derivable atoms (every stable model is such
a minimal model), then keeps those that are minimal models of their own
reduct.  Program constraints (empty heads) act as model filters, which is
equivalent on stable models.  A pure subset-enumeration oracle over the same
definitions is provided for cross-checking the pruned search.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .constraints import BuiltinAtom
from .errors import (
    GuardExceededError,
    InconsistentProgramError,
    ParseError,
    SchemaError,
    UnsafeRuleError,
)
from .relational import Atom, GroundAtom, Term, Var, is_constant, is_variable

DEFAULT_MAX_GROUND_RULES = 1_000_000
DEFAULT_MAX_NODES = 1 << 20
DEFAULT_MAX_BRUTE_ATOMS = 16

_RESERVED = {"not", "v"}


@dataclass(frozen=True, slots=True)
class Literal:
    """A body literal: a possibly negated predicate atom, or a built-in.

    Built-ins are never negated here: `not X = Y` is parsed as `X != Y`.
    """

    neg: bool
    atom: Union[Atom, BuiltinAtom]

    def __post_init__(self):
        if self.neg and isinstance(self.atom, BuiltinAtom):
            raise ValueError("negated built-ins must be folded into the opposite op")

    def __str__(self) -> str:
        return f"not {self.atom}" if self.neg else str(self.atom)


@dataclass(frozen=True)
class Rule:
    """head_1 v ... v head_n :- body.  An empty head is a program constraint."""

    head: tuple[Atom, ...]
    body: tuple[Literal, ...] = ()

    @property
    def pos_atoms(self) -> tuple[Atom, ...]:
        return tuple(l.atom for l in self.body if not l.neg and isinstance(l.atom, Atom))

    @property
    def neg_atoms(self) -> tuple[Atom, ...]:
        return tuple(l.atom for l in self.body if l.neg)

    @property
    def builtins(self) -> tuple[BuiltinAtom, ...]:
        return tuple(l.atom for l in self.body if isinstance(l.atom, BuiltinAtom))

    @property
    def is_constraint(self) -> bool:
        return not self.head

    @property
    def is_fact(self) -> bool:
        return bool(self.head) and not self.body and all(a.is_ground() for a in self.head)

    def variables(self) -> tuple[Var, ...]:
        seen: list[Var] = []
        for atom in itertools.chain(self.head, (l.atom for l in self.body)):
            for v in atom.variables():
                if v not in seen:
                    seen.append(v)
        return tuple(seen)

    def check_safety(self) -> None:
        ranged = {v for a in self.pos_atoms for v in a.variables()}
        for a in itertools.chain(self.head, self.neg_atoms, self.builtins):
            for v in a.variables():
                if v not in ranged:
                    raise UnsafeRuleError(
                        f"unsafe rule ({self}): variable {v} does not occur "
                        "in a positive body atom"
                    )

    def to_text(self, dialect: str = "dlv") -> str:
        sep = " | " if dialect == "clingo" else " v "
        head = sep.join(str(a) for a in self.head)
        if not self.body:
            return f"{head}."
        body = ", ".join(str(l) for l in self.body)
        return f"{head} :- {body}." if head else f":- {body}."

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]

    def predicates(self) -> dict[str, int]:
        """Predicate name -> arity; rejects inconsistent arities."""
        out: dict[str, int] = {}
        for rule in self.rules:
            for atom in itertools.chain(rule.head, rule.pos_atoms, rule.neg_atoms):
                if out.setdefault(atom.pred, len(atom.args)) != len(atom.args):
                    raise SchemaError(f"predicate {atom.pred} used with two arities")
        return out

    def constants(self) -> tuple[str, ...]:
        """The Herbrand universe: constants occurring in the program."""
        out: set[str] = set()
        for rule in self.rules:
            for atom in itertools.chain(rule.head, rule.pos_atoms, rule.neg_atoms):
                out.update(a for a in atom.args if not isinstance(a, Var))
            for b in rule.builtins:
                out.update(t for t in (b.lhs, b.rhs) if not isinstance(t, Var))
        return tuple(sorted(out))

    def check_safety(self) -> None:
        for rule in self.rules:
            rule.check_safety()

    def to_text(self, dialect: str = "dlv") -> str:
        return "".join(r.to_text(dialect) + "\n" for r in self.rules)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class GroundRule:
    head: tuple[GroundAtom, ...]
    pos: tuple[GroundAtom, ...]
    neg: tuple[GroundAtom, ...]

    def __str__(self) -> str:
        head = " v ".join(str(a) for a in self.head)
        body = ", ".join([str(a) for a in self.pos] + [f"not {a}" for a in self.neg])
        if not body:
            return f"{head}."
        return f"{head} :- {body}." if head else f":- {body}."


@dataclass(frozen=True)
class GroundProgram:
    rules: tuple[GroundRule, ...]
    domain: tuple[str, ...]
    predicates: tuple[tuple[str, int], ...]

    @cached_property
    def herbrand_base(self) -> frozenset[GroundAtom]:
        atoms: set[GroundAtom] = set()
        for pred, arity in self.predicates:
            for args in itertools.product(self.domain, repeat=arity):
                atoms.add(GroundAtom(pred, args))
        return frozenset(atoms)

    def atoms_in_rules(self) -> frozenset[GroundAtom]:
        out: set[GroundAtom] = set()
        for r in self.rules:
            out.update(r.head)
            out.update(r.pos)
            out.update(r.neg)
        return frozenset(out)


Interpretation = frozenset  # of GroundAtom


# -- parsing (DLV dialect, `|` accepted as in clingo) ---------------------------

_PTOKEN = re.compile(r"%[^\n]*|\s+|:-|->|!=|[A-Za-z0-9_]+|[(),.|=]")


def _ptokens(text: str):
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _PTOKEN.match(text, pos)
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


class _PCursor:
    def __init__(self, text: str):
        self.toks = list(_ptokens(text))
        self.i = 0

    def peek(self, ahead: int = 0) -> str | None:
        j = self.i + ahead
        return self.toks[j][0] if j < len(self.toks) else None

    def pos(self) -> tuple[int, int]:
        if self.i < len(self.toks):
            return self.toks[self.i][1], self.toks[self.i][2]
        return (self.toks[-1][1], self.toks[-1][2]) if self.toks else (1, 1)

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            line, col = self.pos()
            raise ParseError("unexpected end of input", line, col)
        self.i += 1
        return tok

    def expect(self, want: str) -> None:
        line, col = self.pos()
        tok = self.next()
        if tok != want:
            raise ParseError(f"expected {want!r}, got {tok!r}", line, col)


def _parse_term(cur: _PCursor) -> Term:
    line, col = cur.pos()
    tok = cur.next()
    if is_variable(tok):
        return Var(tok)
    if is_constant(tok) and tok not in _RESERVED:
        return tok
    raise ParseError(f"expected a term, got {tok!r}", line, col)


def _parse_patom(cur: _PCursor) -> Atom:
    line, col = cur.pos()
    name = cur.next()
    if not is_constant(name) or name in _RESERVED:
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
    return Atom(name, tuple(args))


def _starts_builtin(cur: _PCursor) -> bool:
    # TERM (=|!=) ...   vs   pred(...) or 0-ary pred
    nxt = cur.peek(1)
    return nxt in ("=", "!=")


def _parse_literal(cur: _PCursor) -> Literal:
    line, col = cur.pos()
    if cur.peek() == "not":
        cur.next()
        if _starts_builtin(cur):
            lhs = _parse_term(cur)
            op = cur.next()
            rhs = _parse_term(cur)
            # `not X = Y` is sugar for `X != Y` (and dually)
            return Literal(False, BuiltinAtom(op, lhs, rhs).negated())
        return Literal(True, _parse_patom(cur))
    if _starts_builtin(cur):
        lhs = _parse_term(cur)
        op = cur.next()
        if op not in ("=", "!="):
            raise ParseError(f"expected = or !=, got {op!r}", line, col)
        rhs = _parse_term(cur)
        return Literal(False, BuiltinAtom(op, lhs, rhs))
    return Literal(False, _parse_patom(cur))


def parse_program(text: str) -> Program:
    """Parse a program in the DLV dialect (`v` or `|` in heads, `not`, =, !=).

    Every rule is safety-checked: variables in the head, in negated literals,
    and in built-ins must occur in a positive body atom.
    """
    cur = _PCursor(text)
    rules: list[Rule] = []
    while cur.peek() is not None:
        head: list[Atom] = []
        if cur.peek() != ":-":
            head.append(_parse_patom(cur))
            while cur.peek() in ("v", "|"):
                cur.next()
                head.append(_parse_patom(cur))
        body: list[Literal] = []
        if cur.peek() == ":-":
            cur.next()
            body.append(_parse_literal(cur))
            while cur.peek() == ",":
                cur.next()
                body.append(_parse_literal(cur))
        cur.expect(".")
        rule = Rule(tuple(head), tuple(body))
        rule.check_safety()
        rules.append(rule)
    return Program(tuple(rules))


# -- grounding -------------------------------------------------------------------


def ground(
    program: Program,
    domain: Sequence[str] | None = None,
    max_rules: int = DEFAULT_MAX_GROUND_RULES,
) -> GroundProgram:
    """Instantiate every rule in all possible ways over the domain.

    Instances whose built-ins are violated are dropped; satisfied built-ins
    are removed from the body.  The domain must contain every program
    constant (it defaults to exactly the program constants).
    """
    program.check_safety()
    consts = program.constants()
    if domain is None:
        dom: tuple[str, ...] = consts
    else:
        dom = tuple(sorted(set(domain)))
        missing = set(consts) - set(dom)
        if missing:
            raise SchemaError(f"domain misses program constants: {sorted(missing)}")

    total = 0
    for rule in program.rules:
        nvars = len(rule.variables())
        total += len(dom) ** nvars if nvars else 1
        if total > max_rules:
            raise GuardExceededError(
                f"grounding would exceed {max_rules} rules; raise --max-ground-rules"
            )

    ground_rules: list[GroundRule] = []
    for rule in program.rules:
        rvars = rule.variables()
        for combo in itertools.product(dom, repeat=len(rvars)):
            sub = dict(zip(rvars, combo))
            ok = True
            for b in rule.builtins:
                if not b.substitute(sub).eval_ground():
                    ok = False
                    break
            if not ok:
                continue
            head = tuple(a.substitute(sub).to_ground() for a in rule.head)
            pos = tuple(a.substitute(sub).to_ground() for a in rule.pos_atoms)
            neg = tuple(a.substitute(sub).to_ground() for a in rule.neg_atoms)
            ground_rules.append(GroundRule(head, pos, neg))
    return GroundProgram(
        tuple(ground_rules), dom, tuple(sorted(program.predicates().items()))
    )


# -- model-theoretic definitions ---------------------------------------------------


def _check_interpretation(gp: GroundProgram, m: Iterable[GroundAtom]) -> frozenset[GroundAtom]:
    m = frozenset(m)
    preds = dict(gp.predicates)
    for a in m:
        if preds.get(a.pred) != len(a.args) or not set(a.args) <= set(gp.domain):
            raise SchemaError(f"atom {a} is outside the Herbrand base")
    return m


def is_model(gp: GroundProgram, m: Iterable[GroundAtom]) -> bool:
    """True iff every ground rule is satisfied: whenever the positive body is
    contained in m and no negated atom is in m, some head atom is in m."""
    m = _check_interpretation(gp, m)
    for r in gp.rules:
        if set(r.pos) <= m and not (set(r.neg) & m):
            if not (set(r.head) & m):
                return False
    return True


def reduct(gp: GroundProgram, s: Iterable[GroundAtom]) -> GroundProgram:
    """The positive program: delete rules whose negated atoms meet s, strip
    the remaining negative literals."""
    s = _check_interpretation(gp, s)
    kept = tuple(
        GroundRule(r.head, r.pos, ()) for r in gp.rules if not (set(r.neg) & s)
    )
    return GroundProgram(kept, gp.domain, gp.predicates)


def derivable_atoms(gp: GroundProgram) -> frozenset[GroundAtom]:
    """The least fixpoint firing every rule whose positive body is already
    derived, ignoring negation: every head atom of a fireable rule enters.

    Stable models, and minimal models of positive programs, only contain
    derivable atoms: dropping an underivable atom from a model leaves a model.
    """
    derived: set[GroundAtom] = set()
    changed = True
    while changed:
        changed = False
        for r in gp.rules:
            if set(r.pos) <= derived and not set(r.head) <= derived:
                derived.update(r.head)
                changed = True
    return frozenset(derived)


# -- bit-indexed solver core --------------------------------------------------------


class _Index:
    """Bit-indexed view of a ground program, restricted to derivable atoms;
    everything outside the derivable set is pinned false."""

    def __init__(self, gp: GroundProgram):
        self.gp = gp
        self.atoms: list[GroundAtom] = sorted(derivable_atoms(gp))
        self.bit: dict[GroundAtom, int] = {a: 1 << i for i, a in enumerate(self.atoms)}
        self.n = len(self.atoms)

        def mask(atoms: Iterable[GroundAtom]) -> int | None:
            m = 0
            for a in atoms:
                b = self.bit.get(a)
                if b is None:
                    return None
                m |= b
            return m

        self.rule_masks: list[tuple[int, int, int]] = []  # (head, pos, neg) within base
        clauses: set[tuple[int, int]] = set()
        self.unsat = False
        for r in gp.rules:
            pos = mask(r.pos)
            head = mask(a for a in r.head if a in self.bit) or 0
            neg = mask(a for a in r.neg if a in self.bit) or 0
            if pos is None:
                continue  # a positive body atom can never hold
            self.rule_masks.append((head, pos, neg))
            # clause: some head atom true, or some positive body atom false,
            # or some negated atom true
            sat_true = head | neg
            sat_false = pos
            if sat_true & sat_false:
                continue  # tautology, e.g. p :- p
            if sat_true == 0 and sat_false == 0:
                self.unsat = True  # a constraint with an unconditionally true body
            clauses.add((sat_true, sat_false))
        self.clauses = sorted(clauses)

    def decode(self, mask: int) -> frozenset[GroundAtom]:
        return frozenset(a for a in self.atoms if self.bit[a] & mask)


def _propagate(clauses, t: int, f: int):
    while True:
        changed = False
        for ct, cf in clauses:
            if ct & t or cf & f:
                continue
            und_t = ct & ~t & ~f
            und_f = cf & ~t & ~f
            und = und_t | und_f
            if und == 0:
                return None
            if und & (und - 1) == 0:  # single undecided literal: forced
                if und & und_t:
                    t |= und
                else:
                    f |= und
                changed = True
        if not changed:
            return t, f


def _enumerate_models(clauses, budget: list[int]) -> list[int]:
    """DPLL enumeration, branching false-first so small models surface early.

    Emits the set of true atoms whenever every clause is satisfied by the
    partial assignment (remaining atoms are then false); the emitted sets
    form a superset of the minimal models and contain all of them.
    """
    out: list[int] = []

    def rec(t: int, f: int) -> None:
        budget[0] -= 1
        if budget[0] < 0:
            raise GuardExceededError("model search exceeded the node budget")
        r = _propagate(clauses, t, f)
        if r is None:
            return
        t, f = r
        for ct, cf in clauses:
            if ct & t or cf & f:
                continue
            und_t = ct & ~t & ~f
            und_f = cf & ~t & ~f
            bits = und_t if und_t else und_f
            bit = bits & -bits
            rec(t, f | bit)
            rec(t | bit, f)
            return
        out.append(t)

    rec(0, 0)
    return out


def _first_model(clauses, budget: list[int]) -> int | None:
    found: list[int] = []

    def rec(t: int, f: int) -> bool:
        budget[0] -= 1
        if budget[0] < 0:
            raise GuardExceededError("model search exceeded the node budget")
        r = _propagate(clauses, t, f)
        if r is None:
            return False
        t, f = r
        for ct, cf in clauses:
            if ct & t or cf & f:
                continue
            und_t = ct & ~t & ~f
            und_f = cf & ~t & ~f
            bits = und_t if und_t else und_f
            bit = bits & -bits
            return rec(t, f | bit) or rec(t | bit, f)
        found.append(t)
        return True

    return found[0] if rec(0, 0) else None


def _filter_minimal(masks: Iterable[int]) -> list[int]:
    out: list[int] = []
    for m in sorted(set(masks), key=lambda x: (bin(x).count("1"), x)):
        if not any(k & m == k for k in out):
            out.append(m)
    return out


def _is_stable_mask(s: int, idx: _Index, budget: list[int]) -> bool:
    """s is a minimal model of the reduct w.r.t. s (constraints never
    contribute: their bodies are already false in any candidate model)."""
    clauses: set[tuple[int, int]] = set()
    for head, pos, neg in idx.rule_masks:
        if neg & s:
            continue  # deleted by the reduct
        if pos & ~s:
            continue  # body cannot hold inside s
        ct = head & s
        cf = pos
        if ct & cf:
            continue
        if ct == 0 and cf == 0:
            return False  # unconditional constraint: no model at all
        clauses.add((ct, cf))
    if s == 0:
        return True  # the empty set has no proper subset
    blocked = sorted(clauses) + [(0, s)]
    return _first_model(blocked, budget) is None


def minimal_models(gp: GroundProgram, max_nodes: int = DEFAULT_MAX_NODES) -> tuple[frozenset[GroundAtom], ...]:
    """All subset-minimal models of a negation-free ground program."""
    for r in gp.rules:
        if r.neg:
            raise ValueError("minimal_models requires a negation-free program")
    idx = _Index(gp)
    if idx.unsat:
        return ()
    budget = [max_nodes]
    masks = _filter_minimal(_enumerate_models(idx.clauses, budget))
    return tuple(sorted((idx.decode(m) for m in masks), key=sorted))


def stable_models(
    program: Program | GroundProgram,
    domain: Sequence[str] | None = None,
    max_ground_rules: int = DEFAULT_MAX_GROUND_RULES,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> tuple[frozenset[GroundAtom], ...]:
    """All stable models, in canonical order.

    Candidates are the minimal models of the ground program (every stable
    model is one); each is kept iff it is a minimal model of its own reduct.
    """
    gp = program if isinstance(program, GroundProgram) else ground(program, domain, max_ground_rules)
    idx = _Index(gp)
    if idx.unsat:
        return ()
    budget = [max_nodes]
    candidates = _filter_minimal(_enumerate_models(idx.clauses, budget))
    stable = [m for m in candidates if _is_stable_mask(m, idx, budget)]
    return tuple(sorted((idx.decode(m) for m in stable), key=sorted))


def cautious_answers(
    program: Program | GroundProgram,
    query_pred: str,
    **kw,
) -> frozenset[tuple[str, ...]]:
    """Tuples of the query predicate true in every stable model.

    A program without stable models is reported as inconsistent instead of
    returning the vacuous answer set.
    """
    models = stable_models(program, **kw)
    if not models:
        raise InconsistentProgramError("inconsistent program (no stable models)")
    sets = [frozenset(a.args for a in m if a.pred == query_pred) for m in models]
    return frozenset.intersection(*sets)


# -- pure subset-enumeration oracles (for cross-checking the search) ----------------


def minimal_models_bruteforce(
    gp: GroundProgram, max_atoms: int = DEFAULT_MAX_BRUTE_ATOMS
) -> tuple[frozenset[GroundAtom], ...]:
    atoms = sorted(derivable_atoms(gp))
    if len(atoms) > max_atoms:
        raise GuardExceededError(f"{len(atoms)} atoms exceed the brute-force bound {max_atoms}")
    models = []
    for k in range(len(atoms) + 1):
        for combo in itertools.combinations(atoms, k):
            m = frozenset(combo)
            if is_model(gp, m):
                models.append(m)
    return tuple(
        sorted(
            (m for m in models if not any(o < m for o in models)),
            key=sorted,
        )
    )


def stable_models_bruteforce(
    program: Program | GroundProgram,
    max_atoms: int = DEFAULT_MAX_BRUTE_ATOMS,
) -> tuple[frozenset[GroundAtom], ...]:
    """Stable models by exhaustive subset enumeration over the derivable
    atoms, checking `S in MM(reduct(gr, S))` literally."""
    gp = program if isinstance(program, GroundProgram) else ground(program)
    atoms = sorted(derivable_atoms(gp))
    if len(atoms) > max_atoms:
        raise GuardExceededError(f"{len(atoms)} atoms exceed the brute-force bound {max_atoms}")
    out = []
    for k in range(len(atoms) + 1):
        for combo in itertools.combinations(atoms, k):
            s = frozenset(combo)
            red = reduct(gp, s)
            if not is_model(red, s):
                continue
            proper_submodel = False
            for j in range(len(combo)):
                for sub in itertools.combinations(combo, j):
                    if is_model(red, frozenset(sub)):
                        proper_submodel = True
                        break
                if proper_submodel:
                    break
            if not proper_submodel:
                out.append(s)
    return tuple(sorted(out, key=sorted))


# -- program analyses -----------------------------------------------------------------


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _sccs(nodes: list[str], edges: set[tuple[str, str]]) -> list[list[str]]:
    """Tarjan's algorithm, iterative; emits SCCs in reverse topological order."""
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for u, v in edges:
        succ[u].append(v)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in index:
                    index[child] = low[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(succ[child])))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


def stratum_assignment(program: Program) -> dict[str, int] | None:
    """A canonical stratification, or None when none exists.

    Predicates sharing a disjunctive head are merged; the class dependency
    graph must have no negative edge inside a strongly connected component.
    Strata indices follow the condensation: each dependency step between
    distinct components bumps the stratum, so extensional predicates sit at
    0 and each definitional layer above its prerequisites.
    """
    preds = sorted(program.predicates())
    if not preds:
        return {}
    uf = _UnionFind(preds)
    for rule in program.rules:
        heads = [a.pred for a in rule.head]
        for other in heads[1:]:
            uf.union(heads[0], other)
    edges: set[tuple[str, str, bool]] = set()
    for rule in program.rules:
        if not rule.head:
            continue  # program constraints impose no stratification conditions
        hc = uf.find(rule.head[0].pred)
        for a in rule.pos_atoms:
            edges.add((uf.find(a.pred), hc, False))
        for a in rule.neg_atoms:
            edges.add((uf.find(a.pred), hc, True))
    classes = sorted({uf.find(p) for p in preds})
    plain = {(u, v) for u, v, _ in edges}
    comps = _sccs(classes, plain)
    comp_of = {n: i for i, comp in enumerate(comps) for n in comp}
    for u, v, strict in edges:
        if strict and comp_of[u] == comp_of[v]:
            return None
    level = [0] * len(comps)
    # Tarjan emits reverse topological order; process sources first
    for i in reversed(range(len(comps))):
        for u, v in plain:
            if comp_of[u] == i and comp_of[v] != i:
                level[comp_of[v]] = max(level[comp_of[v]], level[i] + 1)
    # compact to consecutive stratum indices
    used = sorted(set(level))
    compact = {lv: i for i, lv in enumerate(used)}
    return {p: compact[level[comp_of[uf.find(p)]]] for p in preds}


def stratification(program: Program) -> tuple[frozenset[str], ...] | None:
    """The canonical strata as an ordered partition of the predicates."""
    levels = stratum_assignment(program)
    if levels is None:
        return None
    if not levels:
        return ()
    out: list[set[str]] = [set() for _ in range(max(levels.values()) + 1)]
    for p, lv in levels.items():
        out[lv].add(p)
    return tuple(frozenset(s) for s in out)


def is_valid_stratification(program: Program, level: Mapping[str, int]) -> bool:
    """Check conditions directly: co-head predicates share a stratum, positive
    body predicates sit at most as high, negated ones strictly lower."""
    try:
        for rule in program.rules:
            heads = [a.pred for a in rule.head]
            if not heads:
                continue
            h = level[heads[0]]
            if any(level[p] != h for p in heads[1:]):
                return False
            if any(level[a.pred] > h for a in rule.pos_atoms):
                return False
            if any(level[a.pred] >= h for a in rule.neg_atoms):
                return False
    except KeyError:
        return False
    return True


def is_hcf(program: Program) -> bool:
    """Head-cycle-freeness: no two atoms of one disjunctive head lie on a
    common cycle of the positive dependency graph (predicate level)."""
    preds = sorted(program.predicates())
    edges: set[tuple[str, str]] = set()
    for rule in program.rules:
        for h in rule.head:
            for a in rule.pos_atoms:
                edges.add((a.pred, h.pred))
    comps = _sccs(preds, edges)
    comp_of = {n: i for i, comp in enumerate(comps) for n in comp}
    cyclic = {
        i
        for i, comp in enumerate(comps)
        if len(comp) > 1 or (comp[0], comp[0]) in edges
    }
    for rule in program.rules:
        hs = [a.pred for a in rule.head]
        for i in range(len(hs)):
            for j in range(i + 1, len(hs)):
                if comp_of[hs[i]] == comp_of[hs[j]] and comp_of[hs[i]] in cyclic:
                    return False
    return True
