"""Brute-force, definition-level computation of repairs and consistent
answers; the ground truth the program-based and rewriting-based methods are
validated against.

A repair is a consistent instance whose symmetric difference with the
original is subset-minimal.  Candidates are subsets of the original atoms
united with a finite insertion pool: the least fixpoint of head atoms of
constraints whose bodies match inside the growing pool (a deleted-atom-free
superset of every minimal repair's insertions, and empty for deletion-only
constraint sets).  All consistent candidates are collected first, then
filtered to the delta-minimal ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .asp import Program, Rule, stable_models
from .constraints import Constraint, FD, UniversalConstraint, as_universal, violations
from .errors import GuardExceededError
from .relational import Atom, GroundAtom, Instance, Var
from .repairgen import QuerySpec

DEFAULT_MAX_CANDIDATE_ATOMS = 20


@dataclass(frozen=True)
class Repair:
    instance: Instance
    deleted: frozenset[GroundAtom]
    inserted: frozenset[GroundAtom]

    @property
    def delta(self) -> frozenset[GroundAtom]:
        return self.deleted | self.inserted

    def key(self):
        return sorted(self.instance.atoms)


def _match_all(body, by_pred):
    """All substitutions grounding every body atom inside the indexed atom set."""

    def extend(i, sub):
        if i == len(body):
            yield sub
            return
        atom = body[i]
        for args in by_pred.get(atom.pred, ()):
            new = dict(sub)
            ok = True
            for term, const in zip(atom.args, args):
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


def insertion_pool(d: Instance, ics: Sequence[UniversalConstraint]) -> frozenset[GroundAtom]:
    """Ground head atoms that could ever cure a violation: fixpoint over
    constraint bodies matching the original atoms plus earlier insertions.
    Any atom outside this pool is removable from a consistent instance
    without breaking consistency, so minimal repairs never insert it."""
    atoms: set[GroundAtom] = set(d.atoms)
    changed = True
    while changed:
        changed = False
        by_pred: dict[str, list[tuple[str, ...]]] = {}
        for a in atoms:
            by_pred.setdefault(a.pred, []).append(a.args)
        for ic in ics:
            if not ic.head_atoms:
                continue
            for sub in _match_all(ic.body, by_pred):
                if any(b.substitute(sub).eval_ground() for b in ic.head_builtins):
                    continue
                for h in ic.head_atoms:
                    g = h.substitute(sub).to_ground()
                    if g not in atoms:
                        atoms.add(g)
                        changed = True
    return frozenset(atoms - d.atoms)


def repairs_bruteforce(
    d: Instance,
    constraints: Sequence[Constraint],
    max_candidate_atoms: int = DEFAULT_MAX_CANDIDATE_ATOMS,
) -> tuple[Repair, ...]:
    """All repairs, by exhausting candidate instances and keeping the
    delta-minimal consistent ones.  For deletion-only constraint sets the
    candidates are exactly the subsets of the original instance."""
    ics = [uc for c in constraints for uc in as_universal(c, d.schema)]
    pool = sorted(insertion_pool(d, ics))
    universe = sorted(d.atoms) + pool
    if len(universe) > max_candidate_atoms:
        raise GuardExceededError(
            f"{len(universe)} candidate atoms exceed the bound {max_candidate_atoms}"
        )
    consistent: list[frozenset[GroundAtom]] = []
    for mask in range(1 << len(universe)):
        cand = frozenset(a for i, a in enumerate(universe) if mask >> i & 1)
        inst = Instance(cand, d.schema)
        if all(not violations(inst, ic) for ic in ics):
            consistent.append(cand)
    # keep candidates with subset-minimal symmetric difference
    deltas = sorted(consistent, key=lambda c: (len(c ^ d.atoms), sorted(c ^ d.atoms)))
    kept: list[frozenset[GroundAtom]] = []
    kept_deltas: list[frozenset[GroundAtom]] = []
    for cand in deltas:
        delta = cand ^ d.atoms
        if not any(k <= delta for k in kept_deltas):
            kept.append(cand)
            kept_deltas.append(delta)
    out = [
        Repair(Instance(cand, d.schema), d.atoms - cand, cand - d.atoms) for cand in kept
    ]
    return tuple(sorted(out, key=Repair.key))


def conflict_edges(d: Instance, fds: Sequence[FD]) -> frozenset[frozenset[GroundAtom]]:
    """Pairs of tuples jointly violating an FD: same lhs values, different rhs."""
    edges: set[frozenset[GroundAtom]] = set()
    for fd in fds:
        fd.check(d.schema)
        ext = sorted(d.extension(fd.predicate))
        lhs = sorted(fd.lhs)
        for t1, t2 in itertools.combinations(ext, 2):
            if all(t1[i - 1] == t2[i - 1] for i in lhs) and t1[fd.rhs - 1] != t2[fd.rhs - 1]:
                edges.add(
                    frozenset({GroundAtom(fd.predicate, t1), GroundAtom(fd.predicate, t2)})
                )
    return frozenset(edges)


def repairs_fd_conflicts(d: Instance, fds: Sequence[FD]) -> tuple[Repair, ...]:
    """FD repairs via the conflict graph: vertices are the tuples, edges the
    violating pairs, repairs the maximal independent sets."""
    edges = conflict_edges(d, fds)
    participating = sorted({a for e in edges for a in e})
    isolated = d.atoms - set(participating)
    neighbours: dict[GroundAtom, set[GroundAtom]] = {a: set() for a in participating}
    for e in edges:
        a, b = tuple(e)
        neighbours[a].add(b)
        neighbours[b].add(a)
    out = []
    for k in range(len(participating) + 1):
        for combo in itertools.combinations(participating, k):
            chosen = set(combo)
            if any(neighbours[a] & chosen for a in chosen):
                continue  # not independent
            if any(a not in chosen and not (neighbours[a] & chosen) for a in participating):
                continue  # not maximal
            atoms = frozenset(isolated | chosen)
            out.append(Repair(Instance(atoms, d.schema), d.atoms - atoms, frozenset()))
    return tuple(sorted(out, key=Repair.key))


def evaluate_query(instance: Instance, q: QuerySpec) -> frozenset[tuple[str, ...]]:
    """Answers of a stratified non-recursive query over one instance, computed
    as the single stable model of facts + query rules."""
    facts = tuple(Rule((Atom(a.pred, a.args),), ()) for a in instance)
    (model,) = stable_models(Program(facts + q.rules))
    return frozenset(a.args for a in model if a.pred == q.answer_pred)


def consistent_answers_enum(
    d: Instance,
    constraints: Sequence[Constraint],
    q: QuerySpec,
    max_candidate_atoms: int = DEFAULT_MAX_CANDIDATE_ATOMS,
) -> frozenset[tuple[str, ...]]:
    """Tuples answered by the query on every repair."""
    repairs = repairs_bruteforce(d, constraints, max_candidate_atoms)
    answer_sets = [evaluate_query(r.instance, q) for r in repairs]
    return frozenset.intersection(*answer_sets)
