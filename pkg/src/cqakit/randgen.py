"""Seeded random instances, constraints, queries, and programs for the
randomized cross-check harness.  Everything is driven by a random.Random so
runs are reproducible from a single seed."""
from __future__ import annotations

import random
from .asp import Literal, Program, Rule
from .constraints import FD, UniversalConstraint
from .relational import Atom, GroundAtom, Instance, Schema, Var
from .repairgen import QuerySpec


def rng_for(seed: int) -> random.Random:
    return random.Random(seed)


def random_fd_case(rng: random.Random) -> tuple[Instance, list[FD], QuerySpec]:
    """An instance over 1-2 predicates with one FD each (|adom| <= 4,
    |D| <= 6) plus an atomic projection-free query."""
    npred = rng.choice([1, 2])
    names = ["p", "q"][:npred]
    arities = {n: rng.choice([2, 2, 3]) for n in names}
    dom = [f"c{i}" for i in range(rng.randint(2, 4))]
    fds = []
    for n in names:
        arity = arities[n]
        rhs = rng.randint(1, arity)
        others = [i for i in range(1, arity + 1) if i != rhs]
        lhs = frozenset(rng.sample(others, rng.randint(1, len(others))))
        fds.append(FD(n, lhs, rhs))
    schema = Schema.from_pairs(sorted(arities.items()))
    natoms = rng.randint(1, 6)
    atoms = set()
    for _ in range(natoms):
        n = rng.choice(names)
        atoms.add(GroundAtom(n, tuple(rng.choice(dom) for _ in range(arities[n]))))
    inst = Instance(frozenset(atoms), schema)

    qpred = rng.choice(names)
    args: list = []
    head_vars: list[Var] = []
    for i in range(arities[qpred]):
        if rng.random() < 0.15:
            args.append(rng.choice(dom))
        else:
            v = Var(f"A{i}")
            args.append(v)
            head_vars.append(v)
    if not head_vars:  # keep at least one answer variable
        v = Var("A0")
        args[0] = v
        head_vars = [v]
    rule = Rule((Atom("ans", tuple(head_vars)),), (Literal(False, Atom(qpred, tuple(args))),))
    return inst, fds, QuerySpec((rule,), "ans")


def random_single_fd_case(rng: random.Random) -> tuple[Instance, FD]:
    """One predicate, one FD, |adom| <= 4, |D| <= 6."""
    arity = rng.choice([2, 2, 3])
    dom = [f"c{i}" for i in range(rng.randint(2, 4))]
    rhs = rng.randint(1, arity)
    others = [i for i in range(1, arity + 1) if i != rhs]
    lhs = frozenset(rng.sample(others, rng.randint(1, len(others))))
    schema = Schema.of(p=arity)
    atoms = {
        GroundAtom("p", tuple(rng.choice(dom) for _ in range(arity)))
        for _ in range(rng.randint(1, 6))
    }
    return Instance(frozenset(atoms), schema), FD("p", lhs, rhs)


def random_inclusion_case(
    rng: random.Random,
) -> tuple[Instance, list[UniversalConstraint], QuerySpec]:
    """An instance with one inclusion constraint p -> q (insertions repair it
    too), sized so the candidate space stays tiny."""
    arity = rng.choice([1, 2])
    dom = [f"c{i}" for i in range(2 if arity == 2 else rng.randint(2, 3))]
    schema = Schema.of(p=arity, q=arity)
    atoms = set()
    for _ in range(rng.randint(1, 5)):
        pred = rng.choice(["p", "q"])
        atoms.add(GroundAtom(pred, tuple(rng.choice(dom) for _ in range(arity))))
    inst = Instance(frozenset(atoms), schema)
    vs = tuple(Var(f"A{i}") for i in range(arity))
    ic = UniversalConstraint((Atom("p", vs),), (Atom("q", vs),), (), label="p-into-q")

    qpred = rng.choice(["p", "q"])
    if rng.random() < 0.3 and arity == 2:
        # a query with weak negation across the two relations
        rule = Rule(
            (Atom("ans", (vs[0],)),),
            (Literal(False, Atom(qpred, vs)), Literal(True, Atom("q" if qpred == "p" else "p", vs))),
        )
    else:
        rule = Rule((Atom("ans", vs),), (Literal(False, Atom(qpred, vs)),))
    return inst, [ic], QuerySpec((rule,), "ans")


def random_program(rng: random.Random, max_atoms: int = 12, min_atoms: int = 1) -> Program:
    """A small disjunctive program with negation whose derivable ground atoms
    land between min_atoms and max_atoms."""
    from .asp import derivable_atoms, ground

    while True:
        nconsts = rng.randint(1, 2) if max_atoms < 9 else rng.randint(2, 3)
        consts = ["a", "b", "c"][:nconsts]
        npreds = rng.randint(3, 5) if max_atoms < 9 else rng.randint(5, 7)
        preds = [f"r{i}" for i in range(npreds)]
        arity = {p: rng.choice([0, 1]) for p in preds}

        def random_atom(var: Var | None) -> Atom:
            p = rng.choice(preds)
            if arity[p] == 0:
                return Atom(p, ())
            if var is not None and rng.random() < 0.6:
                return Atom(p, (var,))
            return Atom(p, (rng.choice(consts),))

        rules: list[Rule] = []
        if rng.random() < 0.5:
            # seed genuine nondeterminism: a two-way disjunction or an even loop
            a1, a2 = random_atom(None), random_atom(None)
            if a1 != a2 and not (a1.variables() or a2.variables()):
                if rng.random() < 0.5:
                    rules.append(Rule((a1, a2), ()))
                else:
                    rules.append(Rule((a1,), (Literal(True, a2),)))
                    rules.append(Rule((a2,), (Literal(True, a1),)))
        nrules = rng.randint(3, 6) if max_atoms < 9 else rng.randint(5, 9)
        for _ in range(nrules):
            use_var = rng.random() < 0.4
            v = Var("X") if use_var else None
            nbody = rng.randint(0, 2)
            body: list[Literal] = []
            grounded_var = False
            for _ in range(nbody):
                neg = rng.random() < 0.5
                atom = random_atom(v)
                if v is not None and v in atom.variables() and not neg:
                    grounded_var = True
                body.append(Literal(neg, atom))
            headsize = rng.choice([0, 1, 1, 1, 2, 2]) if body else rng.choice([1, 1, 2])
            head = []
            for _ in range(headsize):
                atom = random_atom(v if grounded_var else None)
                head.append(atom)
            if not head and not body:
                continue
            rule = Rule(tuple(head), tuple(body))
            try:
                rule.check_safety()
            except Exception:
                continue
            rules.append(rule)
        if not rules:
            continue
        # guarantee at least one fact so programs are rarely trivial
        fact_pred = rng.choice(preds)
        fact_args = () if arity[fact_pred] == 0 else (rng.choice(consts),)
        rules.append(Rule((Atom(fact_pred, fact_args),), ()))
        try:
            prog = Program(tuple(rules))
            prog.predicates()
            n = len(derivable_atoms(ground(prog)))
        except Exception:
            continue
        if min_atoms <= n <= max_atoms:
            return prog
