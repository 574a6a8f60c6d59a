import pytest
from hypothesis import given, strategies as st

from cqakit.constraints import (
    FD,
    BuiltinAtom,
    KeyConstraint,
    UniversalConstraint,
    as_universal,
    fd_to_constraint,
    parse_constraints,
    satisfies,
    structured_fds,
    violations,
)
from cqakit.errors import ParseError, SchemaError
from cqakit.relational import Atom, GroundAtom, Instance, Schema, Var


def ga(pred, *args):
    return GroundAtom(pred, tuple(args))


def asg(**kw):
    return tuple(sorted(kw.items()))


EX1_SCHEMA = Schema.of(p=2)
EX1 = Instance(frozenset({ga("p", "a", "b"), ga("p", "a", "c"), ga("p", "d", "e")}), EX1_SCHEMA)

EX3_SCHEMA = Schema.of(p=2, q=2)
EX3 = Instance(
    frozenset({ga("p", "c", "l"), ga("p", "d", "m"), ga("q", "d", "m"), ga("q", "e", "k")}),
    EX3_SCHEMA,
)
X, Y = Var("X"), Var("Y")
INCLUSION = UniversalConstraint((Atom("p", (X, Y)),), (Atom("q", (X, Y)),))


class TestParseConstraints:
    def test_fd(self):
        (c,) = parse_constraints("fd p : 1 -> 2.", EX1_SCHEMA)
        assert c == FD("p", frozenset({1}), 2)

    def test_inclusion_ic(self):
        (c,) = parse_constraints("ic p(X,Y) -> q(X,Y).", EX3_SCHEMA)
        assert isinstance(c, UniversalConstraint)
        assert c.body == (Atom("p", (X, Y)),)
        assert c.head_atoms == (Atom("q", (X, Y)),)
        assert c.head_builtins == ()

    def test_key_single_nonkey_position(self):
        schema = Schema.of(r=2)
        (c,) = parse_constraints("key r : 1.", schema)
        assert c == KeyConstraint("r", frozenset({1}))
        assert c.expand(schema) == (FD("r", frozenset({1}), 2),)

    def test_denial_with_builtin(self):
        (c,) = parse_constraints("denial p(X,Y), p(X,Z), Y != Z.", EX1_SCHEMA)
        assert c.head_atoms == ()
        assert c.head_builtins == (BuiltinAtom("=", Y, Var("Z")),)

    def test_ic_with_builtin_disjunct(self):
        (c,) = parse_constraints("ic p(X,Y) -> q(X,Y) | X = Y.", EX3_SCHEMA)
        assert c.head_builtins == (BuiltinAtom("=", X, Y),)

    def test_unknown_predicate(self):
        with pytest.raises(SchemaError):
            parse_constraints("fd r : 1 -> 2.", EX1_SCHEMA)

    def test_position_out_of_range(self):
        with pytest.raises(SchemaError, match="out of range"):
            parse_constraints("fd p : 1 -> 3.", EX1_SCHEMA)

    def test_unranged_head_variable(self):
        with pytest.raises(SchemaError, match="does not occur in the body"):
            parse_constraints("ic p(X,Y) -> q(X,Z).", EX3_SCHEMA)

    def test_syntax_error(self):
        with pytest.raises(ParseError):
            parse_constraints("fd p 1 -> 2.", EX1_SCHEMA)


class TestFdToConstraint:
    def test_binary_fd(self):
        c = fd_to_constraint(FD("p", frozenset({1}), 2), EX1_SCHEMA)
        x, y1, y2 = Var("X"), Var("Y1"), Var("Y2")
        assert c.body == (Atom("p", (x, y1)), Atom("p", (x, y2)))
        assert c.head_atoms == ()
        assert c.head_builtins == (BuiltinAtom("=", y1, y2),)

    def test_ternary_two_position_key(self):
        schema = Schema.of(r=3)
        c = fd_to_constraint(FD("r", frozenset({1, 2}), 3), schema)
        x1, x2, y1, y2 = Var("X1"), Var("X2"), Var("Y1"), Var("Y2")
        assert c.body == (Atom("r", (x1, x2, y1)), Atom("r", (x1, x2, y2)))
        assert c.head_builtins == (BuiltinAtom("=", y1, y2),)

    def test_permuted_positions(self):
        schema = Schema.of(s=2)
        c = fd_to_constraint(FD("s", frozenset({2}), 1), schema)
        x, y1, y2 = Var("X"), Var("Y1"), Var("Y2")
        assert c.body == (Atom("s", (y1, x)), Atom("s", (y2, x)))

    def test_nonkey_nonrhs_positions_fresh_per_copy(self):
        schema = Schema.of(t=3)
        c = fd_to_constraint(FD("t", frozenset({1}), 2), schema)
        first, second = c.body
        assert first.args[2] != second.args[2]


class TestViolations:
    def test_fd_violation_pairs(self):
        c = fd_to_constraint(FD("p", frozenset({1}), 2), EX1_SCHEMA)
        got = violations(EX1, c)
        assert got == frozenset({asg(X="a", Y1="b", Y2="c"), asg(X="a", Y1="c", Y2="b")})

    def test_consistent_instance(self):
        inst = Instance(frozenset({ga("p", "d", "e")}), EX1_SCHEMA)
        c = fd_to_constraint(FD("p", frozenset({1}), 2), EX1_SCHEMA)
        assert violations(inst, c) == frozenset()

    def test_inclusion_violation(self):
        # p(c,l) holds with q(c,l) absent; p(d,m)/q(d,m) satisfied
        assert violations(EX3, INCLUSION) == frozenset({asg(X="c", Y="l")})

    def test_head_builtin_satisfied(self):
        schema = Schema.of(p=2)
        inst = Instance(frozenset({ga("p", "a", "a")}), schema)
        c = UniversalConstraint((Atom("p", (X, Y)),), (), (BuiltinAtom("=", X, Y),))
        assert violations(inst, c) == frozenset()


class TestProperties:
    def test_fd_violations_come_in_symmetric_pairs(self):
        c = fd_to_constraint(FD("p", frozenset({1}), 2), EX1_SCHEMA)
        got = violations(EX1, c)
        for v in got:
            d = dict(v)
            swapped = asg(X=d["X"], Y1=d["Y2"], Y2=d["Y1"])
            assert swapped in got

    def test_key_violations_union_of_component_fds(self):
        schema = Schema.of(r=3)
        inst = Instance(
            frozenset({ga("r", "a", "b", "c"), ga("r", "a", "b", "d"), ga("r", "a", "x", "c")}),
            schema,
        )
        key = KeyConstraint("r", frozenset({1}))
        whole = set()
        for fd in key.expand(schema):
            # violation witnesses are tuples over different variable sets per FD,
            # so compare via the violating atom pairs instead
            whole |= {frozenset(dict(v).values()) for v in violations(inst, fd_to_constraint(fd, schema))}
        assert whole  # the key is violated
        for fd in key.expand(schema):
            assert all(
                frozenset(dict(v).values()) in whole
                for v in violations(inst, fd_to_constraint(fd, schema))
            )

    def test_satisfies_matches_empty_violations(self):
        assert not satisfies(EX1, [FD("p", frozenset({1}), 2)])
        assert satisfies(EX3, [])
        assert not satisfies(EX3, [INCLUSION])
        fixed = EX3.with_atoms(add=[ga("q", "c", "l")])
        assert satisfies(fixed, [INCLUSION])

    def test_structured_fds_expands_keys(self):
        schema = Schema.of(r=3)
        fds = structured_fds([KeyConstraint("r", frozenset({1}))], schema)
        assert set(fds) == {FD("r", frozenset({1}), 2), FD("r", frozenset({1}), 3)}


@given(
    st.frozensets(
        st.tuples(st.sampled_from("ab"), st.sampled_from("abc")).map(lambda t: ga("p", *t)),
        max_size=6,
    )
)
def test_violations_empty_iff_fo_satisfaction(atoms):
    # an instance satisfies the FD iff no pair agrees on position 1 and differs on 2
    inst = Instance(atoms, EX1_SCHEMA)
    c = fd_to_constraint(FD("p", frozenset({1}), 2), EX1_SCHEMA)
    brute_ok = all(
        not (a1.args[0] == a2.args[0] and a1.args[1] != a2.args[1])
        for a1 in atoms
        for a2 in atoms
    )
    assert (violations(inst, c) == frozenset()) == brute_ok
