import pytest

from cqakit.constraints import FD
from cqakit.errors import RewriteFallbackError
from cqakit.fotext import emit_formula
from cqakit.logic import repair_of_structure
from cqakit.oracle import consistent_answers_enum, repairs_bruteforce
from cqakit.relational import Atom, GroundAtom, Instance, Schema, Var
from cqakit.repairgen import parse_query
from cqakit.rewrite import (
    answers_via_rewrite,
    atomic_query,
    prop4_models,
    prop4_theory,
    rewrite_atomic,
)


def ga(pred, *args):
    return GroundAtom(pred, tuple(args))


X, Y = Var("X"), Var("Y")

EX1_SCHEMA = Schema.of(p=2)
EX1 = Instance(frozenset({ga("p", "a", "b"), ga("p", "a", "c"), ga("p", "d", "e")}), EX1_SCHEMA)
EX1_FD = FD("p", frozenset({1}), 2)


class TestRewriteAtomic:
    def test_binary_fd_golden(self):
        r = rewrite_atomic(EX1_FD, Atom("p", (X, Y)), EX1_SCHEMA)
        assert r.applicable
        assert emit_formula(r.rewritten) == "p(X,Y) & ~exists Z (p(X,Z) & Z != Y)"

    def test_two_position_key(self):
        schema = Schema.of(r=3)
        fd = FD("r", frozenset({1, 2}), 3)
        r = rewrite_atomic(fd, Atom("r", (X, Y, Var("W"))), schema)
        assert emit_formula(r.rewritten) == (
            "r(X,Y,W) & ~exists Z (r(X,Y,Z) & Z != W)"
        )

    def test_no_fd_on_predicate_unchanged(self):
        r = rewrite_atomic([], Atom("p", (X, Y)), EX1_SCHEMA)
        assert r.applicable
        assert emit_formula(r.rewritten) == "p(X,Y)"

    def test_extra_position_gets_fresh_witness_variable(self):
        schema = Schema.of(t=3)
        fd = FD("t", frozenset({1}), 2)
        r = rewrite_atomic(fd, Atom("t", (X, Y, Var("U"))), schema)
        # the non-key non-dependent position is unconstrained in the witness
        assert emit_formula(r.rewritten) == (
            "t(X,Y,U) & ~exists Z (exists W3 (t(X,Z,W3) & Z != Y))"
        )

    def test_repeated_variable_falls_back(self):
        r = rewrite_atomic(EX1_FD, Atom("p", (X, X)), EX1_SCHEMA)
        assert not r.applicable

    def test_two_fds_on_predicate_fall_back(self):
        fds = [FD("p", frozenset({1}), 2), FD("p", frozenset({2}), 1)]
        r = rewrite_atomic(fds, Atom("p", (X, Y)), EX1_SCHEMA)
        assert not r.applicable
        assert "2 FDs" in r.reason


class TestAnswersViaRewrite:
    def test_example_atomic_query(self):
        q = parse_query("ans(X,Y) :- p(X,Y).", EX1_SCHEMA)
        assert answers_via_rewrite(EX1, [EX1_FD], q) == {("d", "e")}

    def test_ground_queries(self):
        assert answers_via_rewrite(EX1, [EX1_FD], Atom("p", ("d", "e"))) == {()}
        assert answers_via_rewrite(EX1, [EX1_FD], Atom("p", ("a", "b"))) == frozenset()

    def test_consistent_instance_plain_answers(self):
        inst = Instance(frozenset({ga("p", "a", "b"), ga("p", "c", "d")}), EX1_SCHEMA)
        q = parse_query("ans(X,Y) :- p(X,Y).", EX1_SCHEMA)
        assert answers_via_rewrite(inst, [EX1_FD], q) == {("a", "b"), ("c", "d")}

    def test_agrees_with_enumeration(self):
        q = parse_query("ans(X,Y) :- p(X,Y).", EX1_SCHEMA)
        assert answers_via_rewrite(EX1, [EX1_FD], q) == consistent_answers_enum(
            EX1, [EX1_FD], q
        )

    def test_constant_in_query(self):
        q = parse_query("ans(Y) :- p(a,Y).", EX1_SCHEMA)
        assert answers_via_rewrite(EX1, [EX1_FD], q) == frozenset()
        q2 = parse_query("ans(Y) :- p(d,Y).", EX1_SCHEMA)
        assert answers_via_rewrite(EX1, [EX1_FD], q2) == {("e",)}

    def test_projection_query_falls_back(self):
        q = parse_query("ans(Y) :- p(X,Y).", EX1_SCHEMA)
        with pytest.raises(RewriteFallbackError):
            answers_via_rewrite(EX1, [EX1_FD], q)

    def test_join_query_falls_back(self):
        q = parse_query("ans(X,Y) :- p(X,Y), p(Y,X).", EX1_SCHEMA)
        assert atomic_query(q) is None
        with pytest.raises(RewriteFallbackError):
            answers_via_rewrite(EX1, [EX1_FD], q)


class TestProp4Theory:
    def test_witness_sentence_golden(self):
        theory = prop4_theory(EX1_FD, EX1)
        text = emit_formula(theory.get("surviving-witness:p"))
        assert text == (
            "forall S (forall T (p_f(S,T) -> exists Z (p(S,T) & p(S,Z) & Z != T & ~p_f(S,Z))))"
        )

    def test_example_models_are_the_repairs(self):
        models = prop4_models(EX1_FD, EX1)
        assert len(models) == 2
        got = {repair_of_structure(m, EX1_SCHEMA) for m in models}
        want = {r.instance.atoms for r in repairs_bruteforce(EX1, [EX1_FD])}
        assert got == want

    def test_consistent_instance_unique_model_no_deletions(self):
        inst = Instance(frozenset({ga("p", "d", "e")}), EX1_SCHEMA)
        (model,) = prop4_models(EX1_FD, inst)
        assert model.extension("p_f") == frozenset()

    def test_every_model_deletion_has_surviving_witness(self):
        inst = Instance(
            frozenset(
                {ga("p", "a", "b"), ga("p", "a", "c"), ga("p", "a", "d"), ga("p", "x", "y")}
            ),
            EX1_SCHEMA,
        )
        for m in prop4_models(EX1_FD, inst):
            deleted = m.extension("p_f")
            kept = m.extension("p_ds")
            for s, t in deleted:
                assert any(ks == s and kt != t for ks, kt in kept)

    def test_ternary_generalization(self):
        schema = Schema.of(r=3)
        inst = Instance(
            frozenset({ga("r", "k", "u", "1"), ga("r", "k", "v", "2"), ga("r", "m", "w", "3")}),
            schema,
        )
        fd = FD("r", frozenset({1}), 2)
        models = prop4_models(fd, inst, schema)
        got = {frozenset(GroundAtom("r", t) for t in m.extension("r_ds")) for m in models}
        want = {r.instance.atoms for r in repairs_bruteforce(inst, [fd])}
        assert got == want
