"""Cross-module invariants: the sentence form of a constraint against the
violation detector, the decomposed second-order entailment against the
enumeration oracle, grounding soundness, and the repair-program path for the
projection queries."""
import itertools

from hypothesis import given, settings, strategies as st

from cqakit.asp import Program, cautious_answers, ground, parse_program
from cqakit.constraints import FD, as_universal, violations
from cqakit.logic import (
    FiniteStructure,
    constraint_sentence,
    eval_fo,
    eval_so,
    phi_stable,
    structure_of_instance,
)
from cqakit.oracle import consistent_answers_enum, repairs_bruteforce
from cqakit.randgen import random_fd_case, random_single_fd_case, rng_for
from cqakit.relational import GroundAtom, Instance, Schema, Var
from cqakit.repairgen import (
    annotation_scheme,
    assemble_cqa_program,
    gen_repair_program_fd,
    parse_query,
    star_query,
)


def ga(pred, *args):
    return GroundAtom(pred, tuple(args))


EX1_SCHEMA = Schema.of(p=2)
EX1 = Instance(frozenset({ga("p", "a", "b"), ga("p", "a", "c"), ga("p", "d", "e")}), EX1_SCHEMA)
EX1_FD = FD("p", frozenset({1}), 2)


@given(
    st.frozensets(
        st.tuples(st.sampled_from("abc"), st.sampled_from("abc")).map(lambda t: ga("p", *t)),
        max_size=6,
    )
)
@settings(max_examples=60)
def test_violations_empty_iff_sentence_holds(atoms):
    inst = Instance(atoms, EX1_SCHEMA)
    (uc,) = as_universal(EX1_FD, EX1_SCHEMA)
    sentence = constraint_sentence(uc)
    struct = structure_of_instance(inst, extra_constants=["a"])
    assert (violations(inst, uc) == frozenset()) == eval_fo(struct, sentence)


def test_cqa_path_answers_projection_queries():
    repair = gen_repair_program_fd([EX1_FD], EX1_SCHEMA)
    for text, want in [
        ("ans(Y) :- p(X,Y).", {("e",)}),
        ("ans(X) :- p(X,Y).", {("a",), ("d",)}),
        ("ans(X,Y) :- p(X,Y).", {("d", "e")}),
    ]:
        q = star_query(parse_query(text, EX1_SCHEMA), EX1_SCHEMA)
        program = assemble_cqa_program(EX1, repair, q)
        assert cautious_answers(program, "ans") == frozenset(want)


def test_grounding_soundness():
    prog = parse_program("q(X,Y) :- p(X), r(Y). s(X) :- p(X), X != a.")
    dom = ["a", "b", "c"]
    gp = ground(prog, domain=dom)
    by_rule = {}
    for r in gp.rules:
        by_rule.setdefault(r.head[0].pred, []).append(r)
    # every instance over the domain appears (no built-ins: the full count)
    assert len(by_rule["q"]) == len(dom) ** 2
    # satisfied built-ins are removed, violated instances dropped
    assert len(by_rule["s"]) == len(dom) - 1
    # every ground rule is an instance of a source rule
    for r in by_rule["q"]:
        x, y = r.pos[0].args[0], r.pos[1].args[0]
        assert r.head[0].args == (x, y)


def _prop3_models(inst, fd, query_text):
    """Bounded Herbrand models of {R(D), Phi(repair rules), Phi(query rules)}
    with the extensional predicates fixed to the instance."""
    schema = inst.schema
    scheme = annotation_scheme(schema)
    pred = fd.predicate
    repair = gen_repair_program_fd([fd], schema)
    annotation_preds = sorted(set(repair.predicates()) - set(schema.names()))
    phi_repair = phi_stable(repair, circumscribed=annotation_preds)
    q = star_query(parse_query(query_text, schema), schema)
    qprog = Program(q.rules)
    phi_query = phi_stable(qprog, circumscribed=sorted(q.intensional()))

    base = sorted(inst.extension(pred))
    arity = schema.arity(pred)
    ans_arity = q.arity()
    sig = sorted(
        {(pred, arity), (scheme.f(pred), arity), (scheme.ds(pred), arity), ("ans", ans_arity)}
    )
    dom = tuple(sorted({c for t in base for c in t}) or ["a"])

    def tuples_of(sub):
        return [t for i, t in enumerate(base) if sub >> i & 1]

    models = []
    n = len(base)
    for f_bits in range(1 << n):
        for ds_bits in range(1 << n):
            atoms = {GroundAtom(pred, t) for t in base}
            atoms |= {GroundAtom(scheme.f(pred), t) for t in tuples_of(f_bits)}
            ds_tuples = tuples_of(ds_bits)
            atoms |= {GroundAtom(scheme.ds(pred), t) for t in ds_tuples}
            ans_candidates = sorted({_project(t, query_text, arity) for t in ds_tuples})
            for k in range(len(ans_candidates) + 1):
                for ans_tuple in itertools.combinations(ans_candidates, k):
                    s = FiniteStructure(
                        dom,
                        frozenset(atoms | {GroundAtom("ans", t) for t in ans_tuple}),
                        tuple(sig),
                    )
                    if eval_so(s, phi_repair) and eval_so(s, phi_query):
                        models.append(s)
    return models


def _project(t, query_text, arity):
    # answer tuple of the atomic/projection query for one witness tuple
    if query_text.startswith("ans(Y)"):
        return (t[1],)
    if query_text.startswith("ans(X,Y)"):
        return t
    return (t[0],)


def test_prop3_decomposition_example1():
    for query_text in ["ans(X,Y) :- p(X,Y).", "ans(Y) :- p(X,Y).", "ans(X) :- p(X,Y)."]:
        models = _prop3_models(EX1, EX1_FD, query_text)
        repairs = {r.instance.atoms for r in repairs_bruteforce(EX1, [EX1_FD])}
        # the models project onto the repairs via the double-star predicate
        ds = {
            frozenset(GroundAtom("p", a.args) for a in m.atoms if a.pred == "p_ds")
            for m in models
        }
        assert ds == repairs
        entailed = frozenset.intersection(
            *[frozenset(a.args for a in m.atoms if a.pred == "ans") for m in models]
        )
        q = parse_query(query_text, EX1_SCHEMA)
        assert entailed == consistent_answers_enum(EX1, [EX1_FD], q)


def test_prop3_decomposition_random_instances():
    count = 0
    for i in range(40):
        rng = rng_for(424200 + i)
        inst, fd = random_single_fd_case(rng)
        if len(inst.atoms) > 4 or inst.schema.arity("p") != 2:
            continue
        count += 1
        models = _prop3_models(inst, fd, "ans(X,Y) :- p(X,Y).")
        entailed = frozenset.intersection(
            *[frozenset(a.args for a in m.atoms if a.pred == "ans") for m in models]
        )
        q = parse_query("ans(X,Y) :- p(X,Y).", inst.schema)
        assert entailed == consistent_answers_enum(inst, [fd], q)
        if count >= 6:
            break
    assert count >= 3


def test_methods_agree_under_permuted_answer_variables():
    q = parse_query("ans(Y,X) :- p(X,Y).", EX1_SCHEMA)
    from cqakit.rewrite import answers_via_rewrite

    enum = consistent_answers_enum(EX1, [EX1_FD], q)
    repair = gen_repair_program_fd([EX1_FD], EX1_SCHEMA)
    program = assemble_cqa_program(EX1, repair, star_query(q, EX1_SCHEMA))
    via_asp = cautious_answers(program, "ans")
    via_rewrite = answers_via_rewrite(EX1, [EX1_FD], q)
    assert enum == via_asp == via_rewrite == frozenset({("e", "d")})


def test_rewrite_equals_plain_evaluation_on_consistent_instances():
    from cqakit.oracle import evaluate_query
    from cqakit.rewrite import answers_via_rewrite

    checked = 0
    for i in range(60):
        rng = rng_for(575700 + i)
        inst, fds, q = random_fd_case(rng)
        if any(violations(inst, uc) for fd in fds for uc in as_universal(fd, inst.schema)):
            continue
        checked += 1
        assert answers_via_rewrite(inst, fds, q) == evaluate_query(inst, q)
    assert checked >= 10
