import json

import pytest

from cqakit.cli import main

EX1_DB = "p(a,b). p(a,c). p(d,e).\n"
EX1_IC = "fd p : 1 -> 2.\n"
Q3 = "ans(X,Y) :- p(X,Y).\n"

EX3_DB = "p(c,l). p(d,m). q(d,m). q(e,k).\n"
EX3_IC = "ic p(X,Y) -> q(X,Y).\n"
Q_OVER_Q = "ans(X,Y) :- q(X,Y).\n"


@pytest.fixture
def ex1(tmp_path):
    db = tmp_path / "ex1.facts"
    db.write_text(EX1_DB)
    ic = tmp_path / "ex1.ic"
    ic.write_text(EX1_IC)
    q = tmp_path / "q3.q"
    q.write_text(Q3)
    return db, ic, q


@pytest.fixture
def ex3(tmp_path):
    db = tmp_path / "ex3.facts"
    db.write_text(EX3_DB)
    ic = tmp_path / "ex3.ic"
    ic.write_text(EX3_IC)
    q = tmp_path / "q.q"
    q.write_text(Q_OVER_Q)
    return db, ic, q


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRepairs:
    def test_count(self, ex1, capsys):
        db, ic, _ = ex1
        code, out, _ = run(capsys, "repairs", "--db", str(db), "--ic", str(ic), "--count")
        assert code == 0 and out.strip() == "2"

    def test_blocks_and_delta(self, ex1, capsys):
        db, ic, _ = ex1
        code, out, _ = run(capsys, "repairs", "--db", str(db), "--ic", str(ic))
        assert code == 0
        assert "% repair 1" in out and "% repair 2" in out
        assert "deleted p(a,c)" in out and "deleted p(a,b)" in out

    def test_insertion_delta(self, ex3, capsys):
        db, ic, _ = ex3
        code, out, _ = run(capsys, "repairs", "--db", str(db), "--ic", str(ic))
        assert code == 0
        assert "inserted q(c,l)" in out

    def test_deterministic(self, ex1, capsys):
        db, ic, _ = ex1
        _, out1, _ = run(capsys, "repairs", "--db", str(db), "--ic", str(ic), "--json")
        _, out2, _ = run(capsys, "repairs", "--db", str(db), "--ic", str(ic), "--json")
        assert out1 == out2


class TestGenProgram:
    def test_sections_and_parsability(self, ex1, capsys):
        from cqakit.asp import parse_program

        db, ic, _ = ex1
        code, out, _ = run(capsys, "gen-program", "--db", str(db), "--ic", str(ic))
        assert code == 0
        assert out.splitlines()[0].startswith("% repair program for: fd p : 1 -> 2.")
        assert "% repair rules" in out and "% interpretation rules" in out
        prog = parse_program(out)
        assert len(prog.rules) == 2

    def test_clingo_dialect(self, ex1, capsys):
        db, ic, _ = ex1
        _, out, _ = run(capsys, "gen-program", "--db", str(db), "--ic", str(ic),
                        "--dialect", "clingo")
        assert " | " in out and " v " not in out

    def test_faithful_appendix(self, ex3, capsys):
        db, ic, _ = ex3
        _, out, _ = run(capsys, "gen-program", "--db", str(db), "--ic", str(ic))
        assert "% program constraints" in out  # insertions possible: full machinery


class TestSolve:
    def test_project_ds(self, ex1, capsys):
        db, ic, _ = ex1
        code, out, _ = run(capsys, "solve", "--db", str(db), "--ic", str(ic),
                           "--project", "p_ds")
        assert code == 0
        lines = [l for l in out.splitlines() if not l.startswith("%")]
        assert sorted(lines) == [
            "p_ds(a,b) p_ds(d,e)",
            "p_ds(a,c) p_ds(d,e)",
        ]

    def test_program_file(self, tmp_path, capsys):
        f = tmp_path / "prog.lp"
        f.write_text("a v b. :- b.\n")
        code, out, _ = run(capsys, "solve", "--program", str(f))
        assert code == 0
        assert out.splitlines()[0] == "a"


class TestAnswer:
    def test_three_methods_agree(self, ex1, capsys):
        db, ic, q = ex1
        for method in ["enumerate", "asp", "rewrite"]:
            code, out, _ = run(capsys, "answer", "--db", str(db), "--ic", str(ic),
                               "--query", str(q), "--method", method)
            assert code == 0
            assert "(d,e)" in out

    def test_rewrite_explain(self, ex1, capsys):
        db, ic, q = ex1
        code, out, _ = run(capsys, "answer", "--db", str(db), "--ic", str(ic),
                           "--query", str(q), "--method", "rewrite", "--explain")
        assert code == 0
        assert "% rewritten: p(X,Y) & ~exists Z (p(X,Z) & Z != Y)" in out

    def test_rewrite_fallback_exit(self, tmp_path, ex1, capsys):
        db, ic, _ = ex1
        q = tmp_path / "proj.q"
        q.write_text("ans(Y) :- p(X,Y).\n")
        code, _, err = run(capsys, "answer", "--db", str(db), "--ic", str(ic),
                           "--query", str(q), "--method", "rewrite")
        assert code == 1
        assert "atomic" in err

    def test_inconsistent_program_exit(self, tmp_path, capsys):
        prog = tmp_path / "prog.facts"
        prog.write_text("p(a,b).\n")
        # a query program against an unsatisfiable combined program is not
        # reachable through repair generation, so exercise solve's sibling:
        code, _, err = run(capsys, "answer", "--db", str(prog), "--query", str(prog))
        assert code == 1  # query file is not a valid query program


class TestEmitTheory:
    def test_reiter(self, ex1, capsys):
        db, ic, _ = ex1
        code, out, _ = run(capsys, "emit-theory", "--db", str(db), "--kind", "reiter")
        assert code == 0
        assert "DCA: forall X (X = a | X = b | X = c | X = d | X = e)" in out
        assert "completion:p:" in out

    def test_phi_of_program_file(self, tmp_path, capsys):
        f = tmp_path / "prog.lp"
        f.write_text("a v b.\n")
        code, out, _ = run(capsys, "emit-theory", "--program", str(f), "--kind", "phi")
        assert code == 0
        assert "exists2" in out

    def test_prop2_and_roundtrip(self, ex1, capsys):
        from cqakit.fotext import parse_theory

        db, ic, _ = ex1
        code, out, _ = run(capsys, "emit-theory", "--db", str(db), "--ic", str(ic),
                           "--kind", "prop2")
        assert code == 0
        parsed = parse_theory(out)
        assert "circ:update-predicates" in parsed.names()

    def test_prop4(self, ex1, capsys):
        db, ic, _ = ex1
        code, out, _ = run(capsys, "emit-theory", "--db", str(db), "--ic", str(ic),
                           "--kind", "prop4")
        assert code == 0
        assert "surviving-witness:p:" in out

    def test_psi(self, ex1, capsys):
        db, ic, q = ex1
        code, out, _ = run(capsys, "emit-theory", "--db", str(db), "--ic", str(ic),
                           "--query", str(q), "--kind", "psi")
        assert code == 0
        assert out.startswith("psi: p(a,b) & p(a,c) & p(d,e) & forall")


class TestAnalyze:
    def test_generated_program_report(self, ex1, capsys):
        db, ic, _ = ex1
        code, out, _ = run(capsys, "analyze", "--db", str(db), "--ic", str(ic), "--json")
        assert code == 0
        report = json.loads(out)
        assert report["stratified"] is True
        assert report["head_cycle_free"] is True
        assert report["annotation_strata_valid"] is True
        assert report["annotation_strata"] == {"0": ["p"], "1": ["p_f"], "2": ["p_ds"]}

    def test_program_file(self, tmp_path, capsys):
        f = tmp_path / "prog.lp"
        f.write_text("p :- not p.\n")
        code, out, _ = run(capsys, "analyze", "--program", str(f), "--json")
        assert code == 0
        assert json.loads(out)["stratified"] is False


class TestCheck:
    def test_example1_agreement(self, ex1, capsys):
        db, ic, q = ex1
        code, out, _ = run(capsys, "check", "--db", str(db), "--ic", str(ic),
                           "--query", str(q), "--json")
        assert code == 0
        report = json.loads(out)
        assert report["agreement"] is True
        assert report["answers"]["enumerate"] == [["d", "e"]]
        assert report["answers"]["asp"] == [["d", "e"]]
        assert report["answers"]["rewrite"] == [["d", "e"]]
        assert report["repairs"] == 2
        assert report["stable_models"] == 2

    def test_example3_two_methods(self, ex3, capsys):
        db, ic, q = ex3
        code, out, _ = run(capsys, "check", "--db", str(db), "--ic", str(ic),
                           "--query", str(q), "--methods", "enumerate,asp", "--json")
        assert code == 0
        report = json.loads(out)
        assert report["agreement"] is True
        assert report["answers"]["enumerate"] == [["d", "m"], ["e", "k"]]

    def test_rewrite_inapplicable_is_not_disagreement(self, ex3, capsys):
        db, ic, q = ex3
        code, out, _ = run(capsys, "check", "--db", str(db), "--ic", str(ic),
                           "--query", str(q), "--json")
        assert code == 0
        report = json.loads(out)
        assert report["answers"]["rewrite"] is None
        assert "not applicable" in report["notes"]["rewrite"]

    def test_json_deterministic(self, ex1, capsys):
        db, ic, q = ex1
        _, out1, _ = run(capsys, "check", "--db", str(db), "--ic", str(ic),
                         "--query", str(q), "--json")
        _, out2, _ = run(capsys, "check", "--db", str(db), "--ic", str(ic),
                         "--query", str(q), "--json")
        assert out1 == out2

    def test_random_fd_batch(self, capsys):
        code, out, _ = run(capsys, "check", "--random-fd", "15", "--seed", "7", "--json")
        assert code == 0
        report = json.loads(out)
        assert report["cases"] == 15 and report["agreement"] is True

    def test_random_ic_batch_drops_rewrite(self, capsys):
        code, out, _ = run(capsys, "check", "--random-ic", "10", "--seed", "3", "--json")
        assert code == 0
        report = json.loads(out)
        assert report["methods"] == ["enumerate", "asp"]
        assert report["agreement"] is True

    def test_cross_check_files_entry(self, ex1):
        from cqakit.cli import cross_check_files

        db, ic, q = ex1
        report = cross_check_files(str(db), str(ic), str(q), ["enumerate", "rewrite"])
        assert report.agreement
        assert report.answers["rewrite"] == [["d", "e"]]


class TestKeyConstraintPath:
    def test_key_through_all_methods(self, tmp_path, capsys):
        db = tmp_path / "d.facts"
        db.write_text(EX1_DB)
        ic = tmp_path / "k.ic"
        ic.write_text("key p : 1.\n")  # over p/2 this is exactly the FD
        q = tmp_path / "q.q"
        q.write_text(Q3)
        code, out, _ = run(capsys, "check", "--db", str(db), "--ic", str(ic),
                           "--query", str(q), "--json")
        assert code == 0
        report = json.loads(out)
        assert report["agreement"] is True
        assert report["answers"]["rewrite"] == [["d", "e"]]


class TestCsvAndErrors:
    def test_csv_ingestion(self, tmp_path, capsys):
        csv = tmp_path / "p.csv"
        csv.write_text("a,b\na,c\nd,e\n")
        ic = tmp_path / "ic"
        ic.write_text(EX1_IC)
        code, out, _ = run(capsys, "repairs", "--csv", f"p={csv}", "--ic", str(ic), "--count")
        assert code == 0 and out.strip() == "2"

    def test_usage_error_exit_1(self, capsys):
        code, _, err = run(capsys, "repairs")
        assert code == 1 and "no database" in err

    def test_guard_exit_3(self, tmp_path, capsys):
        db = tmp_path / "big.facts"
        db.write_text("".join(f"p(a{i},b{i}). " for i in range(25)))
        ic = tmp_path / "ic"
        ic.write_text(EX1_IC)
        code, _, err = run(capsys, "repairs", "--db", str(db), "--ic", str(ic))
        assert code == 3

    def test_schema_flag_declares_empty_predicate(self, tmp_path, capsys):
        db = tmp_path / "d.facts"
        db.write_text("p(a,b).\n")
        ic = tmp_path / "ic"
        ic.write_text("ic p(X,Y) -> q(X,Y).\n")
        code, out, _ = run(capsys, "repairs", "--db", str(db), "--ic", str(ic),
                           "--schema", "q/2", "--count")
        assert code == 0 and out.strip() == "2"
