"""Command-line interface.

Subcommands: repairs, gen-program, solve, answer, emit-theory, analyze,
check.  Exit codes: 0 ok/agreement, 1 usage error, 2 cross-check
disagreement, 3 resource guard exceeded, 4 inconsistent program.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import asp, fotext, logic, oracle, repairgen, rewrite
from .constraints import Constraint, FD, KeyConstraint, parse_constraints, structured_fds
from .errors import (
    CqaError,
    GuardExceededError,
    InconsistentProgramError,
    ParseError,
    RewriteFallbackError,
    SchemaError,
)
from .relational import Instance, PredicateSig, Schema, atoms_from_csv, parse_fact_file

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DISAGREEMENT = 2
EXIT_GUARD = 3
EXIT_INCONSISTENT = 4


class UsageError(CqaError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


def _common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--db", help="fact file")
    p.add_argument("--ic", help="constraint file")
    p.add_argument("--query", help="query file (rules with answer predicate `ans`)")
    p.add_argument(
        "--csv",
        action="append",
        default=[],
        metavar="P=PATH",
        help="load rows of a CSV file as atoms of predicate P (repeatable)",
    )
    p.add_argument("--csv-header", action="store_true", help="skip the first CSV row")
    p.add_argument(
        "--schema",
        help="extra predicates as name/arity, comma separated (e.g. p/2,q/2)",
    )
    p.add_argument("--dialect", choices=["dlv", "clingo"], default="dlv")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized harness helpers")
    p.add_argument("--max-ground-rules", type=int, default=asp.DEFAULT_MAX_GROUND_RULES)
    p.add_argument("--max-nodes", type=int, default=asp.DEFAULT_MAX_NODES)
    p.add_argument(
        "--max-candidate-atoms", type=int, default=oracle.DEFAULT_MAX_CANDIDATE_ATOMS
    )
    p.add_argument("--max-so-atoms", type=int, default=logic.DEFAULT_MAX_SO_ATOMS)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cqa", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("repairs", help="enumerate the repairs of an inconsistent database")
    _common_options(sp)
    sp.add_argument("--count", action="store_true", help="print only the number of repairs")

    sp = sub.add_parser("gen-program", help="print the repair program for the constraints")
    _common_options(sp)
    sp.add_argument("--faithful-appendix", action="store_true",
                    help="emit t annotations and program constraints even for deletion-only sets")

    sp = sub.add_parser("solve", help="print the stable models of a program")
    _common_options(sp)
    sp.add_argument("--program", help="program file (otherwise assembled from --db/--ic/--query)")
    sp.add_argument("--project", help="comma-separated predicates to print")
    sp.add_argument("--faithful-appendix", action="store_true")

    sp = sub.add_parser("answer", help="consistent answers to a query")
    _common_options(sp)
    sp.add_argument("--method", choices=["enumerate", "asp", "rewrite"], default="enumerate")
    sp.add_argument("--explain", action="store_true",
                    help="with --method rewrite, print the rewritten formula and its per-FD parts")
    sp.add_argument("--faithful-appendix", action="store_true")

    sp = sub.add_parser("emit-theory", help="emit a classical-logic theory")
    _common_options(sp)
    sp.add_argument("--kind", choices=["reiter", "psi", "phi", "circ", "prop2", "prop4"],
                    required=True)
    sp.add_argument("--program", help="program file for psi/phi")
    sp.add_argument("--explicit-una", action="store_true",
                    help="include the domain closure and unique names sentences")
    sp.add_argument("--theory-dialect", choices=["ascii", "unicode"], default="ascii")
    sp.add_argument("--faithful-appendix", action="store_true")

    sp = sub.add_parser("analyze", help="stratification and head-cycle report")
    _common_options(sp)
    sp.add_argument("--program", help="program file (otherwise the generated repair program)")
    sp.add_argument("--faithful-appendix", action="store_true")

    sp = sub.add_parser("check", help="run several methods and compare their answers")
    _common_options(sp)
    sp.add_argument("--methods", default="enumerate,asp,rewrite",
                    help="comma-separated subset of enumerate,asp,rewrite")
    sp.add_argument("--timings", action="store_true", help="include per-phase timings")
    sp.add_argument("--faithful-appendix", action="store_true")
    sp.add_argument("--random-fd", type=int, metavar="N",
                    help="instead of files: N seeded random FD instances with atomic queries")
    sp.add_argument("--random-ic", type=int, metavar="N",
                    help="instead of files: N seeded random inclusion-constraint instances")

    return p


# -- input loading ------------------------------------------------------------------


def _load_schema_extras(spec: str | None) -> list[PredicateSig]:
    if not spec:
        return []
    out = []
    for part in spec.split(","):
        name, _, arity = part.strip().partition("/")
        if not arity.isdigit():
            raise UsageError(f"bad --schema entry {part!r}; expected name/arity")
        out.append(PredicateSig(name, int(arity)))
    return out


def load_database(args) -> Instance:
    atoms = []
    arities: dict[str, int] = {}
    if args.db:
        inferred = parse_fact_file(Path(args.db).read_text())
        atoms.extend(inferred.atoms)
        arities.update({p.name: p.arity for p in inferred.schema.predicates})
    for spec in args.csv:
        pred, _, path = spec.partition("=")
        if not path:
            raise UsageError(f"bad --csv value {spec!r}; expected P=path.csv")
        rows = atoms_from_csv(pred, Path(path).read_text(), header=args.csv_header)
        atoms.extend(rows)
        if rows:
            arities[pred] = len(rows[0].args)
    for sig in _load_schema_extras(args.schema):
        if arities.setdefault(sig.name, sig.arity) != sig.arity:
            raise SchemaError(f"--schema arity for {sig.name} conflicts with the data")
    if not arities:
        raise UsageError("no database: pass --db, --csv, or --schema")
    schema = Schema.from_pairs(sorted(arities.items()))
    return Instance(frozenset(atoms), schema)


def load_constraints(args, schema: Schema) -> list[Constraint]:
    if not args.ic:
        return []
    return parse_constraints(Path(args.ic).read_text(), schema)


def load_query(args, schema: Schema):
    if not args.query:
        return None
    return repairgen.parse_query(Path(args.query).read_text(), schema)


def _universal(constraints: Sequence[Constraint], schema: Schema):
    from .constraints import as_universal

    return [uc for c in constraints for uc in as_universal(c, schema)]


# -- subcommand implementations --------------------------------------------------------


def cmd_repairs(args) -> int:
    d = load_database(args)
    constraints = load_constraints(args, d.schema)
    repairs = oracle.repairs_bruteforce(d, constraints, args.max_candidate_atoms)
    if args.json:
        payload = [
            {
                "atoms": [str(a) for a in sorted(r.instance.atoms)],
                "deleted": [str(a) for a in sorted(r.deleted)],
                "inserted": [str(a) for a in sorted(r.inserted)],
            }
            for r in repairs
        ]
        print(json.dumps({"repairs": payload, "count": len(repairs)}, indent=2, sort_keys=True))
        return EXIT_OK
    if args.count:
        print(len(repairs))
        return EXIT_OK
    for i, r in enumerate(repairs, 1):
        print(f"% repair {i}")
        for a in sorted(r.instance.atoms):
            print(f"{a}.")
        deleted = ", ".join(str(a) for a in sorted(r.deleted)) or "-"
        inserted = ", ".join(str(a) for a in sorted(r.inserted)) or "-"
        print(f"% delta: deleted {deleted}; inserted {inserted}")
    return EXIT_OK


def _sections_and_scheme(args, d: Instance, constraints):
    scheme = repairgen.annotation_scheme(d.schema)
    sections = repairgen.repair_sections(
        constraints, d.schema, scheme, faithful_appendix=args.faithful_appendix
    )
    return sections, scheme


def cmd_gen_program(args) -> int:
    d = load_database(args)
    constraints = load_constraints(args, d.schema)
    sections, _ = _sections_and_scheme(args, d, constraints)
    names = "; ".join(str(c) for c in constraints) or "none"
    print(f"% repair program for: {names}")
    labels = [
        ("repair", "% repair rules"),
        ("annotation", "% annotation rules"),
        ("interpretation", "% interpretation rules"),
        ("constraint", "% program constraints"),
    ]
    for key, label in labels:
        if sections[key]:
            print(label)
            for rule in sections[key]:
                print(rule.to_text(args.dialect))
    return EXIT_OK


def _assembled_program(args, d, constraints):
    sections, scheme = _sections_and_scheme(args, d, constraints)
    repair = asp.Program(
        sections["repair"]
        + sections["annotation"]
        + sections["interpretation"]
        + sections["constraint"]
    )
    q = load_query(args, d.schema)
    if q is not None:
        q = repairgen.star_query(q, d.schema, scheme)
    return repairgen.assemble_cqa_program(d, repair, q)


def cmd_solve(args) -> int:
    if args.program:
        program = asp.parse_program(Path(args.program).read_text())
    else:
        d = load_database(args)
        program = _assembled_program(args, d, load_constraints(args, d.schema))
    models = asp.stable_models(
        program, max_ground_rules=args.max_ground_rules, max_nodes=args.max_nodes
    )
    project = set(args.project.split(",")) if args.project else None
    lines = []
    for m in models:
        shown = sorted(a for a in m if project is None or a.pred in project)
        lines.append(" ".join(str(a) for a in shown))
    if args.json:
        print(json.dumps({"stable_models": [l.split() if l else [] for l in lines]}, indent=2))
    else:
        for line in lines:
            print(line)
        print(f"% {len(models)} stable model(s)")
    return EXIT_OK


def _print_answers(answers, as_json: bool) -> None:
    rows = sorted(answers)
    if as_json:
        print(json.dumps({"answers": [list(t) for t in rows]}, indent=2, sort_keys=True))
        return
    for t in rows:
        print(f"({','.join(t)})")
    print(f"% {len(rows)} answer(s)")


def cmd_answer(args) -> int:
    d = load_database(args)
    constraints = load_constraints(args, d.schema)
    q = load_query(args, d.schema)
    if q is None:
        raise UsageError("answer needs --query")
    if args.method == "enumerate":
        answers = oracle.consistent_answers_enum(d, constraints, q, args.max_candidate_atoms)
    elif args.method == "asp":
        program = _assembled_program(args, d, constraints)
        answers = asp.cautious_answers(
            program, q.answer_pred,
            max_ground_rules=args.max_ground_rules, max_nodes=args.max_nodes,
        )
    else:
        if not all(isinstance(c, (FD, KeyConstraint)) for c in constraints):
            raise RewriteFallbackError("rewriting applies to FD/key constraints only")
        fds = structured_fds(constraints, d.schema)
        atom = rewrite.atomic_query(q)
        if atom is None:
            raise RewriteFallbackError(
                "query is not an atomic projection-free query; use enumerate or asp"
            )
        if args.explain:
            result = rewrite.rewrite_atomic(fds, atom, d.schema)
            print(f"% rewritten: {fotext.emit_formula(result.rewritten)}")
            for fd, conjunct in result.conjuncts:
                print(f"% {fd} contributes {fotext.emit_formula(conjunct)}")
        answers = rewrite.answers_via_rewrite(d, fds, q)
    _print_answers(answers, args.json)
    return EXIT_OK


def cmd_emit_theory(args) -> int:
    kind = args.kind
    if kind in ("psi", "phi") and args.program:
        program = asp.parse_program(Path(args.program).read_text())
        if kind == "psi":
            theory = logic.Theory(
                (logic.TheorySentence("psi", logic.psi_of_program(program)),)
            )
        else:
            theory = logic.Theory(
                (logic.TheorySentence("phi", logic.phi_stable(program)),)
            )
        print(fotext.emit_theory(theory, args.theory_dialect), end="")
        return EXIT_OK
    d = load_database(args)
    constraints = load_constraints(args, d.schema)
    if kind == "reiter":
        theory = logic.reiter_theory(d)
    elif kind in ("psi", "phi"):
        program = _assembled_program(args, d, constraints)
        sentence = (
            logic.psi_of_program(program) if kind == "psi" else logic.phi_stable(program)
        )
        theory = logic.Theory((logic.TheorySentence(kind, sentence),))
    elif kind in ("circ", "prop2"):
        ucs = _universal(constraints, d.schema)
        full = logic.prop2_closure(ucs, d.schema, d, explicit_una=args.explicit_una)
        if kind == "circ":
            theory = logic.Theory(
                tuple(ts for ts in full if ts.name == "circ:update-predicates")
            )
        else:
            theory = full
    else:  # prop4
        fds = structured_fds(constraints, d.schema)
        if len(fds) != 1:
            raise UsageError("--kind prop4 needs exactly one FD in --ic")
        theory = rewrite.prop4_theory(fds[0], d, d.schema)
    print(fotext.emit_theory(theory, args.theory_dialect), end="")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.program:
        program = asp.parse_program(Path(args.program).read_text())
        report = {
            "stratified": asp.stratification(program) is not None,
            "strata": _strata_json(program),
            "head_cycle_free": asp.is_hcf(program),
        }
    else:
        d = load_database(args)
        constraints = load_constraints(args, d.schema)
        sections, scheme = _sections_and_scheme(args, d, constraints)
        program = asp.Program(
            sections["repair"] + sections["annotation"] + sections["interpretation"]
        )  # constraints stripped for the stratification report
        annotation_levels = repairgen.prop_strata(program, d.schema, scheme)
        report = {
            "stratified": asp.stratification(program) is not None,
            "strata": _strata_json(program),
            "annotation_strata_valid": asp.is_valid_stratification(program, annotation_levels),
            "annotation_strata": {
                str(level): sorted(p for p, l in annotation_levels.items() if l == level)
                for level in sorted(set(annotation_levels.values()))
            },
            "head_cycle_free": asp.is_hcf(program),
        }
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for key, value in report.items():
            print(f"{key}: {value}")
    return EXIT_OK


def _strata_json(program):
    strata = asp.stratification(program)
    if strata is None:
        return None
    return [sorted(s) for s in strata]


@dataclass
class CrossCheckReport:
    methods: list[str]
    answers: dict[str, list[list[str]] | None]
    notes: dict[str, str]
    agreement: bool
    repairs: int | None = None
    stable_models: int | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def to_json(self, include_timings: bool = False) -> str:
        payload = {
            "methods": self.methods,
            "answers": self.answers,
            "notes": self.notes,
            "agreement": self.agreement,
            "repairs": self.repairs,
            "stable_models": self.stable_models,
        }
        if include_timings:
            payload["timings"] = self.timings
        return json.dumps(payload, indent=2, sort_keys=True)


def cross_check(
    d: Instance,
    constraints: Sequence[Constraint],
    q,
    methods: Sequence[str],
    max_candidate_atoms: int = oracle.DEFAULT_MAX_CANDIDATE_ATOMS,
    max_ground_rules: int = asp.DEFAULT_MAX_GROUND_RULES,
    max_nodes: int = asp.DEFAULT_MAX_NODES,
    faithful_appendix: bool = False,
) -> CrossCheckReport:
    """Run the requested methods and compare their answer sets; agreement
    means every applicable method returned identical answers."""
    answers: dict[str, list[list[str]] | None] = {}
    notes: dict[str, str] = {}
    timings: dict[str, float] = {}
    sets: dict[str, frozenset] = {}
    repairs_count = None
    stable_count = None
    for method in methods:
        start = time.perf_counter()
        try:
            if method == "enumerate":
                repairs = oracle.repairs_bruteforce(d, constraints, max_candidate_atoms)
                repairs_count = len(repairs)
                answer_sets = [oracle.evaluate_query(r.instance, q) for r in repairs]
                sets[method] = frozenset.intersection(*answer_sets)
            elif method == "asp":
                scheme = repairgen.annotation_scheme(d.schema)
                repair = repairgen.repair_program(
                    constraints, d.schema, scheme, faithful_appendix=faithful_appendix
                )
                starred = repairgen.star_query(q, d.schema, scheme)
                program = repairgen.assemble_cqa_program(d, repair, starred)
                models = asp.stable_models(
                    program, max_ground_rules=max_ground_rules, max_nodes=max_nodes
                )
                if not models:
                    raise InconsistentProgramError("inconsistent program (no stable models)")
                stable_count = len(models)
                sets[method] = frozenset.intersection(
                    *[
                        frozenset(a.args for a in m if a.pred == q.answer_pred)
                        for m in models
                    ]
                )
            elif method == "rewrite":
                if not all(isinstance(c, (FD, KeyConstraint)) for c in constraints):
                    raise RewriteFallbackError("rewriting applies to FD/key constraints only")
                fds = structured_fds(constraints, d.schema)
                sets[method] = rewrite.answers_via_rewrite(d, fds, q)
            else:
                raise UsageError(f"unknown method {method!r}")
        except RewriteFallbackError as exc:
            notes[method] = f"not applicable: {exc}"
            answers[method] = None
            continue
        finally:
            timings[method] = time.perf_counter() - start
        answers[method] = [list(t) for t in sorted(sets[method])]
    applicable = [m for m in methods if answers.get(m) is not None]
    agreement = all(sets[m] == sets[applicable[0]] for m in applicable) if applicable else True
    return CrossCheckReport(
        list(methods), answers, notes, agreement, repairs_count, stable_count, timings
    )


def _random_check(args, methods) -> int:
    """Seeded batch of random instances, each cross-checked; exits 2 on the
    first disagreement."""
    from .randgen import random_fd_case, random_inclusion_case, rng_for

    n = args.random_fd or args.random_ic
    disagreements = []
    for i in range(n):
        rng = rng_for(args.seed + i)
        if args.random_fd:
            inst, constraints, q = random_fd_case(rng)
        else:
            inst, constraints, q = random_inclusion_case(rng)
        report = cross_check(
            inst, constraints, q, methods,
            max_candidate_atoms=args.max_candidate_atoms,
            max_ground_rules=args.max_ground_rules,
            max_nodes=args.max_nodes,
        )
        if not report.agreement:
            disagreements.append(args.seed + i)
    payload = {
        "cases": n,
        "seed": args.seed,
        "methods": methods,
        "disagreement_seeds": disagreements,
        "agreement": not disagreements,
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"cases: {n}")
        print(f"agreement: {not disagreements}")
        for s in disagreements:
            print(f"disagreement at seed {s}")
    return EXIT_OK if not disagreements else EXIT_DISAGREEMENT


def cross_check_files(
    db_path: str,
    ic_path: str | None,
    query_path: str,
    methods: Sequence[str],
    **kw,
) -> CrossCheckReport:
    """File-level entry: parse the three inputs and cross-check."""
    d = parse_fact_file(Path(db_path).read_text())
    constraints = (
        parse_constraints(Path(ic_path).read_text(), d.schema) if ic_path else []
    )
    q = repairgen.parse_query(Path(query_path).read_text(), d.schema)
    return cross_check(d, constraints, q, methods, **kw)


def cmd_check(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.random_fd or args.random_ic:
        if args.random_ic and "rewrite" in methods:
            methods = [m for m in methods if m != "rewrite"]
        return _random_check(args, methods)
    d = load_database(args)
    constraints = load_constraints(args, d.schema)
    q = load_query(args, d.schema)
    if q is None:
        raise UsageError("check needs --query")
    report = cross_check(
        d,
        constraints,
        q,
        methods,
        max_candidate_atoms=args.max_candidate_atoms,
        max_ground_rules=args.max_ground_rules,
        max_nodes=args.max_nodes,
        faithful_appendix=args.faithful_appendix,
    )
    if args.json:
        print(report.to_json(include_timings=args.timings))
    else:
        for m in methods:
            if report.answers.get(m) is None:
                print(f"{m}: {report.notes.get(m, 'not run')}")
            else:
                row = " ".join("(" + ",".join(t) + ")" for t in report.answers[m]) or "-"
                print(f"{m}: {row}")
        if report.repairs is not None:
            print(f"repairs: {report.repairs}")
        if report.stable_models is not None:
            print(f"stable models: {report.stable_models}")
        if args.timings:
            for m, dt in report.timings.items():
                print(f"time {m}: {dt:.3f}s")
        print(f"agreement: {report.agreement}")
    return EXIT_OK if report.agreement else EXIT_DISAGREEMENT


_COMMANDS = {
    "repairs": cmd_repairs,
    "gen-program": cmd_gen_program,
    "solve": cmd_solve,
    "answer": cmd_answer,
    "emit-theory": cmd_emit_theory,
    "analyze": cmd_analyze,
    "check": cmd_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GuardExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except InconsistentProgramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except RewriteFallbackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SchemaError, CqaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
