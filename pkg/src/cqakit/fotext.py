"""Deterministic text syntax for first/second-order formulas and theories.

    connectives   &  |  ->  <->  ~        (precedence: <-> lowest, then ->, |, &)
    quantifiers   forall X (...)   exists X (...)   exists2 U_p/2 (...)
    built-ins     =  !=                    falsum:  bot

Predicate names are lowercase-initial, variables and predicate variables
uppercase-initial (a predicate variable is applied or stands alone as an
atom).  Emission is deterministic and round-trips through parse_formula.
"""
from __future__ import annotations

import re
from .constraints import BuiltinAtom
from .errors import ParseError
from .logic import (
    And,
    Bot,
    Exists,
    Forall,
    Formula,
    Iff,
    Imp,
    Not,
    Or,
    PredAtom,
    PredVarAtom,
    SOExists,
    SOSentence,
    Sentence,
    Theory,
    TheorySentence,
    conj,
    disj,
)
from .relational import Term, Var, is_constant, is_variable

_PREC_IFF, _PREC_IMP, _PREC_OR, _PREC_AND, _PREC_UNARY, _PREC_ATOM = 1, 2, 3, 4, 5, 6

_UNICODE = {
    "&": " ∧ ",
    "|": " ∨ ",
    "->": " → ",
    "<->": " ≡ ",
    "~": "¬",
    "forall": "∀",
    "exists": "∃",
    "exists2": "∃²",
    "bot": "⊥",
}


def _term(t: Term) -> str:
    return t.name if isinstance(t, Var) else t


def _prec(f: Formula) -> int:
    if isinstance(f, Iff):
        return _PREC_IFF
    if isinstance(f, Imp):
        return _PREC_IMP
    if isinstance(f, Or):
        return _PREC_OR
    if isinstance(f, And):
        return _PREC_AND
    if isinstance(f, (Not, Forall, Exists, SOExists)):
        return _PREC_UNARY
    return _PREC_ATOM


def emit_formula(f: Formula, dialect: str = "ascii") -> str:
    sym = (lambda s: _UNICODE[s]) if dialect == "unicode" else (
        lambda s: {"&": " & ", "|": " | ", "->": " -> ", "<->": " <-> "}.get(s, s)
    )

    def render(f: Formula, need: int) -> str:
        text = raw(f)
        return f"({text})" if _prec(f) < need else text

    def raw(f: Formula) -> str:
        if isinstance(f, PredAtom):
            return f"{f.pred}({','.join(map(_term, f.args))})" if f.args else f.pred
        if isinstance(f, PredVarAtom):
            return f"{f.var}({','.join(map(_term, f.args))})" if f.args else f.var
        if isinstance(f, BuiltinAtom):
            return f"{_term(f.lhs)} {f.op} {_term(f.rhs)}"
        if isinstance(f, Bot):
            return sym("bot") if dialect == "unicode" else "bot"
        if isinstance(f, Not):
            return sym("~") + render(f.body, _PREC_UNARY)
        if isinstance(f, And):
            return sym("&").join(render(p, _PREC_AND + 1) for p in f.parts)
        if isinstance(f, Or):
            return sym("|").join(render(p, _PREC_OR + 1) for p in f.parts)
        if isinstance(f, Imp):
            return render(f.lhs, _PREC_IMP + 1) + sym("->") + render(f.rhs, _PREC_IMP)
        if isinstance(f, Iff):
            return render(f.lhs, _PREC_IFF + 1) + sym("<->") + render(f.rhs, _PREC_IFF + 1)
        if isinstance(f, Forall):
            return f"{sym('forall')}{'' if dialect == 'unicode' else ' '}{f.var.name} ({raw(f.body)})"
        if isinstance(f, Exists):
            return f"{sym('exists')}{'' if dialect == 'unicode' else ' '}{f.var.name} ({raw(f.body)})"
        if isinstance(f, SOExists):
            return f"{sym('exists2')}{'' if dialect == 'unicode' else ' '}{f.var}/{f.arity} ({raw(f.body)})"
        raise TypeError(f"cannot emit {f!r}")

    return raw(f)


def sentence_formula(s: Sentence) -> Formula:
    return s.to_formula() if isinstance(s, SOSentence) else s


def emit_sentence(s: Sentence, dialect: str = "ascii") -> str:
    return emit_formula(sentence_formula(s), dialect)


def emit_theory(t: Theory, dialect: str = "ascii") -> str:
    lines = []
    for ts in t:
        if ts.comment:
            lines.append(f"% {ts.comment}")
        lines.append(f"{ts.name}: {emit_sentence(ts.sentence, dialect)}")
    return "".join(line + "\n" for line in lines)


# -- parsing ---------------------------------------------------------------------------


_FTOKEN = re.compile(r"%[^\n]*|\s+|<->|->|!=|[A-Za-z0-9_]+|[(),=~&|/:]")


def _ftokens(text: str):
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _FTOKEN.match(text, pos)
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


class _FCursor:
    def __init__(self, text: str):
        self.toks = list(_ftokens(text))
        self.i = 0

    def peek(self, ahead: int = 0):
        j = self.i + ahead
        return self.toks[j][0] if j < len(self.toks) else None

    def pos(self):
        if self.i < len(self.toks):
            return self.toks[self.i][1], self.toks[self.i][2]
        return (self.toks[-1][1], self.toks[-1][2]) if self.toks else (1, 1)

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of formula", *self.pos())
        self.i += 1
        return tok

    def expect(self, want: str) -> None:
        line, col = self.pos()
        tok = self.next()
        if tok != want:
            raise ParseError(f"expected {want!r}, got {tok!r}", line, col)


def _fterm(cur: _FCursor) -> Term:
    line, col = cur.pos()
    tok = cur.next()
    if is_variable(tok):
        return Var(tok)
    if is_constant(tok):
        return tok
    raise ParseError(f"expected a term, got {tok!r}", line, col)


def _atom_or_builtin(cur: _FCursor) -> Formula:
    line, col = cur.pos()
    name = cur.peek()
    if cur.peek(1) in ("=", "!="):
        lhs = _fterm(cur)
        op = cur.next()
        rhs = _fterm(cur)
        return BuiltinAtom(op, lhs, rhs)
    cur.next()
    args: list[Term] = []
    if cur.peek() == "(":
        cur.next()
        while True:
            args.append(_fterm(cur))
            if cur.peek() == ")":
                cur.next()
                break
            cur.expect(",")
    if is_variable(name):
        return PredVarAtom(name, tuple(args))
    if is_constant(name):
        return PredAtom(name, tuple(args))
    raise ParseError(f"expected an atom, got {name!r}", line, col)


def _unary(cur: _FCursor) -> Formula:
    line, col = cur.pos()
    tok = cur.peek()
    if tok == "~":
        cur.next()
        return Not(_unary(cur))
    if tok in ("forall", "exists"):
        cur.next()
        vline, vcol = cur.pos()
        name = cur.next()
        if not is_variable(name):
            raise ParseError(f"expected a variable, got {name!r}", vline, vcol)
        cur.expect("(")
        body = _iff(cur)
        cur.expect(")")
        return (Forall if tok == "forall" else Exists)(Var(name), body)
    if tok == "exists2":
        cur.next()
        vline, vcol = cur.pos()
        name = cur.next()
        if not is_variable(name):
            raise ParseError(f"expected a predicate variable, got {name!r}", vline, vcol)
        cur.expect("/")
        aline, acol = cur.pos()
        arity = cur.next()
        if not arity.isdigit():
            raise ParseError(f"expected an arity, got {arity!r}", aline, acol)
        cur.expect("(")
        body = _iff(cur)
        cur.expect(")")
        return SOExists(name, int(arity), body)
    if tok == "bot":
        cur.next()
        return Bot()
    if tok == "(":
        cur.next()
        body = _iff(cur)
        cur.expect(")")
        return body
    if tok is None:
        raise ParseError("unexpected end of formula", line, col)
    return _atom_or_builtin(cur)


def _and(cur: _FCursor) -> Formula:
    parts = [_unary(cur)]
    while cur.peek() == "&":
        cur.next()
        parts.append(_unary(cur))
    return conj(parts)


def _or(cur: _FCursor) -> Formula:
    parts = [_and(cur)]
    while cur.peek() == "|":
        cur.next()
        parts.append(_and(cur))
    return disj(parts)


def _imp(cur: _FCursor) -> Formula:
    lhs = _or(cur)
    if cur.peek() == "->":
        cur.next()
        return Imp(lhs, _imp(cur))
    return lhs


def _iff(cur: _FCursor) -> Formula:
    lhs = _imp(cur)
    while cur.peek() == "<->":
        cur.next()
        lhs = Iff(lhs, _imp(cur))
    return lhs


def parse_formula(text: str) -> Formula:
    cur = _FCursor(text)
    f = _iff(cur)
    if cur.peek() is not None:
        raise ParseError(f"trailing input {cur.peek()!r}", *cur.pos())
    return f


def parse_theory(text: str) -> Theory:
    """Inverse of emit_theory: `name: formula` lines, `%` comments attach to
    the following sentence."""
    sentences: list[TheorySentence] = []
    comment = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("%"):
            comment = line[1:].strip()
            continue
        if ": " not in line:
            raise ParseError("expected 'name: formula'", lineno)
        name, _, body = line.partition(": ")
        sentences.append(TheorySentence(name.strip(), parse_formula(body), comment))
        comment = ""
    return Theory(tuple(sentences))
