"""Line-oriented parsing for facts, examples, bias directives, and rules.

Files are UTF-8 text, one statement per line, each terminated by ``.``;
``%`` starts a comment that runs to the end of the line.  Whitespace is
free between tokens.
"""

from __future__ import annotations

import re
from typing import Iterator

from .logic import (
    Atom,
    BiasSpec,
    Clause,
    DEFAULT_MAX_BODY,
    DEFAULT_MAX_CLAUSES,
    DEFAULT_MAX_VARS,
    ExampleSet,
    PredDecl,
    Program,
    Term,
    term,
)

_TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*|[0-9]+|:-|[(),.]")


class ParseError(ValueError):
    """Syntax or well-formedness error, with the 1-based source line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _statements(text: str) -> Iterator[tuple[int, list[str]]]:
    """Yield (line number, token list) per non-blank statement line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        tokens = []
        pos = 0
        while pos < len(line):
            if line[pos].isspace():
                pos += 1
                continue
            m = _TOKEN_RE.match(line, pos)
            if not m:
                raise ParseError(f"unexpected character {line[pos]!r}", lineno)
            tokens.append(m.group())
            pos = m.end()
        if tokens[-1] != ".":
            raise ParseError("unterminated clause (missing '.')", lineno)
        yield lineno, tokens


class _Cursor:
    def __init__(self, tokens: list[str], line: int):
        self.tokens = tokens
        self.line = line
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        if self.i >= len(self.tokens):
            raise ParseError("unexpected end of statement", self.line)
        tok = self.tokens[self.i]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", self.line)
        self.i += 1
        return tok

    def done(self) -> None:
        if self.i != len(self.tokens):
            raise ParseError(
                f"trailing tokens after '.': {' '.join(self.tokens[self.i:])}",
                self.line,
            )


def _parse_atom(cur: _Cursor) -> Atom:
    name = cur.take()
    if not re.match(r"[a-z][A-Za-z0-9_]*\Z", name):
        raise ParseError(f"expected a predicate name, found {name!r}", cur.line)
    cur.take("(")
    args: list[Term] = []
    while True:
        tok = cur.take()
        if tok in "(),.:-":
            raise ParseError(f"expected a term, found {tok!r}", cur.line)
        args.append(term(tok))
        nxt = cur.take()
        if nxt == ")":
            break
        if nxt != ",":
            raise ParseError(f"expected ',' or ')', found {nxt!r}", cur.line)
    return Atom(name, tuple(args))


def _parse_clause_tokens(cur: _Cursor) -> Clause:
    head = _parse_atom(cur)
    nxt = cur.take()
    if nxt == ".":
        cur.done()
        try:
            return Clause(head)
        except ValueError as e:
            raise ParseError(str(e), cur.line) from None
    if nxt != ":-":
        raise ParseError(f"expected ':-' or '.', found {nxt!r}", cur.line)
    body = [_parse_atom(cur)]
    while True:
        nxt = cur.take()
        if nxt == ".":
            break
        if nxt != ",":
            raise ParseError(f"expected ',' or '.', found {nxt!r}", cur.line)
        body.append(_parse_atom(cur))
    cur.done()
    try:
        return Clause(head, tuple(body))
    except ValueError as e:
        raise ParseError(str(e), cur.line) from None


def parse_clause(text: str) -> Clause:
    """Parse a single clause (fact or rule) from one statement."""
    stmts = list(_statements(text))
    if not stmts:
        raise ParseError("no statement found")
    if len(stmts) > 1:
        raise ParseError("expected a single clause", stmts[1][0])
    line, tokens = stmts[0]
    return _parse_clause_tokens(_Cursor(tokens, line))


def parse_rules(text: str) -> Program:
    """Parse a rules file: any number of clauses, one per line."""
    out = []
    for line, tokens in _statements(text):
        out.append(_parse_clause_tokens(_Cursor(tokens, line)))
    return Program.of(out)


def parse_facts(text: str) -> Program:
    """Parse a background file of ground facts."""
    facts = []
    for line, tokens in _statements(text):
        cur = _Cursor(tokens, line)
        a = _parse_atom(cur)
        cur.take(".")
        cur.done()
        if not a.is_ground():
            raise ParseError(f"fact must be ground: {a}", line)
        facts.append(Clause(a))
    return Program.of(facts)


def parse_examples(text: str, bias: BiasSpec | None = None) -> ExampleSet:
    """Parse ``pos(atom).`` / ``neg(atom).`` lines.

    With a bias in force, every example atom must use a declared head
    predicate.  Duplicates collapse; an atom on both sides is an error.
    """
    pos: dict[Atom, None] = {}
    neg: dict[Atom, None] = {}
    for line, tokens in _statements(text):
        cur = _Cursor(tokens, line)
        label = cur.take()
        if label not in ("pos", "neg"):
            raise ParseError(f"expected pos(...) or neg(...), found {label!r}", line)
        cur.take("(")
        inner = _parse_atom(cur)
        cur.take(")")
        cur.take(".")
        cur.done()
        if not inner.is_ground():
            raise ParseError(f"example must be ground: {inner}", line)
        if bias is not None and inner.predicate not in bias.head_predicates:
            raise ParseError(
                f"example predicate {inner.predicate} is not a declared head predicate",
                line,
            )
        (pos if label == "pos" else neg).setdefault(inner)
    overlap = set(pos) & set(neg)
    if overlap:
        raise ParseError(
            "atom labeled both positive and negative: "
            + ", ".join(sorted(str(a) for a in overlap))
        )
    return ExampleSet(tuple(pos), tuple(neg))


_BOUND_DIRECTIVES = ("max_vars", "max_body", "max_clauses")


def parse_bias(text: str) -> BiasSpec:
    """Parse bias directives into a BiasSpec.

    Grammar: ``head_pred(p,k).``, ``body_pred(p,k).``, ``type(p,(t1,...,tk)).``,
    ``max_vars(n).``, ``max_body(n).``, ``max_clauses(n).``  Missing bounds
    fall back to defaults (6 variables, 4 body literals, 20 clauses).
    """
    heads: dict[str, int] = {}
    bodies: dict[str, int] = {}
    types: dict[str, tuple[str, ...]] = {}
    bounds: dict[str, int] = {}
    order: list[str] = []  # declaration order, heads and bodies interleaved

    for line, tokens in _statements(text):
        cur = _Cursor(tokens, line)
        directive = cur.take()
        cur.take("(")
        if directive in ("head_pred", "body_pred"):
            name = cur.take()
            cur.take(",")
            arity_tok = cur.take()
            if not arity_tok.isdigit():
                raise ParseError(f"expected an arity, found {arity_tok!r}", line)
            cur.take(")")
            cur.take(".")
            cur.done()
            table = heads if directive == "head_pred" else bodies
            if name in table:
                raise ParseError(f"duplicate declaration: {directive}({name},...)", line)
            table[name] = int(arity_tok)
            order.append(name)
        elif directive == "type":
            name = cur.take()
            cur.take(",")
            cur.take("(")
            tys = [cur.take()]
            while cur.peek() == ",":
                cur.take(",")
                tys.append(cur.take())
            cur.take(")")
            cur.take(")")
            cur.take(".")
            cur.done()
            if name in types:
                raise ParseError(f"duplicate type directive for {name}", line)
            types[name] = tuple(tys)
        elif directive in _BOUND_DIRECTIVES:
            val = cur.take()
            if not val.isdigit():
                raise ParseError(f"expected an integer, found {val!r}", line)
            cur.take(")")
            cur.take(".")
            cur.done()
            if directive in bounds:
                raise ParseError(f"duplicate directive: {directive}", line)
            bounds[directive] = int(val)
        else:
            raise ParseError(f"unknown bias directive {directive!r}", line)

    for name, tys in types.items():
        declared = heads.get(name, bodies.get(name))
        if declared is None:
            raise ParseError(f"type directive for undeclared predicate {name}")
        if len(tys) != declared:
            raise ParseError(
                f"type directive for {name} has {len(tys)} entries, arity is {declared}"
            )

    def decl(name: str, arity: int) -> PredDecl:
        return PredDecl(name, arity, types.get(name))

    try:
        return BiasSpec(
            head_decls=tuple(decl(n, heads[n]) for n in order if n in heads),
            body_decls=tuple(decl(n, bodies[n]) for n in order if n in bodies),
            max_vars=bounds.get("max_vars", DEFAULT_MAX_VARS),
            max_body=bounds.get("max_body", DEFAULT_MAX_BODY),
            max_clauses=bounds.get("max_clauses", DEFAULT_MAX_CLAUSES),
        )
    except ValueError as e:
        raise ParseError(str(e)) from None


def print_examples(examples: ExampleSet) -> str:
    """Render an example set in parse order; round-trips through parse_examples."""
    lines = [f"pos({a})." for a in examples.positives]
    lines += [f"neg({a})." for a in examples.negatives]
    return "\n".join(lines) + ("\n" if lines else "")


def print_bias(bias: BiasSpec) -> str:
    lines = []
    for d in bias.head_decls:
        lines.append(f"head_pred({d.predicate},{d.arity}).")
    for d in bias.body_decls:
        lines.append(f"body_pred({d.predicate},{d.arity}).")
    for d in (*bias.head_decls, *bias.body_decls):
        if d.types is not None:
            lines.append(f"type({d.predicate},({','.join(d.types)})).")
    lines.append(f"max_vars({bias.max_vars}).")
    lines.append(f"max_body({bias.max_body}).")
    lines.append(f"max_clauses({bias.max_clauses}).")
    return "\n".join(lines) + "\n"
