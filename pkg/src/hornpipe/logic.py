"""Terms, atoms, clauses, programs, and hypothesis-space declarations.

The dialect is a function-free subset of Prolog: constants and variables
only, no function symbols, lists, arithmetic, or negation.  Facts are
ground atoms.  Rules are definite clauses whose heads are range-restricted
(every head variable occurs in the body) and whose bodies are connected
(the variable co-occurrence graph of the body, together with the head,
forms a single component).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations
from typing import Iterable, Iterator

_PRED_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_CONST_RE = re.compile(r"(?:[a-z][A-Za-z0-9_]*|[0-9]+)\Z")
_VAR_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")

DEFAULT_MAX_VARS = 6
DEFAULT_MAX_BODY = 4
DEFAULT_MAX_CLAUSES = 20


@dataclass(frozen=True, slots=True)
class Term:
    """A constant or a variable.  Two terms are equal iff kind and name agree."""

    kind: str  # "const" | "var"
    name: str

    def is_var(self) -> bool:
        return self.kind == "var"

    def is_const(self) -> bool:
        return self.kind == "const"

    def __str__(self) -> str:
        return self.name


def const(name: str) -> Term:
    if not _CONST_RE.match(name):
        raise ValueError(f"bad constant name: {name!r}")
    return Term("const", name)


def var(name: str) -> Term:
    if not _VAR_RE.match(name):
        raise ValueError(f"bad variable name: {name!r}")
    return Term("var", name)


def term(name: str) -> Term:
    """Build a term from its surface name (case decides the kind)."""
    if _VAR_RE.match(name):
        return Term("var", name)
    return const(name)


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not _PRED_RE.match(self.predicate):
            raise ValueError(f"bad predicate name: {self.predicate!r}")
        if not isinstance(self.args, tuple) or not self.args:
            raise ValueError("atom needs a non-empty tuple of args")
        for a in self.args:
            if not isinstance(a, Term):
                raise ValueError(f"atom arg is not a Term: {a!r}")

    @property
    def arity(self) -> int:
        return len(self.args)

    def is_ground(self) -> bool:
        return all(a.is_const() for a in self.args)

    def variables(self) -> list[Term]:
        """Variables in argument order, with repeats."""
        return [a for a in self.args if a.is_var()]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(a.name for a in self.args)})"


def atom(predicate: str, *names: str) -> Atom:
    """Convenience constructor from surface names."""
    return Atom(predicate, tuple(term(n) for n in names))


@dataclass(frozen=True, slots=True)
class Clause:
    """A definite clause ``head :- body``.  Empty body means a ground fact."""

    head: Atom
    body: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        if not self.body:
            if not self.head.is_ground():
                raise ValueError(f"fact must be ground: {self.head}")
            return
        head_vars = set(self.head.variables())
        body_vars = {v for lit in self.body for v in lit.variables()}
        missing = head_vars - body_vars
        if missing:
            names = ",".join(sorted(v.name for v in missing))
            raise ValueError(f"head variable {names} not bound by the body")
        if not _is_connected(self.head, self.body):
            raise ValueError(f"body is not connected to the head: {self}")

    def is_fact(self) -> bool:
        return not self.body

    def variables(self) -> list[Term]:
        """Distinct variables in first-occurrence order (head, then body)."""
        seen: dict[Term, None] = {}
        for lit in (self.head, *self.body):
            for v in lit.variables():
                seen.setdefault(v)
        return list(seen)

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head}:- {','.join(str(b) for b in self.body)}."


def _is_connected(head: Atom, body: tuple[Atom, ...]) -> bool:
    # Union-find over the literals; the head is node 0.
    lits = [head, *body]
    parent = list(range(len(lits)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_var: dict[Term, int] = {}
    for i, lit in enumerate(lits):
        for v in lit.variables():
            if v in by_var:
                ri, rj = find(i), find(by_var[v])
                parent[ri] = rj
            else:
                by_var[v] = i
    roots = {find(i) for i in range(len(lits))}
    return len(roots) == 1


# ---------------------------------------------------------------------------
# Canonical form

def _arg_key(t: Term, renaming: dict[Term, int]):
    if t.is_var():
        return (0, renaming[t], "")
    return (1, 0, t.name)


def canonical(clause: Clause) -> Clause:
    """Rewrite a clause into canonical form.

    Variables become V0, V1, ... in order of first occurrence (head
    left-to-right, then body), and the body is put into the order whose
    induced renaming gives the least literal sequence.  Two clauses are
    equal modulo renaming and body reordering iff their canonical forms
    are identical.  Idempotent.
    """
    if not clause.body:
        return clause
    # exact duplicate body literals are redundant conjuncts
    body: list[Atom] = []
    for lit in clause.body:
        if lit not in body:
            body.append(lit)

    head_vars: dict[Term, int] = {}
    for v in clause.head.variables():
        head_vars.setdefault(v, len(head_vars))

    best_key = None
    best: list[Atom] | None = None
    best_map: dict[Term, int] | None = None
    for perm in permutations(body):
        renaming = dict(head_vars)
        for lit in perm:
            for v in lit.variables():
                renaming.setdefault(v, len(renaming))
        key = tuple(
            (lit.predicate, tuple(_arg_key(a, renaming) for a in lit.args))
            for lit in perm
        )
        if best_key is None or key < best_key:
            best_key, best, best_map = key, list(perm), renaming
    assert best is not None and best_map is not None

    fresh = {old: Term("var", f"V{i}") for old, i in best_map.items()}

    def rename(a: Atom) -> Atom:
        return Atom(a.predicate, tuple(fresh.get(t, t) for t in a.args))

    return Clause(rename(clause.head), tuple(rename(b) for b in best))


def print_clause(clause: Clause) -> str:
    """Canonical text form; round-trips through the clause parser."""
    return str(canonical(clause))


@dataclass(frozen=True)
class Program:
    """A set of clauses, duplicate-free modulo variable renaming."""

    clauses: frozenset[Clause] = frozenset()

    @staticmethod
    def of(items: Iterable[Clause | Atom]) -> Program:
        out = set()
        for it in items:
            if isinstance(it, Atom):
                it = Clause(it)
            out.add(canonical(it))
        return Program(frozenset(out))

    @cached_property
    def _sorted(self) -> tuple[Clause, ...]:
        return tuple(sorted(self.clauses, key=str))

    def __iter__(self) -> Iterator[Clause]:
        return iter(self._sorted)

    def __len__(self) -> int:
        return len(self.clauses)

    def __contains__(self, c: Clause) -> bool:
        return canonical(c) in self.clauses

    def facts(self) -> list[Atom]:
        return [c.head for c in self._sorted if c.is_fact()]

    def rules(self) -> list[Clause]:
        return [c for c in self._sorted if not c.is_fact()]

    def union(self, other: "Program") -> "Program":
        return Program(self.clauses | other.clauses)

    def __str__(self) -> str:
        return print_program(self)


def print_program(program: Program) -> str:
    """Deterministic canonical text: one clause per line, sorted."""
    lines = [str(c) for c in program]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Hypothesis-space declarations and labeled examples

@dataclass(frozen=True, slots=True)
class PredDecl:
    predicate: str
    arity: int
    types: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise ValueError(f"arity must be >= 1: {self.predicate}/{self.arity}")
        if self.types is not None and len(self.types) != self.arity:
            raise ValueError(
                f"type tuple for {self.predicate} has {len(self.types)} entries, "
                f"arity is {self.arity}"
            )


@dataclass(frozen=True)
class BiasSpec:
    """Declares the hypothesis space: head/body predicates and search bounds."""

    head_decls: tuple[PredDecl, ...]
    body_decls: tuple[PredDecl, ...]
    max_vars: int = DEFAULT_MAX_VARS
    max_body: int = DEFAULT_MAX_BODY
    max_clauses: int = DEFAULT_MAX_CLAUSES

    def __post_init__(self) -> None:
        for decls, which in ((self.head_decls, "head"), (self.body_decls, "body")):
            seen = set()
            for d in decls:
                if d.predicate in seen:
                    raise ValueError(f"duplicate {which} declaration: {d.predicate}")
                seen.add(d.predicate)
        for bound, name in (
            (self.max_vars, "max_vars"),
            (self.max_body, "max_body"),
            (self.max_clauses, "max_clauses"),
        ):
            if bound < 1:
                raise ValueError(f"{name} must be positive, got {bound}")

    @cached_property
    def head_predicates(self) -> frozenset[str]:
        return frozenset(d.predicate for d in self.head_decls)

    @cached_property
    def vocabulary(self) -> dict[str, int]:
        """predicate -> arity over head and body declarations combined."""
        vocab: dict[str, int] = {}
        for d in (*self.head_decls, *self.body_decls):
            if vocab.setdefault(d.predicate, d.arity) != d.arity:
                raise ValueError(
                    f"conflicting arities declared for {d.predicate}"
                )
        return vocab

    @cached_property
    def types_by_predicate(self) -> dict[str, tuple[str, ...] | None]:
        out: dict[str, tuple[str, ...] | None] = {}
        for d in (*self.head_decls, *self.body_decls):
            prev = out.get(d.predicate)
            if prev is not None and d.types is not None and prev != d.types:
                raise ValueError(f"conflicting types declared for {d.predicate}")
            if d.types is not None or d.predicate not in out:
                out[d.predicate] = d.types
        return out


@dataclass(frozen=True)
class ExampleSet:
    """Ground positive/negative example atoms.

    Order is preserved (first-parse order matters downstream when examples
    are retracted one at a time); duplicates are dropped; an atom may not
    appear on both sides.
    """

    positives: tuple[Atom, ...] = ()
    negatives: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        for a in (*self.positives, *self.negatives):
            if not a.is_ground():
                raise ValueError(f"example must be ground: {a}")
        if len(set(self.positives)) != len(self.positives):
            raise ValueError("duplicate positive example")
        if len(set(self.negatives)) != len(self.negatives):
            raise ValueError("duplicate negative example")
        both = set(self.positives) & set(self.negatives)
        if both:
            raise ValueError(
                "atom labeled both positive and negative: "
                + ", ".join(sorted(str(a) for a in both))
            )

    @staticmethod
    def of(positives: Iterable[Atom], negatives: Iterable[Atom]) -> "ExampleSet":
        pos: dict[Atom, None] = {}
        neg: dict[Atom, None] = {}
        for a in positives:
            pos.setdefault(a)
        for a in negatives:
            neg.setdefault(a)
        return ExampleSet(tuple(pos), tuple(neg))

    @cached_property
    def pos_set(self) -> frozenset[Atom]:
        return frozenset(self.positives)

    @cached_property
    def neg_set(self) -> frozenset[Atom]:
        return frozenset(self.negatives)

    def check_predicates(self, bias: BiasSpec) -> None:
        """Every example predicate must be a declared head predicate."""
        for a in (*self.positives, *self.negatives):
            if a.predicate not in bias.head_predicates:
                raise ValueError(
                    f"example predicate {a.predicate} is not a declared head predicate"
                )

    def __len__(self) -> int:
        return len(self.positives) + len(self.negatives)
