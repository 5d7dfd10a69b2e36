"""Reference rule learner: bounded enumeration plus greedy set cover.

The hypothesis space is every well-formed clause under the bias: a declared
head predicate with distinct head variables, at most max_body body literals
drawn from the declared body predicates (head predicates are excluded from
bodies, so learned programs are non-recursive), at most max_vars distinct
variables, type-consistent argument use, range-restricted and connected,
one entry per renaming-equivalence class.  The stream is ordered by body
length, then canonical text.

solve() keeps the clauses that derive no negative example and at least one
positive, then greedily picks clauses until all positives are covered.
Ties fall to fewer body literals, then canonical text.  The result is
re-checked against the fixpoint engine before it is returned.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator

from . import cover
from .entailment import FactStore, coverage
from .logic import (
    Atom,
    BiasSpec,
    Clause,
    ExampleSet,
    PredDecl,
    Program,
    print_clause,
    var,
)

DEFAULT_TIMEOUT = 10.0

_VAR_NAMES = [f"V{i}" for i in range(64)]


def _typed_positions(decl: PredDecl) -> tuple[str | None, ...]:
    return decl.types if decl.types is not None else (None,) * decl.arity


def _assignments(
    slots: tuple[str | None, ...],
    n_head: int,
    head_types: tuple[str | None, ...],
    max_vars: int,
) -> Iterator[tuple[int, ...]]:
    """Variable index tuples for the body positions, one per slot.

    Indices 0..n_head-1 are the head variables.  New variables appear in
    first-use order (restricted growth), which rules out renamed duplicates
    at the source.  Type conflicts prune the branch; a position with no
    declared type neither constrains nor learns a variable's type.
    """
    n = len(slots)
    assigned: list[int] = [0] * n
    types: list[str | None] = list(head_types) + [None] * (max_vars - n_head)
    seen_head = [False] * n_head

    def rec(pos: int, used: int) -> Iterator[tuple[int, ...]]:
        if pos == n:
            if all(seen_head):
                yield tuple(assigned)
            return
        missing = sum(1 for s in seen_head if not s)
        if missing > n - pos:
            return
        want = slots[pos]
        limit = min(used + 1, max_vars)
        for v in range(limit):
            have = types[v]
            if want is not None and have is not None and want != have:
                continue
            assigned[pos] = v
            old = have
            if want is not None and have is None:
                types[v] = want
            first_head = v < n_head and not seen_head[v]
            if first_head:
                seen_head[v] = True
            yield from rec(pos + 1, max(used, v + 1))
            if first_head:
                seen_head[v] = False
            types[v] = old

    yield from rec(0, n_head)


def _clauses_of_length(bias: BiasSpec, head: PredDecl, length: int) -> list[Clause]:
    if head.arity > bias.max_vars:
        return []
    body_decls = [d for d in bias.body_decls if d.predicate not in bias.head_predicates]
    body_decls.sort(key=lambda d: (d.predicate, d.arity))
    head_atom = Atom(head.predicate, tuple(var(_VAR_NAMES[i]) for i in range(head.arity)))
    head_types = _typed_positions(head)

    out: dict[str, Clause] = {}
    for combo in itertools.combinations_with_replacement(body_decls, length):
        slots = tuple(t for d in combo for t in _typed_positions(d))
        if len(slots) < head.arity:
            continue
        for assignment in _assignments(slots, head.arity, head_types, bias.max_vars):
            lits = []
            i = 0
            for d in combo:
                args = tuple(var(_VAR_NAMES[v]) for v in assignment[i : i + d.arity])
                i += d.arity
                lits.append(Atom(d.predicate, args))
            if len(set(lits)) != len(lits):
                continue
            try:
                clause = Clause(head_atom, tuple(lits))
            except ValueError:  # disconnected body
                continue
            text = print_clause(clause)
            if text not in out:
                out[text] = clause
    return [out[t] for t in sorted(out)]


def enumerate_clauses(bias: BiasSpec) -> Iterator[Clause]:
    """The full hypothesis space for a bias, smallest bodies first."""
    for length in range(1, bias.max_body + 1):
        block: dict[str, Clause] = {}
        for head in bias.head_decls:
            for clause in _clauses_of_length(bias, head, length):
                block[print_clause(clause)] = clause
        for text in sorted(block):
            yield block[text]


@lru_cache(maxsize=8)
def candidate_list(bias: BiasSpec) -> tuple[cover.Candidate, ...]:
    """Compiled hypothesis space, cached per bias."""
    return tuple(
        cover.compile_candidate(c, print_clause(c)) for c in enumerate_clauses(bias)
    )


@dataclass(frozen=True)
class SolverRequest:
    background: Program
    examples: ExampleSet
    bias: BiasSpec
    timeout: float = DEFAULT_TIMEOUT
    seed: int = 0  # reserved for randomized solvers; the reference one is deterministic


@dataclass(frozen=True)
class SolverStats:
    clauses_enumerated: int = 0
    candidates_negative_safe: int = 0
    # wall-clock, excluded from equality so identical requests compare equal
    elapsed: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class SolverResult:
    outcome: str  # "hypothesis" | "no_hypothesis" | "timeout"
    hypothesis: Program | None
    stats: SolverStats = field(default_factory=SolverStats)

    @property
    def ok(self) -> bool:
        return self.outcome == "hypothesis"


@dataclass(frozen=True)
class Verification:
    status: str  # "consistent" | "incomplete" | "unsound"
    missed_positives: tuple[Atom, ...]
    covered_negatives: tuple[Atom, ...]


def verify(background: Program, hypothesis: Program, examples: ExampleSet) -> Verification:
    """Check a hypothesis against examples with the fixpoint engine."""
    res = coverage(background, hypothesis, examples)
    missed = tuple(sorted(set(examples.positives) - res.covered_pos, key=str))
    bad = tuple(sorted(res.covered_neg, key=str))
    if bad:
        status = "unsound"
    elif missed:
        status = "incomplete"
    else:
        status = "consistent"
    return Verification(status=status, missed_positives=missed, covered_negatives=bad)


def _wanted_by_pred(atoms: tuple[Atom, ...]) -> dict[tuple[str, int], dict[tuple[str, ...], Atom]]:
    out: dict[tuple[str, int], dict[tuple[str, ...], Atom]] = {}
    for a in atoms:
        out.setdefault((a.predicate, a.arity), {})[
            tuple(t.name for t in a.args)
        ] = a
    return out


def solve(request: SolverRequest, cache: cover.CoverCache | None = None) -> SolverResult:
    """Learn a smallest-first greedy hypothesis that fits the examples exactly.

    Success means every positive is derivable from background plus hypothesis
    and no negative is.  An externally supplied cache makes repeated calls
    over overlapping backgrounds cheap; it must always be paired with the
    same bias.
    """
    start = time.monotonic()
    deadline = start + request.timeout
    bias = request.bias
    examples = request.examples
    examples.check_predicates(bias)
    candidates = candidate_list(bias)
    stats = SolverStats(clauses_enumerated=len(candidates))

    def done(outcome: str, hyp: Program | None, safe: int = 0) -> SolverResult:
        return SolverResult(
            outcome,
            hyp,
            replace(stats, candidates_negative_safe=safe, elapsed=time.monotonic() - start),
        )

    store = FactStore.from_program(request.background)
    # a negative already present as a fact can never be separated
    if any(store.has_atom(n) for n in examples.negatives):
        return done("no_hypothesis", None)
    uncovered = {p for p in examples.positives if not store.has_atom(p)}
    if not uncovered:
        return done("hypothesis", Program.of(()))

    wanted_pos = _wanted_by_pred(tuple(sorted(uncovered, key=str)))
    wanted_neg = _wanted_by_pred(examples.negatives)
    empty: dict[tuple[str, ...], Atom] = {}

    tables = cover.coverage_tables(list(candidates), store, cache)
    usable: list[tuple[cover.Candidate, frozenset[Atom]]] = []
    safe = 0
    for i, cov in enumerate(tables):
        if i % 256 == 0 and time.monotonic() > deadline:
            return done("timeout", None, safe)
        key = (cov.candidate.clause.head.predicate, cov.candidate.head_arity)
        if cover.covers_any(cov, wanted_neg.get(key, empty)):
            continue
        safe += 1
        got = cover.covered_atoms(cov, wanted_pos.get(key, empty))
        if got:
            usable.append((cov.candidate, frozenset(got)))

    chosen: list[Clause] = []
    while uncovered:
        if time.monotonic() > deadline:
            return done("timeout", None, safe)
        if len(chosen) >= bias.max_clauses:
            return done("no_hypothesis", None, safe)
        best = None
        best_key = None
        for cand, covered in usable:
            gain = len(covered & uncovered)
            if gain == 0:
                continue
            key = (-gain, cand.body_len, cand.text)
            if best_key is None or key < best_key:
                best, best_key = (cand, covered), key
        if best is None:
            return done("no_hypothesis", None, safe)
        chosen.append(best[0].clause)
        uncovered -= best[1]

    hypothesis = Program.of(chosen)
    check = verify(request.background, hypothesis, examples)
    if check.status != "consistent":
        raise RuntimeError(
            f"solver self-check failed ({check.status}) for hypothesis:\n{hypothesis}"
        )
    return done("hypothesis", hypothesis, safe)
