"""Fast per-clause coverage for candidate evaluation inside the solver.

A candidate clause has a head with distinct variables and a connected body,
so for a ground head binding the body splits into groups tied together only
through head variables.  Each group can only match inside one
constant-connected component of the fact store.  Solutions (projections of
group matches onto the group's head variables) are therefore computed once
per (candidate, group, component) and unioned; example coverage reduces to
set lookups.  Results are exact: equivalence with the fixpoint engine is
property-tested.

The cache is keyed by component content, so repeated solver calls over a
growing background (the aggregation loop) reuse every unchanged component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .entailment import Fact, FactStore
from .logic import Atom, Clause

# Literal args are encoded as ints: head variable i -> -(i+1), group-local
# existential variables -> 0, 1, ...  Candidate clauses never hold constants.


@dataclass(frozen=True)
class Group:
    head_slots: tuple[int, ...]  # head-arg indices this group binds, ascending
    lits: tuple[tuple[str, tuple[int, ...]], ...]
    n_local: int
    preds: frozenset[str]


@dataclass(frozen=True)
class Candidate:
    """A compiled hypothesis-space clause."""

    clause: Clause
    text: str
    body_len: int
    groups: tuple[Group, ...]

    @property
    def head_arity(self) -> int:
        return self.clause.head.arity


def compile_candidate(clause: Clause, text: str) -> Candidate:
    head_vars = list(clause.head.args)
    if len(set(head_vars)) != len(head_vars) or any(t.is_const() for t in head_vars):
        raise ValueError(f"candidate head must have distinct variables: {clause}")
    head_slot = {v: i for i, v in enumerate(head_vars)}

    # group body literals by shared existential variables
    n = len(clause.body)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict = {}
    for i, lit in enumerate(clause.body):
        for v in lit.variables():
            if v in head_slot:
                continue
            if v in owner:
                ra, rb = find(i), find(owner[v])
                if ra != rb:
                    parent[ra] = rb
            else:
                owner[v] = i

    members: dict[int, list[int]] = {}
    for i in range(n):
        members.setdefault(find(i), []).append(i)

    groups = []
    for idxs in members.values():
        local: dict = {}
        lits = []
        slots = set()
        for i in idxs:
            lit = clause.body[i]
            args = []
            for t in lit.args:
                if t in head_slot:
                    args.append(-(head_slot[t] + 1))
                    slots.add(head_slot[t])
                elif t.is_var():
                    args.append(local.setdefault(t, len(local)))
                else:
                    raise ValueError(f"candidate clauses must be constant-free: {clause}")
            lits.append((lit.predicate, tuple(args)))
        if not slots:
            # connectedness guarantees every group touches the head
            raise ValueError(f"group without head variables in {clause}")
        groups.append(
            Group(
                head_slots=tuple(sorted(slots)),
                lits=tuple(lits),
                n_local=len(local),
                preds=frozenset(p for p, _ in lits),
            )
        )
    groups.sort(key=lambda g: g.head_slots)
    return Candidate(clause=clause, text=text, body_len=n, groups=tuple(groups))


class _ComponentView:
    __slots__ = ("key", "by_pred", "preds")

    def __init__(self, facts: set[Fact]):
        self.key = frozenset(facts)
        self.by_pred: dict[str, list[tuple[str, ...]]] = {}
        for pred, args in facts:
            self.by_pred.setdefault(pred, []).append(args)
        self.preds = frozenset(self.by_pred)


def _group_solutions(group: Group, view: _ComponentView) -> frozenset[tuple[str, ...]]:
    """All projections of group matches in the component onto its head slots."""
    sols: set[tuple[str, ...]] = set()
    lits = group.lits
    head_env: dict[int, str] = {}
    local_env: list[str | None] = [None] * group.n_local

    def rec(i: int) -> None:
        if i == len(lits):
            sols.add(tuple(head_env[s] for s in group.head_slots))
            return
        pred, args = lits[i]
        for row in view.by_pred.get(pred, ()):
            if len(row) != len(args):
                continue
            bound: list[tuple[int, bool]] = []  # (slot, is_head) bindings to undo
            ok = True
            for slot, val in zip(args, row):
                if slot < 0:
                    h = -slot - 1
                    cur = head_env.get(h)
                    if cur is None:
                        head_env[h] = val
                        bound.append((h, True))
                    elif cur != val:
                        ok = False
                        break
                else:
                    cur = local_env[slot]
                    if cur is None:
                        local_env[slot] = val
                        bound.append((slot, False))
                    elif cur != val:
                        ok = False
                        break
            if ok:
                rec(i + 1)
            for slot, is_head in bound:
                if is_head:
                    del head_env[slot]
                else:
                    local_env[slot] = None

    rec(0)
    return frozenset(sols)


class CoverCache:
    """Per-component solution tables, shared across solver calls.

    Bound to one candidate list: entries are keyed by candidate index, so a
    cache must never be reused with a different bias.
    """

    def __init__(self) -> None:
        self.tables: dict[frozenset[Fact], dict[tuple[int, int], frozenset]] = {}

    def table(
        self, view: _ComponentView, candidates: list[Candidate]
    ) -> dict[tuple[int, int], frozenset]:
        cached = self.tables.get(view.key)
        if cached is not None:
            return cached
        table: dict[tuple[int, int], frozenset] = {}
        for ci, cand in enumerate(candidates):
            for gi, group in enumerate(cand.groups):
                if not group.preds <= view.preds:
                    continue
                sols = _group_solutions(group, view)
                if sols:
                    table[(ci, gi)] = sols
        self.tables[view.key] = table
        return table


@dataclass
class CandidateCoverage:
    """Union-of-components solutions per group, for one candidate."""

    candidate: Candidate
    group_unions: list[set]  # parallel to candidate.groups

    def complete(self) -> bool:
        return all(self.group_unions)

    def covers(self, args: tuple[str, ...]) -> bool:
        for group, union in zip(self.candidate.groups, self.group_unions):
            if tuple(args[s] for s in group.head_slots) not in union:
                return False
        return True


def coverage_tables(
    candidates: list[Candidate], store: FactStore, cache: CoverCache | None = None
) -> list[CandidateCoverage]:
    """Per-candidate group-solution unions over the store's components."""
    if cache is None:
        cache = CoverCache()
    _, groups = store.components()
    unions: dict[tuple[int, int], set] = {}
    for facts in groups:
        if not facts:
            continue
        view = _ComponentView(facts)
        for key, sols in cache.table(view, candidates).items():
            acc = unions.get(key)
            if acc is None:
                unions[key] = set(sols)
            else:
                acc.update(sols)
    out = []
    for ci, cand in enumerate(candidates):
        out.append(
            CandidateCoverage(
                candidate=cand,
                group_unions=[unions.get((ci, gi), set()) for gi in range(len(cand.groups))],
            )
        )
    return out


def covered_atoms(cov: CandidateCoverage, wanted: dict[tuple[str, ...], Atom]) -> set[Atom]:
    """Which of the wanted ground atoms (args -> atom) the candidate covers.

    Enumerates whichever side is smaller: the candidate's own derivations
    (single-group case) or the wanted list.
    """
    if not cov.complete():
        return set()
    groups = cov.candidate.groups
    if len(groups) == 1 and len(groups[0].head_slots) == cov.candidate.head_arity:
        sols = cov.group_unions[0]
        if len(sols) <= len(wanted):
            return {wanted[s] for s in sols if s in wanted}
    return {a for args, a in wanted.items() if cov.covers(args)}


def covers_any(cov: CandidateCoverage, wanted: dict[tuple[str, ...], Atom]) -> bool:
    """Short-circuit variant of covered_atoms for the negative-safety check."""
    if not cov.complete():
        return False
    groups = cov.candidate.groups
    if len(groups) == 1 and len(groups[0].head_slots) == cov.candidate.head_arity:
        sols = cov.group_unions[0]
        if len(sols) <= len(wanted):
            return any(s in wanted for s in sols)
        return any(args in sols for args in wanted)
    return any(cov.covers(args) for args in wanted)
