"""Bottom-up entailment for function-free definite programs.

``consequences`` computes the least Herbrand model of background facts plus
a rule program by semi-naive (delta-driven) fixpoint iteration with a
per-predicate first-argument index.  Everything downstream (example
coverage, rule support, evaluation) is defined in terms of membership in
that model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .logic import Atom, Clause, Program, Term, const

# Engine representation: a fact is (predicate, (c1, ..., ck)) over plain
# strings; compiled rule literals use int variable slots and str constants.

Fact = tuple[str, tuple[str, ...]]


def atom_to_fact(a: Atom) -> Fact:
    if not a.is_ground():
        raise ValueError(f"expected a ground atom: {a}")
    return (a.predicate, tuple(t.name for t in a.args))


def fact_to_atom(f: Fact) -> Atom:
    return Atom(f[0], tuple(const(c) for c in f[1]))


class FactStore:
    """Ground atoms indexed by predicate and by (predicate, first argument).

    Not mutated after construction by callers; ``consequences`` builds one
    incrementally and hands it back frozen by convention.
    """

    __slots__ = ("by_pred", "first_arg", "constants", "_count")

    def __init__(self, facts: Iterable[Fact] = ()):
        self.by_pred: dict[str, set[tuple[str, ...]]] = {}
        self.first_arg: dict[tuple[str, str], set[tuple[str, ...]]] = {}
        self.constants: set[str] = set()
        self._count = 0
        for f in facts:
            self.add(f)

    @staticmethod
    def from_program(p: Program, extra_atoms: Iterable[Atom] = ()) -> "FactStore":
        store = FactStore()
        for c in p:
            if not c.is_fact():
                raise ValueError(f"background must contain only facts: {c}")
            store.add(atom_to_fact(c.head))
        # extra atoms only widen the constant universe (e.g. example constants)
        for a in extra_atoms:
            store.constants.update(t.name for t in a.args if t.is_const())
        return store

    def add(self, f: Fact) -> bool:
        """Insert; returns True when the fact is new."""
        pred, args = f
        rows = self.by_pred.setdefault(pred, set())
        if args in rows:
            return False
        rows.add(args)
        self.first_arg.setdefault((pred, args[0]), set()).add(args)
        self.constants.update(args)
        self._count += 1
        return True

    def __contains__(self, f: Fact) -> bool:
        rows = self.by_pred.get(f[0])
        return rows is not None and f[1] in rows

    def has_atom(self, a: Atom) -> bool:
        return atom_to_fact(a) in self

    def __len__(self) -> int:
        return self._count

    def facts(self) -> Iterator[Fact]:
        for pred, rows in self.by_pred.items():
            for args in rows:
                yield (pred, args)

    def atoms(self) -> set[Atom]:
        return {fact_to_atom(f) for f in self.facts()}

    def rows(self, pred: str, first: str | None = None) -> set[tuple[str, ...]]:
        if first is None:
            return self.by_pred.get(pred, set())
        return self.first_arg.get((pred, first), set())

    def components(self) -> tuple[dict[str, int], list[set[Fact]]]:
        """Constant-connected components: (constant -> index, facts per index)."""
        parent: dict[str, str] = {}

        def find(c: str) -> str:
            root = c
            while parent[root] != root:
                root = parent[root]
            while parent[c] != root:
                parent[c], c = root, parent[c]
            return root

        for c in self.constants:
            parent[c] = c
        for _, args in self.facts():
            first = args[0]
            for other in args[1:]:
                ra, rb = find(first), find(other)
                if ra != rb:
                    parent[ra] = rb
        index: dict[str, int] = {}
        comp_of: dict[str, int] = {}
        groups: list[set[Fact]] = []
        for c in self.constants:
            root = find(c)
            if root not in index:
                index[root] = len(groups)
                groups.append(set())
            comp_of[c] = index[root]
        for f in self.facts():
            groups[comp_of[f[1][0]]].add(f)
        return comp_of, groups


# --- rule compilation ---------------------------------------------------------

CompiledLit = tuple[str, tuple[object, ...]]  # args: int var slot | str constant


def compile_clause(c: Clause) -> tuple[CompiledLit, tuple[CompiledLit, ...], int]:
    """(head, body, n_vars) with variables numbered by first occurrence."""
    slots: dict[Term, int] = {}

    def enc(a: Atom) -> CompiledLit:
        args: list[object] = []
        for t in a.args:
            if t.is_var():
                args.append(slots.setdefault(t, len(slots)))
            else:
                args.append(t.name)
        return (a.predicate, tuple(args))

    head = enc(c.head)
    body = tuple(enc(b) for b in c.body)
    return head, body, len(slots)


def match_literal(
    lit: CompiledLit, store: FactStore, env: list[str | None]
) -> Iterator[list[str | None]]:
    """Extend env with every fact row matching the literal."""
    pred, args = lit
    first = args[0]
    if isinstance(first, int) and env[first] is not None:
        first_val: str | None = env[first]
    elif isinstance(first, str):
        first_val = first
    else:
        first_val = None
    rows = store.rows(pred, first_val) if first_val is not None else store.rows(pred)
    arity = len(args)
    for row in rows:
        if len(row) != arity:
            # same name, different arity: a distinct predicate
            continue
        new = None
        ok = True
        for slot, val in zip(args, row):
            if isinstance(slot, str):
                if slot != val:
                    ok = False
                    break
                continue
            bound = env[slot] if new is None else new[slot]
            if bound is None:
                if new is None:
                    new = env.copy()
                new[slot] = val
            elif bound != val:
                ok = False
                break
        if ok:
            yield new if new is not None else env.copy()


def _join(
    body: tuple[CompiledLit, ...], store: FactStore, env: list[str | None]
) -> Iterator[list[str | None]]:
    if not body:
        yield env
        return
    for env2 in match_literal(body[0], store, env):
        yield from _join(body[1:], store, env2)


def consequences(background: Program, hypothesis: Program) -> FactStore:
    """Least model of ``background ∪ hypothesis`` as a FactStore.

    The background must be ground facts; hypothesis clauses may include
    facts.  Derivation is monotone: the result always contains the
    background.
    """
    store = FactStore.from_program(background)
    rules = []
    for c in hypothesis:
        if c.is_fact():
            store.add(atom_to_fact(c.head))
        else:
            rules.append(compile_clause(c))

    delta = set(store.facts())
    while delta:
        new_delta: set[Fact] = set()
        for head, body, n_vars in rules:
            for i, lit in enumerate(body):
                # seed literal i from the delta, remaining literals from the
                # full store; set semantics absorbs re-derivations
                pred = lit[0]
                for d_pred, d_args in delta:
                    if d_pred != pred or len(d_args) != len(lit[1]):
                        continue
                    env: list[str | None] = [None] * n_vars
                    ok = True
                    for slot, val in zip(lit[1], d_args):
                        if isinstance(slot, str):
                            if slot != val:
                                ok = False
                                break
                        elif env[slot] is None:
                            env[slot] = val
                        elif env[slot] != val:
                            ok = False
                            break
                    if not ok:
                        continue
                    rest = body[:i] + body[i + 1 :]
                    for final in _join(rest, store, env):
                        args = tuple(
                            s if isinstance(s, str) else final[s]  # type: ignore[misc]
                            for s in head[1]
                        )
                        derived = (head[0], args)
                        if derived not in store:
                            new_delta.add(derived)
        for f in new_delta:
            store.add(f)
        delta = new_delta
    return store


def entails(background: Program, hypothesis: Program, example: Atom) -> bool:
    """True iff the example is in the least model.  Example must be ground."""
    if not example.is_ground():
        raise ValueError(f"entailment query must be ground: {example}")
    return consequences(background, hypothesis).has_atom(example)


@dataclass(frozen=True)
class CoverageResult:
    covered_pos: frozenset[Atom]
    covered_neg: frozenset[Atom]


def coverage(background: Program, hypothesis: Program, examples) -> CoverageResult:
    """Covered positives and negatives from a single consequences run.

    ``examples`` is anything with ``positives``/``negatives`` atom tuples.
    """
    model = consequences(background, hypothesis)
    return CoverageResult(
        covered_pos=frozenset(a for a in examples.positives if model.has_atom(a)),
        covered_neg=frozenset(a for a in examples.negatives if model.has_atom(a)),
    )


def rule_support(rule: Clause, background: Program, positives: Iterable[Atom]) -> int:
    """Number of positives entailed by the background plus this single rule."""
    model = consequences(background, Program.of([rule]))
    return sum(1 for a in positives if model.has_atom(a))
