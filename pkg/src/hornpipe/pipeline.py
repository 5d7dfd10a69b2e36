"""Four-stage learning pipeline over extracted subset bundles.

Stage 1 (validation): parse and vocabulary/type/label checks per bundle,
with bounded re-extraction attempts.
Stage 2 (subset checks): each valid subset must admit its own exact-fit
hypothesis, or it is set aside as unreliable.
Stage 3 (aggregation): grow a global training set by re-solving from
scratch as each subset joins; a subset that breaks solvability has its own
examples peeled off one at a time (negatives first) before being dropped
entirely.  If the chronological pass drops too many subsets, seeded
shuffled passes retry, keeping the best trial.
Stage 4 (pruning): drop accepted rules whose standalone support on the
aggregated positives falls below a fraction of the maximum support.

After every accepted step the current hypothesis is re-verified to entail
all aggregated positives and no aggregated negatives; pruning is then
re-checked to keep the hypothesis negative-safe.  Both checks raise rather
than degrade.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

from . import learner
from .cover import CoverCache
from .entailment import coverage, rule_support
from .ingestion import BundleSource, RawBundle
from .logic import Atom, BiasSpec, ExampleSet, Program, print_clause
from .parsing import ParseError, parse_examples, parse_facts

DEFAULT_SUPPORT_THRESHOLD = 0.20
DEFAULT_RETRY_FAIL_THRESHOLD = 0.30
DEFAULT_MAX_RETRIES = 5
DEFAULT_VALIDATION_ATTEMPTS = 3


@dataclass(frozen=True)
class PipelineConfig:
    support_threshold: float = DEFAULT_SUPPORT_THRESHOLD  # min fraction of max rule support
    retry_fail_threshold: float = DEFAULT_RETRY_FAIL_THRESHOLD  # acceptable dropped-subset fraction
    max_retries: int = DEFAULT_MAX_RETRIES  # aggregation trials, shuffles included
    validation_attempts: int = DEFAULT_VALIDATION_ATTEMPTS
    seed: int = 0
    solver_timeout: float = learner.DEFAULT_TIMEOUT
    jobs: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.retry_fail_threshold <= 1.0:
            raise ValueError("retry_fail_threshold must be within [0, 1]")
        if not 0.0 < self.support_threshold <= 1.0:
            raise ValueError("support_threshold must be within (0, 1]")
        for name in ("max_retries", "validation_attempts", "jobs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.solver_timeout <= 0:
            raise ValueError("solver_timeout must be positive")


@dataclass(frozen=True)
class SubsetInstance:
    """A validated, self-contained training unit."""

    id: str
    timestamp: str
    background: Program
    examples: ExampleSet
    violation_source: str = ""
    nominal_source: str = ""


@dataclass(frozen=True)
class ValidationOutcome:
    bundle_id: str
    timestamp: str
    accepted: bool
    attempts_used: int
    reasons: tuple[str, ...] = ()
    subset: SubsetInstance | None = None


def _typed_constants(atoms, types_by_pred, constant_types, reasons) -> None:
    for a in atoms:
        types = types_by_pred.get(a.predicate)
        if not types:
            continue
        for term, ty in zip(a.args, types):
            if ty is None or not term.is_const():
                continue
            prev = constant_types.setdefault(term.name, ty)
            if prev != ty:
                msg = f"type conflict: constant {term.name} used as {prev} and {ty}"
                if msg not in reasons:
                    reasons.append(msg)


def _check_bundle(bundle: RawBundle, bias: BiasSpec) -> tuple[SubsetInstance | None, list[str]]:
    reasons: list[str] = []
    facts: list = []
    for label, text in (
        ("violation facts", bundle.violation_facts),
        ("nominal facts", bundle.nominal_facts),
    ):
        try:
            facts.extend(c.head for c in parse_facts(text))
        except ParseError as e:
            reasons.append(f"{label}: {e}")

    pos_part = neg_part = None
    try:
        pos_part = parse_examples(bundle.violation_examples)
    except (ParseError, ValueError) as e:
        reasons.append(f"violation examples: {e}")
    try:
        neg_part = parse_examples(bundle.nominal_examples)
    except (ParseError, ValueError) as e:
        reasons.append(f"nominal examples: {e}")
    if pos_part is not None and pos_part.negatives:
        reasons.append("negative example in violation-derived bundle")
    if neg_part is not None and neg_part.positives:
        reasons.append("positive example in nominal-derived bundle")

    example_atoms = []
    for part in (pos_part, neg_part):
        if part is not None:
            example_atoms.extend((*part.positives, *part.negatives))

    vocab = bias.vocabulary
    flagged = set()
    for a in (*facts, *example_atoms):
        if vocab.get(a.predicate) != a.arity:
            key = f"unknown predicate {a.predicate}/{a.arity}"
            if key not in flagged:
                flagged.add(key)
                reasons.append(key)
    for a in example_atoms:
        if a.predicate not in bias.head_predicates and vocab.get(a.predicate) == a.arity:
            key = f"example predicate is not a declared head predicate: {a.predicate}/{a.arity}"
            if key not in flagged:
                flagged.add(key)
                reasons.append(key)

    constant_types: dict[str, str] = {}
    _typed_constants(facts, bias.types_by_predicate, constant_types, reasons)
    _typed_constants(example_atoms, bias.types_by_predicate, constant_types, reasons)

    examples = None
    if pos_part is not None and neg_part is not None:
        try:
            examples = ExampleSet.of(pos_part.positives, neg_part.negatives)
        except ValueError as e:
            reasons.append(str(e))
        if examples is not None and not examples.positives:
            reasons.append("no positive example")

    if reasons or examples is None:
        return None, reasons
    return (
        SubsetInstance(
            id=bundle.id,
            timestamp=bundle.timestamp,
            background=Program.of(facts),
            examples=examples,
            violation_source=bundle.violation_id,
            nominal_source=bundle.nominal_id,
        ),
        [],
    )


def validate_bundle(source: BundleSource, bias: BiasSpec, attempts: int) -> ValidationOutcome:
    """Check a bundle, re-fetching up to `attempts` times on failure.

    Rejection is a normal outcome carrying the per-attempt reasons; I/O
    failures from the fetch hook propagate as exceptions.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    collected: list[str] = []
    for attempt in range(1, attempts + 1):
        subset, reasons = _check_bundle(source.fetch(attempt), bias)
        if subset is not None:
            return ValidationOutcome(
                bundle_id=source.id,
                timestamp=source.timestamp,
                accepted=True,
                attempts_used=attempt,
                reasons=tuple(collected),
                subset=subset,
            )
        collected.extend(f"attempt {attempt}: {r}" for r in reasons)
    return ValidationOutcome(
        bundle_id=source.id,
        timestamp=source.timestamp,
        accepted=False,
        attempts_used=attempts,
        reasons=tuple(collected),
    )


# ------------------------------------------------------------- subset checks


@dataclass(frozen=True)
class SubsetCheck:
    subset_id: str
    outcome: str  # solver outcome tag
    reliable: bool
    clause_count: int = 0


def _solve_subset(args) -> learner.SolverResult:
    background, examples, bias, timeout = args
    return learner.solve(learner.SolverRequest(background, examples, bias, timeout=timeout))


def check_subsets(
    subsets: list[SubsetInstance], bias: BiasSpec, config: PipelineConfig
) -> tuple[list[SubsetInstance], list[SubsetCheck]]:
    """Keep the subsets that admit an exact-fit hypothesis on their own.

    Order is preserved; work is independent per subset, so it fans out over
    config.jobs processes when asked.
    """
    args = [(s.background, s.examples, bias, config.solver_timeout) for s in subsets]
    if config.jobs > 1 and len(subsets) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_solve_subset, args))
    else:
        results = [_solve_subset(a) for a in args]
    reliable: list[SubsetInstance] = []
    checks: list[SubsetCheck] = []
    for subset, res in zip(subsets, results):
        ok = res.outcome == "hypothesis"
        if ok:
            reliable.append(subset)
        checks.append(
            SubsetCheck(
                subset_id=subset.id,
                outcome=res.outcome,
                reliable=ok,
                clause_count=len(res.hypothesis.clauses) if res.hypothesis else 0,
            )
        )
    return reliable, checks


# --------------------------------------------------------------- aggregation


@dataclass(frozen=True)
class CandidateDecision:
    trial: int
    subset_id: str
    action: str  # "accepted" | "retained_partial" | "discarded"
    solver_outcome: str
    removed_positives: tuple[str, ...] = ()
    removed_negatives: tuple[str, ...] = ()


@dataclass(frozen=True)
class AggregationState:
    accepted_ids: tuple[str, ...]
    background: Program
    examples: ExampleSet
    hypothesis: Program
    trial_log: tuple[CandidateDecision, ...]


def _empty_state() -> AggregationState:
    return AggregationState((), Program.of(()), ExampleSet.of((), ()), Program.of(()), ())


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    order: tuple[str, ...]
    accepted_count: int
    fail_frac: float
    success: bool


@dataclass(frozen=True)
class AggregationOutcome:
    best: AggregationState
    best_trial: int
    trials: tuple[TrialRecord, ...]
    early_stopped: bool


def _merge_examples(state: ExampleSet, pos, neg) -> ExampleSet:
    return ExampleSet.of((*state.positives, *pos), (*state.negatives, *neg))


def _try_union(
    state: AggregationState,
    subset: SubsetInstance,
    pos,
    neg,
    bias: BiasSpec,
    config: PipelineConfig,
    cache: CoverCache,
) -> tuple[learner.SolverResult | None, Program, ExampleSet | None]:
    """Solve the union of the state with a (possibly reduced) candidate."""
    background = state.background.union(subset.background)
    try:
        examples = _merge_examples(state.examples, pos, neg)
    except ValueError:
        # candidate contradicts the accepted labels outright
        return None, background, None
    res = learner.solve(
        learner.SolverRequest(background, examples, bias, timeout=config.solver_timeout),
        cache,
    )
    return res, background, examples


def _acceptable(res: learner.SolverResult | None) -> bool:
    return res is not None and res.outcome == "hypothesis" and bool(res.hypothesis.clauses)


def retain_partial(
    state: AggregationState,
    subset: SubsetInstance,
    bias: BiasSpec,
    config: PipelineConfig,
    cache: CoverCache | None = None,
):
    """Peel examples off a failed candidate until the union solves again.

    Removal is cumulative, newest-parsed first, negatives before positives;
    at least one of the candidate's own positives must survive.  Returns
    (kept_pos, kept_neg, removed_pos, removed_neg, result, background,
    examples) or None when every reduction fails.
    """
    if cache is None:
        cache = CoverCache()
    pos = list(subset.examples.positives)
    neg = list(subset.examples.negatives)
    removed_pos: list[Atom] = []
    removed_neg: list[Atom] = []
    while neg or len(pos) > 1:
        if neg:
            removed_neg.append(neg.pop())
        else:
            removed_pos.append(pos.pop())
        res, background, examples = _try_union(state, subset, pos, neg, bias, config, cache)
        if _acceptable(res):
            return pos, neg, removed_pos, removed_neg, res, background, examples
    return None


def aggregate(
    reliable: list[SubsetInstance],
    bias: BiasSpec,
    config: PipelineConfig,
    on_accept: Callable[[int, AggregationState], None] | None = None,
) -> AggregationOutcome:
    """Grow the best consistent union of subsets over up to max_retries trials.

    Trial 1 takes subsets chronologically; later trials reshuffle with a
    per-trial seeded stream.  A trial succeeds when its final hypothesis is
    non-empty; the best trial is the first one with (success, then larger
    accepted count) winning.  Trials stop early once the dropped-subset
    fraction is within retry_fail_threshold.

    on_accept(trial, state) fires after every accepted candidate, after the
    state has been re-verified training-correct.
    """
    if not reliable:
        return AggregationOutcome(_empty_state(), 0, (), False)

    chronological = sorted(reliable, key=lambda s: (s.timestamp, s.id))
    cache = CoverCache()
    best = _empty_state()
    best_trial = 0
    best_k = -1
    best_success = False
    trials: list[TrialRecord] = []
    early = False

    for t in range(1, config.max_retries + 1):
        order = list(chronological)
        if t > 1:
            random.Random(f"{config.seed}:trial:{t}").shuffle(order)
        state = _run_trial(order, t, bias, config, cache, on_accept)
        k = len(state.accepted_ids)
        fail_frac = 1.0 - k / len(reliable)
        success = bool(state.hypothesis.clauses)
        trials.append(
            TrialRecord(
                trial=t,
                order=tuple(s.id for s in order),
                accepted_count=k,
                fail_frac=fail_frac,
                success=success,
            )
        )
        if (success and not best_success) or (success == best_success and k > best_k):
            best, best_trial, best_k, best_success = state, t, k, success
        if fail_frac <= config.retry_fail_threshold:
            early = t < config.max_retries
            break

    return AggregationOutcome(best=best, best_trial=best_trial, trials=tuple(trials), early_stopped=early)


def _run_trial(
    order: list[SubsetInstance],
    trial: int,
    bias: BiasSpec,
    config: PipelineConfig,
    cache: CoverCache,
    on_accept,
) -> AggregationState:
    state = _empty_state()
    log: list[CandidateDecision] = []
    for subset in order:
        pos = subset.examples.positives
        neg = subset.examples.negatives
        res, background, examples = _try_union(state, subset, pos, neg, bias, config, cache)
        if _acceptable(res):
            decision = CandidateDecision(
                trial=trial, subset_id=subset.id, action="accepted", solver_outcome=res.outcome
            )
            state = _advance(state, subset, background, examples, res.hypothesis, decision, log)
            if on_accept is not None:
                on_accept(trial, state)
            continue
        reduced = retain_partial(state, subset, bias, config, cache)
        if reduced is not None:
            _, _, removed_pos, removed_neg, res2, background2, examples2 = reduced
            decision = CandidateDecision(
                trial=trial,
                subset_id=subset.id,
                action="retained_partial",
                solver_outcome=res2.outcome,
                removed_positives=tuple(str(a) for a in removed_pos),
                removed_negatives=tuple(str(a) for a in removed_neg),
            )
            state = _advance(state, subset, background2, examples2, res2.hypothesis, decision, log)
            if on_accept is not None:
                on_accept(trial, state)
        else:
            log.append(
                CandidateDecision(
                    trial=trial,
                    subset_id=subset.id,
                    action="discarded",
                    solver_outcome=res.outcome if res is not None else "contradiction",
                )
            )
            state = AggregationState(
                state.accepted_ids, state.background, state.examples, state.hypothesis, tuple(log)
            )
    return state


def _advance(
    state: AggregationState,
    subset: SubsetInstance,
    background: Program,
    examples: ExampleSet,
    hypothesis: Program,
    decision: CandidateDecision,
    log: list[CandidateDecision],
) -> AggregationState:
    check = learner.verify(background, hypothesis, examples)
    if check.status != "consistent":
        raise RuntimeError(
            f"aggregation invariant broken after {subset.id}: {check.status}"
        )
    log.append(decision)
    return AggregationState(
        accepted_ids=(*state.accepted_ids, subset.id),
        background=background,
        examples=examples,
        hypothesis=hypothesis,
        trial_log=tuple(log),
    )


# ------------------------------------------------------------------- pruning


@dataclass(frozen=True)
class RuleSupport:
    rule: str
    support: int
    kept: bool


def prune_by_support(
    hypothesis: Program,
    background: Program,
    positives,
    threshold_fraction: float,
) -> tuple[Program, tuple[RuleSupport, ...]]:
    """Keep rules whose standalone positive coverage is within a fraction of
    the best rule's."""
    rules = hypothesis.rules()
    if not rules:
        return Program.of(()), ()
    supports = [rule_support(r, background, positives) for r in rules]
    cutoff = threshold_fraction * max(supports)
    records = tuple(
        RuleSupport(rule=print_clause(r), support=s, kept=s >= cutoff)
        for r, s in zip(rules, supports)
    )
    kept = [r for r, s in zip(rules, supports) if s >= cutoff]
    return Program.of(kept), records


# ------------------------------------------------------------------ pipeline


@dataclass(frozen=True)
class PipelineReport:
    validation: tuple[ValidationOutcome, ...]
    subset_checks: tuple[SubsetCheck, ...]
    aggregation: AggregationOutcome
    pruning: tuple[RuleSupport, ...]
    final_hypothesis: Program
    emptied_at: str | None  # stage name when the pipeline came up empty

    @property
    def pre_prune_rule_count(self) -> int:
        return len(self.aggregation.best.hypothesis.clauses)


def run_pipeline(sources: list[BundleSource], bias: BiasSpec, config: PipelineConfig) -> PipelineReport:
    outcomes = tuple(
        validate_bundle(src, bias, config.validation_attempts) for src in sources
    )
    subsets = [o.subset for o in outcomes if o.accepted and o.subset is not None]
    reliable, checks = check_subsets(subsets, bias, config)
    agg = aggregate(reliable, bias, config)

    best = agg.best
    pruned, prune_records = prune_by_support(
        best.hypothesis, best.background, best.examples.positives, config.support_threshold
    )
    leftover = coverage(best.background, pruned, best.examples)
    if leftover.covered_neg:
        raise RuntimeError("pruned hypothesis covers an aggregated negative")

    if not sources:
        emptied = "no_bundles"
    elif not subsets:
        emptied = "validation"
    elif not reliable:
        emptied = "subset_checks"
    elif not best.hypothesis.clauses:
        emptied = "aggregation"
    elif not pruned.clauses:
        emptied = "pruning"
    else:
        emptied = None

    return PipelineReport(
        validation=outcomes,
        subset_checks=tuple(checks),
        aggregation=agg,
        pruning=prune_records,
        final_hypothesis=pruned,
        emptied_at=emptied,
    )
