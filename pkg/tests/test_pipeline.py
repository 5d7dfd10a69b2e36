import itertools
import random

import pytest

from hornpipe.cover import CoverCache
from hornpipe.entailment import coverage
from hornpipe.ingestion import BundleSource, RawBundle
from hornpipe.parsing import parse_bias, parse_examples, parse_facts, parse_rules
from hornpipe.pipeline import (
    PipelineConfig,
    SubsetInstance,
    _run_trial,
    aggregate,
    check_subsets,
    prune_by_support,
    retain_partial,
    run_pipeline,
    validate_bundle,
)
from hornpipe.synthgen import generate_corpus, sample_rules

TEST_BIAS = parse_bias(
    "head_pred(goal,2).\n"
    "body_pred(p,2).\n"
    "body_pred(q,2).\n"
    "max_vars(3).\n"
    "max_body(2).\n"
    "max_clauses(4).\n"
)

TYPED_BIAS = parse_bias(
    "head_pred(goal,2).\n"
    "body_pred(p,2).\n"
    "body_pred(r,1).\n"
    "type(goal,(agent,agent)).\n"
    "type(p,(agent,agent)).\n"
    "type(r,(runway)).\n"
    "max_vars(3).\n"
    "max_body(2).\n"
)


def _bundle(
    vfacts="p(a,b).\n",
    vex="pos(goal(a,b)).\n",
    nfacts="",
    nex="neg(goal(b,a)).\n",
    bid="b-1",
):
    return RawBundle(
        id=bid,
        timestamp="2024-01-01",
        violation_id=f"{bid}-v",
        nominal_id=f"{bid}-n",
        violation_facts=vfacts,
        violation_examples=vex,
        nominal_facts=nfacts,
        nominal_examples=nex,
    )


def _source(by_attempt: dict[int, RawBundle]) -> BundleSource:
    last = max(by_attempt)

    def fetch(attempt: int) -> RawBundle:
        return by_attempt.get(attempt, by_attempt[last])

    return BundleSource(id="b-1", timestamp="2024-01-01", fetch=fetch)


def _subset(sid: str, stamp: str, facts: str, exs: str) -> SubsetInstance:
    parsed = parse_examples(exs)
    return SubsetInstance(
        id=sid, timestamp=stamp, background=parse_facts(facts), examples=parsed
    )


# ---------------------------------------------------------------- validation


def test_valid_bundle_accepted_first_attempt():
    out = validate_bundle(_source({1: _bundle()}), TEST_BIAS, attempts=3)
    assert out.accepted
    assert out.attempts_used == 1
    assert out.reasons == ()
    assert out.subset is not None
    assert len(out.subset.background.facts()) == 1


def test_refetch_until_valid_attempt():
    bad = _bundle(vex="")  # no positive example
    out = validate_bundle(_source({1: bad, 2: bad, 3: _bundle()}), TEST_BIAS, attempts=3)
    assert out.accepted
    assert out.attempts_used == 3
    assert any(r.startswith("attempt 1:") for r in out.reasons)
    assert any(r.startswith("attempt 2:") for r in out.reasons)


def test_rejection_after_all_attempts():
    bad = _bundle(vex="")
    out = validate_bundle(_source({1: bad}), TEST_BIAS, attempts=3)
    assert not out.accepted
    assert out.attempts_used == 3
    assert out.subset is None
    assert len(out.reasons) == 3
    assert all("no positive example" in r for r in out.reasons)


def test_parse_failure_is_a_rejection_not_an_error():
    out = validate_bundle(
        _source({1: _bundle(vfacts="p(a,b\n")}), TEST_BIAS, attempts=1
    )
    assert not out.accepted
    assert any("violation facts" in r for r in out.reasons)


def test_fetch_errors_propagate():
    def fetch(attempt: int) -> RawBundle:
        raise OSError("extractor unavailable")

    src = BundleSource(id="b-9", timestamp="2024-01-01", fetch=fetch)
    with pytest.raises(OSError):
        validate_bundle(src, TEST_BIAS, attempts=2)


def test_role_separation_is_enforced():
    out = validate_bundle(
        _source({1: _bundle(vex="pos(goal(a,b)).\nneg(goal(b,a)).\n")}),
        TEST_BIAS,
        attempts=1,
    )
    assert not out.accepted
    assert any("negative example in violation-derived" in r for r in out.reasons)

    out = validate_bundle(
        _source({1: _bundle(nex="pos(goal(b,a)).\n")}), TEST_BIAS, attempts=1
    )
    assert not out.accepted
    assert any("positive example in nominal-derived" in r for r in out.reasons)


def test_unknown_predicate_rejected():
    out = validate_bundle(
        _source({1: _bundle(vfacts="p(a,b).\nmystery(a).\n")}), TEST_BIAS, attempts=1
    )
    assert not out.accepted
    assert any("unknown predicate mystery/1" in r for r in out.reasons)


def test_example_must_use_head_predicate():
    out = validate_bundle(
        _source({1: _bundle(vex="pos(p(a,b)).\n")}), TEST_BIAS, attempts=1
    )
    assert not out.accepted
    assert any("not a declared head predicate" in r for r in out.reasons)


def test_type_conflict_rejected():
    # a plays an agent slot in p and the runway slot in r
    out = validate_bundle(
        _source({1: _bundle(vfacts="p(a,b).\nr(a).\n")}), TYPED_BIAS, attempts=1
    )
    assert not out.accepted
    assert any("type conflict: constant a" in r for r in out.reasons)


def test_contradictory_labels_rejected():
    out = validate_bundle(
        _source({1: _bundle(nex="neg(goal(a,b)).\n")}), TEST_BIAS, attempts=1
    )
    assert not out.accepted
    assert any("both positive and negative" in r for r in out.reasons)


# ------------------------------------------------------------- subset checks


def test_check_subsets_splits_reliable_from_unreliable():
    good = _subset("s-good", "2024-01-01", "p(a,b).\n", "pos(goal(a,b)).\nneg(goal(b,a)).\n")
    orphan = _subset("s-orphan", "2024-01-02", "q(z,z).\n", "pos(goal(a,b)).\n")
    config = PipelineConfig()
    reliable, checks = check_subsets([good, orphan], TEST_BIAS, config)
    assert [s.id for s in reliable] == ["s-good"]
    assert [c.reliable for c in checks] == [True, False]
    assert checks[0].outcome == "hypothesis"
    assert checks[0].clause_count == 1
    assert checks[1].outcome == "no_hypothesis"


def test_check_subsets_parallel_matches_serial():
    subsets = [
        _subset(f"s-{i}", f"2024-01-0{i+1}", f"p(a{i},b{i}).\n", f"pos(goal(a{i},b{i})).\n")
        for i in range(4)
    ]
    serial = check_subsets(subsets, TEST_BIAS, PipelineConfig(jobs=1))
    parallel = check_subsets(subsets, TEST_BIAS, PipelineConfig(jobs=2))
    assert serial == parallel


# --------------------------------------------------------------- aggregation


def _poisoned_batch() -> list[SubsetInstance]:
    """One early subset whose stray negative blocks every later positive."""
    bad = _subset(
        "bad",
        "2024-01-01",
        "p(x0,y0).\nq(y0,x0).\n",
        "pos(goal(y0,x0)).\nneg(goal(x0,y0)).\n",
    )
    goods = [
        _subset(
            f"good-{i}",
            f"2024-01-0{i + 2}",
            f"p(a{i},b{i}).\n",
            f"pos(goal(a{i},b{i})).\nneg(goal(b{i},a{i})).\n",
        )
        for i in range(4)
    ]
    return [bad, *goods]


def test_chronological_pass_can_fail_badly():
    batch = _poisoned_batch()
    config = PipelineConfig(seed=0, max_retries=5, retry_fail_threshold=0.30)
    outcome = aggregate(batch, TEST_BIAS, config)

    first = outcome.trials[0]
    assert first.order[0] == "bad"
    assert first.accepted_count == 1
    assert first.fail_frac == pytest.approx(0.8)
    assert first.success  # a hypothesis exists, it is just tiny

    assert outcome.best_trial > 1
    best = outcome.best
    assert len(best.accepted_ids) == 5
    assert outcome.early_stopped
    assert outcome.trials[-1].fail_frac <= 0.30
    for rec in outcome.trials[:-1]:
        assert rec.fail_frac > 0.30

    flips = [d for d in best.trial_log if d.subset_id == "bad"]
    assert flips[-1].action == "retained_partial"
    assert flips[-1].removed_negatives == ("goal(x0,y0)",)
    cov = coverage(best.background, best.hypothesis, best.examples)
    assert cov.covered_pos == best.examples.pos_set
    assert not cov.covered_neg


def test_every_ordering_confirms_the_poisoning_story():
    batch = _poisoned_batch()
    config = PipelineConfig(seed=0)
    cache = CoverCache()
    for perm in itertools.permutations(batch):
        state = _run_trial(list(perm), 1, TEST_BIAS, config, cache, None)
        expected = 1 if perm[0].id == "bad" else 5
        assert len(state.accepted_ids) == expected, [s.id for s in perm]


def test_aggregate_is_deterministic():
    batch = _poisoned_batch()
    config = PipelineConfig(seed=3, max_retries=4)
    assert aggregate(batch, TEST_BIAS, config) == aggregate(batch, TEST_BIAS, config)


def test_aggregate_empty_input():
    outcome = aggregate([], TEST_BIAS, PipelineConfig())
    assert outcome.best_trial == 0
    assert outcome.trials == ()
    assert not outcome.best.accepted_ids


def test_retain_partial_peels_contradicting_positive():
    state_a = aggregate(
        [_subset("a", "2024-01-01", "p(a,b).\n", "pos(goal(a,b)).\nneg(goal(b,a)).\n")],
        TEST_BIAS,
        PipelineConfig(),
    ).best
    # second positive contradicts the accepted negative label for goal(b,a)
    b = _subset("b", "2024-01-02", "q(c,d).\n", "pos(goal(c,d)).\npos(goal(b,a)).\n")
    reduced = retain_partial(state_a, b, TEST_BIAS, PipelineConfig())
    assert reduced is not None
    kept_pos, kept_neg, removed_pos, removed_neg, res, background, examples = reduced
    assert [str(a) for a in kept_pos] == ["goal(c,d)"]
    assert [str(a) for a in removed_pos] == ["goal(b,a)"]
    assert not removed_neg and not kept_neg
    assert res.outcome == "hypothesis"
    assert examples.pos_set == {*state_a.examples.positives, *kept_pos}


def test_contradicting_single_positive_subset_is_discarded():
    a = _subset("a", "2024-01-01", "p(a,b).\n", "pos(goal(a,b)).\nneg(goal(b,a)).\n")
    b = _subset("b", "2024-01-02", "q(b,a).\n", "pos(goal(b,a)).\n")
    outcome = aggregate([a, b], TEST_BIAS, PipelineConfig(max_retries=1))
    assert outcome.best.accepted_ids == ("a",)
    drop = [d for d in outcome.best.trial_log if d.subset_id == "b"]
    assert drop[-1].action == "discarded"
    assert drop[-1].solver_outcome == "contradiction"


# ------------------------------------------------------------------- pruning


def _support_fixture(supports: list[int]):
    rules, facts, pos = [], [], []
    for i, s in enumerate(supports):
        rules.append(f"goal(V0,V1):- u{i}(V0,V1).")
        for j in range(s):
            facts.append(f"u{i}(a{i}x{j},b{i}x{j}).")
            pos.append(f"pos(goal(a{i}x{j},b{i}x{j})).")
    hypothesis = parse_rules("\n".join(rules) + "\n")
    background = parse_facts("\n".join(facts) + "\n")
    positives = parse_examples("\n".join(pos) + "\n").positives
    return hypothesis, background, positives


def test_prune_drops_weakly_supported_rules():
    h, bg, pos = _support_fixture([10, 3, 1])
    pruned, records = prune_by_support(h, bg, pos, 0.20)
    assert [r.support for r in records] == [10, 3, 1]
    assert [r.kept for r in records] == [True, True, False]
    assert len(pruned.clauses) == 2


def test_prune_keeps_everything_above_cutoff():
    h, bg, pos = _support_fixture([4, 1])
    pruned, records = prune_by_support(h, bg, pos, 0.20)
    assert [r.kept for r in records] == [True, True]
    assert len(pruned.clauses) == 2


def test_prune_single_rule_never_dropped():
    h, bg, pos = _support_fixture([2])
    pruned, records = prune_by_support(h, bg, pos, 1.0)
    assert [r.kept for r in records] == [True]
    assert len(pruned.clauses) == 1


def test_prune_empty_hypothesis():
    h, bg, pos = _support_fixture([1])
    pruned, records = prune_by_support(parse_rules(""), bg, pos, 0.2)
    assert not pruned.clauses
    assert records == ()


# ---------------------------------------------------------------- end to end


RULES = parse_rules(
    "goal(V0,V1):- link(V0,V2),feeds(V2,V1).\n"
    "goal(V0,V1):- marked(V0),feeds(V0,V1).\n"
)


def test_run_pipeline_on_clean_corpus():
    corpus = generate_corpus(RULES, n_subsets=6, corruption=0.0, seed=1)
    config = PipelineConfig(seed=1)
    report = run_pipeline(corpus.bundle_sources(), corpus.bias, config)
    assert report.emptied_at is None
    assert all(v.accepted for v in report.validation)
    assert all(c.reliable for c in report.subset_checks)
    best = report.aggregation.best
    assert len(best.accepted_ids) == 6
    assert report.final_hypothesis.clauses
    cov = coverage(best.background, report.final_hypothesis, best.examples)
    assert cov.covered_pos == best.examples.pos_set
    assert not cov.covered_neg
    # a clean first pass stops after one trial
    assert len(report.aggregation.trials) == 1

    again = run_pipeline(corpus.bundle_sources(), corpus.bias, config)
    assert report == again


def test_run_pipeline_with_no_sources():
    report = run_pipeline([], TEST_BIAS, PipelineConfig())
    assert report.emptied_at == "no_bundles"
    assert not report.final_hypothesis.clauses
    assert report.pre_prune_rule_count == 0


def test_run_pipeline_survives_corrupted_corpora():
    for seed in range(4):
        rng = random.Random(seed)
        rules = sample_rules(rng, n_rules=1)
        corpus = generate_corpus(rules, n_subsets=6, corruption=0.4, seed=seed, light=True)
        report = run_pipeline(
            corpus.bundle_sources(), corpus.bias, PipelineConfig(seed=seed, max_retries=3)
        )
        best = report.aggregation.best
        if best.hypothesis.clauses:
            cov = coverage(best.background, best.hypothesis, best.examples)
            assert cov.covered_pos == best.examples.pos_set
            assert not cov.covered_neg
        post = coverage(best.background, report.final_hypothesis, best.examples)
        assert not post.covered_neg


def test_training_correct_after_every_accepted_step():
    corpus = generate_corpus(RULES, n_subsets=5, corruption=0.2, seed=9, light=True)
    outcomes = [validate_bundle(s, corpus.bias, 2) for s in corpus.bundle_sources()]
    subsets = [o.subset for o in outcomes if o.accepted]
    config = PipelineConfig(seed=9, max_retries=3)
    reliable, _ = check_subsets(subsets, corpus.bias, config)
    steps = []

    def spy(trial: int, state) -> None:
        cov = coverage(state.background, state.hypothesis, state.examples)
        assert cov.covered_pos == state.examples.pos_set
        assert not cov.covered_neg
        steps.append((trial, len(state.accepted_ids)))

    aggregate(reliable, corpus.bias, config, on_accept=spy)
    assert steps


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        PipelineConfig(support_threshold=0.0)
    with pytest.raises(ValueError):
        PipelineConfig(retry_fail_threshold=1.5)
    with pytest.raises(ValueError):
        PipelineConfig(max_retries=0)
    with pytest.raises(ValueError):
        PipelineConfig(jobs=0)
    with pytest.raises(ValueError):
        PipelineConfig(solver_timeout=0.0)
