"""Report serialization: line-delimited JSON records plus text summaries.

Structured reports are reproducible artifacts: every line is a JSON object
with a ``record`` tag, keys sorted, and no wall-clock values, so reruns
with identical inputs are byte-identical.  The only timestamps present are
the data's own subset timestamps.  Elapsed-time chatter belongs in the
human-readable summaries, which make no byte-level promises.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from .evalharness import EvalReport, HypothesisDiff
from .logic import print_clause
from .pipeline import PipelineConfig, PipelineReport

SCHEMA_VERSION = 1


def _line(record: str, **fields) -> str:
    return json.dumps({"record": record, **fields}, sort_keys=True)


def pipeline_report_lines(report: PipelineReport, config: PipelineConfig) -> list[str]:
    lines = [
        _line("schema", version=SCHEMA_VERSION, kind="pipeline"),
        _line("config", **asdict(config)),
    ]
    for v in report.validation:
        lines.append(
            _line(
                "validation",
                bundle_id=v.bundle_id,
                timestamp=v.timestamp,
                accepted=v.accepted,
                attempts_used=v.attempts_used,
                reasons=list(v.reasons),
            )
        )
    for c in report.subset_checks:
        lines.append(
            _line(
                "subset_check",
                subset_id=c.subset_id,
                outcome=c.outcome,
                reliable=c.reliable,
                clause_count=c.clause_count,
            )
        )
    agg = report.aggregation
    for t in agg.trials:
        lines.append(
            _line(
                "trial",
                trial=t.trial,
                order=list(t.order),
                accepted_count=t.accepted_count,
                fail_frac=t.fail_frac,
                success=t.success,
            )
        )
    for d in agg.best.trial_log:
        lines.append(
            _line(
                "decision",
                trial=d.trial,
                subset_id=d.subset_id,
                action=d.action,
                solver_outcome=d.solver_outcome,
                removed_positives=list(d.removed_positives),
                removed_negatives=list(d.removed_negatives),
            )
        )
    lines.append(
        _line(
            "aggregation",
            best_trial=agg.best_trial,
            early_stopped=agg.early_stopped,
            accepted_ids=list(agg.best.accepted_ids),
            pre_prune_rule_count=report.pre_prune_rule_count,
        )
    )
    for r in report.pruning:
        lines.append(_line("rule_support", rule=r.rule, support=r.support, kept=r.kept))
    lines.append(
        _line(
            "final",
            emptied_at=report.emptied_at,
            rules=[print_clause(c) for c in report.final_hypothesis.rules()],
        )
    )
    return lines


def eval_report_lines(report: EvalReport) -> list[str]:
    lines = [_line("schema", version=SCHEMA_VERSION, kind="eval")]
    for s in report.scenarios:
        lines.append(
            _line(
                "scenario",
                scenario_id=s.scenario_id,
                correct=s.correct,
                tags=list(s.tags),
            )
        )
        for v in s.verdicts:
            lines.append(
                _line(
                    "verdict",
                    scenario_id=v.scenario_id,
                    atom=v.atom,
                    label=v.label,
                    predicted=v.predicted,
                    kind=v.kind,
                )
            )
    lines.append(_line("metrics", **asdict(report.metrics)))
    return lines


def diff_report_lines(diff: HypothesisDiff) -> list[str]:
    lines = [_line("schema", version=SCHEMA_VERSION, kind="diff")]
    for d in diff.disagreements:
        lines.append(
            _line(
                "disagreement",
                scenario_id=d.scenario_id,
                atom=d.atom,
                label=d.label,
                first_predicted=d.first_predicted,
                second_predicted=d.second_predicted,
            )
        )
    lines.append(_line("metrics_first", **asdict(diff.first)))
    lines.append(_line("metrics_second", **asdict(diff.second)))
    lines.append(_line("metrics_delta", **diff.metric_deltas))
    return lines


def write_report_lines(path: Path, lines: list[str]) -> None:
    Path(path).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")


# ------------------------------------------------------------- text summaries


def pipeline_summary(report: PipelineReport, elapsed: float | None = None) -> str:
    v_total = len(report.validation)
    v_ok = sum(1 for v in report.validation if v.accepted)
    reliable = sum(1 for c in report.subset_checks if c.reliable)
    agg = report.aggregation
    out = [
        f"validation: {v_ok}/{v_total} bundles accepted",
        f"subset checks: {reliable}/{len(report.subset_checks)} reliable",
    ]
    for t in agg.trials:
        out.append(
            f"trial {t.trial}: accepted {t.accepted_count}, "
            f"fail_frac {t.fail_frac:.3f}, success {t.success}"
        )
    out.append(
        f"aggregation: best trial {agg.best_trial}, "
        f"{len(agg.best.accepted_ids)} subsets, "
        f"{report.pre_prune_rule_count} rules pre-prune"
        + (", stopped early" if agg.early_stopped else "")
    )
    kept = sum(1 for r in report.pruning if r.kept)
    out.append(f"pruning: kept {kept}/{len(report.pruning)} rules")
    for r in report.pruning:
        mark = "keep" if r.kept else "drop"
        out.append(f"  [{mark}] support {r.support:4d}  {r.rule}")
    if report.emptied_at:
        out.append(f"pipeline emptied at: {report.emptied_at}")
    if elapsed is not None:
        out.append(f"elapsed: {elapsed:.2f}s")
    return "\n".join(out) + "\n"


def eval_summary(report: EvalReport, elapsed: float | None = None) -> str:
    m = report.metrics
    out = [
        f"scenarios: {report.correct_count}/{len(report.scenarios)} fully correct",
        f"counts: tp={m.tp} fp={m.fp} fn={m.fn} tn={m.tn}",
        f"accuracy  {m.accuracy:.3f}" + ("  (degenerate)" if m.degenerate_accuracy else ""),
        f"precision {m.precision:.3f}" + ("  (degenerate)" if m.degenerate_precision else ""),
        f"recall    {m.recall:.3f}" + ("  (degenerate)" if m.degenerate_recall else ""),
        f"f1        {m.f1:.3f}",
    ]
    wrong = [s for s in report.scenarios if not s.correct]
    for s in wrong:
        bad = [v for v in s.verdicts if v.kind in ("fp", "fn")]
        out.append(f"  {s.scenario_id}: " + ", ".join(f"{v.kind} {v.atom}" for v in bad))
    if elapsed is not None:
        out.append(f"elapsed: {elapsed:.2f}s")
    return "\n".join(out) + "\n"


def diff_summary(diff: HypothesisDiff) -> str:
    if diff.empty:
        out = ["no verdict disagreements"]
    else:
        out = [f"{len(diff.disagreements)} verdict disagreement(s)"]
        for d in diff.disagreements:
            out.append(
                f"  {d.scenario_id} {d.label} {d.atom}: "
                f"{d.first_predicted} -> {d.second_predicted}"
            )
    out.append(
        "deltas: "
        + "  ".join(f"{k} {v:+.3f}" for k, v in diff.metric_deltas.items())
    )
    return "\n".join(out) + "\n"
