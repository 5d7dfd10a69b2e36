"""Plant a rule set, learn it back, and print the two side by side.

Quick sanity run for the whole loop: corpus generation, the four pipeline
stages, and held-out evaluation.  With no corruption the learned rules are
the planted rules up to canonical renaming.

  python scripts/learn_planted.py --subsets 30 --corruption 0.0
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hornpipe.evalharness import Scenario, evaluate
from hornpipe.logic import print_program
from hornpipe.parsing import parse_rules
from hornpipe.pipeline import PipelineConfig, run_pipeline
from hornpipe.reporting import eval_summary, pipeline_summary
from hornpipe.synthgen import generate_corpus, generate_scenarios

DEFAULT_RULES = Path(__file__).resolve().parent.parent / "data" / "planted_rules.rules"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rules", type=Path, default=DEFAULT_RULES)
    parser.add_argument("--subsets", type=int, default=30)
    parser.add_argument("--corruption", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--scenarios", type=int, default=30)
    args = parser.parse_args(argv)

    rules = parse_rules(args.rules.read_text(encoding="utf-8"))
    corpus = generate_corpus(rules, args.subsets, args.corruption, seed=args.seed)
    report = run_pipeline(
        corpus.bundle_sources(), corpus.bias, PipelineConfig(seed=args.seed)
    )
    print(pipeline_summary(report))
    print("planted:")
    print(print_program(rules))
    print("learned:")
    print(print_program(report.final_hypothesis) or "% (empty)\n")

    scenarios = [
        Scenario(sid, background, examples, tags=tags)
        for sid, background, examples, tags in generate_scenarios(
            rules, args.scenarios, args.seed
        )
    ]
    print(eval_summary(evaluate(report.final_hypothesis, scenarios)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
