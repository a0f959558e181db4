#!/usr/bin/env python3
"""Re-check the published preservation counterexamples and sweep small sizes.

Prints a verdict per published pair (with replacement pairs where the printed
ones fail), then the exhaustive rule x embedding sweep at (m=3, n=3).
"""

import argparse

from pscf_lab.embeddings import EmbeddingKind
from pscf_lab.preservation import search_counterexample, verify_paper_counterexamples
from pscf_lab.rules import RuleId


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=3)
    parser.add_argument("--n", type=int, default=3)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    for v in verify_paper_counterexamples(jobs=args.jobs):
        line = f"{v.label:40s} {'valid' if v.valid else 'INVALID'}"
        if v.replacement is not None:
            r = v.replacement
            line += f"  replacement: {r.profile_a} vs {r.profile_b}"
        elif v.replacement_searched:
            line += "  no replacement at this size"
        print(line)

    print(f"\nexhaustive sweep at (m={args.m}, n={args.n}):")
    for rule in RuleId:
        for emb in EmbeddingKind:
            hit = search_counterexample(rule, emb, args.m, args.n, jobs=args.jobs)
            mark = "x" if hit else "preserved at this size"
            print(f"  {rule.value:15s} {emb.value:20s} {mark}")


if __name__ == "__main__":
    main()
