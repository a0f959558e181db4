#!/usr/bin/env python3
"""Train the full rules x embeddings grid at desk scale and print the summary.

Writes per-cell checkpoints, reports, and loss curves under --out. A full
21-cell grid takes a couple of hours on a laptop CPU; use --rules/--embeddings
to run a slice, or --jobs to run cells in parallel.
"""

import argparse

from pscf_lab.cli import _parse_embedding, _parse_rule
from pscf_lab.embeddings import EmbeddingKind
from pscf_lab.experiments import TrainConfig, run_grid
from pscf_lab.rules import RuleId


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/rule_grid")
    parser.add_argument("--master-seed", type=int, default=1)
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--train-profiles", type=int, default=4800)
    parser.add_argument("--rules", nargs="*", default=[r.value for r in RuleId])
    parser.add_argument("--embeddings", nargs="*", default=[e.value for e in EmbeddingKind])
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    template = TrainConfig(epochs=args.epochs, train_profiles=args.train_profiles)
    result = run_grid(
        template,
        master_seed=args.master_seed,
        rules=[_parse_rule(r) for r in args.rules],
        embeddings=[_parse_embedding(e) for e in args.embeddings],
        out_dir=args.out,
        jobs=args.jobs,
    )
    print(result.summary_csv, end="")


if __name__ == "__main__":
    main()
