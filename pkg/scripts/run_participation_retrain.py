#!/usr/bin/env python3
"""Retrain rule-trained checkpoints against the combined rule + participation loss.

Loads each checkpoint under --grid-dir (as written by run_rule_grid.py or the
`grid` CLI command), measures its pre-retraining participation loss on the
retraining test split, retrains on 900 nine-voter profiles for 200 epochs, and
prints a Table-5-style CSV: rule, embedding, participation loss, rule loss.
"""

import argparse
from pathlib import Path

from pscf_lab import nn
from pscf_lab.embeddings import EmbeddingKind
from pscf_lab.experiments import (
    dataset_seed,
    evaluate,
    retrain_config,
    retrain_participation,
)
from pscf_lab.rules import RuleId


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid-dir", default="runs/rule_grid")
    parser.add_argument("--out", default="runs/participation")
    parser.add_argument("--seed", type=int, default=2)
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--batch-size", type=int, default=8)
    args = parser.parse_args()

    out_root = Path(args.out)
    print("rule,embedding,pre_participation_loss,participation_loss,rule_loss")
    for checkpoint in sorted(Path(args.grid_dir).glob("*/checkpoint.json")):
        model = nn.load_model(checkpoint)
        rule = RuleId(model.meta["rule"])
        embedding = EmbeddingKind(model.meta["embedding"])
        config = retrain_config(
            rule, embedding, seed=args.seed, epochs=args.epochs, batch_size=args.batch_size
        )
        pre = evaluate(
            model, rule, embedding, config.m, config.n_train, config.test_profiles,
            seed=dataset_seed(config, "test"), participation=True,
        )
        report, retrained = retrain_participation(model, config)
        cell_dir = out_root / f"{rule.value}_{embedding.value}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        nn.save_model(cell_dir / "checkpoint.json", retrained)
        report.save_json(cell_dir / "report.json")
        report.save_curves_csv(cell_dir / "curves.csv")
        print(
            f"{rule.value},{embedding.value},{pre['participation_loss']!r},"
            f"{report.final['test_participation_loss']!r},{report.final['test_rule_loss']!r}"
        )


if __name__ == "__main__":
    main()
