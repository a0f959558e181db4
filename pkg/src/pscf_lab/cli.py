"""Command-line interface: gen, train, eval, retrain, preserve, grid.

Training-style commands take a JSON config (echoed into every report) so a
run is fully reproducible from its artifacts; simple commands use flags. All
randomness flows from explicit seeds. Failures print a single machine-parsable
line ``pscf-lab: error: <category>: <message>`` and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import experiments, nn, preservation
from .embeddings import EmbeddingKind
from .errors import ConfigError, PscfLabError
from .experiments import LossMode, TrainConfig
from .profiles import generate_impartial_culture, save_profiles
from .rules import RuleId

_EMBEDDING_ALIASES = {
    "t": EmbeddingKind.TOURNAMENT,
    "wt": EmbeddingKind.WEIGHTED_TOURNAMENT,
    "rf": EmbeddingKind.RANK_FREQUENCY,
}


def _parse_rule(value: str) -> RuleId:
    try:
        return RuleId(value)
    except ValueError:
        raise ConfigError(
            f"unknown rule {value!r}; choose from {', '.join(r.value for r in RuleId)}"
        ) from None


def _parse_embedding(value: str) -> EmbeddingKind:
    if value in _EMBEDDING_ALIASES:
        return _EMBEDDING_ALIASES[value]
    try:
        return EmbeddingKind(value)
    except ValueError:
        raise ConfigError(
            f"unknown embedding {value!r}; choose from "
            f"{', '.join(e.value for e in EmbeddingKind)} (or t/wt/rf)"
        ) from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


_CONFIG_FIELD_PARSERS = {
    "rule": _parse_rule,
    "embedding": _parse_embedding,
    "loss_mode": lambda v: LossMode(v),
}
_TRAIN_FIELDS = {f.name for f in fields(TrainConfig)}
_PATH_KEYS = {"output_dir", "checkpoint", "dataset"}


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def _build_train_config(
    doc: dict,
    required: Sequence[str] = ("rule", "embedding"),
    defaults: Optional[TrainConfig] = None,
    extra_keys: Sequence[str] = (),
) -> tuple[TrainConfig, dict]:
    """Turn a JSON document into a TrainConfig plus resolved paths.

    Unknown keys are rejected; missing required keys are named in the error.
    """
    allowed = _TRAIN_FIELDS | _PATH_KEYS | set(extra_keys)
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r}")
    for key in required:
        if key not in doc:
            raise ConfigError(f"missing required key {key!r}")
    kwargs = {}
    for key, value in doc.items():
        if key in _TRAIN_FIELDS:
            parser = _CONFIG_FIELD_PARSERS.get(key)
            try:
                kwargs[key] = parser(value) if parser else value
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
    base = defaults if defaults is not None else TrainConfig()
    try:
        config = replace(base, **kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    paths = {k: Path(doc[k]).resolve() for k in _PATH_KEYS if k in doc}
    config.validate()
    return config, paths


def _write_run_outputs(out_dir: Path, report: experiments.ExperimentReport, model) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / "checkpoint.json"
    nn.save_model(ckpt, model)
    report.checkpoint_path = str(ckpt)
    report.save_json(out_dir / "report.json")
    report.save_curves_csv(out_dir / "curves.csv")
    (out_dir / "run.log").write_text(f"wall_clock_s={report.wall_clock_s}\n", encoding="ascii")


def cmd_gen(args) -> int:
    profiles = [
        generate_impartial_culture(args.m, args.n, experiments.derive_seed(args.seed, i))
        for i in range(args.count)
    ]
    save_profiles(args.out, profiles)
    print(f"wrote {len(profiles)} profiles to {args.out}")
    return 0


def cmd_train(args) -> int:
    doc = _load_json(args.config)
    config, paths = _build_train_config(doc)
    out_dir = paths.get("output_dir", Path.cwd() / "pscf_run")
    report, model = experiments.train(config)
    _write_run_outputs(out_dir, report, model)
    print(json.dumps(report.final, indent=2, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    model = nn.load_model(args.checkpoint)
    rule = _parse_rule(model.meta.get("rule") or "")
    embedding = _parse_embedding(model.meta.get("embedding") or "")
    metrics = experiments.evaluate(
        model,
        rule,
        embedding,
        int(model.meta["m"]),
        args.n,
        args.count,
        args.seed,
        participation=args.participation,
    )
    text = json.dumps(metrics, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="ascii")
    print(text)
    return 0


def cmd_retrain(args) -> int:
    model = nn.load_model(args.checkpoint)
    doc = _load_json(args.config)
    meta_defaults = experiments.retrain_config(
        rule=model.meta.get("rule") or RuleId.PLURALITY,
        embedding=model.meta.get("embedding") or EmbeddingKind.RANK_FREQUENCY,
    )
    meta_defaults = replace(meta_defaults, m=int(model.meta["m"]))
    config, paths = _build_train_config(doc, required=(), defaults=meta_defaults)
    out_dir = paths.get("output_dir", Path.cwd() / "pscf_retrain")
    report, retrained = experiments.retrain_participation(model, config)
    _write_run_outputs(out_dir, report, retrained)
    print(json.dumps(report.final, indent=2, sort_keys=True))
    return 0


def cmd_preserve(args) -> int:
    if args.verify_paper:
        verdicts = preservation.verify_paper_counterexamples(jobs=args.jobs)
        doc = {"verdicts": [v.to_json_dict() for v in verdicts]}
    else:
        for name in ("rule", "embedding", "m", "n"):
            if getattr(args, name) is None:
                raise ConfigError(f"missing required key {name!r} (or pass --verify-paper)")
        rule = _parse_rule(args.rule)
        embedding = _parse_embedding(args.embedding)
        exhaustive = preservation.multiset_profile_count(args.m, args.n) <= args.budget
        violation = preservation.search_counterexample(
            rule, embedding, args.m, args.n, budget=args.budget, jobs=args.jobs
        )
        doc = {
            "rule": rule.value,
            "embedding": embedding.value,
            "m": args.m,
            "n": args.n,
            "exhaustive": exhaustive,
            "violation": violation.to_json_dict() if violation else None,
        }
        if violation is None:
            doc["note"] = (
                "no violation at this size" if exhaustive else "no violation found within budget"
            )
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="ascii")
    print(text)
    return 0


def cmd_grid(args) -> int:
    doc = _load_json(args.config)
    grid_keys = ("rules", "embeddings", "cells", "master_seed")
    config, paths = _build_train_config(doc, required=(), extra_keys=grid_keys)
    cells = None
    if "cells" in doc:
        cells = [(_parse_rule(r), _parse_embedding(e)) for r, e in doc["cells"]]
    rules = [_parse_rule(r) for r in doc["rules"]] if "rules" in doc else None
    embeddings = [_parse_embedding(e) for e in doc["embeddings"]] if "embeddings" in doc else None
    out_dir = paths.get("output_dir", Path.cwd() / "pscf_grid")
    result = experiments.run_grid(
        config,
        master_seed=int(doc.get("master_seed", 0)),
        cells=cells,
        rules=rules,
        embeddings=embeddings,
        out_dir=out_dir,
        jobs=args.jobs,
    )
    print(result.summary_csv, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pscf-lab",
        description="Probabilistic social choice: rules, embeddings, preservation search, learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write random impartial-culture profiles to a file")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on fresh profiles")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--count", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--participation", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("retrain", help="retrain a checkpoint with the combined loss")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_retrain)

    p = sub.add_parser("preserve", help="search for preservation counterexamples")
    p.add_argument("--rule")
    p.add_argument("--embedding")
    p.add_argument("--m", type=_positive_int)
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--verify-paper", action="store_true")
    p.add_argument("--budget", type=_positive_int, default=preservation.DEFAULT_BUDGET)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_preserve)

    p = sub.add_parser("grid", help="train a grid of rule x embedding cells")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_grid)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PscfLabError as exc:
        print(f"pscf-lab: error: {exc.category}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
