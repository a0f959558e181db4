"""Experiment orchestration: dataset building, training, evaluation, grids.

Experiments are a pure function of their config: every random choice flows
from the config seed through documented counter-based streams, so repeated
runs reproduce loss curves and summary files byte for byte. Wall-clock timing
is kept out of serialized reports (it belongs in a separate log) precisely to
keep outputs idempotent.
"""

from __future__ import annotations

import enum
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import nn
from .embeddings import EmbeddingKind, feature_vector
from .errors import ConfigError, VoterError
from .preservation import max_worker_threads
from .profiles import PRNG_NAME, Profile, generate_impartial_culture
from .rules import RuleId, apply_rule, is_lottery

# Seed streams split off a config seed (counter-based, see derive_seed).
_STREAM_TRAIN, _STREAM_VAL, _STREAM_TEST, _STREAM_INIT, _STREAM_SHUFFLE = range(5)


def derive_seed(master: int, stream: int) -> int:
    """Stream ``stream`` of ``master``: independent, reproducible, documented
    as SeedSequence([master, stream])."""
    return int(np.random.SeedSequence([int(master), int(stream)]).generate_state(1, np.uint64)[0])


def dataset_seed(config: "TrainConfig", split: str) -> int:
    """Seed of the profile stream a training run uses for one of its splits."""
    streams = {"train": _STREAM_TRAIN, "val": _STREAM_VAL, "test": _STREAM_TEST}
    return derive_seed(config.seed, streams[split])


class LossMode(str, enum.Enum):
    RULE_ONLY = "rule_only"
    RULE_PLUS_PARTICIPATION = "rule_plus_participation"


@dataclass(frozen=True)
class TrainConfig:
    rule: RuleId = RuleId.PLURALITY
    embedding: EmbeddingKind = EmbeddingKind.RANK_FREQUENCY
    m: int = 7
    n_train: int = 29
    train_profiles: int = 4800
    val_profiles: int = 480
    test_profiles: int = 1000
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0
    initial_lr: float = 1e-3
    patience: int = 10
    factor: float = 0.5
    min_lr: float = 1e-5
    loss_mode: LossMode = LossMode.RULE_ONLY
    hidden_width: int = 120
    hidden_layers: int = 5

    def validate(self) -> None:
        if self.m < 1 or self.n_train < 1:
            raise ConfigError(f"invalid sizes m={self.m}, n_train={self.n_train}")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if not 1 <= self.batch_size <= self.train_profiles:
            raise ConfigError(
                f"batch_size {self.batch_size} must be in [1, train_profiles={self.train_profiles}]"
            )
        if min(self.train_profiles, self.val_profiles, self.test_profiles) < 1:
            raise ConfigError("profile counts must be positive")
        if self.loss_mode is LossMode.RULE_PLUS_PARTICIPATION and self.n_train < 2:
            raise ConfigError("participation training needs at least two voters")

    def to_json_dict(self) -> dict:
        doc = asdict(self)
        doc["rule"] = self.rule.value
        doc["embedding"] = self.embedding.value
        doc["loss_mode"] = self.loss_mode.value
        return doc


def retrain_config(
    rule: RuleId, embedding: EmbeddingKind, seed: int = 0, **overrides
) -> TrainConfig:
    """Participation-retraining defaults: 900 nine-voter profiles, 200 epochs,
    combined loss, 100 validation and 160 test profiles."""
    base = TrainConfig(
        rule=RuleId(rule),
        embedding=EmbeddingKind(embedding),
        m=7,
        n_train=9,
        train_profiles=900,
        val_profiles=100,
        test_profiles=160,
        epochs=200,
        seed=seed,
        loss_mode=LossMode.RULE_PLUS_PARTICIPATION,
    )
    return replace(base, **overrides) if overrides else base


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    features: np.ndarray        # (N, m*m) normalized, flattened embeddings
    targets: np.ndarray         # (N, m) exact rule lotteries
    profiles: list[Profile]     # retained for participation counterfactuals


def build_dataset(
    rule: RuleId,
    embedding: EmbeddingKind,
    m: int,
    n: int,
    count: int,
    seed: int,
) -> Dataset:
    """``count`` impartial-culture profiles with exact-rule target lotteries."""
    rng = np.random.default_rng(seed)
    profiles = [generate_impartial_culture(m, n, rng) for _ in range(count)]
    features = np.stack([feature_vector(p, embedding) for p in profiles])
    targets = np.stack([apply_rule(rule, p) for p in profiles])
    assert all(is_lottery(t) for t in targets)
    return Dataset(features, targets, profiles)


@dataclass
class AbstentionData:
    """Per-voter counterfactual inputs for the participation loss."""

    features: np.ndarray  # (N, n, m*m) embeddings of each one-voter-removed profile
    rankings: np.ndarray  # (N, n, m) each voter's own ballot (the dominance ordering)


def abstention_features(profile: Profile, kind: EmbeddingKind) -> np.ndarray:
    """(n, m*m) normalized features of the n profiles with one voter removed.

    Computed incrementally by subtracting each voter's contribution from the
    full-profile counts; normalization uses the reduced voter count n - 1.
    """
    kind = EmbeddingKind(kind)
    n, m = profile.num_voters, profile.num_candidates
    if n < 2:
        raise VoterError("participation counterfactuals need at least two voters")
    pos = profile.position_array
    if kind is EmbeddingKind.RANK_FREQUENCY:
        onehot = np.zeros((n, m, m))
        onehot[np.arange(n)[:, None], np.arange(m)[None, :], pos] = 1.0
        reduced = onehot.sum(axis=0)[None, :, :] - onehot
        feats = reduced / (n - 1)
    else:
        per_voter = (pos[:, :, None] < pos[:, None, :]).astype(np.int64)
        reduced = per_voter.sum(axis=0)[None, :, :] - per_voter
        if kind is EmbeddingKind.WEIGHTED_TOURNAMENT:
            feats = reduced / (n - 1)
        else:
            feats = np.full(reduced.shape, 0.5)
            feats[2 * reduced > n - 1] = 1.0
            feats[2 * reduced < n - 1] = 0.0
            feats[:, np.arange(m), np.arange(m)] = 0.5
    return feats.reshape(n, m * m)


def build_abstention_data(profiles: Sequence[Profile], kind: EmbeddingKind) -> AbstentionData:
    feats = np.stack([abstention_features(p, kind) for p in profiles])
    ranks = np.stack([p.ranking_array for p in profiles])
    return AbstentionData(feats, ranks)


# ---------------------------------------------------------------------------
# Vectorized participation loss (matches losses.participation_loss exactly)
# ---------------------------------------------------------------------------


def participation_terms(
    truthful: np.ndarray, abstained: np.ndarray, rankings: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-profile participation losses plus argmax bookkeeping.

    ``truthful`` is (B, m), ``abstained`` is (B, n, m), ``rankings`` is the
    (B, n, m) array of voter ballots. Returns (losses, worst_voter, worst_k);
    ties pick the lowest voter index and shortest prefix, which also fixes the
    subgradient used during training.
    """
    B, n, m = rankings.shape
    q_perm = np.take_along_axis(np.broadcast_to(truthful[:, None, :], (B, n, m)), rankings, axis=2)
    p_perm = np.take_along_axis(abstained, rankings, axis=2)
    gaps = np.cumsum(q_perm, axis=2) - np.cumsum(p_perm, axis=2)
    per_voter = gaps.max(axis=2)
    worst_voter = per_voter.argmax(axis=1)
    rows = np.arange(B)
    worst_k = gaps[rows, worst_voter].argmax(axis=1)
    losses = np.maximum(per_voter[rows, worst_voter], 0.0)
    return losses, worst_voter, worst_k


def _batched_predict(model: nn.MlpModel, feats: np.ndarray, chunk: int = 4096) -> np.ndarray:
    outs = [nn.predict(model, feats[i : i + chunk]) for i in range(0, len(feats), chunk)]
    return np.concatenate(outs, axis=0)


def _mean_rule_loss(model: nn.MlpModel, dataset: Dataset) -> float:
    probs = _batched_predict(model, dataset.features)
    return float(np.abs(probs - dataset.targets).sum(axis=1).mean())


def _mean_participation_loss(model: nn.MlpModel, dataset: Dataset, abst: AbstentionData) -> float:
    N, n, mm = abst.features.shape
    truthful = _batched_predict(model, dataset.features)
    abstained = _batched_predict(model, abst.features.reshape(N * n, mm)).reshape(N, n, -1)
    losses, _, _ = participation_terms(truthful, abstained, abst.rankings)
    return float(losses.mean())


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class EpochRow:
    epoch: int
    train_loss: float
    val_rule_loss: float
    val_participation_loss: Optional[float] = None
    learning_rate: Optional[float] = None


@dataclass
class ExperimentReport:
    config: dict
    prng: str
    epochs: list[EpochRow]
    final: dict
    checkpoint_path: Optional[str] = None
    # Timing never enters serialized outputs; the CLI logs it separately.
    wall_clock_s: Optional[float] = None

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "prng": self.prng,
            "epochs": [
                {
                    "epoch": r.epoch,
                    "train_loss": r.train_loss,
                    "val_rule_loss": r.val_rule_loss,
                    "val_participation_loss": r.val_participation_loss,
                    "learning_rate": r.learning_rate,
                }
                for r in self.epochs
            ],
            "final": self.final,
            "checkpoint_path": self.checkpoint_path,
        }

    def curves_csv(self) -> str:
        lines = ["epoch,train_loss,val_rule_loss,val_participation_loss"]
        for r in self.epochs:
            part = "" if r.val_participation_loss is None else repr(r.val_participation_loss)
            lines.append(f"{r.epoch},{r.train_loss!r},{r.val_rule_loss!r},{part}")
        return "\n".join(lines) + "\n"

    def save_json(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def save_curves_csv(self, path) -> None:
        Path(path).write_text(self.curves_csv(), encoding="ascii")


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train(
    config: TrainConfig, initial_model: Optional[nn.MlpModel] = None
) -> tuple[ExperimentReport, nn.MlpModel]:
    """Mini-batch Adam training of an MLP to imitate a rule on embedded profiles.

    In combined mode the batch loss adds the participation term; its gradient
    flows through the truthful output and, per profile, through the single
    worst abstention output. The schedule monitors the epoch validation metric
    (rule loss, plus participation loss in combined mode).
    """
    config.validate()
    started = time.perf_counter()
    combined = config.loss_mode is LossMode.RULE_PLUS_PARTICIPATION

    train_ds = build_dataset(
        config.rule, config.embedding, config.m, config.n_train,
        config.train_profiles, dataset_seed(config, "train"),
    )
    val_ds = build_dataset(
        config.rule, config.embedding, config.m, config.n_train,
        config.val_profiles, dataset_seed(config, "val"),
    )
    test_ds = build_dataset(
        config.rule, config.embedding, config.m, config.n_train,
        config.test_profiles, dataset_seed(config, "test"),
    )
    if combined:
        train_abst = build_abstention_data(train_ds.profiles, config.embedding)
        val_abst = build_abstention_data(val_ds.profiles, config.embedding)
        test_abst = build_abstention_data(test_ds.profiles, config.embedding)

    meta = {
        "rule": config.rule.value,
        "embedding": config.embedding.value,
        "m": config.m,
        "seed": config.seed,
    }
    if initial_model is None:
        model = nn.init_model(
            config.m, derive_seed(config.seed, _STREAM_INIT),
            config.hidden_width, config.hidden_layers, meta=meta,
        )
    else:
        model = nn.MlpModel(
            initial_model.layer_dims,
            [w.copy() for w in initial_model.weights],
            [b.copy() for b in initial_model.biases],
            {**initial_model.meta, **meta},
        )
    adam = nn.init_adam(model)
    sched = nn.LrSchedule(
        current_lr=config.initial_lr,
        initial_lr=config.initial_lr,
        patience=config.patience,
        factor=config.factor,
        min_lr=config.min_lr,
    )
    shuffle_rng = np.random.default_rng(derive_seed(config.seed, _STREAM_SHUFFLE))

    m = config.m
    rows: list[EpochRow] = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(config.train_profiles)
        epoch_total = 0.0
        for start in range(0, config.train_profiles, config.batch_size):
            idx = order[start : start + config.batch_size]
            bsz = len(idx)
            feats = train_ds.features[idx]
            targets = train_ds.targets[idx]
            if combined:
                abst_feats = train_abst.features[idx]
                ranks = train_abst.rankings[idx]
                n_voters = abst_feats.shape[1]
                stacked = np.concatenate(
                    [feats, abst_feats.reshape(bsz * n_voters, -1)], axis=0
                )
                probs, cache = nn.forward(model, stacked)
                truthful = probs[:bsz]
                abstained = probs[bsz:].reshape(bsz, n_voters, m)
                part_losses, worst_voter, worst_k = participation_terms(
                    truthful, abstained, ranks
                )
                epoch_total += float(np.abs(truthful - targets).sum() + part_losses.sum())
                grad_truthful = np.sign(truthful - targets) / bsz
                grad_abst = np.zeros_like(abstained)
                for j in np.flatnonzero(part_losses > 0.0):
                    prefix = ranks[j, worst_voter[j], : worst_k[j] + 1]
                    grad_truthful[j, prefix] += 1.0 / bsz
                    grad_abst[j, worst_voter[j], prefix] -= 1.0 / bsz
                grad_out = np.concatenate(
                    [grad_truthful, grad_abst.reshape(bsz * n_voters, m)], axis=0
                )
            else:
                probs, cache = nn.forward(model, feats)
                epoch_total += float(np.abs(probs - targets).sum())
                grad_out = np.sign(probs - targets) / bsz
            grads = nn.backward(model, cache, grad_out)
            nn.adam_step(model, grads, adam, sched.current_lr)

        val_rule = _mean_rule_loss(model, val_ds)
        val_part = (
            _mean_participation_loss(model, val_ds, val_abst) if combined else None
        )
        metric = val_rule + (val_part or 0.0)
        epoch_lr = sched.current_lr
        sched = nn.schedule_update(sched, metric)
        rows.append(
            EpochRow(epoch, epoch_total / config.train_profiles, val_rule, val_part, epoch_lr)
        )

    final = {"test_rule_loss": _mean_rule_loss(model, test_ds)}
    if combined:
        final["test_participation_loss"] = _mean_participation_loss(model, test_ds, test_abst)
    model.meta["epoch"] = int(model.meta.get("epoch", 0)) + config.epochs
    report = ExperimentReport(
        config=config.to_json_dict(),
        prng=PRNG_NAME,
        epochs=rows,
        final=final,
        wall_clock_s=time.perf_counter() - started,
    )
    return report, model


def evaluate(
    model: nn.MlpModel,
    rule: RuleId,
    embedding: EmbeddingKind,
    m: int,
    n: int,
    count: int,
    seed: int,
    participation: bool = False,
) -> dict:
    """Mean rule loss of ``model`` on ``count`` fresh profiles with ``n`` voters.

    The embedding keeps the input width at m*m for any voter count, so a model
    trained at one n evaluates unchanged at another. With ``participation``
    the mean per-profile worst-voter dominance loss is included (needs n >= 2).
    """
    dataset = build_dataset(rule, embedding, m, n, count, seed)
    metrics = {"rule_loss": _mean_rule_loss(model, dataset)}
    if participation:
        abst = build_abstention_data(dataset.profiles, embedding)
        metrics["participation_loss"] = _mean_participation_loss(model, dataset, abst)
    return metrics


def retrain_participation(
    model: nn.MlpModel, config: TrainConfig
) -> tuple[ExperimentReport, nn.MlpModel]:
    """Continue training a rule-trained checkpoint with the combined loss."""
    if config.loss_mode is not LossMode.RULE_PLUS_PARTICIPATION:
        raise ConfigError("retraining requires loss_mode=rule_plus_participation")
    for key, expect in (("rule", config.rule.value), ("embedding", config.embedding.value), ("m", config.m)):
        got = model.meta.get(key)
        if got != expect:
            raise ConfigError(f"checkpoint {key}={got!r} does not match config {key}={expect!r}")
    return train(config, initial_model=model)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass
class CellResult:
    rule: RuleId
    embedding: EmbeddingKind
    config: TrainConfig
    report: ExperimentReport
    model: nn.MlpModel


@dataclass
class GridResult:
    cells: list[CellResult]
    summary_csv: str


def _run_cell(args: tuple[TrainConfig, RuleId, EmbeddingKind, int]) -> CellResult:
    template, rule, embedding, seed = args
    config = replace(template, rule=rule, embedding=embedding, seed=seed)
    report, model = train(config)
    return CellResult(rule, embedding, config, report, model)


def summary_csv(
    cells: Sequence[CellResult],
    rules: Sequence[RuleId],
    embeddings: Sequence[EmbeddingKind],
) -> str:
    """Rows = rules, columns = embeddings, entries = final test rule loss."""
    values = {
        (c.rule, c.embedding): c.report.final["test_rule_loss"] for c in cells
    }
    lines = ["rule," + ",".join(e.value for e in embeddings)]
    for rule in rules:
        row = [rule.value]
        for emb in embeddings:
            v = values.get((rule, emb))
            row.append("" if v is None else repr(v))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def run_grid(
    template: TrainConfig,
    master_seed: int,
    cells: Optional[Sequence[tuple[RuleId, EmbeddingKind]]] = None,
    rules: Optional[Sequence[RuleId]] = None,
    embeddings: Optional[Sequence[EmbeddingKind]] = None,
    out_dir=None,
    jobs: int = 1,
) -> GridResult:
    """Train one model per requested (rule, embedding) cell.

    Cells may be given explicitly or as a rules x embeddings product; each
    gets an independent seed derived from ``master_seed`` by cell index. With
    ``jobs`` > 1 cells run as parallel processes (capped by PSCF_LAB_THREADS).
    When ``out_dir`` is set, each cell writes checkpoint/report/curves into
    its own subdirectory, timing goes to a run.log, and the summary CSV is
    written at the top level.
    """
    if cells is None:
        if not rules or not embeddings:
            raise ConfigError("run_grid needs explicit cells or both rules and embeddings")
        cells = [(r, e) for r in rules for e in embeddings]
    cells = [(RuleId(r), EmbeddingKind(e)) for r, e in cells]
    if rules is None:
        rules = list(dict.fromkeys(r for r, _ in cells))
    if embeddings is None:
        embeddings = list(dict.fromkeys(e for _, e in cells))

    tasks = [
        (template, r, e, derive_seed(master_seed, i)) for i, (r, e) in enumerate(cells)
    ]
    workers = max_worker_threads(jobs)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]

    csv_text = summary_csv(results, rules, embeddings)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for cell in results:
            cell_dir = out / f"{cell.rule.value}_{cell.embedding.value}"
            cell_dir.mkdir(parents=True, exist_ok=True)
            ckpt = cell_dir / "checkpoint.json"
            nn.save_model(ckpt, cell.model)
            cell.report.checkpoint_path = str(ckpt)
            cell.report.save_json(cell_dir / "report.json")
            cell.report.save_curves_csv(cell_dir / "curves.csv")
            (cell_dir / "run.log").write_text(
                f"wall_clock_s={cell.report.wall_clock_s}\n", encoding="ascii"
            )
        (out / "summary.csv").write_text(csv_text, encoding="ascii")
    return GridResult(results, csv_text)
