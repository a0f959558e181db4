"""Probabilistic social choice lab: rules, embeddings, preservation, learning."""

from .embeddings import EmbeddingKind, embed, feature_vector, normalize, to_feature_vector
from .experiments import LossMode, TrainConfig, build_dataset, evaluate, retrain_participation, run_grid, train
from .losses import l1_loss, participation_loss, sd_loss, stochastically_dominates
from .preservation import check_pair, search_counterexample, verify_paper_counterexamples
from .profiles import Ballot, Profile, enumerate_profiles, generate_impartial_culture, rank_of, remove_voter
from .rules import Lottery, RuleId, apply_rule, condorcet_winner, uniform_lottery

__all__ = [
    "Ballot",
    "EmbeddingKind",
    "Lottery",
    "LossMode",
    "Profile",
    "RuleId",
    "TrainConfig",
    "apply_rule",
    "build_dataset",
    "check_pair",
    "condorcet_winner",
    "embed",
    "enumerate_profiles",
    "evaluate",
    "feature_vector",
    "generate_impartial_culture",
    "l1_loss",
    "normalize",
    "participation_loss",
    "rank_of",
    "remove_voter",
    "retrain_participation",
    "run_grid",
    "sd_loss",
    "search_counterexample",
    "stochastically_dominates",
    "to_feature_vector",
    "train",
    "uniform_lottery",
    "verify_paper_counterexamples",
]
