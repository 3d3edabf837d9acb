"""Bagging, vote-frequency posteriors, entropy, and threshold rejection.

An ensemble of M base classifiers is trained on bootstrap replicates of
the (standardized) training data. At prediction time the dispersion of
the per-learner decisions, summarized as the entropy of the vote
distribution, estimates how much the ensemble actually knows about the
input; predictions whose entropy exceeds a threshold are rejected.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Dataset
from .learners import LearnerConfig, TrainedLearner, train

HARD_VOTE = "hard_vote"
SOFT_AVERAGE = "soft_average"


@dataclass(frozen=True)
class EnsembleConfig:
    base: LearnerConfig = field(default_factory=LearnerConfig)
    m: int = 25
    master_seed: int = 0
    posterior_mode: str = HARD_VOTE
    entropy_log_base: float = 2.0        # 2.0 or math.e

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("ensemble size m must be >= 1")
        if self.posterior_mode not in (HARD_VOTE, SOFT_AVERAGE):
            raise ValueError(f"unknown posterior_mode {self.posterior_mode!r}")
        if self.entropy_log_base not in (2.0, math.e):
            raise ValueError("entropy_log_base must be 2 or e")


@dataclass(frozen=True)
class Standardizer:
    """Per-feature training mean and standard deviation, shared by all
    ensemble members. Zero-variance features keep sigma = 1."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


def child_seeds(master_seed: int, index: int) -> tuple[int, int]:
    """Derive (bootstrap seed, learner seed) for ensemble member ``index``.

    Uses a SeedSequence keyed on (master_seed, index) so results do not
    depend on the order or parallelism in which members are trained.
    """
    state = np.random.SeedSequence([master_seed, index]).generate_state(
        2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def bootstrap_indices(master_seed: int, index: int, n: int) -> np.ndarray:
    """Sample-with-replacement indices for member ``index``'s replicate."""
    boot_seed, _ = child_seeds(master_seed, index)
    return np.random.default_rng(boot_seed).integers(0, n, size=n)


@dataclass(frozen=True)
class Prediction:
    vote_distribution: np.ndarray        # over n_classes, sums to 1
    per_learner_labels: tuple[int, ...]
    entropy: float
    label: int


class Decision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class Verdict:
    prediction: Prediction
    decision: Decision
    threshold_used: float

    @property
    def label(self) -> int | None:
        return self.prediction.label if self.decision is Decision.ACCEPT else None


@dataclass(frozen=True)
class EnsembleModel:
    learners: tuple[TrainedLearner, ...]
    standardizer: Standardizer
    config: EnsembleConfig
    n_classes: int
    class_names: tuple[str, ...] | None = None

    @property
    def n_features(self) -> int:
        return self.standardizer.mean.shape[0]

    def summary(self) -> dict:
        kinds = [type(l).__name__ for l in self.learners]
        return {
            "m": len(self.learners),
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "posterior_mode": self.config.posterior_mode,
            "learner_kinds": sorted(set(kinds)),
            "n_not_converged": sum(1 for l in self.learners if not l.converged),
        }


def fit(config: EnsembleConfig, data: Dataset, n_workers: int = 1) -> EnsembleModel:
    """Train M learners on bootstrap replicates of the standardized data.

    The result is identical for any ``n_workers``: every member's replicate
    and learner seed derive only from (master_seed, member index).
    """
    if len(data) == 0:
        raise ValueError("cannot fit an ensemble on an empty dataset")
    if not data.fully_labeled:
        raise ValueError("training data contains unlabeled samples")

    standardizer = Standardizer.fit(data.x)
    scaled = Dataset(x=standardizer.transform(data.x), y=data.y,
                     app_ids=data.app_ids, n_classes=data.n_classes,
                     class_names=data.class_names)
    n = len(scaled)

    def train_member(i: int) -> TrainedLearner:
        idx = bootstrap_indices(config.master_seed, i, n)
        _, learner_seed = child_seeds(config.master_seed, i)
        member_config = replace(config.base, seed=learner_seed)
        return train(member_config, scaled.subset(idx))

    if n_workers <= 1:
        learners = [train_member(i) for i in range(config.m)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            learners = list(pool.map(train_member, range(config.m)))

    return EnsembleModel(learners=tuple(learners), standardizer=standardizer,
                         config=config, n_classes=data.n_classes,
                         class_names=data.class_names)


def entropy_of(dist, log_base: float = 2.0) -> float:
    """Shannon entropy of a probability vector, with 0*log(0) = 0.

    The result is clamped to [0, log_base(K)] so downstream threshold
    comparisons never see negative-zero or rounding overshoot.
    """
    p = np.asarray(dist, dtype=np.float64)
    if np.any(p < 0):
        raise ValueError("probability vector has a negative entry")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"probability vector sums to {total}, not 1")
    nz = p[p > 0]
    h = -float(np.sum(nz * (np.log2(nz) if log_base == 2.0 else np.log(nz))))
    hmax = math.log(p.shape[0], log_base)
    return min(max(h, 0.0), hmax) + 0.0   # +0.0 normalizes -0.0


def predict(model: EnsembleModel, x) -> Prediction:
    """Vote distribution, entropy, and argmax label for one input."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(
            f"expected {model.n_features} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    z = (x - model.standardizer.mean) / model.standardizer.std

    labels = tuple(l.predict_label(z) for l in model.learners)
    m = len(model.learners)
    if model.config.posterior_mode == HARD_VOTE:
        dist = np.bincount(np.asarray(labels), minlength=model.n_classes) / m
    else:
        dist = np.mean([l.predict_proba(z) for l in model.learners], axis=0)
    h = entropy_of(dist, model.config.entropy_log_base)
    return Prediction(vote_distribution=dist, per_learner_labels=labels,
                      entropy=h, label=int(np.argmax(dist)))


def gate(model: EnsembleModel, x, threshold: float) -> Verdict:
    """Accept the ensemble's label unless its entropy strictly exceeds
    ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    pred = predict(model, x)
    decision = Decision.REJECT if pred.entropy > threshold else Decision.ACCEPT
    return Verdict(prediction=pred, decision=decision, threshold_used=threshold)
