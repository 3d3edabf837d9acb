"""Shared domain types: samples, datasets, and classification metrics.

Labels are dense integer codes in [0, n_classes). A dataset may carry a
side mapping of class names (e.g. "benign"/"malware") for display only;
all computation happens on the integer codes. Unlabeled samples (unknown
workloads) carry the sentinel ``UNLABELED``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

UNLABELED = -1


@dataclass(frozen=True)
class Sample:
    """One feature vector with its application identity and optional label."""

    features: np.ndarray
    app_id: str
    label: int | None = None

    def __post_init__(self):
        if not self.app_id:
            raise ValueError("app_id must be non-empty")


@dataclass(frozen=True)
class Dataset:
    """A column-major view of samples: features, labels, app identities.

    ``y`` uses ``UNLABELED`` (-1) for samples without a label. Instances
    are immutable after construction and safe to share across workers.
    """

    x: np.ndarray                      # (n, d) float64
    y: np.ndarray                      # (n,) int64, UNLABELED where missing
    app_ids: tuple[str, ...]
    n_classes: int
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError("labels and features disagree on sample count")
        if len(self.app_ids) != x.shape[0]:
            raise ValueError("app_ids and features disagree on sample count")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        labeled = y[y != UNLABELED]
        if labeled.size and (labeled.min() < 0 or labeled.max() >= self.n_classes):
            raise ValueError(f"labels out of range [0, {self.n_classes})")
        if any(not a for a in self.app_ids):
            raise ValueError("app_id must be non-empty")
        if self.class_names is not None and len(self.class_names) != self.n_classes:
            raise ValueError("class_names length must equal n_classes")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def fully_labeled(self) -> bool:
        return bool(np.all(self.y != UNLABELED))

    def samples(self) -> Iterator[Sample]:
        for i in range(len(self)):
            label = int(self.y[i])
            yield Sample(
                features=self.x[i],
                app_id=self.app_ids[i],
                label=None if label == UNLABELED else label,
            )

    def subset(self, indices: np.ndarray | Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            x=self.x[idx],
            y=self.y[idx],
            app_ids=tuple(self.app_ids[i] for i in idx),
            n_classes=self.n_classes,
            class_names=self.class_names,
        )

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], n_classes: int,
                     class_names: tuple[str, ...] | None = None) -> "Dataset":
        if not samples:
            raise ValueError("cannot build a dataset from zero samples")
        x = np.stack([np.asarray(s.features, dtype=np.float64) for s in samples])
        y = np.array(
            [UNLABELED if s.label is None else s.label for s in samples],
            dtype=np.int64,
        )
        return cls(x=x, y=y, app_ids=tuple(s.app_id for s in samples),
                   n_classes=n_classes, class_names=class_names)


@dataclass(frozen=True)
class ClassificationMetrics:
    """Confusion counts and derived ratios for one positive class.

    Zero-denominator convention: precision/recall are 0 when undefined,
    and f1 is 0 when precision + recall is 0, so sweep reports never
    contain NaNs.
    """

    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "precision": self.precision, "recall": self.recall,
            "f1": self.f1, "accuracy": self.accuracy,
        }


def compute_metrics(predicted: Sequence[int], truth: Sequence[int],
                    positive_class: int) -> ClassificationMetrics:
    """Confusion counts of ``predicted`` vs ``truth``, one-vs-rest on
    ``positive_class``. Accuracy is exact label agreement (multiclass-safe)."""
    pred = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    if pred.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    if pred.shape != true.shape:
        raise ValueError(
            f"length mismatch: {pred.size} predictions vs {true.size} truths")

    pred_pos = pred == positive_class
    true_pos = true == positive_class
    tp = int(np.sum(pred_pos & true_pos))
    fp = int(np.sum(pred_pos & ~true_pos))
    fn = int(np.sum(~pred_pos & true_pos))
    tn = int(np.sum(~pred_pos & ~true_pos))

    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    accuracy = float(np.mean(pred == true))
    return ClassificationMetrics(tp=tp, fp=fp, tn=tn, fn=fn,
                                 precision=precision, recall=recall,
                                 f1=f1, accuracy=accuracy)
