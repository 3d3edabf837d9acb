"""Dataset ingestion, known/unknown bucketing, and synthetic regimes.

Ingestion is CSV-only: feature extraction from raw hardware signals is
upstream of this package. Parsing is strict; a single bad row fails the
whole load with row numbers in the error, since silently dropped rows
would corrupt downstream uncertainty experiments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import UNLABELED, Dataset

UNKNOWN_APP_ID = "unknown"


class CsvFormatError(ValueError):
    """Raised when a CSV file violates the declared schema."""


@dataclass(frozen=True)
class CsvSchema:
    label_column: str
    app_id_column: str
    feature_columns: tuple[str, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise ValueError("need at least two class names")
        if not self.feature_columns:
            raise ValueError("need at least one feature column")


@dataclass(frozen=True)
class DatasetTaxonomy:
    """Known train/test buckets plus the held-out unknown-application bucket."""

    train: Dataset
    test_known: Dataset
    unknown: Dataset | None

    def __post_init__(self):
        if self.unknown is not None:
            known_ids = set(self.train.app_ids) | set(self.test_known.app_ids)
            overlap = known_ids & set(self.unknown.app_ids)
            if overlap:
                raise ValueError(
                    f"app_ids appear in both known and unknown buckets: "
                    f"{sorted(overlap)[:5]}")


def load_manifest(path) -> tuple[CsvSchema, frozenset[str]]:
    """Read the JSON manifest describing a CSV dataset.

    Expected keys: classes (ordered list), label_column, app_id_column,
    feature_columns, unknown_app_ids (optional).
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        schema = CsvSchema(
            label_column=raw["label_column"],
            app_id_column=raw["app_id_column"],
            feature_columns=tuple(raw["feature_columns"]),
            class_names=tuple(raw["classes"]),
        )
    except KeyError as exc:
        raise CsvFormatError(f"manifest missing key {exc}") from None
    return schema, frozenset(raw.get("unknown_app_ids", ()))


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Parse a headered CSV into a Dataset; strict, all-or-nothing.

    Labels must be class names from the schema; an empty label cell marks
    an unlabeled sample (unknown bucket). Any non-finite or unparsable
    feature fails the load with the offending row numbers.
    """
    label_of = {name: i for i, name in enumerate(schema.class_names)}
    rows_x: list[list[float]] = []
    rows_y: list[int] = []
    app_ids: list[str] = []
    problems: list[str] = []

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CsvFormatError(f"{path}: empty file, no header row")
        missing = [c for c in (schema.label_column, schema.app_id_column,
                               *schema.feature_columns)
                   if c not in reader.fieldnames]
        if missing:
            raise CsvFormatError(f"{path}: missing columns {missing}")

        for lineno, row in enumerate(reader, start=2):
            features = []
            for col in schema.feature_columns:
                try:
                    v = float(row[col])
                except (TypeError, ValueError):
                    problems.append(f"row {lineno}: bad value {row[col]!r} "
                                    f"in column {col!r}")
                    v = 0.0
                else:
                    if not np.isfinite(v):
                        problems.append(f"row {lineno}: non-finite value "
                                        f"in column {col!r}")
                features.append(v)
            label_raw = (row[schema.label_column] or "").strip()
            if label_raw == "":
                rows_y.append(UNLABELED)
            elif label_raw in label_of:
                rows_y.append(label_of[label_raw])
            else:
                problems.append(f"row {lineno}: label {label_raw!r} not in "
                                f"declared classes {list(schema.class_names)}")
                rows_y.append(UNLABELED)
            app_id = (row[schema.app_id_column] or "").strip()
            if not app_id:
                problems.append(f"row {lineno}: empty app_id")
                app_id = "?"
            rows_x.append(features)
            app_ids.append(app_id)

    if problems:
        shown = "; ".join(problems[:10])
        more = f" (+{len(problems) - 10} more)" if len(problems) > 10 else ""
        raise CsvFormatError(f"{path}: {shown}{more}")
    if not rows_x:
        raise CsvFormatError(f"{path}: no data rows")
    return Dataset(x=np.array(rows_x), y=np.array(rows_y),
                   app_ids=tuple(app_ids), n_classes=len(schema.class_names),
                   class_names=schema.class_names)


def write_csv(data: Dataset, path, schema: CsvSchema) -> None:
    """Inverse of load_csv, for exporting generated datasets."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*schema.feature_columns, schema.label_column,
                         schema.app_id_column])
        for i in range(len(data)):
            label = int(data.y[i])
            name = "" if label == UNLABELED else schema.class_names[label]
            writer.writerow([*(repr(float(v)) for v in data.x[i]), name,
                             data.app_ids[i]])


def split_taxonomy(data: Dataset, unknown_app_ids: Iterable[str],
                   test_fraction: float, seed: int) -> DatasetTaxonomy:
    """Bucket by application identity, then stratified train/test split.

    Every sample whose app_id is listed goes to the unknown bucket; the
    rest are split per class at ``test_fraction``, deterministically
    under ``seed``.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    unknown_ids = frozenset(unknown_app_ids)
    present = set(data.app_ids)
    stray = unknown_ids - present
    if stray:
        raise ValueError(f"unknown_app_ids not present in data: {sorted(stray)[:5]}")

    is_unknown = np.array([a in unknown_ids for a in data.app_ids])
    known_idx = np.nonzero(~is_unknown)[0]
    unknown_idx = np.nonzero(is_unknown)[0]
    if known_idx.size == 0:
        raise ValueError("unknown_app_ids covers the entire dataset")

    known_y = data.y[known_idx]
    if np.any(known_y == UNLABELED):
        raise ValueError("known-bucket samples must be labeled")

    rng = np.random.default_rng(seed)
    test_parts = []
    train_parts = []
    for c in range(data.n_classes):
        c_idx = known_idx[known_y == c]
        if c_idx.size < 2:
            raise ValueError(f"class {c} has fewer than 2 known samples")
        perm = rng.permutation(c_idx.size)
        n_test = int(np.floor(test_fraction * c_idx.size + 0.5))
        n_test = min(max(n_test, 1), c_idx.size - 1)
        test_parts.append(c_idx[perm[:n_test]])
        train_parts.append(c_idx[perm[n_test:]])

    train = data.subset(np.sort(np.concatenate(train_parts)))
    test = data.subset(np.sort(np.concatenate(test_parts)))
    unknown = data.subset(unknown_idx) if unknown_idx.size else None
    return DatasetTaxonomy(train=train, test_known=test, unknown=unknown)


@dataclass(frozen=True)
class SyntheticSpec:
    """Two-Gaussian binary problem with an unknown bucket in one of two
    regimes: a far-away cluster (ood) or more draws from the overlapping
    class mixture itself (overlap)."""

    regime: str                          # "ood" or "overlap"
    n_train: int = 2000
    n_test: int = 500
    n_unknown: int = 500
    d: int = 8
    class_separation: float = 6.0        # distance between class means, in sigma
    ood_distance: float = 20.0           # unknown cluster to nearest mean, in sigma
    seed: int = 0

    def __post_init__(self):
        if self.regime not in ("ood", "overlap"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if min(self.n_train, self.n_test) < 2 or self.n_unknown < 0:
            raise ValueError("n_train and n_test must be >= 2, n_unknown >= 0")
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.class_separation <= 0 or self.ood_distance <= 0:
            raise ValueError("separations must be positive")
        if self.regime == "ood" and self.ood_distance <= self.class_separation:
            raise ValueError("ood regime needs ood_distance > class_separation")


def _gaussian_class_points(rng, n, d, separation):
    y = rng.integers(0, 2, size=n)
    centers = np.where(y[:, None] == 1, separation / 2.0, -separation / 2.0)
    x = rng.standard_normal((n, d))
    x[:, 0] += centers[:, 0]
    return x, y


def generate_synthetic(spec: SyntheticSpec) -> DatasetTaxonomy:
    """Generate train / test_known / unknown buckets per the spec's regime.

    Classes are isotropic unit-variance Gaussians with means +-sep/2 on
    the first coordinate, which keeps the Bayes error analytically
    checkable. In the ood regime the unknown cluster sits ood_distance
    past the class-1 mean on the same axis and is unlabeled; in the
    overlap regime unknown samples are fresh draws from the class mixture
    under a disjoint application id.
    """
    rng = np.random.default_rng(spec.seed)
    names = ("benign", "malware")

    def bucket(x, y, app_prefix):
        app_ids = tuple(f"{app_prefix}-{int(c)}" for c in y)
        return Dataset(x=x, y=y, app_ids=app_ids, n_classes=2,
                       class_names=names)

    x, y = _gaussian_class_points(rng, spec.n_train, spec.d,
                                  spec.class_separation)
    train = bucket(x, y, "known")
    x, y = _gaussian_class_points(rng, spec.n_test, spec.d,
                                  spec.class_separation)
    test = bucket(x, y, "known")

    unknown = None
    if spec.n_unknown > 0:
        if spec.regime == "ood":
            ux = rng.standard_normal((spec.n_unknown, spec.d))
            ux[:, 0] += spec.class_separation / 2.0 + spec.ood_distance
            uy = np.full(spec.n_unknown, UNLABELED)
        else:
            ux, uy = _gaussian_class_points(rng, spec.n_unknown, spec.d,
                                            spec.class_separation)
        unknown = Dataset(x=ux, y=uy,
                          app_ids=(UNKNOWN_APP_ID,) * spec.n_unknown,
                          n_classes=2, class_names=names)
    return DatasetTaxonomy(train=train, test_known=test, unknown=unknown)
