"""Experiment harness: rejection-threshold sweeps, ensemble-size sweeps,
and plot-ready report emission (JSON or CSV).

Metric convention: rejected samples are excluded from both the precision
and the recall denominators, i.e. metrics are computed strictly over the
accepted known samples. Unknown-bucket samples never contribute to
metrics, only to rejection rates.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ClassificationMetrics, Dataset, compute_metrics
from .data import DatasetTaxonomy
from .ensemble import EnsembleConfig, EnsembleModel, fit, predict

SWEEP_SCHEMA = "voteguard-threshold-sweep"
STABILITY_SCHEMA = "voteguard-stability-sweep"
SCHEMA_VERSION = 1

DEFAULT_GRID_POINTS = 50


def default_threshold_grid(n_classes: int, log_base: float = 2.0,
                           points: int = DEFAULT_GRID_POINTS) -> list[float]:
    """Evenly spaced thresholds over [0, log_base(n_classes)]."""
    top = math.log(n_classes, log_base)
    return [top * i / (points - 1) for i in range(points)]


@dataclass(frozen=True)
class EntropySummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float

    @classmethod
    def of(cls, values: np.ndarray) -> "EntropySummary":
        q = np.percentile(values, [0, 25, 50, 75, 100])
        return cls(*(float(v) for v in q))

    def as_dict(self) -> dict:
        return {"min": self.min, "q1": self.q1, "median": self.median,
                "q3": self.q3, "max": self.max}


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    known_rejection_rate: float
    unknown_rejection_rate: float | None
    metrics: ClassificationMetrics | None   # None when nothing was accepted
    metrics_degenerate: bool                # zero-denominator convention used


@dataclass(frozen=True)
class ThresholdSweepReport:
    points: tuple[SweepPoint, ...]
    baseline_metrics: ClassificationMetrics
    known_entropy: EntropySummary
    unknown_entropy: EntropySummary | None
    log_base: float


@dataclass(frozen=True)
class StabilityPoint:
    m: int
    mean_entropy: float
    std_entropy: float


@dataclass(frozen=True)
class StabilityReport:
    points: tuple[StabilityPoint, ...]
    log_base: float


def run_threshold_sweep(model: EnsembleModel, taxonomy: DatasetTaxonomy,
                        grid: list[float] | None = None,
                        positive_class: int = 1) -> ThresholdSweepReport:
    """Gate every known/unknown sample at each threshold in the grid.

    Records per-threshold rejection fractions and classification metrics
    over the accepted known samples. Rejection is strict: a sample is
    rejected iff its entropy exceeds the threshold.
    """
    if grid is None:
        grid = default_threshold_grid(model.n_classes,
                                      model.config.entropy_log_base)
    if not grid:
        raise ValueError("threshold grid must be non-empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("threshold grid must be sorted ascending")
    test = taxonomy.test_known
    if len(test) == 0:
        raise ValueError("test_known bucket is empty")
    if not test.fully_labeled:
        raise ValueError("test_known samples must be labeled")

    preds = [predict(model, x) for x in test.x]
    h_known = np.array([p.entropy for p in preds])
    labels = np.array([p.label for p in preds])
    truth = test.y
    h_unknown = None
    if taxonomy.unknown is not None and len(taxonomy.unknown) > 0:
        h_unknown = np.array(
            [predict(model, x).entropy for x in taxonomy.unknown.x])

    baseline = compute_metrics(labels, truth, positive_class)
    points = []
    for tau in grid:
        accepted = h_known <= tau
        known_rej = float(np.mean(~accepted))
        unknown_rej = (float(np.mean(h_unknown > tau))
                       if h_unknown is not None else None)
        if not np.any(accepted):
            metrics, degenerate = None, True
        else:
            metrics = compute_metrics(labels[accepted], truth[accepted],
                                      positive_class)
            degenerate = (metrics.tp + metrics.fp == 0
                          or metrics.tp + metrics.fn == 0)
        points.append(SweepPoint(threshold=float(tau),
                                 known_rejection_rate=known_rej,
                                 unknown_rejection_rate=unknown_rej,
                                 metrics=metrics,
                                 metrics_degenerate=degenerate))

    return ThresholdSweepReport(
        points=tuple(points),
        baseline_metrics=baseline,
        known_entropy=EntropySummary.of(h_known),
        unknown_entropy=(EntropySummary.of(h_unknown)
                         if h_unknown is not None else None),
        log_base=model.config.entropy_log_base,
    )


def run_stability_sweep(config: EnsembleConfig, data: Dataset,
                        eval_set: Dataset, m_grid: list[int],
                        n_workers: int = 1) -> StabilityReport:
    """Refit a fresh ensemble for each size M (same master seed and base
    config) and summarize prediction entropy over a fixed evaluation set."""
    if not m_grid:
        raise ValueError("m_grid must be non-empty")
    if any(m < 1 for m in m_grid) or any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise ValueError("m_grid must be strictly increasing positive ints")
    if len(eval_set) == 0:
        raise ValueError("evaluation set is empty")

    points = []
    for m in m_grid:
        model = fit(replace(config, m=m), data, n_workers=n_workers)
        h = np.array([predict(model, x).entropy for x in eval_set.x])
        points.append(StabilityPoint(m=m, mean_entropy=float(h.mean()),
                                     std_entropy=float(h.std())))
    return StabilityReport(points=tuple(points),
                           log_base=config.entropy_log_base)


# ---------------------------------------------------------------------------
# Report serialization (schemas documented in README)
# ---------------------------------------------------------------------------

def _r6(v):
    # 6 significant digits, stable across runs
    return None if v is None else float(f"{v:.6g}")


def _metrics_dict(m: ClassificationMetrics | None):
    if m is None:
        return None
    d = m.as_dict()
    return {k: (_r6(v) if isinstance(v, float) else v) for k, v in d.items()}


def _summary_dict(s: EntropySummary | None):
    if s is None:
        return None
    return {k: _r6(v) for k, v in s.as_dict().items()}


def _log_base_tag(base: float) -> str:
    return "2" if base == 2.0 else "e"


def report_to_dict(report) -> dict:
    if isinstance(report, ThresholdSweepReport):
        return {
            "schema": SWEEP_SCHEMA,
            "version": SCHEMA_VERSION,
            "log_base": _log_base_tag(report.log_base),
            "baseline_metrics": _metrics_dict(report.baseline_metrics),
            "known_entropy": _summary_dict(report.known_entropy),
            "unknown_entropy": _summary_dict(report.unknown_entropy),
            "points": [{
                "threshold": _r6(p.threshold),
                "known_rejection_rate": _r6(p.known_rejection_rate),
                "unknown_rejection_rate": _r6(p.unknown_rejection_rate),
                "metrics": _metrics_dict(p.metrics),
                "metrics_degenerate": p.metrics_degenerate,
            } for p in report.points],
        }
    if isinstance(report, StabilityReport):
        return {
            "schema": STABILITY_SCHEMA,
            "version": SCHEMA_VERSION,
            "log_base": _log_base_tag(report.log_base),
            "points": [{
                "m": p.m,
                "mean_entropy": _r6(p.mean_entropy),
                "std_entropy": _r6(p.std_entropy),
            } for p in report.points],
        }
    raise TypeError(f"unknown report type {type(report).__name__}")


def report_from_dict(doc: dict):
    """Inverse of report_to_dict, up to the 6-significant-digit rounding."""
    base = 2.0 if doc["log_base"] == "2" else math.e
    if doc.get("schema") == SWEEP_SCHEMA:
        def metrics(d):
            return ClassificationMetrics(**d) if d is not None else None

        def summary(d):
            return EntropySummary(**d) if d is not None else None

        return ThresholdSweepReport(
            points=tuple(SweepPoint(
                threshold=p["threshold"],
                known_rejection_rate=p["known_rejection_rate"],
                unknown_rejection_rate=p["unknown_rejection_rate"],
                metrics=metrics(p["metrics"]),
                metrics_degenerate=p["metrics_degenerate"],
            ) for p in doc["points"]),
            baseline_metrics=metrics(doc["baseline_metrics"]),
            known_entropy=summary(doc["known_entropy"]),
            unknown_entropy=summary(doc["unknown_entropy"]),
            log_base=base,
        )
    if doc.get("schema") == STABILITY_SCHEMA:
        return StabilityReport(
            points=tuple(StabilityPoint(**p) for p in doc["points"]),
            log_base=base,
        )
    raise ValueError(f"unknown report schema {doc.get('schema')!r}")


_SWEEP_CSV_COLUMNS = ("threshold", "known_rejection_rate",
                      "unknown_rejection_rate", "precision", "recall", "f1",
                      "accuracy", "tp", "fp", "tn", "fn", "metrics_degenerate")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def emit_report(report, path, fmt: str = "json") -> None:
    """Write a report with a stable field order and 6-significant-digit
    floats, so replays with identical inputs are byte-identical."""
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, indent=1, sort_keys=True)
            fh.write("\n")
        return
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if isinstance(report, ThresholdSweepReport):
            writer.writerow(_SWEEP_CSV_COLUMNS)
            for p in report.points:
                m = p.metrics
                writer.writerow([
                    _fmt(p.threshold), _fmt(p.known_rejection_rate),
                    _fmt(p.unknown_rejection_rate),
                    _fmt(m.precision if m else None),
                    _fmt(m.recall if m else None),
                    _fmt(m.f1 if m else None),
                    _fmt(m.accuracy if m else None),
                    _fmt(m.tp if m else None), _fmt(m.fp if m else None),
                    _fmt(m.tn if m else None), _fmt(m.fn if m else None),
                    _fmt(p.metrics_degenerate),
                ])
        elif isinstance(report, StabilityReport):
            writer.writerow(("m", "mean_entropy", "std_entropy"))
            for p in report.points:
                writer.writerow([_fmt(p.m), _fmt(p.mean_entropy),
                                 _fmt(p.std_entropy)])
        else:
            raise TypeError(f"unknown report type {type(report).__name__}")
