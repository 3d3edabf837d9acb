"""Versioned on-disk model format.

A model file is a single self-describing JSON document: header (format
version, class/feature counts, posterior mode, log base, standardizer)
followed by per-learner parameters. Floats are written with full repr
precision so a save/load round trip reproduces predictions bit-exactly.
Tree nodes are stored as a flat list with child indices, so arbitrarily
deep trees serialize without recursion.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .ensemble import EnsembleConfig, EnsembleModel, Standardizer
from .learners import (ConstantLearner, GradientParams, LearnerConfig,
                       LinearLearner, TreeLearner, TreeNode, TreeParams)

FORMAT_NAME = "voteguard-ensemble"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file is malformed or from an unknown version."""


def _log_base_tag(base: float) -> str:
    return "2" if base == 2.0 else "e"


def _log_base_from_tag(tag: str) -> float:
    if tag == "2":
        return 2.0
    if tag == "e":
        return math.e
    raise ModelFormatError(f"unknown entropy log base tag {tag!r}")


def _learner_to_dict(learner) -> dict:
    common = {"converged": learner.converged, "seed_used": learner.seed_used}
    if isinstance(learner, TreeLearner):
        return {
            "type": "tree",
            "nodes": [[n.feature, n.threshold, n.left, n.right,
                       n.counts.tolist()] for n in learner.nodes],
            **common,
        }
    if isinstance(learner, LinearLearner):
        return {
            "type": "linear",
            "kind": learner.kind,
            "weights": learner.weights.tolist(),
            "bias": learner.bias,
            **common,
        }
    if isinstance(learner, ConstantLearner):
        return {"type": "constant", "label": learner.label, **common}
    raise ModelFormatError(f"cannot serialize learner {type(learner).__name__}")


def _learner_from_dict(raw: dict, n_classes: int, n_features: int):
    kind = raw.get("type")
    if kind == "tree":
        nodes = tuple(
            TreeNode(feature=f, threshold=t, left=l, right=r,
                     counts=np.array(counts, dtype=np.float64))
            for f, t, l, r, counts in raw["nodes"])
        return TreeLearner(nodes=nodes, n_classes=n_classes,
                           n_features=n_features, seed_used=raw["seed_used"],
                           converged=raw["converged"])
    if kind == "linear":
        return LinearLearner(kind=raw["kind"],
                             weights=np.array(raw["weights"], dtype=np.float64),
                             bias=float(raw["bias"]), n_classes=n_classes,
                             converged=raw["converged"],
                             seed_used=raw["seed_used"])
    if kind == "constant":
        return ConstantLearner(label=raw["label"], n_classes=n_classes,
                               n_features=n_features,
                               seed_used=raw["seed_used"],
                               converged=raw["converged"])
    raise ModelFormatError(f"unknown learner type {kind!r}")


def _config_to_dict(config: EnsembleConfig) -> dict:
    return {
        "m": config.m,
        "master_seed": config.master_seed,
        "posterior_mode": config.posterior_mode,
        "entropy_log_base": _log_base_tag(config.entropy_log_base),
        "base": {
            "kind": config.base.kind,
            "seed": config.base.seed,
            "tree": {
                "max_depth": config.base.tree.max_depth,
                "min_samples_split": config.base.tree.min_samples_split,
                "feature_subsample": config.base.tree.feature_subsample,
            },
            "gradient": {
                "learning_rate": config.base.gradient.learning_rate,
                "max_iters": config.base.gradient.max_iters,
                "tolerance": config.base.gradient.tolerance,
                "l2": config.base.gradient.l2,
            },
        },
    }


def _config_from_dict(raw: dict) -> EnsembleConfig:
    base = raw["base"]
    return EnsembleConfig(
        m=raw["m"],
        master_seed=raw["master_seed"],
        posterior_mode=raw["posterior_mode"],
        entropy_log_base=_log_base_from_tag(raw["entropy_log_base"]),
        base=LearnerConfig(
            kind=base["kind"],
            seed=base["seed"],
            tree=TreeParams(**base["tree"]),
            gradient=GradientParams(**base["gradient"]),
        ),
    )


def save_model(model: EnsembleModel, path) -> None:
    doc = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "n_classes": model.n_classes,
        "n_features": model.n_features,
        "class_names": list(model.class_names) if model.class_names else None,
        "config": _config_to_dict(model.config),
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
        },
        "learners": [_learner_to_dict(l) for l in model.learners],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path) -> EnsembleModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {doc.get('format_version')}")

    n_classes = doc["n_classes"]
    n_features = doc["n_features"]
    standardizer = Standardizer(
        mean=np.array(doc["standardizer"]["mean"], dtype=np.float64),
        std=np.array(doc["standardizer"]["std"], dtype=np.float64),
    )
    learners = tuple(_learner_from_dict(raw, n_classes, n_features)
                     for raw in doc["learners"])
    class_names = tuple(doc["class_names"]) if doc.get("class_names") else None
    return EnsembleModel(learners=learners, standardizer=standardizer,
                         config=_config_from_dict(doc["config"]),
                         n_classes=n_classes, class_names=class_names)
