"""Base classifiers: CART decision tree, logistic regression, linear SVM.

All three train deterministically from (config, data) including the seed,
and expose hard-label plus class-probability prediction. They are meant
to be bagged; see :mod:`voteguard.ensemble`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset

LEARNER_KINDS = ("tree", "logistic", "linear_svm")


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    feature_subsample: str = "sqrt"      # "all" or "sqrt"

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.feature_subsample not in ("all", "sqrt"):
            raise ValueError("feature_subsample must be 'all' or 'sqrt'")


@dataclass(frozen=True)
class GradientParams:
    learning_rate: float = 0.1
    max_iters: int = 1000
    tolerance: float = 1e-6
    l2: float = 1e-4

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "tree"
    tree: TreeParams = field(default_factory=TreeParams)
    gradient: GradientParams = field(default_factory=GradientParams)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


def _check_input(x, n_features):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n_features,):
        raise ValueError(f"expected {n_features} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    return x


class TrainedLearner:
    """Common surface of fitted base classifiers. Immutable; predict is a
    pure function of the stored parameters."""

    n_classes: int
    n_features: int
    converged: bool
    seed_used: int

    def predict_label(self, x) -> int:
        proba = self.predict_proba(x)
        return int(np.argmax(proba))       # argmax breaks ties toward lower index

    def predict_proba(self, x) -> np.ndarray:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Decision tree (CART, Gini impurity)
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    # feature < 0 marks a leaf; counts are per-class training counts here
    feature: int
    threshold: float
    left: int
    right: int
    counts: np.ndarray

LEAF = -1


def _gini(counts, n):
    p = counts / n
    return 1.0 - float(np.sum(p * p))


def best_split(x, y, feature_indices, n_classes):
    """Best (feature, threshold, gain) by Gini gain over midpoint candidates.

    Ties break toward lower feature index, then lower threshold. Returns
    None when no candidate yields positive gain.
    """
    n = y.shape[0]
    total = np.bincount(y, minlength=n_classes).astype(np.float64)
    parent = _gini(total, n)

    best = None
    best_gain = 0.0
    for f in feature_indices:
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        sy = y[order]
        boundaries = np.nonzero(sv[:-1] != sv[1:])[0]
        if boundaries.size == 0:
            continue
        one_hot = np.zeros((n, n_classes))
        one_hot[np.arange(n), sy] = 1.0
        cum = np.cumsum(one_hot, axis=0)
        left_counts = cum[boundaries]
        right_counts = total - left_counts
        n_left = (boundaries + 1).astype(np.float64)
        n_right = n - n_left
        gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        gains = parent - (n_left / n) * gini_left - (n_right / n) * gini_right
        i = int(np.argmax(gains))          # first max -> lowest threshold
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            j = boundaries[i]
            best = (int(f), (sv[j] + sv[j + 1]) / 2.0, best_gain)
    return best


@dataclass(frozen=True)
class TreeLearner(TrainedLearner):
    nodes: tuple[TreeNode, ...]
    n_classes: int
    n_features: int
    seed_used: int
    converged: bool = True

    def _leaf_for(self, x):
        node = self.nodes[0]
        while node.feature != LEAF:
            node = self.nodes[node.left if x[node.feature] <= node.threshold
                              else node.right]
        return node

    def predict_proba(self, x) -> np.ndarray:
        x = _check_input(x, self.n_features)
        counts = self._leaf_for(x).counts
        return counts / counts.sum()


def _train_tree(config: LearnerConfig, data: Dataset) -> TreeLearner:
    params = config.tree
    x, y = data.x, data.y
    n, d = x.shape
    rng = np.random.default_rng(config.seed)
    if params.feature_subsample == "sqrt":
        k = min(d, math.isqrt(d - 1) + 1)  # ceil(sqrt(d))
    else:
        k = d

    nodes: list[TreeNode] = []
    # stack entries: (sample indices, depth, parent node index, is_left_child)
    stack = [(np.arange(n), 0, None, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        counts = np.bincount(y[idx], minlength=data.n_classes).astype(np.float64)
        me = len(nodes)
        if parent is not None:
            if is_left:
                nodes[parent].left = me
            else:
                nodes[parent].right = me

        pure = np.count_nonzero(counts) <= 1
        depth_capped = params.max_depth is not None and depth >= params.max_depth
        if pure or depth_capped or idx.size < params.min_samples_split:
            nodes.append(TreeNode(LEAF, 0.0, -1, -1, counts))
            continue

        if k < d:
            feats = np.sort(rng.choice(d, size=k, replace=False))
        else:
            feats = np.arange(d)
        split = best_split(x[idx], y[idx], feats, data.n_classes)
        if split is None:
            nodes.append(TreeNode(LEAF, 0.0, -1, -1, counts))
            continue

        feature, threshold, _ = split
        nodes.append(TreeNode(feature, threshold, -1, -1, counts))
        go_left = x[idx, feature] <= threshold
        # push right first so the left child is built (and draws RNG) first
        stack.append((idx[~go_left], depth + 1, me, False))
        stack.append((idx[go_left], depth + 1, me, True))

    return TreeLearner(nodes=tuple(nodes), n_classes=data.n_classes,
                       n_features=d, seed_used=config.seed)


# ---------------------------------------------------------------------------
# Linear models (full-batch gradient descent)
# ---------------------------------------------------------------------------

def _sigmoid(s):
    out = np.empty_like(s, dtype=np.float64)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _softplus(s):
    # log(1 + exp(s)), overflow-safe
    return np.maximum(s, 0.0) + np.log1p(np.exp(-np.abs(s)))


def logistic_loss(w, b, x, z, l2):
    """Mean log loss on +-1 targets ``z`` plus an L2 penalty on the weights."""
    m = z * (x @ w + b)
    return float(np.mean(_softplus(-m)) + 0.5 * l2 * (w @ w))


def logistic_gradient(w, b, x, z, l2):
    m = z * (x @ w + b)
    p = _sigmoid(-m)
    gw = -(x.T @ (z * p)) / x.shape[0] + l2 * w
    gb = -float(np.mean(z * p))
    return gw, gb


def hinge_loss(w, b, x, z, l2):
    """Mean hinge loss on +-1 targets ``z`` plus an L2 penalty on the weights."""
    m = z * (x @ w + b)
    return float(np.mean(np.maximum(0.0, 1.0 - m)) + 0.5 * l2 * (w @ w))


def hinge_gradient(w, b, x, z, l2):
    m = z * (x @ w + b)
    active = (m < 1.0).astype(np.float64)
    gw = -(x.T @ (z * active)) / x.shape[0] + l2 * w
    gb = -float(np.mean(z * active))
    return gw, gb


@dataclass(frozen=True)
class LinearLearner(TrainedLearner):
    kind: str                            # "logistic" or "linear_svm"
    weights: np.ndarray
    bias: float
    n_classes: int
    converged: bool
    seed_used: int
    loss_curve: tuple[float, ...] = ()   # training-time only, not persisted

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def score(self, x) -> float:
        x = _check_input(x, self.n_features)
        return float(self.weights @ x + self.bias)

    def predict_proba(self, x) -> np.ndarray:
        # Raw margin through a sigmoid for both linear kinds; the SVM output
        # is a monotone squashing, not a calibrated probability.
        p1 = float(_sigmoid(np.array([self.score(x)]))[0])
        return np.array([1.0 - p1, p1])

    def predict_label(self, x) -> int:
        return 1 if self.score(x) > 0 else 0


@dataclass(frozen=True)
class ConstantLearner(TrainedLearner):
    """Degenerate learner from single-class training data."""

    label: int
    n_classes: int
    n_features: int
    seed_used: int
    converged: bool = True

    def predict_proba(self, x) -> np.ndarray:
        _check_input(x, self.n_features)
        proba = np.zeros(self.n_classes)
        proba[self.label] = 1.0
        return proba

    def predict_label(self, x) -> int:
        _check_input(x, self.n_features)
        return self.label


def _train_linear(config: LearnerConfig, data: Dataset) -> TrainedLearner:
    if data.n_classes != 2:
        raise ValueError(f"{config.kind} supports binary problems only")
    classes = np.unique(data.y)
    if classes.size == 1:
        return ConstantLearner(label=int(classes[0]), n_classes=data.n_classes,
                               n_features=data.d, seed_used=config.seed)

    g = config.gradient
    x = data.x
    z = np.where(data.y == 1, 1.0, -1.0)
    loss_fn = logistic_loss if config.kind == "logistic" else hinge_loss
    grad_fn = logistic_gradient if config.kind == "logistic" else hinge_gradient

    w = np.zeros(data.d)
    b = 0.0
    prev = loss_fn(w, b, x, z, g.l2)
    losses = [prev]
    converged = False
    for _ in range(g.max_iters):
        gw, gb = grad_fn(w, b, x, z, g.l2)
        # Backtracking keeps the loss non-increasing even for the nonsmooth
        # hinge objective, where a fixed step oscillates near the optimum.
        rate = g.learning_rate
        for _ in range(30):
            w_next = w - rate * gw
            b_next = b - rate * gb
            cur = loss_fn(w_next, b_next, x, z, g.l2)
            if cur <= prev:
                break
            rate *= 0.5
        if cur > prev:                   # no descent step found
            converged = True
            break
        w, b = w_next, b_next
        losses.append(cur)
        if abs(prev - cur) < g.tolerance:
            converged = True
            break
        prev = cur
    return LinearLearner(kind=config.kind, weights=w, bias=b,
                         n_classes=data.n_classes, converged=converged,
                         seed_used=config.seed, loss_curve=tuple(losses))


def train(config: LearnerConfig, data: Dataset) -> TrainedLearner:
    """Fit one base classifier. Deterministic given (config, data).

    A learner that hits max_iters without meeting the tolerance is returned
    with converged=False, never raised.
    """
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if not data.fully_labeled:
        raise ValueError("training data contains unlabeled samples")
    if config.kind == "tree":
        return _train_tree(config, data)
    return _train_linear(config, data)
