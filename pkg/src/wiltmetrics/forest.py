"""From-scratch random forest predicting binary wilting from metric features.

Training is deterministic for a given (multiset of samples, seed): samples
are canonically sorted first and every tree draws its randomness from its
own stream derived from (seed, tree index), so worker count or input
order never changes the model.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

WILTED = 1
NOT_WILTED = 0

MODEL_FORMAT_VERSION = 1


@dataclass
class LabeledSample:
    plant_id: str
    features: np.ndarray
    expert_score: float
    label: int


def binarize_score(score):
    """Wilted iff the expert score is strictly above 0.5."""
    if not 0.0 <= score <= 1.0:
        raise ValidationError(f"expert score {score} outside [0, 1]")
    return WILTED if score > 0.5 else NOT_WILTED


def split_train_test(samples, train_fraction=0.6, seed=0):
    """Stratified-by-label random split, deterministic for a given seed."""
    by_label = {}
    for s in samples:
        by_label.setdefault(s.label, []).append(s)
    if len(by_label) < 2 or any(len(v) < 2 for v in by_label.values()):
        raise ValidationError("need at least two samples of each class to split")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B17]))
    train, test = [], []
    for label in sorted(by_label):
        group = sorted(by_label[label], key=lambda s: s.plant_id)
        perm = rng.permutation(len(group))
        n_train = int(round(train_fraction * len(group)))
        n_train = min(max(n_train, 1), len(group) - 1)
        for pos, idx in enumerate(perm):
            (train if pos < n_train else test).append(group[idx])
    train.sort(key=lambda s: s.plant_id)
    test.sort(key=lambda s: s.plant_id)
    return train, test


def _gini(counts):
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p * p).sum())


def _build_tree(x, y, rng, n_sub_features, min_samples_split=2):
    """Grow one unpruned CART tree; nodes are nested dicts."""
    n, d = x.shape

    def grow(indices):
        labels = y[indices]
        counts = np.bincount(labels, minlength=2)
        if len(indices) < min_samples_split or counts[0] == 0 or counts[1] == 0:
            return {"leaf": counts.tolist()}
        best = None
        feats = rng.choice(d, size=n_sub_features, replace=False)
        for f in feats:
            col = x[indices, f]
            order = np.argsort(col, kind="stable")
            sv = col[order]
            sl = labels[order]
            # candidate thresholds at midpoints between distinct neighbors
            left_counts = np.zeros(2)
            right_counts = np.bincount(sl, minlength=2).astype(np.float64)
            for i in range(len(sv) - 1):
                left_counts[sl[i]] += 1
                right_counts[sl[i]] -= 1
                if sv[i] == sv[i + 1]:
                    continue
                nl = i + 1
                nr = len(sv) - nl
                cost = (nl * _gini(left_counts) + nr * _gini(right_counts)) / len(sv)
                if best is None or cost < best[0]:
                    best = (cost, int(f), (sv[i] + sv[i + 1]) / 2.0)
        if best is None:
            return {"leaf": counts.tolist()}
        _, f, thr = best
        mask = x[indices, f] <= thr
        left = grow(indices[mask])
        right = grow(indices[~mask])
        return {"feature": f, "threshold": thr, "left": left, "right": right}

    return grow(np.arange(n))


def _tree_counts(node, features):
    while "leaf" not in node:
        node = node["left"] if features[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


@dataclass
class ForestModel:
    trees: list
    n_trees: int
    feature_subset_size: int
    seed: int
    feature_order: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(
            {
                "format_version": MODEL_FORMAT_VERSION,
                "n_trees": self.n_trees,
                "feature_subset_size": self.feature_subset_size,
                "seed": self.seed,
                "feature_order": self.feature_order,
                "trees": self.trees,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if data.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValidationError(f"unsupported model format: {data.get('format_version')}")
        return cls(
            trees=data["trees"],
            n_trees=data["n_trees"],
            feature_subset_size=data["feature_subset_size"],
            seed=data["seed"],
            feature_order=data["feature_order"],
        )


def train(samples, n_trees=1000, seed=0, feature_order=None):
    """Train a forest of bootstrap CART trees with sqrt-subset Gini splits."""
    if not samples:
        raise ValidationError("empty training set")
    ordered = sorted(samples, key=lambda s: (tuple(s.features), s.label, s.plant_id))
    x = np.asarray([s.features for s in ordered], dtype=np.float64)
    y = np.asarray([s.label for s in ordered], dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValidationError("training set must contain both classes")
    n, d = x.shape
    n_sub = max(1, math.ceil(math.sqrt(d)))
    trees = []
    for tree_idx in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, tree_idx]))
        boot = rng.integers(0, n, size=n)
        trees.append(_build_tree(x[boot], y[boot], rng, n_sub))
    return ForestModel(
        trees=trees,
        n_trees=n_trees,
        feature_subset_size=n_sub,
        seed=seed,
        feature_order=list(feature_order or []),
    )


def predict(model, features):
    """Majority vote over trees; ties break toward not-wilted."""
    f = np.asarray(features, dtype=np.float64)
    if model.feature_order and len(f) != len(model.feature_order):
        raise ValidationError(f"expected {len(model.feature_order)} features, got {len(f)}")
    wilted_votes = 0
    for tree in model.trees:
        counts = _tree_counts(tree, f)
        # per-tree majority; a tied leaf votes not-wilted
        if counts[WILTED] > counts[NOT_WILTED]:
            wilted_votes += 1
    vote_fraction = wilted_votes / model.n_trees
    label = WILTED if vote_fraction > 0.5 else NOT_WILTED
    return label, vote_fraction


@dataclass
class ClassReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    zero_division: bool = False


@dataclass
class EvalReport:
    per_class: dict  # class label -> ClassReport

    @property
    def accuracy(self):
        any_class = next(iter(self.per_class.values()))
        total = any_class.tp + any_class.fp + any_class.fn + any_class.tn
        return (any_class.tp + any_class.tn) / total if total else 0.0


def evaluate(predictions, truths):
    """Per-class precision/recall/F1; positives are redefined per class."""
    preds = list(predictions)
    ys = list(truths)
    if len(preds) != len(ys) or not preds:
        raise ValidationError("predictions and truths must be equal-length and non-empty")
    per_class = {}
    for cls in (WILTED, NOT_WILTED):
        tp = sum(1 for p, t in zip(preds, ys) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(preds, ys) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(preds, ys) if p != cls and t == cls)
        tn = len(ys) - tp - fp - fn
        zero = False
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if tp + fp == 0 or tp + fn == 0:
            zero = True
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = ClassReport(
            precision=precision, recall=recall, f1=f1, tp=tp, fp=fp, fn=fn, tn=tn, zero_division=zero
        )
    return EvalReport(per_class=per_class)
