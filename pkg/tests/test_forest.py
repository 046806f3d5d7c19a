"""Random-forest training, prediction, and evaluation."""

import numpy as np
import pytest

from wiltmetrics import forest
from wiltmetrics.errors import ValidationError


def _samples(n_per_class=20, seed=0, d=6, gap=4.0):
    """Two well-separated Gaussian blobs."""
    rng = np.random.default_rng(seed)
    out = []
    for label in (0, 1):
        center = np.full(d, label * gap)
        for i in range(n_per_class):
            out.append(
                forest.LabeledSample(
                    plant_id=f"c{label}p{i:03d}",
                    features=center + rng.normal(0, 1, size=d),
                    expert_score=0.9 if label else 0.1,
                    label=label,
                )
            )
    return out


class TestBinarize:
    def test_strictly_above_half(self):
        assert forest.binarize_score(0.5) == forest.NOT_WILTED
        assert forest.binarize_score(0.5000001) == forest.WILTED
        assert forest.binarize_score(0.0) == forest.NOT_WILTED
        assert forest.binarize_score(1.0) == forest.WILTED

    def test_range_check(self):
        with pytest.raises(ValidationError):
            forest.binarize_score(1.5)


class TestSplit:
    def test_stratified_sizes(self):
        samples = _samples(20)
        train, test = forest.split_train_test(samples, train_fraction=0.6, seed=0)
        assert len(train) == 24 and len(test) == 16
        for part in (train, test):
            labels = [s.label for s in part]
            assert labels.count(0) == labels.count(1)

    def test_disjoint_and_complete(self):
        samples = _samples(15)
        train, test = forest.split_train_test(samples, seed=1)
        ids = {s.plant_id for s in train} | {s.plant_id for s in test}
        assert len(ids) == len(samples)
        assert not ({s.plant_id for s in train} & {s.plant_id for s in test})

    def test_deterministic_per_seed(self):
        samples = _samples(10)
        t1, _ = forest.split_train_test(samples, seed=5)
        t2, _ = forest.split_train_test(list(reversed(samples)), seed=5)
        assert [s.plant_id for s in t1] == [s.plant_id for s in t2]

    def test_different_seed_differs(self):
        samples = _samples(10)
        t1, _ = forest.split_train_test(samples, seed=0)
        t2, _ = forest.split_train_test(samples, seed=99)
        assert [s.plant_id for s in t1] != [s.plant_id for s in t2]

    def test_needs_both_classes(self):
        samples = [s for s in _samples(5) if s.label == 0]
        with pytest.raises(ValidationError):
            forest.split_train_test(samples)


class TestTrain:
    def test_separable_data_classified_perfectly(self):
        samples = _samples(15)
        model = forest.train(samples, n_trees=50, seed=0)
        for s in samples:
            label, frac = forest.predict(model, s.features)
            assert label == s.label
            assert 0.0 <= frac <= 1.0

    def test_deterministic_and_order_invariant(self):
        samples = _samples(10)
        m1 = forest.train(samples, n_trees=20, seed=3)
        m2 = forest.train(list(reversed(samples)), n_trees=20, seed=3)
        assert m1.to_json() == m2.to_json()

    def test_seed_changes_model(self):
        samples = _samples(10)
        m1 = forest.train(samples, n_trees=20, seed=0)
        m2 = forest.train(samples, n_trees=20, seed=1)
        assert m1.to_json() != m2.to_json()

    def test_feature_subset_size(self):
        model = forest.train(_samples(5, d=9), n_trees=2, seed=0)
        assert model.feature_subset_size == 3  # ceil(sqrt(9))

    def test_single_class_rejected(self):
        samples = [s for s in _samples(5) if s.label == 1]
        with pytest.raises(ValidationError):
            forest.train(samples, n_trees=2)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            forest.train([], n_trees=2)


class TestModelIO:
    def test_json_round_trip(self):
        model = forest.train(_samples(8), n_trees=5, seed=0, feature_order=[f"f{i}" for i in range(6)])
        restored = forest.ForestModel.from_json(model.to_json())
        assert restored.to_json() == model.to_json()
        x = _samples(8)[0].features
        assert forest.predict(restored, x) == forest.predict(model, x)

    def test_version_check(self):
        with pytest.raises(ValidationError):
            forest.ForestModel.from_json('{"format_version": 99}')


class TestPredict:
    def test_tie_votes_not_wilted(self):
        # two trees, one voting each way: tie -> not wilted
        trees = [{"leaf": [0, 5]}, {"leaf": [5, 0]}]
        model = forest.ForestModel(trees=trees, n_trees=2, feature_subset_size=1, seed=0)
        label, frac = forest.predict(model, [0.0])
        assert label == forest.NOT_WILTED and frac == 0.5

    def test_tied_leaf_votes_not_wilted(self):
        trees = [{"leaf": [3, 3]}]
        model = forest.ForestModel(trees=trees, n_trees=1, feature_subset_size=1, seed=0)
        label, frac = forest.predict(model, [0.0])
        assert label == forest.NOT_WILTED and frac == 0.0

    def test_feature_length_check(self):
        model = forest.train(_samples(5, d=4), n_trees=2, seed=0, feature_order=list("abcd"))
        with pytest.raises(ValidationError):
            forest.predict(model, [1.0, 2.0])


class TestEvaluate:
    def test_hand_arithmetic(self):
        preds = [1, 1, 0, 0, 1]
        truth = [1, 0, 0, 1, 1]
        rep = forest.evaluate(preds, truth)
        wilted = rep.per_class[forest.WILTED]
        assert (wilted.tp, wilted.fp, wilted.fn, wilted.tn) == (2, 1, 1, 1)
        assert wilted.precision == pytest.approx(2 / 3)
        assert wilted.recall == pytest.approx(2 / 3)
        assert wilted.f1 == pytest.approx(2 / 3)
        not_w = rep.per_class[forest.NOT_WILTED]
        assert (not_w.tp, not_w.fp, not_w.fn, not_w.tn) == (1, 1, 1, 2)
        assert rep.accuracy == pytest.approx(3 / 5)

    def test_zero_division_flagged(self):
        rep = forest.evaluate([0, 0], [0, 1])
        wilted = rep.per_class[forest.WILTED]
        assert wilted.zero_division and wilted.precision == 0.0 and wilted.f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            forest.evaluate([1], [1, 0])
