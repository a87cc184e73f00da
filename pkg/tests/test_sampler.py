"""배치 샘플러 테스트"""
import numpy as np
import pytest

from src.hetero.sampler import BatchSampler, batches_per_epoch, class_balanced_batch, pk_batch
from src.utils.errors import CapacityError
from src.utils.metrics import get_metrics


def balanced_labels(classes: int, per_class: int) -> np.ndarray:
    return np.repeat(np.arange(classes), per_class)


class TestPKBatch:
    def test_plan_invariants(self, rng):
        labels = rng.permutation(balanced_labels(10, 12))
        for _ in range(50):
            plan = pk_batch(labels, 4, 3, rng)
            plan.validate()
            assert len(plan) == 12
            assert np.array_equal(labels[plan.indices], plan.labels)

    def test_classes_without_enough_samples_are_skipped(self, rng):
        labels = np.array([0] * 5 + [1] * 5 + [2] * 2 + [3] * 5)
        for _ in range(30):
            plan = pk_batch(labels, 3, 4, rng)
            assert 2 not in set(plan.labels.tolist())
        assert get_metrics().count("sampler.ineligible_classes") == 30

    def test_capacity_error_names_class(self, rng):
        labels = np.array([0] * 5 + [1] * 2 + [2] * 5)
        with pytest.raises(CapacityError) as excinfo:
            pk_batch(labels, 3, 4, rng)
        assert excinfo.value.class_id == 1
        assert excinfo.value.details["class_id"] == 1

    def test_non_positive_sizes(self, rng):
        with pytest.raises(CapacityError):
            pk_batch(balanced_labels(3, 3), 0, 2, rng)

    def test_deterministic_for_seed(self):
        labels = balanced_labels(8, 10)
        first = pk_batch(labels, 4, 4, np.random.default_rng(99))
        second = pk_batch(labels, 4, 4, np.random.default_rng(99))
        assert np.array_equal(first.indices, second.indices)

    def test_uniform_class_and_sample_frequencies(self):
        classes, per_class, P, K = 6, 5, 3, 2
        labels = balanced_labels(classes, per_class)
        trials = 4000
        rng = np.random.default_rng(7)
        class_hits = np.zeros(classes)
        sample_hits = np.zeros(labels.shape[0])
        for _ in range(trials):
            plan = pk_batch(labels, P, K, rng)
            class_hits[np.unique(plan.labels)] += 1
            sample_hits[plan.indices] += 1

        p_class = P / classes
        sigma = np.sqrt(trials * p_class * (1 - p_class))
        assert np.all(np.abs(class_hits - trials * p_class) < 5 * sigma)

        p_sample = p_class * K / per_class
        sigma = np.sqrt(trials * p_sample * (1 - p_sample))
        assert np.all(np.abs(sample_hits - trials * p_sample) < 5 * sigma)


class TestClassBalancedBatch:
    def test_every_class_exactly_k(self, rng):
        labels = rng.permutation(balanced_labels(14, 25))
        plan = class_balanced_batch(labels, 10, rng)
        plan.validate()
        assert len(plan) == 140
        assert plan.P == 14
        assert np.array_equal(np.unique(plan.labels), np.arange(14))

    def test_minimal_batch(self, rng):
        plan = class_balanced_batch(np.array([0, 1]), 1, rng)
        assert len(plan) == 2

    def test_capacity_error(self, rng):
        labels = np.array([0] * 10 + [1] * 3 + [2] * 10)
        with pytest.raises(CapacityError) as excinfo:
            class_balanced_batch(labels, 4, rng)
        assert excinfo.value.class_id == 1


class TestBatchSampler:
    def test_same_iteration_same_batch(self):
        labels = balanced_labels(5, 8)
        sampler = BatchSampler(labels, "class_balanced", seed=3, samples_per_class=4)
        assert np.array_equal(sampler.batch(17).indices, sampler.batch(17).indices)
        other = BatchSampler(labels, "class_balanced", seed=3, samples_per_class=4)
        assert np.array_equal(sampler.batch(17).indices, other.batch(17).indices)

    def test_iterations_differ(self):
        sampler = BatchSampler(balanced_labels(5, 20), "pk", seed=3, P=3, K=5)
        batches = {tuple(sampler.batch(t).indices.tolist()) for t in range(20)}
        assert len(batches) > 1

    def test_batch_size_and_epoch(self):
        labels = balanced_labels(4, 25)
        assert BatchSampler(labels, "pk", seed=0, P=2, K=3).batch_size == 6
        sampler = BatchSampler(labels, "class_balanced", seed=0, samples_per_class=8)
        assert sampler.batch_size == 32
        assert sampler.batches_per_epoch() == 4
        assert batches_per_epoch(0, 10) == 1

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            BatchSampler([0, 1], "session", seed=0)
