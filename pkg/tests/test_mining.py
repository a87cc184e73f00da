"""triplet 마이닝 테스트 (완전 탐색 기준 구현과 비교)"""
import numpy as np
import pytest

from src.hetero.mining import (
    DistanceMatrix,
    Triplet,
    all_positive_pairs,
    batch_hard_triplets,
    check_triplets,
    mine,
    pairwise_distances,
    semi_hard_triplets,
)
from src.utils.errors import ConstraintError, ShapeError
from src.utils.metrics import get_metrics


def tie_heavy_matrix(rng, size: int) -> DistanceMatrix:
    """작은 정수 거리로 동점이 많은 대칭 행렬"""
    upper = np.triu(rng.integers(1, 5, size=(size, size)).astype(np.float64), 1)
    return DistanceMatrix(upper + upper.T)


def oracle_semi_hard(dist, labels, margin):
    values = dist.values.tolist()
    triplets = []
    n = len(labels)
    for a in range(n):
        negatives = [j for j in range(n) if labels[j] != labels[a]]
        for p in range(n):
            if p == a or labels[p] != labels[a] or not negatives:
                continue
            best = None
            for j in negatives:
                if values[a][p] < values[a][j] < values[a][p] + margin:
                    if best is None or values[a][j] < values[a][best]:
                        best = j
            if best is None:
                for j in negatives:
                    if best is None or values[a][j] > values[a][best]:
                        best = j
            triplets.append(Triplet(a, p, best))
    return triplets


def oracle_batch_hard(dist, labels):
    values = dist.values.tolist()
    triplets = []
    n = len(labels)
    for a in range(n):
        positives = [j for j in range(n) if j != a and labels[j] == labels[a]]
        negatives = [j for j in range(n) if labels[j] != labels[a]]
        if not positives or not negatives:
            continue
        p = positives[0]
        for j in positives:
            if values[a][j] > values[a][p]:
                p = j
        q = negatives[0]
        for j in negatives:
            if values[a][j] < values[a][q]:
                q = j
        triplets.append(Triplet(a, p, q))
    return triplets


def random_labels(rng, size: int) -> np.ndarray:
    return rng.integers(0, max(2, size // 3), size=size)


def random_oracle_batch(rng):
    """크기 2..64, 클래스가 드문 배치와 P×K처럼 조밀한 배치를 섞어 생성"""
    size = int(rng.integers(2, 65))
    if rng.random() < 0.5:
        labels = random_labels(rng, size)
    else:
        labels = rng.integers(0, int(rng.integers(2, 9)), size=size)
    if rng.random() < 0.5:
        dist = tie_heavy_matrix(rng, size)
    else:
        dist = pairwise_distances(rng.standard_normal((size, int(rng.integers(1, 9)))))
    return dist, labels


ORACLE_BATCHES = 500


class TestPairwiseDistances:
    def test_known_values(self):
        dist = pairwise_distances([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
        expected = np.array([[0, 5, 10], [5, 0, 5], [10, 5, 0]], dtype=np.float64)
        np.testing.assert_allclose(dist.values, expected, atol=1e-12)

    def test_symmetric_zero_diagonal_non_negative(self, rng):
        emb = rng.standard_normal((30, 7)) * 100.0
        values = pairwise_distances(emb).values
        assert np.array_equal(values, values.T)
        assert np.all(np.diag(values) == 0.0)
        assert np.all(values >= 0.0)

    def test_duplicate_rows_are_zero(self):
        values = pairwise_distances([[3.0, 1.0], [3.0, 1.0], [0.5, 2.0]]).values
        assert values[0, 1] == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            pairwise_distances(np.zeros((0, 3)))


class TestAllPositivePairs:
    @pytest.mark.parametrize(
        "labels, expected",
        [
            ([0, 0, 0, 0, 1], 12),
            ([0, 1, 2, 3], 0),
            ([0, 0, 1, 1, 2, 2, 3, 3], 8),
        ],
    )
    def test_counts(self, labels, expected):
        assert len(all_positive_pairs(labels)) == expected

    def test_order(self):
        assert all_positive_pairs([1, 0, 1, 1]) == [(0, 2), (0, 3), (2, 0), (2, 3), (3, 0), (3, 2)]


class TestSemiHard:
    def test_matches_oracle_on_random_batches(self, rng):
        sizes = []
        for _ in range(ORACLE_BATCHES):
            dist, labels = random_oracle_batch(rng)
            margin = float(rng.choice([0.0, 0.5, 1.0, 2.5]))
            sizes.append(dist.order)
            assert semi_hard_triplets(dist, labels, margin) == oracle_semi_hard(dist, labels, margin)
        assert max(sizes) >= 60

    def test_matches_oracle_on_real_embeddings(self, rng):
        for _ in range(5):
            emb = rng.standard_normal((64, 4))
            labels = rng.integers(0, 8, size=64)
            dist = pairwise_distances(emb)
            assert semi_hard_triplets(dist, labels, 0.7) == oracle_semi_hard(dist, labels, 0.7)

    def test_one_triplet_per_positive_pair(self):
        labels = [0, 0, 0, 1, 1, 2]
        dist = pairwise_distances(np.arange(6, dtype=np.float64)[:, None])
        triplets = semi_hard_triplets(dist, labels, 1.0)
        assert [(t.anchor, t.positive) for t in triplets] == all_positive_pairs(labels)

    def test_band_choice_and_fallback(self):
        # 1차원: a=0, p=1, negatives at 1.5, 1.8, 5
        dist = pairwise_distances(np.array([[0.0], [1.0], [1.5], [1.8], [5.0]]))
        labels = [0, 0, 1, 2, 3]
        triplets = semi_hard_triplets(dist, labels, 1.0)
        assert triplets[0] == Triplet(0, 1, 2)
        # margin 0: 띠가 비어 가장 먼 negative 사용
        assert semi_hard_triplets(dist, labels, 0.0)[0] == Triplet(0, 1, 4)

    def test_single_class_batch_is_counted(self):
        dist = pairwise_distances(np.zeros((3, 2)))
        assert semi_hard_triplets(dist, [4, 4, 4], 1.0) == []
        assert get_metrics().count("mining.skipped_pairs") == 6

    def test_negative_margin(self, rng):
        with pytest.raises(ConstraintError):
            semi_hard_triplets(tie_heavy_matrix(rng, 3), [0, 0, 1], -0.1)

    def test_label_length_mismatch(self, rng):
        with pytest.raises(ShapeError):
            semi_hard_triplets(tie_heavy_matrix(rng, 3), [0, 1], 1.0)


class TestBatchHard:
    def test_matches_oracle_on_random_batches(self, rng):
        sizes = []
        for _ in range(ORACLE_BATCHES):
            dist, labels = random_oracle_batch(rng)
            sizes.append(dist.order)
            assert batch_hard_triplets(dist, labels) == oracle_batch_hard(dist, labels)
        assert max(sizes) >= 60

    def test_at_most_one_per_anchor(self, rng):
        emb = rng.standard_normal((64, 3))
        labels = rng.integers(0, 6, size=64)
        triplets = batch_hard_triplets(pairwise_distances(emb), labels)
        anchors = [t.anchor for t in triplets]
        assert len(anchors) == len(set(anchors))
        check_triplets(triplets, labels)

    def test_lowest_index_wins_ties(self):
        dist = DistanceMatrix(np.array([
            [0.0, 2.0, 2.0, 1.0, 1.0],
            [2.0, 0.0, 1.0, 1.0, 1.0],
            [2.0, 1.0, 0.0, 1.0, 1.0],
            [1.0, 1.0, 1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0, 1.0, 0.0],
        ]))
        triplets = batch_hard_triplets(dist, [0, 0, 0, 1, 1])
        assert triplets[0] == Triplet(0, 1, 3)

    def test_singleton_anchor_skipped(self):
        dist = pairwise_distances(np.arange(3, dtype=np.float64)[:, None])
        triplets = batch_hard_triplets(dist, [0, 0, 1])
        assert [t.anchor for t in triplets] == [0, 1]
        assert get_metrics().count("mining.skipped_anchors") == 1


class TestMineDispatch:
    def test_dispatch(self, rng):
        dist = tie_heavy_matrix(rng, 10)
        labels = random_labels(rng, 10)
        assert mine("semi_hard", dist, labels, 1.0) == semi_hard_triplets(dist, labels, 1.0)
        assert mine("batch_hard", dist, labels) == batch_hard_triplets(dist, labels)

    def test_unknown_strategy(self, rng):
        with pytest.raises(ValueError):
            mine("hardest", tie_heavy_matrix(rng, 3), [0, 0, 1])

    def test_invariant_violation_detected(self):
        with pytest.raises(ConstraintError):
            check_triplets([Triplet(0, 1, 2)], [0, 0, 0])
