"""배치 거리 행렬과 triplet 마이닝

마이닝은 임베딩 거리와 라벨만 사용합니다. log-variance는 triplet 선택에 관여하지 않습니다.
동점은 항상 가장 작은 인덱스를 선택합니다.
"""
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from ..utils.errors import ConstraintError, ShapeError
from ..utils.logging import get_logger
from ..utils.metrics import count_warning
from ..utils.validation import as_matrix

logger = get_logger(__name__)


class Triplet(NamedTuple):
    """배치 인덱스 (anchor, positive, negative)"""
    anchor: int
    positive: int
    negative: int


@dataclass(frozen=True)
class DistanceMatrix:
    """배치 내 쌍별 유클리드 거리 (대칭, 대각 0, 음수 없음)"""
    values: np.ndarray

    @property
    def order(self) -> int:
        return int(self.values.shape[0])


def pairwise_distances(embeddings) -> DistanceMatrix:
    """‖u‖² + ‖v‖² - 2u·v 전개로 거리 행렬 계산 (sqrt 전에 0으로 클램프)"""
    emb = as_matrix(embeddings, "embeddings")
    if emb.shape[0] == 0:
        raise ShapeError("임베딩이 비어 있습니다", "embeddings")
    sq = np.sum(emb * emb, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (emb @ emb.T)
    d2 = np.maximum(d2, 0.0)
    # BLAS 반올림으로 생기는 비대칭 제거
    d2 = (d2 + d2.T) / 2.0
    np.fill_diagonal(d2, 0.0)
    return DistanceMatrix(np.sqrt(d2))


def _labels_for(dist: DistanceMatrix, labels) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.ndim != 1 or lab.shape[0] != dist.order:
        raise ShapeError(f"라벨 길이({lab.shape})가 거리 행렬 크기({dist.order})와 다릅니다", "labels")
    return lab


def all_positive_pairs(labels) -> List[Tuple[int, int]]:
    """같은 클래스의 모든 순서쌍 (i, j), i ≠ j. anchor 오름차순, positive 오름차순"""
    lab = np.asarray(labels)
    pairs: List[Tuple[int, int]] = []
    for i in range(lab.shape[0]):
        for j in np.flatnonzero(lab == lab[i]):
            if j != i:
                pairs.append((i, int(j)))
    return pairs


def check_triplets(triplets: Sequence[Triplet], labels) -> None:
    """triplet 라벨 불변식 검사: a ≠ p, label(a) = label(p), label(n) ≠ label(a)"""
    lab = np.asarray(labels)
    for t in triplets:
        if t.anchor == t.positive or lab[t.anchor] != lab[t.positive] or lab[t.negative] == lab[t.anchor]:
            raise ConstraintError(f"triplet 라벨 불변식 위반: {tuple(t)}", "triplets")


def semi_hard_triplets(dist: DistanceMatrix, labels, margin: float) -> List[Triplet]:
    """semi-hard negative 마이닝

    모든 anchor-positive 순서쌍마다 D(a,p) < D(a,n) < D(a,p) + m 을 만족하는 negative 중
    D(a,n)이 가장 작은 것을 고릅니다. 해당 negative가 없으면 D(a,n)이 가장 큰 negative로 대체합니다.
    """
    if margin < 0:
        raise ConstraintError(f"마진은 0 이상이어야 합니다: {margin}", "margin")
    lab = _labels_for(dist, labels)
    values = dist.values
    triplets: List[Triplet] = []
    skipped = 0

    for a in range(dist.order):
        positives = np.flatnonzero(lab == lab[a])
        positives = positives[positives != a]
        if positives.size == 0:
            continue
        negatives = np.flatnonzero(lab != lab[a])
        if negatives.size == 0:
            skipped += positives.size
            continue

        d_an = values[a, negatives]
        # 가장 먼 negative (동점이면 첫 번째 = 가장 작은 인덱스)
        fallback = int(negatives[np.argmax(d_an)])
        for p in positives:
            d_ap = values[a, p]
            band = (d_an > d_ap) & (d_an < d_ap + margin)
            if band.any():
                candidates = np.flatnonzero(band)
                chosen = int(negatives[candidates[np.argmin(d_an[candidates])]])
            else:
                chosen = fallback
            triplets.append(Triplet(a, int(p), chosen))

    if skipped:
        logger.warning(f"semi-hard mining skipped {skipped} anchor-positive pairs without negatives")
        count_warning("mining.skipped_pairs", skipped)
    check_triplets(triplets, lab)
    return triplets


def batch_hard_triplets(dist: DistanceMatrix, labels) -> List[Triplet]:
    """batch-hard 마이닝: anchor마다 가장 먼 positive와 가장 가까운 negative"""
    lab = _labels_for(dist, labels)
    values = dist.values
    triplets: List[Triplet] = []
    skipped = 0

    for a in range(dist.order):
        positives = np.flatnonzero(lab == lab[a])
        positives = positives[positives != a]
        negatives = np.flatnonzero(lab != lab[a])
        if positives.size == 0 or negatives.size == 0:
            skipped += 1
            continue
        p = int(positives[np.argmax(values[a, positives])])
        n = int(negatives[np.argmin(values[a, negatives])])
        triplets.append(Triplet(a, p, n))

    if skipped:
        logger.warning(f"batch-hard mining skipped {skipped} anchors without positive or negative")
        count_warning("mining.skipped_anchors", skipped)
    check_triplets(triplets, lab)
    return triplets


def mine(strategy: str, dist: DistanceMatrix, labels, margin: float = 0.0) -> List[Triplet]:
    """설정 이름으로 마이닝 전략 선택"""
    if strategy == "semi_hard":
        return semi_hard_triplets(dist, labels, margin)
    if strategy == "batch_hard":
        return batch_hard_triplets(dist, labels)
    raise ValueError(f"알 수 없는 마이닝 전략: {strategy}")
