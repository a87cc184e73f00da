"""배치 샘플링: P×K 샘플링과 클래스 균형 샘플링"""
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..utils.errors import CapacityError, ConstraintError
from ..utils.logging import get_logger
from ..utils.metrics import count_warning

logger = get_logger(__name__)


@dataclass(frozen=True)
class BatchPlan:
    """배치 구성: 데이터셋 인덱스와 병렬 라벨"""
    indices: np.ndarray
    labels: np.ndarray
    P: int
    K: int

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def validate(self) -> None:
        """배치 불변식: 정확히 P개 라벨, 라벨당 K개, 중복 인덱스 없음"""
        classes, counts = np.unique(self.labels, return_counts=True)
        if classes.size != self.P or np.any(counts != self.K):
            raise ConstraintError(f"배치 구성이 P={self.P}, K={self.K} 와 맞지 않습니다", "labels")
        if np.unique(self.indices).size != self.indices.size:
            raise ConstraintError("배치에 중복 인덱스가 있습니다", "indices")


def _class_members(labels) -> Dict[int, np.ndarray]:
    lab = np.asarray(labels)
    return {int(c): np.flatnonzero(lab == c) for c in np.unique(lab)}


def _assemble(members: Dict[int, np.ndarray], classes, per_class: int, rng: np.random.Generator) -> BatchPlan:
    indices = []
    batch_labels = []
    for c in classes:
        chosen = rng.choice(members[int(c)], size=per_class, replace=False)
        indices.append(chosen)
        batch_labels.append(np.full(per_class, int(c), dtype=np.int64))
    plan = BatchPlan(
        indices=np.concatenate(indices).astype(np.int64),
        labels=np.concatenate(batch_labels),
        P=len(classes),
        K=per_class,
    )
    return plan


def pk_batch(labels, P: int, K: int, rng: np.random.Generator) -> BatchPlan:
    """P개 클래스를 비복원 균등 추출하고 클래스마다 K개 샘플을 비복원 추출"""
    if P <= 0 or K <= 0:
        raise CapacityError(f"P, K는 양수여야 합니다 (P={P}, K={K})")
    members = _class_members(labels)
    eligible = [c for c, idx in members.items() if idx.size >= K]
    if len(eligible) < P:
        deficient = sorted(c for c, idx in members.items() if idx.size < K)
        named = deficient[0] if deficient else None
        raise CapacityError(
            f"P={P}개 클래스가 필요하지만 샘플이 {K}개 이상인 클래스는 {len(eligible)}개뿐입니다"
            + (f" (부족한 클래스: {named})" if named is not None else ""),
            class_id=named,
        )
    if len(eligible) < len(members):
        count_warning("sampler.ineligible_classes", len(members) - len(eligible))
    classes = rng.choice(np.asarray(sorted(eligible)), size=P, replace=False)
    return _assemble(members, classes, K, rng)


def class_balanced_batch(labels, samples_per_class: int, rng: np.random.Generator) -> BatchPlan:
    """모든 클래스에서 정확히 k개씩 추출 (클래스 오름차순)"""
    if samples_per_class <= 0:
        raise CapacityError(f"클래스당 샘플 수는 양수여야 합니다: {samples_per_class}")
    members = _class_members(labels)
    for c, idx in sorted(members.items()):
        if idx.size < samples_per_class:
            raise CapacityError(
                f"클래스 {c}의 샘플 수({idx.size})가 k={samples_per_class}보다 적습니다",
                class_id=c,
            )
    return _assemble(members, sorted(members), samples_per_class, rng)


def batches_per_epoch(dataset_size: int, batch_size: int) -> int:
    """한 epoch = ⌈데이터셋 크기 / 배치 크기⌉ 배치"""
    return max(1, math.ceil(dataset_size / max(1, batch_size)))


class BatchSampler:
    """학습 라벨에 대한 배치 샘플러

    반복마다 (seed, iteration)에서 독립 rng를 만들어, 중간에 재개해도 같은 배치가 나옵니다.
    """

    def __init__(self, labels, strategy: str, seed: int, P: int = 8, K: int = 4, samples_per_class: int = 8):
        if strategy not in ("pk", "class_balanced"):
            raise ValueError(f"알 수 없는 샘플링 방식: {strategy}")
        self.labels = np.asarray(labels)
        self.strategy = strategy
        self.seed = int(seed)
        self.P = P
        self.K = K
        self.samples_per_class = samples_per_class

    @property
    def batch_size(self) -> int:
        if self.strategy == "pk":
            return self.P * self.K
        return np.unique(self.labels).size * self.samples_per_class

    def rng_for(self, iteration: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, int(iteration)])

    def batch(self, iteration: int, rng: Optional[np.random.Generator] = None) -> BatchPlan:
        rng = rng or self.rng_for(iteration)
        if self.strategy == "pk":
            return pk_batch(self.labels, self.P, self.K, rng)
        return class_balanced_batch(self.labels, self.samples_per_class, rng)

    def batches_per_epoch(self) -> int:
        return batches_per_epoch(self.labels.shape[0], self.batch_size)
