"""triplet 손실 함수

vanilla triplet, 이분산(heteroscedastic) triplet, k-tuplet 일반화, 이분산 회귀 손실과
배치 단위 손실/해석적 그래디언트를 제공합니다. 모든 함수는 입력에 대한 순수 함수입니다.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..schemas.config import MarginMode
from ..utils.errors import ArityError, ConstraintError, InvalidInputError, ShapeError, TripletIndexError
from ..utils.validation import as_vector, require_finite

# log-variance 클램프 구간
S_BOUNDS: Tuple[float, float] = (-10.0, 10.0)
# 그래디언트 계산용 거리 안정화 항 (순방향 값은 정확한 노름)
DIST_EPS = 1e-12

LOSS_KINDS = ("vanilla", "hetero")


@dataclass(frozen=True)
class EmbeddingOutput:
    """인코더 출력 R^{d+1}: 임베딩과 log-variance s = log σ²"""
    embedding: np.ndarray
    log_variance: float

    @classmethod
    def of(cls, embedding: Sequence[float], log_variance: float = 0.0) -> "EmbeddingOutput":
        return cls(as_vector(embedding, "embedding"), float(log_variance))

    @property
    def dim(self) -> int:
        return int(self.embedding.shape[0])


@dataclass(frozen=True)
class LossTerms:
    """손실 구성 항: data_term + log_term + decay_term"""
    data_term: float
    log_term: float
    decay_term: float = 0.0

    @property
    def total(self) -> float:
        return self.data_term + self.log_term + self.decay_term


@dataclass(frozen=True)
class BatchOutput:
    """배치 인코더 출력 (B×d 임베딩, 길이 B의 s)"""
    embeddings: np.ndarray
    log_variances: np.ndarray

    def __len__(self) -> int:
        return int(self.embeddings.shape[0])

    def item(self, index: int) -> EmbeddingOutput:
        return EmbeddingOutput(self.embeddings[index], float(self.log_variances[index]))

    def with_log_variances(self, log_variances: np.ndarray) -> "BatchOutput":
        return BatchOutput(self.embeddings, np.asarray(log_variances, dtype=np.float64))


@dataclass
class LossGradients:
    """배치 손실의 그래디언트

    weights/biases 항목은 손실이 파라미터에 직접 의존하는 부분(가중치 감쇠 2λW)만 담습니다.
    인코더 역전파 결과와 합쳐야 전체 파라미터 그래디언트가 됩니다.
    """
    embeddings: np.ndarray
    log_variances: np.ndarray
    weights: List[np.ndarray]
    biases: List[np.ndarray]


def softplus(x):
    """overflow 없는 ln(1 + e^x) = max(x, 0) + ln(1 + e^{-|x|})"""
    arr = np.asarray(x, dtype=np.float64)
    require_finite(arr, "x")
    out = np.maximum(arr, 0.0) + np.log1p(np.exp(-np.abs(arr)))
    if out.ndim == 0:
        return float(out)
    return out


def euclidean_distance(u: Sequence[float], v: Sequence[float]) -> float:
    """유클리드 거리 (순방향 값은 정확한 노름)"""
    u_arr = as_vector(u, "u")
    v_arr = as_vector(v, "v")
    if u_arr.shape != v_arr.shape:
        raise ShapeError(f"벡터 길이가 다릅니다: {u_arr.shape[0]} != {v_arr.shape[0]}", "v")
    return float(np.linalg.norm(u_arr - v_arr))


def _margin_value(x, mode: MarginMode):
    """마진 함수 적용: softplus(x) 또는 max(x + m, 0)"""
    if mode.kind == "softplus":
        return softplus(x)
    return np.maximum(np.asarray(x, dtype=np.float64) + mode.margin, 0.0)


def _margin_slope(x: np.ndarray, mode: MarginMode) -> np.ndarray:
    if mode.kind == "softplus":
        return expit(x)
    return (x + mode.margin > 0.0).astype(np.float64)


def _check_same_dim(*items: EmbeddingOutput) -> None:
    dims = {item.dim for item in items}
    if len(dims) > 1:
        raise ShapeError(f"임베딩 차원이 서로 다릅니다: {sorted(dims)}", "embedding")


def triplet_loss(a: EmbeddingOutput, p: EmbeddingOutput, n: EmbeddingOutput, mode: MarginMode) -> float:
    """vanilla triplet 손실 margin_fn(D(a,p) - D(a,n)); log-variance는 무시"""
    _check_same_dim(a, p, n)
    x = euclidean_distance(a.embedding, p.embedding) - euclidean_distance(a.embedding, n.embedding)
    return float(_margin_value(x, mode))


def _attenuated(l_tri: float, log_variances: Sequence[float], s_bounds: Tuple[float, float] = S_BOUNDS) -> LossTerms:
    """e^{-s} 가중 data 항과 s/2 벌점 항 (합산 순서 고정)"""
    weight = 0.0
    log_sum = 0.0
    for s in log_variances:
        if not math.isfinite(s):
            raise InvalidInputError(f"log-variance가 유한하지 않습니다: {s}", "log_variance")
        if not s_bounds[0] <= s <= s_bounds[1]:
            raise ConstraintError(f"log-variance가 클램프 구간 {s_bounds}을 벗어났습니다: {s}", "log_variance")
        weight += math.exp(-s)
        log_sum += s
    return LossTerms(data_term=weight * l_tri / 2.0, log_term=log_sum / 2.0)


def hetero_triplet_loss(a: EmbeddingOutput, p: EmbeddingOutput, n: EmbeddingOutput, mode: MarginMode) -> LossTerms:
    """이분산 triplet 손실 (가중치 감쇠는 배치 단위에서 적용, s는 S_BOUNDS 안이어야 함)"""
    return _attenuated(triplet_loss(a, p, n, mode), (a.log_variance, p.log_variance, n.log_variance))


def ktuple_loss(items: Sequence[EmbeddingOutput], mode: MarginMode) -> LossTerms:
    """k-tuplet 일반화 (k ≥ 3)

    items는 x_0 기준 거리 오름차순이어야 합니다:
    D(x_0, x_1) < D(x_0, x_j) < D(x_0, x_{k-1}), 1 < j < k-1.
    log 항은 triplet과 같은 부호 규약(+Σ s_j / 2)을 따릅니다.
    """
    k = len(items)
    if k < 3:
        raise ArityError(f"k-tuple은 최소 3개 원소가 필요합니다 (k={k})", "items")
    _check_same_dim(*items)
    anchor = items[0].embedding
    d_first = euclidean_distance(anchor, items[1].embedding)
    d_last = euclidean_distance(anchor, items[-1].embedding)
    for j in range(2, k - 1):
        d_j = euclidean_distance(anchor, items[j].embedding)
        if not d_first < d_j < d_last:
            raise ConstraintError(
                f"k-tuple 순서 제약 위반: j={j}, D(x0,x1)={d_first:.6g}, D(x0,xj)={d_j:.6g}, D(x0,xk)={d_last:.6g}",
                "items",
            )
    l_tri = triplet_loss(items[0], items[1], items[-1], mode)
    return _attenuated(l_tri, [item.log_variance for item in items])


def hetero_regression_loss(predictions: Sequence[float], targets: Sequence[float], log_variances: Sequence[float]) -> float:
    """이분산 회귀 손실 (1/N) Σ [e^{-s}(y - f)²/2 + s/2]"""
    f = as_vector(predictions, "predictions")
    y = as_vector(targets, "targets", length=f.shape[0])
    s = as_vector(log_variances, "log_variances", length=f.shape[0])
    if f.shape[0] == 0:
        raise ShapeError("최소 1개의 샘플이 필요합니다", "predictions")
    require_finite(s, "log_variances")
    terms = np.exp(-s) * (y - f) ** 2 / 2.0 + s / 2.0
    return float(np.mean(terms))


def triplet_regression_value(x: EmbeddingOutput, y: EmbeddingOutput, z: EmbeddingOutput, mode: MarginMode) -> float:
    """triplet을 회귀로 본 값 d_i = f_tri(x, y, z)

    단위 벡터와 hinge(m)에서 결과는 [0, 2 + m] 범위입니다.
    """
    return triplet_loss(x, y, z, mode)


def triplet_index(triplets, batch_size: int) -> np.ndarray:
    """triplet 목록을 (N, 3) 정수 배열로 변환하고 인덱스 범위를 검사"""
    idx = np.asarray(triplets, dtype=np.int64)
    if idx.size == 0:
        return idx.reshape(0, 3)
    if idx.ndim != 2 or idx.shape[1] != 3:
        raise ShapeError(f"triplet 배열은 (N, 3) 모양이어야 합니다: {idx.shape}", "triplets")
    if idx.min() < 0 or idx.max() >= batch_size:
        raise TripletIndexError(f"triplet 인덱스가 배치 범위 [0, {batch_size})를 벗어났습니다", "triplets")
    return idx


def weight_decay_value(weights: Optional[Sequence[np.ndarray]], weight_decay: float) -> float:
    """λ‖W‖² (편향은 제외)"""
    if not weights or weight_decay == 0.0:
        return 0.0
    return weight_decay * float(sum(np.sum(w * w) for w in weights))


def _triplet_geometry(outputs: BatchOutput, idx: np.ndarray):
    emb = outputs.embeddings
    a, p, n = idx[:, 0], idx[:, 1], idx[:, 2]
    diff_ap = emb[a] - emb[p]
    diff_an = emb[a] - emb[n]
    d_ap = np.linalg.norm(diff_ap, axis=1)
    d_an = np.linalg.norm(diff_an, axis=1)
    return a, p, n, diff_ap, diff_an, d_ap, d_an


def batch_loss(
    outputs: BatchOutput,
    triplets,
    mode: MarginMode,
    weight_decay: float = 0.0,
    weights: Optional[Sequence[np.ndarray]] = None,
    loss: str = "hetero",
) -> LossTerms:
    """배치 손실 L = (1/N) Σ f(a,p,n) + λ‖W‖², N = triplet 수"""
    if loss not in LOSS_KINDS:
        raise ValueError(f"알 수 없는 손실 종류: {loss}")
    idx = triplet_index(triplets, len(outputs))
    decay = weight_decay_value(weights, weight_decay)
    count = idx.shape[0]
    if count == 0:
        return LossTerms(0.0, 0.0, decay)

    a, p, n, _, _, d_ap, d_an = _triplet_geometry(outputs, idx)
    l_tri = _margin_value(d_ap - d_an, mode)
    if loss == "vanilla":
        return LossTerms(float(np.sum(l_tri)) / count, 0.0, decay)

    s = outputs.log_variances
    require_finite(s, "log_variances")
    w = np.exp(-s[a]) + np.exp(-s[p]) + np.exp(-s[n])
    data = float(np.sum(w * l_tri / 2.0)) / count
    log = float(np.sum((s[a] + s[p] + s[n]) / 2.0)) / count
    return LossTerms(data, log, decay)


def project_log_variance_gradient(grad_s: np.ndarray, s: np.ndarray, s_bounds: Tuple[float, float]) -> np.ndarray:
    """클램프 경계에 있는 s의 바깥 방향 그래디언트 성분 제거"""
    lo, hi = s_bounds
    projected = grad_s.copy()
    projected[(s >= hi) & (projected < 0.0)] = 0.0
    projected[(s <= lo) & (projected > 0.0)] = 0.0
    return projected


def loss_gradients(
    outputs: BatchOutput,
    triplets,
    mode: MarginMode,
    weight_decay: float = 0.0,
    weights: Optional[Sequence[np.ndarray]] = None,
    loss: str = "hetero",
    s_bounds: Tuple[float, float] = S_BOUNDS,
) -> LossGradients:
    """batch_loss의 해석적 그래디언트

    임베딩 좌표, 각 s, 그리고 가중치 감쇠를 통한 파라미터 그래디언트(2λW)를 반환합니다.
    누적은 np.add.at 으로 triplet 순서대로 수행되어 결정적입니다.
    """
    if loss not in LOSS_KINDS:
        raise ValueError(f"알 수 없는 손실 종류: {loss}")
    idx = triplet_index(triplets, len(outputs))
    grad_e = np.zeros_like(outputs.embeddings, dtype=np.float64)
    grad_s = np.zeros(len(outputs), dtype=np.float64)
    weights = list(weights or [])
    grad_w = [2.0 * weight_decay * w for w in weights]
    grad_b: List[np.ndarray] = []

    count = idx.shape[0]
    if count > 0:
        a, p, n, diff_ap, diff_an, d_ap, d_an = _triplet_geometry(outputs, idx)
        x = d_ap - d_an
        l_tri = _margin_value(x, mode)
        slope = _margin_slope(x, mode)

        if loss == "hetero":
            s = outputs.log_variances
            e_a, e_p, e_n = np.exp(-s[a]), np.exp(-s[p]), np.exp(-s[n])
            dl = (e_a + e_p + e_n) / 2.0
            np.add.at(grad_s, a, (0.5 - e_a * l_tri / 2.0) / count)
            np.add.at(grad_s, p, (0.5 - e_p * l_tri / 2.0) / count)
            np.add.at(grad_s, n, (0.5 - e_n * l_tri / 2.0) / count)
            grad_s = project_log_variance_gradient(grad_s, s, s_bounds)
        else:
            dl = np.ones(count, dtype=np.float64)

        g = (dl * slope / count)[:, None]
        # d ‖u-v‖ / du ≈ (u-v) / sqrt(‖u-v‖² + ε)
        unit_ap = diff_ap / np.sqrt(d_ap ** 2 + DIST_EPS)[:, None]
        unit_an = diff_an / np.sqrt(d_an ** 2 + DIST_EPS)[:, None]
        np.add.at(grad_e, a, g * (unit_ap - unit_an))
        np.add.at(grad_e, p, -g * unit_ap)
        np.add.at(grad_e, n, g * unit_an)

    return LossGradients(embeddings=grad_e, log_variances=grad_s, weights=grad_w, biases=grad_b)
