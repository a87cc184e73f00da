"""불확실성 분석

- 5분위 구간화
- AP–불확실성 상관 (Pearson r + AP 백분위 버킷 표)
- 갤러리 정제 / 쿼리 제거 실험
- 학습 데이터 라벨 노이즈 순위와 클래스별 진단
- 임베딩 2차원 PCA 투영

불확실성 스칼라는 순전파의 raw s 입니다. 모든 연산은 s의 순위만 사용합니다.
"""
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import pearsonr

from ..schemas.config import CleaningStrategy
from ..schemas.reports import (
    BIN_LABELS,
    ClassDiagnostic,
    CleaningResult,
    CorrelationBucket,
    CorrelationResult,
    DropCurvePoint,
    NoiseRanking,
    ProjectionPoint,
    RetrievalReport,
    UncertaintyBins,
)
from ..utils.errors import ConfigError, InsufficientDataError, UndefinedCorrelationError
from ..utils.logging import get_logger
from ..utils.metrics import count_warning
from ..utils.validation import as_matrix, as_vector, require_finite, require_fraction
from .evaluation import EmbeddedSplit, evaluate

logger = get_logger(__name__)

MAX_DROP_FRACTION = 0.5
CORRELATION_BUCKETS = 10


def bin_by_uncertainty(log_variances: Sequence[float]) -> UncertaintyBins:
    """20/40/60/80 백분위로 5개 구간 할당 (경계값과 같으면 아래 구간)"""
    s = as_vector(log_variances, "log_variances")
    if s.shape[0] < len(BIN_LABELS):
        raise InsufficientDataError(
            f"구간화에는 최소 {len(BIN_LABELS)}개 샘플이 필요합니다", len(BIN_LABELS), int(s.shape[0])
        )
    require_finite(s, "log_variances")
    edges = np.percentile(s, [20, 40, 60, 80])
    assignments = np.searchsorted(edges, s, side="left")
    counts = np.bincount(assignments, minlength=len(BIN_LABELS))
    return UncertaintyBins(
        edges=[float(e) for e in edges],
        assignments=[int(a) for a in assignments],
        counts={label: int(c) for label, c in zip(BIN_LABELS, counts)},
    )


def _bucket_table(ap: np.ndarray, s: np.ndarray) -> List[CorrelationBucket]:
    edges = np.percentile(ap, np.arange(1, CORRELATION_BUCKETS) * (100.0 / CORRELATION_BUCKETS))
    buckets = np.searchsorted(edges, ap, side="left")
    table = []
    for b in range(CORRELATION_BUCKETS):
        members = buckets == b
        if not members.any():
            continue
        table.append(CorrelationBucket(
            bucket=b,
            ap_min=float(ap[members].min()),
            ap_max=float(ap[members].max()),
            mean_ap=float(ap[members].mean()),
            mean_s=float(s[members].mean()),
            std_s=float(s[members].std()),
            count=int(members.sum()),
        ))
    return table


def ap_uncertainty_correlation(report: RetrievalReport) -> CorrelationResult:
    """쿼리별 (AP, s)의 Pearson 상관계수와 AP 백분위 버킷별 s 통계"""
    ap = np.array([q.ap for q in report.per_query], dtype=np.float64)
    s = np.array([q.s for q in report.per_query], dtype=np.float64)
    if ap.shape[0] < 3:
        raise InsufficientDataError("상관 분석에는 최소 3개 쿼리가 필요합니다", 3, int(ap.shape[0]))
    for name, values in (("ap", ap), ("s", s)):
        if np.all(values == values[0]):
            raise UndefinedCorrelationError(f"{name}의 분산이 0이라 상관계수가 정의되지 않습니다", name)
    r, _ = pearsonr(ap, s)
    return CorrelationResult(
        pearson_r=float(np.clip(r, -1.0, 1.0)),
        n=int(ap.shape[0]),
        buckets=_bucket_table(ap, s),
    )


def _drop_indices(
    log_variances: np.ndarray,
    count: int,
    strategy: CleaningStrategy,
    rng: Optional[np.random.Generator],
) -> np.ndarray:
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    if strategy == "by_uncertainty":
        return np.sort(np.argsort(-log_variances, kind="stable")[:count])
    if strategy == "random":
        if rng is None:
            raise ConfigError("random 전략에는 rng가 필요합니다", "seed")
        return np.sort(rng.choice(log_variances.shape[0], size=count, replace=False))
    raise ConfigError(f"알 수 없는 정제 전략: {strategy}", "strategy")


def clean_gallery(
    query: EmbeddedSplit,
    gallery: EmbeddedSplit,
    fraction: float,
    strategy: CleaningStrategy,
    seed: Optional[int] = None,
    ks: Sequence[int] = (1, 5, 10),
    map_before: Optional[float] = None,
) -> CleaningResult:
    """갤러리에서 ⌊fraction × 크기⌋개 항목을 제거한 뒤 mAP 재평가

    by_uncertainty는 s 상위 항목을, random은 seed 기반으로 균등하게 제거합니다.
    클래스가 갤러리에서 완전히 사라져도 제거하고 해당 클래스를 기록합니다.
    """
    fraction = require_fraction(fraction, "gallery_fraction", 0.0, MAX_DROP_FRACTION)
    if map_before is None:
        map_before = evaluate(query, gallery, ks).micro_map
    count = int(math.floor(fraction * len(gallery)))
    rng = np.random.default_rng(seed) if strategy == "random" else None
    dropped = _drop_indices(gallery.log_variances, count, strategy, rng)
    keep = np.setdiff1d(np.arange(len(gallery)), dropped)
    reduced = gallery.subset(keep)

    emptied = sorted(set(gallery.labels.tolist()) - set(reduced.labels.tolist()))
    if emptied:
        logger.warning(f"gallery cleaning emptied classes {emptied}")
        count_warning("cleaning.emptied_classes", len(emptied))

    map_after = evaluate(query, reduced, ks).micro_map if count else map_before
    return CleaningResult(
        drop_fraction=fraction,
        strategy=strategy,
        seed=seed if strategy == "random" else None,
        map_before=map_before,
        map_after=map_after,
        dropped_ids=[int(i) for i in gallery.ids[dropped]],
        emptied_classes=[int(c) for c in emptied],
    )


def drop_query_experiment(
    query: EmbeddedSplit,
    gallery: EmbeddedSplit,
    fractions: Sequence[float] = (0.0, 0.1, 0.2, 0.3, 0.4),
    strategies: Sequence[CleaningStrategy] = ("by_uncertainty", "random"),
    seeds: Sequence[int] = (0,),
    ks: Sequence[int] = (1, 5, 10),
) -> List[DropCurvePoint]:
    """쿼리 쪽 제거 곡선: 비율과 전략마다 남은 쿼리의 mAP

    쿼리 AP는 다른 쿼리와 독립이므로 전체 평가를 한 번 수행하고 부분집합 평균을 구합니다.
    """
    for f in fractions:
        require_fraction(f, "query_fractions", 0.0, MAX_DROP_FRACTION)
    report = evaluate(query, gallery, ks)
    ap = np.array([q.ap for q in report.per_query])
    s = np.array([q.s for q in report.per_query])

    curve: List[DropCurvePoint] = []
    for fraction in fractions:
        count = int(math.floor(fraction * ap.shape[0]))
        for strategy in strategies:
            runs = [None] if strategy == "by_uncertainty" else list(seeds)
            for seed in runs:
                rng = np.random.default_rng(seed) if seed is not None else None
                dropped = _drop_indices(s, count, strategy, rng)
                keep = np.setdiff1d(np.arange(ap.shape[0]), dropped)
                curve.append(DropCurvePoint(
                    fraction=float(fraction),
                    strategy=strategy,
                    seed=seed,
                    map=float(ap[keep].mean()),
                    retained_queries=int(keep.shape[0]),
                ))
    return curve


def rank_training_noise(
    ids: Sequence[int],
    labels: Sequence[int],
    log_variances: Sequence[float],
    top_n: int,
    noise_mask: Optional[Sequence[bool]] = None,
    per_class_top: int = 5,
) -> NoiseRanking:
    """s 내림차순 학습 샘플 순위와 뒤집힌 라벨 탐지 precision@n"""
    if top_n < 1:
        raise ConfigError(f"top_n은 1 이상이어야 합니다: {top_n}", "top_n")
    ids_arr = np.asarray(ids, dtype=np.int64)
    lab = np.asarray(labels, dtype=np.int64)
    s = as_vector(log_variances, "log_variances", length=ids_arr.shape[0])
    order = np.argsort(-s, kind="stable")
    top_n = min(top_n, int(order.shape[0]))

    per_class: Dict[int, List[int]] = {}
    for c in np.unique(lab):
        members = order[lab[order] == c]
        per_class[int(c)] = [int(i) for i in ids_arr[members[:per_class_top]]]

    precision: Optional[float] = None
    base_rate: Optional[float] = None
    applicable = False
    if noise_mask is not None:
        mask = np.asarray(noise_mask, dtype=bool)
        base_rate = float(mask.mean()) if mask.size else 0.0
        if mask.any():
            applicable = True
            precision = float(mask[order[:top_n]].mean())

    return NoiseRanking(
        ranked_ids=[int(i) for i in ids_arr[order]],
        top_n=top_n,
        precision_at_n=precision,
        base_rate=base_rate,
        applicable=applicable,
        per_class=per_class,
    )


def class_diagnostics(
    train_labels: Sequence[int],
    train_log_variances: Sequence[float],
    report: RetrievalReport,
) -> List[ClassDiagnostic]:
    """클래스별 학습 샘플 수, 평가 mAP, 평균 s (다수/소수 클래스 비교용)"""
    lab = np.asarray(train_labels, dtype=np.int64)
    s = as_vector(train_log_variances, "train_log_variances", length=lab.shape[0])
    classes = sorted(set(lab.tolist()) | set(report.per_class_map))
    diagnostics = []
    for c in classes:
        members = lab == c
        diagnostics.append(ClassDiagnostic(
            label=int(c),
            train_count=int(members.sum()),
            map=report.per_class_map.get(c),
            mean_s=float(s[members].mean()) if members.any() else None,
        ))
    return diagnostics


def principal_components(embeddings, n_components: int = 2) -> np.ndarray:
    """중심화한 임베딩의 SVD로 상위 주성분 좌표 계산

    각 주성분은 절댓값이 가장 큰 적재값이 양수가 되도록 부호를 고정합니다.
    임베딩 차원이 n_components보다 작으면 남는 열은 0입니다.
    """
    emb = as_matrix(embeddings, "embeddings")
    if emb.shape[0] == 0:
        raise InsufficientDataError("투영할 임베딩이 없습니다", 1, 0)
    require_finite(emb, "embeddings")
    centered = emb - emb.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    k = min(n_components, vt.shape[0])
    components = vt[:k]
    signs = np.sign(components[np.arange(k), np.argmax(np.abs(components), axis=1)])
    components = components * np.where(signs == 0, 1.0, signs)[:, None]
    coords = np.zeros((emb.shape[0], n_components))
    coords[:, :k] = centered @ components.T
    return coords


def project_split(split: EmbeddedSplit) -> List[ProjectionPoint]:
    """2차원 PCA 투영 + 클래스/불확실성 구간 태그

    center_distance는 임베딩 공간에서 같은 (관측) 라벨 평균까지의 거리입니다.
    """
    coords = principal_components(split.embeddings, 2)
    bins = bin_by_uncertainty(split.log_variances)
    distances = np.zeros(len(split.ids))
    for c in np.unique(split.labels):
        members = split.labels == c
        center = split.embeddings[members].mean(axis=0)
        distances[members] = np.linalg.norm(split.embeddings[members] - center, axis=1)
    return [
        ProjectionPoint(
            id=int(split.ids[i]),
            label=int(split.labels[i]),
            pc1=float(coords[i, 0]),
            pc2=float(coords[i, 1]),
            s=float(split.log_variances[i]),
            bin=BIN_LABELS[bins.assignments[i]],
            center_distance=float(distances[i]),
        )
        for i in range(len(split.ids))
    ]
