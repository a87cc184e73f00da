"""검색 평가: 쿼리별 AP, micro/macro mAP, top-k 정확도, leave-one-out"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..config import get_settings
from ..schemas.reports import QueryResult, RetrievalExample, RetrievalReport
from ..utils.errors import EmptyReportError, ExcludedQueryError, InsufficientDataError, ShapeError
from ..utils.logging import get_logger
from ..utils.metrics import count_warning
from ..utils.validation import as_matrix, require_same_length

logger = get_logger(__name__)


@dataclass(frozen=True)
class EmbeddedSplit:
    """임베딩된 split: ID, 임베딩, 라벨, log-variance s"""
    ids: np.ndarray
    embeddings: np.ndarray
    labels: np.ndarray
    log_variances: np.ndarray

    def __post_init__(self):
        require_same_length("split", self.ids, self.embeddings, self.labels, self.log_variances)

    @classmethod
    def of(cls, embeddings, labels, log_variances=None, ids=None) -> "EmbeddedSplit":
        emb = as_matrix(embeddings, "embeddings")
        n = emb.shape[0]
        return cls(
            ids=np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64),
            embeddings=emb,
            labels=np.asarray(labels, dtype=np.int64),
            log_variances=np.zeros(n) if log_variances is None else np.asarray(log_variances, dtype=np.float64),
        )

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def subset(self, indices) -> "EmbeddedSplit":
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddedSplit(self.ids[idx], self.embeddings[idx], self.labels[idx], self.log_variances[idx])


def average_precision(relevance: Sequence[bool]) -> float:
    """순위 관련성 플래그의 AP = (1/R) Σ_{적중 순위 r} (r까지 적중 수 / r)

    Raises:
        ExcludedQueryError: 관련 항목이 하나도 없을 때
    """
    rel = np.asarray(relevance, dtype=bool)
    total = int(rel.sum())
    if total == 0:
        raise ExcludedQueryError()
    ranks = np.flatnonzero(rel) + 1
    hits = np.arange(1, total + 1)
    return float(np.mean(hits / ranks))


def _distances(query: EmbeddedSplit, gallery: EmbeddedSplit) -> np.ndarray:
    if len(query) == 0 or len(gallery) == 0:
        raise ShapeError("쿼리와 갤러리는 비어 있을 수 없습니다", "query" if len(query) == 0 else "gallery")
    if query.embeddings.shape[1] != gallery.embeddings.shape[1]:
        raise ShapeError(
            f"임베딩 차원이 다릅니다: query={query.embeddings.shape[1]}, gallery={gallery.embeddings.shape[1]}",
            "embeddings",
        )
    return cdist(query.embeddings, gallery.embeddings, metric="euclidean")


def _query_results(
    dist: np.ndarray,
    query: EmbeddedSplit,
    gallery_labels: np.ndarray,
    ks: Sequence[int],
    rows: Sequence[int],
    exclude_self: bool,
) -> List[Optional[QueryResult]]:
    results: List[Optional[QueryResult]] = []
    for i in rows:
        order = np.argsort(dist[i], kind="stable")
        if exclude_self:
            order = order[order != i]
        relevance = gallery_labels[order] == query.labels[i]
        try:
            ap = average_precision(relevance)
        except ExcludedQueryError:
            results.append(None)
            continue
        results.append(QueryResult(
            query_id=int(query.ids[i]),
            label=int(query.labels[i]),
            ap=ap,
            top_k_hits={int(k): bool(relevance[:k].any()) for k in ks},
            s=float(query.log_variances[i]),
        ))
    return results


def _chunks(n: int, parts: int) -> List[range]:
    size = max(1, -(-n // parts))
    return [range(start, min(start + size, n)) for start in range(0, n, size)]


def _rank_all(
    dist: np.ndarray,
    query: EmbeddedSplit,
    gallery_labels: np.ndarray,
    ks: Sequence[int],
    exclude_self: bool,
    threads: Optional[int],
) -> List[Optional[QueryResult]]:
    workers = threads or get_settings().threads
    n = dist.shape[0]
    if workers <= 1 or n < 2:
        return _query_results(dist, query, gallery_labels, ks, range(n), exclude_self)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(
            lambda rows: _query_results(dist, query, gallery_labels, ks, rows, exclude_self),
            _chunks(n, workers),
        )
        # map은 입력 순서를 유지하므로 쿼리 순서대로 조립됨
        return [result for part in parts for result in part]


def build_report(results: Sequence[Optional[QueryResult]], ks: Sequence[int], excluded: int = 0) -> RetrievalReport:
    """쿼리 결과를 micro/macro로 집계"""
    per_query = [r for r in results if r is not None]
    excluded += sum(1 for r in results if r is None)
    if not per_query:
        raise EmptyReportError("평가 가능한 쿼리가 없습니다", excluded)

    aps = np.array([r.ap for r in per_query])
    labels = np.array([r.label for r in per_query])
    classes = np.unique(labels)

    per_class_map: Dict[int, float] = {}
    macro_topk: Dict[int, List[float]] = {int(k): [] for k in ks}
    for c in classes:
        members = [r for r in per_query if r.label == c]
        per_class_map[int(c)] = float(np.mean([r.ap for r in members]))
        for k in ks:
            macro_topk[int(k)].append(float(np.mean([r.top_k_hits[int(k)] for r in members])))

    if excluded:
        logger.warning(f"{excluded} queries without relevant gallery items were excluded")
        count_warning("evaluation.excluded_queries", excluded)

    return RetrievalReport(
        per_query=per_query,
        micro_map=float(np.mean(aps)),
        macro_map=float(np.mean(list(per_class_map.values()))),
        per_class_map=per_class_map,
        top_k_accuracy={int(k): float(np.mean([r.top_k_hits[int(k)] for r in per_query])) for k in ks},
        macro_top_k_accuracy={k: float(np.mean(v)) for k, v in macro_topk.items()},
        excluded_queries=excluded,
    )


def evaluate(
    query: EmbeddedSplit,
    gallery: EmbeddedSplit,
    ks: Sequence[int] = (1, 5, 10),
    threads: Optional[int] = None,
) -> RetrievalReport:
    """쿼리마다 갤러리를 거리 오름차순(동점은 인덱스 순)으로 정렬해 평가"""
    dist = _distances(query, gallery)
    results = _rank_all(dist, query, gallery.labels, ks, exclude_self=False, threads=threads)
    return build_report(results, ks)


def leave_one_out_evaluate(
    split: EmbeddedSplit,
    ks: Sequence[int] = (1, 5, 10),
    threads: Optional[int] = None,
) -> RetrievalReport:
    """split 안의 각 항목을 나머지 전체에 대한 쿼리로 사용 (단독 클래스는 제외)"""
    if len(split) < 2:
        raise InsufficientDataError("leave-one-out 평가에는 최소 2개 샘플이 필요합니다", 2, len(split))
    classes, counts = np.unique(split.labels, return_counts=True)
    singletons = set(classes[counts < 2].tolist())
    if singletons:
        logger.warning(f"leave-one-out: {len(singletons)} singleton classes excluded")
    keep = np.flatnonzero(~np.isin(split.labels, list(singletons)))
    if keep.size == 0:
        raise EmptyReportError("모든 클래스가 단독 샘플이라 평가할 쿼리가 없습니다", len(split))

    dist = _distances(split, split)
    results = _rank_all(dist, split, split.labels, ks, exclude_self=True, threads=threads)
    # 단독 클래스 쿼리는 관련 항목이 없어 None이 됨
    return build_report(results, ks)


def retrieval_examples(
    query: EmbeddedSplit,
    gallery: EmbeddedSplit,
    n_queries: int = 3,
    k: int = 5,
    exclude_self: bool = False,
) -> Dict[str, List[RetrievalExample]]:
    """불확실성이 가장 낮은/높은 쿼리의 상위 k개 검색 결과 (exclude_self: 같은 split 내 검색)"""
    dist = _distances(query, gallery)
    order = np.argsort(query.log_variances, kind="stable")
    n = min(n_queries, len(query))

    def example(i: int) -> RetrievalExample:
        ranked = np.argsort(dist[i], kind="stable")
        if exclude_self:
            ranked = ranked[ranked != i]
        top = ranked[:k]
        return RetrievalExample(
            query_id=int(query.ids[i]),
            label=int(query.labels[i]),
            s=float(query.log_variances[i]),
            retrieved_ids=[int(x) for x in gallery.ids[top]],
            retrieved_labels=[int(x) for x in gallery.labels[top]],
        )

    return {
        "lowest_uncertainty": [example(int(i)) for i in order[:n]],
        "highest_uncertainty": [example(int(i)) for i in order[::-1][:n]],
    }
