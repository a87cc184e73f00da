"""평가/분석 리포트 스키마"""
from typing import Dict, List, Literal, Optional
from pydantic import BaseModel, Field

from .config import CleaningStrategy


BIN_LABELS = ("very_low", "low", "moderate", "high", "very_high")
UNCERTAINTY_SCALAR_NOTE = "uncertainty is the raw log-variance s = log(sigma^2)"


class QueryResult(BaseModel):
    """쿼리 하나의 검색 결과"""
    query_id: int = Field(..., description="쿼리 ID")
    label: int = Field(..., description="쿼리 클래스")
    ap: float = Field(..., ge=0.0, le=1.0, description="average precision")
    top_k_hits: Dict[int, bool] = Field(..., description="k별 적중 여부")
    s: float = Field(..., description="쿼리 불확실성 s")


class RetrievalReport(BaseModel):
    """검색 평가 리포트"""
    per_query: List[QueryResult] = Field(default_factory=list, description="쿼리별 결과")
    micro_map: float = Field(..., description="쿼리 평균 mAP")
    macro_map: float = Field(..., description="클래스별 mAP의 평균")
    per_class_map: Dict[int, float] = Field(default_factory=dict, description="클래스별 mAP")
    top_k_accuracy: Dict[int, float] = Field(default_factory=dict, description="micro top-k 정확도")
    macro_top_k_accuracy: Dict[int, float] = Field(default_factory=dict, description="macro top-k 정확도")
    excluded_queries: int = Field(0, ge=0, description="관련 항목이 없어 제외된 쿼리 수")

    class Config:
        json_schema_extra = {
            "example": {
                "micro_map": 0.62,
                "macro_map": 0.58,
                "per_class_map": {"0": 0.7, "1": 0.46},
                "top_k_accuracy": {"1": 0.8, "5": 0.93},
                "excluded_queries": 0
            }
        }


class RetrievalExample(BaseModel):
    """정성 평가용 쿼리와 상위 검색 결과"""
    query_id: int
    label: int
    s: float
    retrieved_ids: List[int]
    retrieved_labels: List[int]


class UncertaintyBins(BaseModel):
    """불확실성 5분위 구간"""
    labels: List[str] = Field(default_factory=lambda: list(BIN_LABELS), description="구간 이름")
    edges: List[float] = Field(..., description="20/40/60/80 백분위 경계")
    assignments: List[int] = Field(..., description="샘플별 구간 인덱스")
    counts: Dict[str, int] = Field(..., description="구간별 샘플 수")


class CorrelationBucket(BaseModel):
    """AP 백분위 버킷별 불확실성 통계"""
    bucket: int
    ap_min: float
    ap_max: float
    mean_ap: float
    mean_s: float
    std_s: float
    count: int


class CorrelationResult(BaseModel):
    """AP–불확실성 상관 분석 결과"""
    pearson_r: float = Field(..., ge=-1.0, le=1.0)
    n: int
    buckets: List[CorrelationBucket]
    note: str = Field(UNCERTAINTY_SCALAR_NOTE, description="y축 불확실성 척도 설명")


class CleaningResult(BaseModel):
    """갤러리 정제 결과"""
    drop_fraction: float = Field(..., ge=0.0, lt=1.0)
    strategy: CleaningStrategy
    seed: Optional[int] = Field(None, description="random 전략 시드")
    map_before: float
    map_after: float
    dropped_ids: List[int]
    emptied_classes: List[int] = Field(default_factory=list, description="갤러리 항목이 모두 제거된 클래스")


class DropCurvePoint(BaseModel):
    """쿼리 제거 곡선의 한 점"""
    fraction: float
    strategy: CleaningStrategy
    seed: Optional[int] = None
    map: float
    retained_queries: int


class NoiseRanking(BaseModel):
    """학습 데이터 노이즈 순위"""
    ranked_ids: List[int] = Field(..., description="s 내림차순 샘플 ID")
    top_n: int
    precision_at_n: Optional[float] = Field(None, description="뒤집힌 라벨 탐지 precision@n (해당 없음이면 null)")
    base_rate: Optional[float] = Field(None, description="전체 뒤집힘 비율")
    applicable: bool = Field(..., description="precision@n 계산 가능 여부")
    per_class: Dict[int, List[int]] = Field(default_factory=dict, description="클래스별 상위 불확실성 ID")


class ClassDiagnostic(BaseModel):
    """클래스별 진단 (다수/소수 클래스 비교)"""
    label: int
    train_count: int
    map: Optional[float]
    mean_s: Optional[float]


class ProjectionPoint(BaseModel):
    """2차원 PCA 투영의 한 점"""
    id: int
    label: int
    pc1: float
    pc2: float
    s: float
    bin: str = Field(..., description="불확실성 구간 이름")
    center_distance: float = Field(..., ge=0.0, description="임베딩 공간에서 클래스 평균까지 거리")


class AnalysisReport(BaseModel):
    """analyze 커맨드 출력"""
    schema_version: Literal[1] = 1
    uncertainty_bins: UncertaintyBins
    correlation: Optional[CorrelationResult]
    correlation_error: Optional[str] = None
    noise_ranking: NoiseRanking
    per_class: List[ClassDiagnostic]
    micro_map: float
    macro_map: float


class CleaningReport(BaseModel):
    """clean 커맨드 출력"""
    schema_version: Literal[1] = 1
    gallery: List[CleaningResult]
    query_curve: List[DropCurvePoint]
    summary: Dict[str, float]


class TraceRow(BaseModel):
    """학습 손실 기록 한 줄"""
    iteration: int
    lr: float
    loss: float
    data_term: float
    log_term: float
    decay_term: float
    n_triplets: int
    mean_s: float
