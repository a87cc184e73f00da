"""실험 설정 스키마"""
from typing import List, Literal, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


CleaningStrategy = Literal["by_uncertainty", "random"]
SplitName = Literal["train", "query", "gallery"]


class MarginMode(BaseModel):
    """triplet 마진 함수: softplus(soft margin) 또는 hinge(마진 m)"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["softplus", "hinge"] = Field("softplus", description="마진 함수 종류")
    margin: float = Field(0.0, ge=0.0, description="hinge 마진 m (softplus에서는 무시)")

    @classmethod
    def soft(cls) -> "MarginMode":
        return cls(kind="softplus")

    @classmethod
    def hinge(cls, margin: float) -> "MarginMode":
        return cls(kind="hinge", margin=margin)


class LrSchedule(BaseModel):
    """학습률 스케줄

    - constant: 항상 lr0
    - exponential: t < t0 에서 lr0, t0..t1 구간은 로그-선형 보간, t1 이후 lr1
    - linear: t < t0 에서 lr0, t1 에서 0이 되도록 선형 감소
    """
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {"kind": "exponential", "lr0": 3e-4, "t0": 15000, "t1": 25000, "lr1": 1e-7}
        },
    )

    kind: Literal["constant", "exponential", "linear"] = Field("exponential", description="스케줄 종류")
    lr0: float = Field(3e-3, gt=0.0, description="초기 학습률")
    t0: int = Field(1000, ge=0, description="감소 시작 시점")
    t1: int = Field(1500, ge=0, description="감소 종료 시점")
    lr1: float = Field(1e-5, gt=0.0, description="exponential 최종 학습률")
    unit: Literal["iteration", "epoch"] = Field("iteration", description="t의 단위")

    @model_validator(mode="after")
    def _check_knees(self) -> "LrSchedule":
        if self.kind != "constant" and self.t1 <= self.t0:
            raise ValueError(f"t1({self.t1})은 t0({self.t0})보다 커야 합니다")
        return self


class TrainConfig(BaseModel):
    """학습 설정"""
    model_config = ConfigDict(extra="forbid")

    embedding_dim: int = Field(8, gt=0, description="임베딩 차원 d")
    hidden_sizes: List[int] = Field(default_factory=lambda: [64], description="은닉층 크기")
    margin: MarginMode = Field(default_factory=MarginMode, description="triplet 마진 모드")
    mining_margin: float = Field(1.0, ge=0.0, description="semi-hard 마이닝 마진 m")
    weight_decay: float = Field(1e-3, ge=0.0, description="가중치 감쇠 계수 λ")
    lr: LrSchedule = Field(default_factory=LrSchedule, description="학습률 스케줄")
    momentum: float = Field(0.9, ge=0.0, lt=1.0, description="SGD 모멘텀")
    grad_clip_norm: Optional[float] = Field(
        5.0, gt=0.0, description="배치 그래디언트 전역 노름 상한 (None이면 자르지 않음)"
    )
    sampler: Literal["pk", "class_balanced"] = Field("class_balanced", description="배치 샘플링 방식")
    P: int = Field(8, gt=0, description="배치당 클래스 수 (pk)")
    K: int = Field(4, gt=0, description="클래스당 샘플 수 (pk)")
    samples_per_class: int = Field(8, gt=0, description="클래스당 샘플 수 (class_balanced)")
    mining: Literal["semi_hard", "batch_hard"] = Field("semi_hard", description="triplet 마이닝 전략")
    loss: Literal["vanilla", "hetero"] = Field("hetero", description="손실 함수")
    iterations: int = Field(1500, ge=0, description="총 학습 반복 수")
    seed: Optional[int] = Field(None, ge=0, description="학습 시드")
    s_min: float = Field(-10.0, description="log-variance 하한")
    s_max: float = Field(10.0, description="log-variance 상한")
    freeze_log_variance: bool = Field(False, description="s를 0으로 고정하는 ablation")
    clean_only: bool = Field(False, description="noise_mask가 참인 샘플을 빼고 학습 (clean-only 기준선)")

    @field_validator("hidden_sizes")
    @classmethod
    def _positive_sizes(cls, value: List[int]) -> List[int]:
        if any(size <= 0 for size in value):
            raise ValueError("은닉층 크기는 양수여야 합니다")
        return value

    @model_validator(mode="after")
    def _check_bounds(self) -> "TrainConfig":
        if not self.s_min < self.s_max:
            raise ValueError(f"s_min({self.s_min}) < s_max({self.s_max}) 이어야 합니다")
        return self


class GeneratorConfig(BaseModel):
    """합성 데이터셋 생성 설정"""
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {"n_train": 3000, "n_query": 600, "n_gallery": 600, "feature_dim": 32,
                        "num_classes": 10, "flip_rate": 0.2, "hetero_fraction": 0.3}
        },
    )

    n_train: int = Field(3000, ge=1, description="학습 split 크기")
    n_query: int = Field(600, ge=0, description="쿼리 split 크기")
    n_gallery: int = Field(600, ge=0, description="갤러리 split 크기")
    feature_dim: int = Field(32, ge=1, description="특징 차원 F")
    num_classes: int = Field(10, ge=2, description="클래스 수 C")
    separation: float = Field(4.0, gt=0.0, description="클래스 중심 거리 스케일")
    base_noise: float = Field(1.0, ge=0.0, description="기본 특징 노이즈 σ")
    hetero_fraction: float = Field(0.3, ge=0.0, le=1.0, description="이분산 부분집합 비율")
    hetero_scale: float = Field(3.0, gt=1.0, description="이분산 부분집합의 노이즈 배율")
    flip_rate: float = Field(0.2, ge=0.0, lt=1.0, description="라벨 뒤집기 비율 ρ")
    flip_scheme: Literal["uniform", "confusion_pairs"] = Field("uniform", description="라벨 뒤집기 방식")
    confusion_pairs: Optional[List[Tuple[int, int]]] = Field(
        None, description="혼동 클래스 쌍 (기본값: (0,1), (2,3), ...)"
    )
    ambiguous_flip_share: float = Field(
        0.8, ge=0.0, le=1.0, description="뒤집힌 라벨 중 이분산(모호한) 샘플에서 뽑는 비율"
    )
    noisy_splits: List[SplitName] = Field(default_factory=lambda: ["train"], description="라벨 노이즈 적용 split")
    imbalance_ratio: float = Field(1.0, ge=1.0, description="최대/최소 클래스 크기 비율")
    seed: Optional[int] = Field(None, ge=0, description="생성 시드")

    @model_validator(mode="after")
    def _check_pairs(self) -> "GeneratorConfig":
        if self.confusion_pairs is not None:
            seen = set()
            for a, b in self.confusion_pairs:
                if a == b or not (0 <= a < self.num_classes and 0 <= b < self.num_classes):
                    raise ValueError(f"잘못된 혼동 쌍입니다: ({a}, {b})")
                if a in seen or b in seen:
                    raise ValueError(f"클래스는 하나의 혼동 쌍에만 속할 수 있습니다: ({a}, {b})")
                seen.update((a, b))
        return self


class EvalConfig(BaseModel):
    """검색 평가 설정"""
    model_config = ConfigDict(extra="forbid")

    ks: List[int] = Field(default_factory=lambda: [1, 5, 10], description="top-k 목록")
    leave_one_out: bool = Field(False, description="갤러리 split에서 leave-one-out 평가")

    @field_validator("ks")
    @classmethod
    def _positive_ks(cls, value: List[int]) -> List[int]:
        if not value or any(k <= 0 for k in value):
            raise ValueError("k는 양수여야 합니다")
        return sorted(set(value))


class CleaningConfig(BaseModel):
    """데이터 정제 실험 설정"""
    model_config = ConfigDict(extra="forbid")

    gallery_fraction: float = Field(0.2, ge=0.0, le=0.5, description="갤러리에서 제거할 비율")
    query_fractions: List[float] = Field(
        default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4], description="쿼리 제거 비율 목록"
    )
    strategies: List[CleaningStrategy] = Field(
        default_factory=lambda: ["by_uncertainty", "random"], min_length=1, description="제거 전략"
    )
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1, description="random 전략 시드")
    noise_top_fraction: float = Field(0.1, gt=0.0, le=1.0, description="노이즈 탐지 상위 비율")
    per_class_top: int = Field(5, ge=1, description="클래스별 상위 불확실성 목록 크기")

    @field_validator("query_fractions")
    @classmethod
    def _fraction_range(cls, value: List[float]) -> List[float]:
        if any(not 0.0 <= f <= 0.5 for f in value):
            raise ValueError("제거 비율은 [0, 0.5] 범위여야 합니다")
        return value


class ExperimentConfig(BaseModel):
    """실험 전체 설정 (단일 JSON 문서)"""
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = Field(1, description="설정 스키마 버전")
    seed: Optional[int] = Field(None, ge=0, description="공통 시드")
    data: GeneratorConfig = Field(default_factory=GeneratorConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    cleaning: CleaningConfig = Field(default_factory=CleaningConfig)
    output_dir: Optional[str] = Field(None, description="기본 출력 디렉터리")
