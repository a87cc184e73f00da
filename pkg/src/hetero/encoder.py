"""완전연결 인코더: 특징 벡터 → (임베딩 R^d, log-variance s)

은닉층은 ReLU, 마지막 층은 선형이며 폭이 d+1 입니다. 마지막 좌표는 s = log σ² 로
[s_min, s_max] 구간에 클램프됩니다. 순전파/역전파/모멘텀 SGD/학습률 스케줄과
모델 파일(HEMB) 입출력을 담당합니다.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..schemas.config import LrSchedule
from ..utils.errors import ConfigError, DataError, FormatError, NumericalError, ShapeError
from ..utils.logging import get_logger
from ..utils.validation import as_matrix, as_vector
from .binary_io import BinaryReader, BinaryWriter
from .losses import S_BOUNDS, BatchOutput, EmbeddingOutput

logger = get_logger(__name__)

MODEL_MAGIC = b"HEMB"
MODEL_VERSION = 1


@dataclass
class EncoderParams:
    """층별 가중치 (fan_in × fan_out)와 편향 (fan_out)

    그래디언트와 모멘텀 속도도 같은 모양의 EncoderParams로 표현합니다.
    """
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise ShapeError("층 수가 0이거나 가중치/편향 수가 다릅니다", "params")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"층 {i}의 가중치/편향 모양이 맞지 않습니다: {w.shape}, {b.shape}", "params")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"층 {i - 1}과 {i}의 폭이 이어지지 않습니다", "params")
        if self.weights[-1].shape[1] < 2:
            raise ShapeError("마지막 층 폭은 d+1 ≥ 2 이어야 합니다", "params")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def embedding_dim(self) -> int:
        return int(self.weights[-1].shape[1]) - 1

    def arrays(self) -> List[np.ndarray]:
        """가중치/편향을 층 순서대로 (W0, b0, W1, b1, ...)"""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def zeros_like(self) -> "EncoderParams":
        return EncoderParams([np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases])

    def copy(self) -> "EncoderParams":
        return EncoderParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def __add__(self, other: "EncoderParams") -> "EncoderParams":
        return EncoderParams(
            [w + o for w, o in zip(self.weights, other.weights)],
            [b + o for b, o in zip(self.biases, other.biases)],
        )


@dataclass
class ForwardCache:
    """역전파용 중간값: 각 층 입력과 은닉층 pre-activation"""
    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)


@dataclass
class TrainingState:
    """재개용 학습 상태 (다음 반복 번호와 모멘텀 속도)"""
    iteration: int
    velocity: EncoderParams


def init_params(layer_sizes: Sequence[int], rng: np.random.Generator) -> EncoderParams:
    """층별 균등분포 ±sqrt(6/(fan_in+fan_out)) 초기화, 편향은 0 (초기 σ² = 1)"""
    if len(layer_sizes) < 2 or any(size <= 0 for size in layer_sizes):
        raise ConfigError(f"잘못된 층 크기: {list(layer_sizes)}", "layer_sizes")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return EncoderParams(weights, biases)


def layer_sizes_for(input_dim: int, hidden_sizes: Sequence[int], embedding_dim: int) -> List[int]:
    return [int(input_dim)] + [int(h) for h in hidden_sizes] + [int(embedding_dim) + 1]


def forward_batch(
    params: EncoderParams,
    features,
    s_bounds: Tuple[float, float] = S_BOUNDS,
) -> Tuple[BatchOutput, ForwardCache]:
    """배치 순전파"""
    h = as_matrix(features, "features", cols=params.input_dim)
    cache = ForwardCache()
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        z = h @ w + b
        if i < last:
            cache.pre_activations.append(z)
            h = np.maximum(z, 0.0)
        else:
            h = z
    d = params.embedding_dim
    embeddings = h[:, :d]
    log_variances = np.clip(h[:, d], s_bounds[0], s_bounds[1])
    return BatchOutput(embeddings, log_variances), cache


def forward(params: EncoderParams, features: Sequence[float], s_bounds: Tuple[float, float] = S_BOUNDS) -> EmbeddingOutput:
    """단일 특징 벡터 순전파 (임베딩은 정규화하지 않음)"""
    x = as_vector(features, "features")
    if x.shape[0] != params.input_dim:
        raise ShapeError(f"특징 길이({x.shape[0]})가 입력층({params.input_dim})과 다릅니다", "features")
    outputs, _ = forward_batch(params, x[None, :], s_bounds)
    return outputs.item(0)


def embed(params: EncoderParams, features, s_bounds: Tuple[float, float] = S_BOUNDS, chunk_size: int = 4096) -> BatchOutput:
    """추론용 배치 임베딩 (캐시 없이 청크 단위)"""
    x = as_matrix(features, "features", cols=params.input_dim)
    embeddings, log_variances = [], []
    for start in range(0, max(x.shape[0], 1), chunk_size):
        out, _ = forward_batch(params, x[start:start + chunk_size], s_bounds)
        embeddings.append(out.embeddings)
        log_variances.append(out.log_variances)
    return BatchOutput(np.concatenate(embeddings), np.concatenate(log_variances))


def backward(params: EncoderParams, cache: ForwardCache, grad_embeddings: np.ndarray, grad_log_variances: np.ndarray) -> EncoderParams:
    """출력 그래디언트를 파라미터 그래디언트로 역전파

    s 클램프는 손실 쪽에서 이미 경계 바깥 방향 성분을 제거했으므로 그대로 통과시킵니다.
    """
    g = np.concatenate([grad_embeddings, grad_log_variances[:, None]], axis=1)
    grad_w: List[np.ndarray] = [None] * len(params.weights)  # type: ignore[list-item]
    grad_b: List[np.ndarray] = [None] * len(params.biases)  # type: ignore[list-item]
    for i in range(len(params.weights) - 1, -1, -1):
        grad_w[i] = cache.inputs[i].T @ g
        grad_b[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ params.weights[i].T) * (cache.pre_activations[i - 1] > 0.0)
    return EncoderParams(grad_w, grad_b)


def _non_finite_report(grads: EncoderParams) -> List[dict]:
    report = []
    for i, (w, b) in enumerate(zip(grads.weights, grads.biases)):
        bad_w = int(np.size(w) - np.count_nonzero(np.isfinite(w)))
        bad_b = int(np.size(b) - np.count_nonzero(np.isfinite(b)))
        if bad_w or bad_b:
            report.append({"layer": i, "weights": bad_w, "biases": bad_b})
    return report


def sgd_momentum_step(
    params: EncoderParams,
    gradients: EncoderParams,
    velocity: EncoderParams,
    lr: float,
    momentum: float,
) -> Tuple[EncoderParams, EncoderParams]:
    """고전적 모멘텀 SGD: v ← μv + g; p ← p − lr·v"""
    bad = _non_finite_report(gradients)
    if bad:
        raise NumericalError("그래디언트에 유한하지 않은 값이 있습니다", "NON_FINITE_GRADIENT", {"layers": bad})
    new_velocity = EncoderParams(
        [momentum * v + g for v, g in zip(velocity.weights, gradients.weights)],
        [momentum * v + g for v, g in zip(velocity.biases, gradients.biases)],
    )
    new_params = EncoderParams(
        [w - lr * v for w, v in zip(params.weights, new_velocity.weights)],
        [b - lr * v for b, v in zip(params.biases, new_velocity.biases)],
    )
    if not new_params.is_finite():
        raise NumericalError("업데이트 후 파라미터가 유한하지 않습니다", "NON_FINITE_PARAMS", {"layers": _non_finite_report(new_params)})
    return new_params, new_velocity


def global_norm(params: EncoderParams) -> float:
    """모든 가중치/편향을 하나의 벡터로 본 L2 노름"""
    return float(np.sqrt(sum(float(np.sum(a * a)) for a in params.arrays())))


def clip_gradient_norm(gradients: EncoderParams, max_norm: Optional[float]) -> Tuple[EncoderParams, float]:
    """전역 노름이 max_norm을 넘으면 그래디언트 전체를 같은 비율로 축소

    Returns:
        (잘린 그래디언트, 자르기 전 노름). max_norm이 None이면 그대로 반환합니다.
    """
    norm = global_norm(gradients)
    if max_norm is None or not np.isfinite(norm) or norm <= max_norm:
        return gradients, norm
    scale = max_norm / norm
    clipped = EncoderParams([w * scale for w in gradients.weights], [b * scale for b in gradients.biases])
    return clipped, norm


def lr_schedule(schedule: LrSchedule, t: float) -> float:
    """학습률 스케줄 평가

    exponential: t < t0 → lr0, t0 ≤ t ≤ t1 → lr0·(lr1/lr0)^((t−t0)/(t1−t0)), t > t1 → lr1
    linear: t < t0 → lr0, t0 ≤ t ≤ t1 → lr0·(t1−t)/(t1−t0), t > t1 → 0
    """
    if t < 0:
        raise ConfigError(f"반복 번호는 0 이상이어야 합니다: {t}", "iteration")
    if schedule.kind == "constant":
        return schedule.lr0
    if schedule.t1 <= schedule.t0:
        raise ConfigError(f"t1({schedule.t1})은 t0({schedule.t0})보다 커야 합니다", "lr.t1")
    if t < schedule.t0:
        return schedule.lr0
    if schedule.kind == "exponential":
        if t >= schedule.t1:
            return schedule.lr1
        return schedule.lr0 * (schedule.lr1 / schedule.lr0) ** ((t - schedule.t0) / (schedule.t1 - schedule.t0))
    if schedule.kind == "linear":
        if t >= schedule.t1:
            return 0.0
        return schedule.lr0 * ((schedule.t1 - t) / (schedule.t1 - schedule.t0))
    raise ConfigError(f"알 수 없는 스케줄 종류: {schedule.kind}", "lr.kind")


def _write_arrays(writer: BinaryWriter, params: EncoderParams) -> None:
    for w, b in zip(params.weights, params.biases):
        writer.array(w, "<f8")
        writer.array(b, "<f8")


def _read_arrays(reader: BinaryReader, shapes: List[Tuple[int, int]]) -> EncoderParams:
    weights, biases = [], []
    for rows, cols in shapes:
        weights.append(reader.array(rows * cols, "<f8").reshape(rows, cols))
        biases.append(reader.array(cols, "<f8"))
    return EncoderParams(weights, biases)


def model_to_bytes(params: EncoderParams, state: Optional[TrainingState] = None) -> bytes:
    """HEMB 포맷 직렬화"""
    writer = BinaryWriter(MODEL_MAGIC, MODEL_VERSION)
    writer.u32(len(params.weights))
    for w in params.weights:
        writer.u32(w.shape[0])
        writer.u32(w.shape[1])
    _write_arrays(writer, params)
    writer.u32(1 if state is not None else 0)
    if state is not None:
        writer.u64(state.iteration)
        _write_arrays(writer, state.velocity)
    return writer.getvalue()


def model_from_bytes(data: bytes, path: str = "") -> Tuple[EncoderParams, Optional[TrainingState]]:
    """HEMB 포맷 역직렬화"""
    reader = BinaryReader(data, MODEL_MAGIC, (MODEL_VERSION,), path)
    layer_count = reader.u32()
    if layer_count == 0:
        raise FormatError("층 수가 0입니다", offset=reader.offset, path=reader.path)
    shapes = [(reader.u32(), reader.u32()) for _ in range(layer_count)]
    try:
        params = _read_arrays(reader, shapes)
        state = None
        if reader.u32() == 1:
            iteration = reader.u64()
            state = TrainingState(iteration, _read_arrays(reader, shapes))
    except ShapeError as e:
        raise FormatError(f"층 모양이 잘못되었습니다: {e.message}", offset=reader.offset, path=reader.path)
    reader.finish()
    return params, state


def save_model(path, params: EncoderParams, state: Optional[TrainingState] = None) -> None:
    Path(path).write_bytes(model_to_bytes(params, state))
    logger.info(f"Model saved to {path} (layers={params.layer_sizes})")


def load_model(path) -> Tuple[EncoderParams, Optional[TrainingState]]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"모델 파일을 읽을 수 없습니다: {path} ({e})")
    return model_from_bytes(data, str(path))
