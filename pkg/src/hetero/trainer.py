"""학습 루프: 샘플링 → 순전파 → 마이닝 → 손실 → 그래디언트 → 모멘텀 SGD

반복 t의 배치는 (seed, t)에서 파생된 rng로 뽑으므로, 저장된 상태에서 재개해도
끊기지 않은 실행과 같은 손실 기록이 이어집니다.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..schemas.config import MarginMode, TrainConfig
from ..schemas.reports import TraceRow
from ..utils.errors import DataError, NumericalError
from ..utils.logging import LogContext, get_logger
from .data import SyntheticDataset
from .encoder import (
    EncoderParams,
    ForwardCache,
    TrainingState,
    backward,
    clip_gradient_norm,
    forward_batch,
    init_params,
    layer_sizes_for,
    lr_schedule,
    sgd_momentum_step,
)
from .losses import BatchOutput, LossTerms, batch_loss, loss_gradients
from .mining import mine, pairwise_distances
from .sampler import BatchSampler

logger = get_logger(__name__)

LOG_EVERY = 100


@dataclass
class TrainResult:
    """학습 결과: 파라미터, 모멘텀 속도, 다음 반복 번호, 손실 기록"""
    params: EncoderParams
    velocity: EncoderParams
    iteration: int
    trace: List[TraceRow] = field(default_factory=list)

    @property
    def state(self) -> TrainingState:
        return TrainingState(self.iteration, self.velocity)

    @property
    def final_loss(self) -> Optional[float]:
        return self.trace[-1].loss if self.trace else None


def batch_objective(
    params: EncoderParams,
    features: np.ndarray,
    triplets,
    margin: MarginMode,
    weight_decay: float,
    loss: str,
    s_bounds: Tuple[float, float],
    freeze_log_variance: bool = False,
    forward: Optional[Tuple[BatchOutput, ForwardCache]] = None,
) -> Tuple[LossTerms, EncoderParams, BatchOutput]:
    """고정된 triplet에 대한 배치 손실과 파라미터 그래디언트 (forward: 이미 계산한 순전파 결과)"""
    outputs, cache = forward if forward is not None else forward_batch(params, features, s_bounds)
    if freeze_log_variance:
        outputs = outputs.with_log_variances(np.zeros(len(outputs)))
    terms = batch_loss(outputs, triplets, margin, weight_decay, params.weights, loss)
    grads = loss_gradients(outputs, triplets, margin, weight_decay, params.weights, loss, s_bounds)
    grad_s = np.zeros_like(grads.log_variances) if freeze_log_variance else grads.log_variances
    param_grads = backward(params, cache, grads.embeddings, grad_s)
    decay = EncoderParams(grads.weights, [np.zeros_like(b) for b in params.biases])
    return terms, param_grads + decay, outputs


def _schedule_time(config: TrainConfig, iteration: int, sampler: BatchSampler) -> float:
    if config.lr.unit == "epoch":
        return iteration / sampler.batches_per_epoch()
    return float(iteration)


def train(
    dataset: SyntheticDataset,
    config: TrainConfig,
    seed: Optional[int] = None,
    params: Optional[EncoderParams] = None,
    state: Optional[TrainingState] = None,
) -> TrainResult:
    """주어진 데이터셋(관측 라벨) 전체로 인코더 학습

    Args:
        dataset: 학습 샘플 (보통 train split)
        config: 학습 설정
        seed: 시드 (None이면 config.seed, 그것도 없으면 0)
        params: 재개할 파라미터 (None이면 새로 초기화)
        state: 재개할 학습 상태 (params와 함께 전달)

    Returns:
        TrainResult
    """
    seed = int(seed if seed is not None else (config.seed or 0))
    s_bounds = (config.s_min, config.s_max)
    if config.clean_only:
        kept = dataset.clean()
        logger.info(f"clean_only: {len(dataset) - len(kept)} flipped samples removed, {len(kept)} kept")
        if len(kept) == 0:
            raise DataError("clean_only 학습에 남은 샘플이 없습니다", "EMPTY_SPLIT", {"removed": len(dataset)})
        dataset = kept
    labels = dataset.labels
    features = dataset.features

    if params is None:
        sizes = layer_sizes_for(dataset.feature_dim, config.hidden_sizes, config.embedding_dim)
        params = init_params(sizes, np.random.default_rng(seed))
    velocity = state.velocity if state is not None else params.zeros_like()
    start = state.iteration if state is not None else 0

    sampler = BatchSampler(labels, config.sampler, seed, config.P, config.K, config.samples_per_class)
    trace: List[TraceRow] = []

    if start >= config.iterations:
        logger.warning(f"Nothing to train: resume iteration {start} >= iterations {config.iterations}")
        return TrainResult(params, velocity, start, trace)

    with LogContext(logger, "training", loss=config.loss, iterations=config.iterations, start=start, seed=seed) as run:
        clipped_steps = 0
        for t in range(start, config.iterations):
            plan = sampler.batch(t)
            x = features[plan.indices]
            forward = forward_batch(params, x, s_bounds)
            outputs = forward[0]
            if not np.all(np.isfinite(outputs.embeddings)):
                raise NumericalError(
                    f"반복 {t}에서 임베딩이 유한하지 않습니다", "NON_FINITE_EMBEDDINGS", {"iteration": t},
                )
            triplets = mine(config.mining, pairwise_distances(outputs.embeddings), plan.labels, config.mining_margin)

            try:
                terms, grads, outputs = batch_objective(
                    params, x, triplets, config.margin, config.weight_decay, config.loss, s_bounds,
                    config.freeze_log_variance, forward,
                )
            except NumericalError as e:
                e.details["iteration"] = t
                raise
            if not np.isfinite(terms.total):
                raise NumericalError(
                    f"반복 {t}에서 손실이 유한하지 않습니다",
                    "NON_FINITE_LOSS",
                    {"iteration": t, "data_term": terms.data_term, "log_term": terms.log_term},
                )

            grads, grad_norm = clip_gradient_norm(grads, config.grad_clip_norm)
            if config.grad_clip_norm is not None and grad_norm > config.grad_clip_norm:
                clipped_steps += 1
            lr = lr_schedule(config.lr, _schedule_time(config, t, sampler))
            try:
                params, velocity = sgd_momentum_step(params, grads, velocity, lr, config.momentum)
            except NumericalError as e:
                e.details["iteration"] = t
                raise

            row = TraceRow(
                iteration=t,
                lr=lr,
                loss=terms.total,
                data_term=terms.data_term,
                log_term=terms.log_term,
                decay_term=terms.decay_term,
                n_triplets=len(triplets),
                mean_s=float(np.mean(outputs.log_variances)),
            )
            trace.append(row)
            if (t + 1) % LOG_EVERY == 0:
                logger.info(
                    f"iter {t + 1}/{config.iterations} loss={row.loss:.5f} lr={lr:.3g} "
                    f"mean_s={row.mean_s:.3f} grad_norm={grad_norm:.3g}"
                )
        run.update(final_loss=trace[-1].loss, final_mean_s=trace[-1].mean_s, clipped_steps=clipped_steps)

    return TrainResult(params, velocity, config.iterations, trace)
