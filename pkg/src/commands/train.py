"""train 커맨드: 인코더 학습과 모델/손실 기록 저장"""
from pathlib import Path
from typing import Any, Dict, Optional

from ..hetero.encoder import save_model
from ..hetero.trainer import train
from ..utils.errors import DataError
from ..utils.logging import get_logger, log_command
from ..utils.metrics import track_execution
from .helpers import (
    load_dataset,
    load_experiment_config,
    load_training_checkpoint,
    output_path,
    resolve_seed,
    write_csv,
)

logger = get_logger(__name__)


def trace_path_for(model_path: Path) -> Path:
    """모델 파일 옆의 손실 기록 CSV 경로 (model.hemb → model.trace.csv)"""
    return model_path.with_name(model_path.stem + ".trace.csv")


@log_command("train")
@track_execution("train")
def cmd_train(
    config: Optional[str] = None,
    data: Optional[str] = None,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    resume: Optional[str] = None,
    clean_only: bool = False,
) -> Dict[str, Any]:
    """train split으로 학습하고 재개 상태를 포함한 모델 파일을 저장

    --resume 모델을 주면 저장된 반복 번호부터 config의 총 반복 수까지 이어서 학습합니다.
    --clean-only는 train.clean_only를 켭니다 (뒤집힌 라벨 샘플 제외).
    """
    # 설정 검증이 데이터 로드나 계산보다 먼저
    experiment = load_experiment_config(config)
    resolved_seed = resolve_seed(seed, experiment, experiment.train.seed)
    train_config = experiment.train.model_copy(update={"clean_only": True}) if clean_only else experiment.train

    dataset = load_dataset(data)
    train_split = dataset.split("train")
    if len(train_split) == 0:
        raise DataError("train split이 비어 있습니다", "EMPTY_SPLIT", {"split": "train"})

    params = state = None
    if resume:
        params, state = load_training_checkpoint(resume)
        if state is None:
            raise DataError(f"재개 상태가 없는 모델 파일입니다: {resume}", "NO_TRAINING_STATE")
        logger.info(f"Resuming from iteration {state.iteration}")

    result = train(train_split, train_config, seed=resolved_seed, params=params, state=state)

    model_path = output_path(out, experiment, "model.hemb")
    save_model(model_path, result.params, result.state)
    trace_path = write_csv(trace_path_for(model_path), result.trace)

    return {
        "success": True,
        "command": "train",
        "model": str(model_path),
        "trace": str(trace_path),
        "seed": resolved_seed,
        "loss": train_config.loss,
        "clean_only": train_config.clean_only,
        "start_iteration": state.iteration if state is not None else 0,
        "iterations": result.iteration,
        "final_loss": result.final_loss,
        "final_mean_s": result.trace[-1].mean_s if result.trace else None,
    }
