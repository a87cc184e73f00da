"""커맨드 공통 유틸리티: 설정 로드, 시드 결정, 결정적 파일 출력"""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError as PydanticValidationError

from ..config import get_settings
from ..hetero.data import SyntheticDataset, load_features
from ..hetero.encoder import EncoderParams, TrainingState, embed, load_model
from ..hetero.evaluation import EmbeddedSplit
from ..schemas.config import ExperimentConfig
from ..utils.errors import ConfigError, DataError
from ..utils.logging import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def load_experiment_config(path: Optional[PathLike]) -> ExperimentConfig:
    """실험 설정 JSON 로드 (없으면 기본값)

    JSON 문법 오류는 줄/열 위치를, 스키마 오류는 필드 경로를 담은 ConfigError가 됩니다.
    """
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"설정 파일을 읽을 수 없습니다: {path} ({e})", "config")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"설정 JSON 파싱 실패: {e.msg} (line {e.lineno}, column {e.colno})",
            "config",
            line=e.lineno,
            column=e.colno,
        )
    try:
        return ExperimentConfig.model_validate(raw)
    except PydanticValidationError as e:
        problems = [
            {"field": ".".join(str(part) for part in err["loc"]), "message": err["msg"]}
            for err in e.errors()
        ]
        fields = ", ".join(p["field"] or "<root>" for p in problems)
        raise ConfigError(f"설정 검증 실패: {fields}", "config", errors=problems)


def resolve_seed(flag: Optional[int], config: ExperimentConfig, component_seed: Optional[int]) -> int:
    """--seed > 구성요소 시드 > 최상위 seed > HEMB_SEED > 0"""
    return get_settings().resolve_seed(flag, component_seed, config.seed)


def resolve_threads(flag: Optional[int]) -> int:
    threads = flag if flag is not None else get_settings().threads
    if threads < 1:
        raise ConfigError(f"threads는 1 이상이어야 합니다: {threads}", "threads")
    return int(threads)


def output_path(out: Optional[PathLike], config: ExperimentConfig, default_name: str) -> Path:
    """출력 경로 결정: --out > output_dir/default_name > ./default_name"""
    if out is not None:
        path = Path(out)
    else:
        path = Path(config.output_dir or ".") / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def output_dir(out: Optional[PathLike], config: ExperimentConfig) -> Path:
    path = Path(out) if out is not None else Path(config.output_dir or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, dict):
        return {str(k): _jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_jsonable(v) for v in payload]
    if isinstance(payload, np.generic):
        return payload.item()
    return payload


def write_json(path: PathLike, payload: Any) -> Path:
    """결정적 JSON 출력 (키 순서 유지, 들여쓰기 2)"""
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


def write_csv(path: PathLike, rows: Iterable[Union[BaseModel, Dict[str, Any]]]) -> Path:
    """행 단위 CSV 출력 (float는 왕복 가능한 17자리)"""
    path = Path(path)
    records = [row.model_dump(mode="json") if isinstance(row, BaseModel) else row for row in rows]
    pd.DataFrame.from_records(records).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def require_file(path: Optional[PathLike], flag: str) -> Path:
    if path is None:
        raise ConfigError(f"{flag} 경로가 필요합니다", flag.lstrip("-"))
    resolved = Path(path)
    if not resolved.is_file():
        raise DataError(f"파일이 없습니다: {resolved}", "FILE_NOT_FOUND", {"path": str(resolved)})
    return resolved


def load_dataset(path: Optional[PathLike]) -> SyntheticDataset:
    return load_features(require_file(path, "--data"))


def load_trained_model(path: Optional[PathLike]) -> EncoderParams:
    params, _ = load_model(require_file(path, "--model"))
    return params


def load_training_checkpoint(path: PathLike) -> Tuple[EncoderParams, Optional[TrainingState]]:
    return load_model(require_file(path, "--resume"))


def embed_split(params: EncoderParams, dataset: SyntheticDataset, split: str, s_bounds=None) -> EmbeddedSplit:
    """데이터셋 split을 인코더로 임베딩"""
    part = dataset.split(split)
    if len(part) == 0:
        raise DataError(f"{split} split이 비어 있습니다", "EMPTY_SPLIT", {"split": split})
    if part.feature_dim != params.input_dim:
        raise DataError(
            f"특징 차원({part.feature_dim})이 모델 입력({params.input_dim})과 다릅니다",
            "DIMENSION_MISMATCH",
        )
    outputs = embed(params, part.features) if s_bounds is None else embed(params, part.features, s_bounds)
    return EmbeddedSplit(part.ids, outputs.embeddings, part.labels, outputs.log_variances)
