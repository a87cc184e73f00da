"""gen-data 커맨드: 합성 데이터셋 생성"""
from typing import Any, Dict, Optional

import numpy as np

from ..hetero.data import SPLIT_CODES, export_csv, generate, save_features
from ..utils.logging import get_logger, log_command
from ..utils.metrics import track_execution
from .helpers import load_experiment_config, output_path, resolve_seed

logger = get_logger(__name__)


@log_command("gen-data")
@track_execution("gen-data")
def cmd_gen_data(
    config: Optional[str] = None,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    csv: Optional[str] = None,
) -> Dict[str, Any]:
    """설정에 따라 데이터셋을 생성하고 HDST 파일(선택적으로 CSV)로 저장"""
    experiment = load_experiment_config(config)
    resolved_seed = resolve_seed(seed, experiment, experiment.data.seed)
    dataset = generate(experiment.data, seed=resolved_seed)

    path = output_path(out, experiment, "dataset.hdst")
    save_features(path, dataset)
    if csv:
        export_csv(csv, dataset)

    splits = {name: int(np.sum(dataset.splits == code)) for name, code in SPLIT_CODES.items()}
    train_mask = dataset.splits == SPLIT_CODES["train"]
    return {
        "success": True,
        "command": "gen-data",
        "dataset": str(path),
        "csv": csv,
        "seed": resolved_seed,
        "samples": len(dataset),
        "feature_dim": dataset.feature_dim,
        "splits": splits,
        "flips": int(dataset.noise_mask.sum()),
        "train_flip_rate": float(dataset.noise_mask[train_mask].mean()) if train_mask.any() else 0.0,
    }
