"""합성 데이터셋 생성과 특징 파일 입출력

클래스 중심 주변의 가우시안 특징에 이분산 노이즈 부분집합과 라벨 뒤집기를 주입합니다.
바이너리 포맷(HDST)은 float를 비트 단위로 보존하고, CSV는 외부 도구와의 교환용입니다.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..schemas.config import GeneratorConfig
from ..utils.errors import ConfigError, DataError, FormatError, ShapeError
from ..utils.logging import get_logger
from ..utils.metrics import count_warning
from .binary_io import BinaryReader, BinaryWriter

logger = get_logger(__name__)

DATASET_MAGIC = b"HDST"
DATASET_VERSION = 1

SPLIT_CODES: Dict[str, int] = {"train": 0, "query": 1, "gallery": 2}
SPLIT_NAMES: Dict[int, str] = {code: name for name, code in SPLIT_CODES.items()}


@dataclass(frozen=True)
class SyntheticDataset:
    """특징, 참/관측 라벨, 뒤집힘 마스크, 샘플별 노이즈 σ, split 태그"""
    ids: np.ndarray
    features: np.ndarray
    true_labels: np.ndarray
    noisy_labels: np.ndarray
    noise_mask: np.ndarray
    sample_noise_scale: np.ndarray
    splits: np.ndarray

    def __post_init__(self):
        n = self.ids.shape[0]
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ShapeError(f"특징 행렬 모양이 맞지 않습니다: {self.features.shape} (N={n})", "features")
        for name in ("true_labels", "noisy_labels", "noise_mask", "sample_noise_scale", "splits"):
            if getattr(self, name).shape != (n,):
                raise ShapeError(f"{name} 길이가 N={n}과 다릅니다", name)
        if not np.array_equal(self.noise_mask, self.true_labels != self.noisy_labels):
            raise DataError("noise_mask가 라벨 불일치와 맞지 않습니다", "INCONSISTENT_MASK")
        if np.unique(self.ids).size != n:
            raise DataError("중복된 샘플 ID가 있습니다", "DUPLICATE_ID")

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def labels(self) -> np.ndarray:
        """학습/평가에 쓰이는 관측 라벨"""
        return self.noisy_labels

    def subset(self, indices) -> "SyntheticDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return SyntheticDataset(
            ids=self.ids[idx],
            features=self.features[idx],
            true_labels=self.true_labels[idx],
            noisy_labels=self.noisy_labels[idx],
            noise_mask=self.noise_mask[idx],
            sample_noise_scale=self.sample_noise_scale[idx],
            splits=self.splits[idx],
        )

    def split(self, name: str) -> "SyntheticDataset":
        if name not in SPLIT_CODES:
            raise ValueError(f"알 수 없는 split: {name}")
        return self.subset(np.flatnonzero(self.splits == SPLIT_CODES[name]))

    def clean(self) -> "SyntheticDataset":
        """라벨이 뒤집히지 않은 샘플만 (noise_mask == False)"""
        return self.subset(np.flatnonzero(~self.noise_mask.astype(bool)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SyntheticDataset):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("ids", "features", "true_labels", "noisy_labels", "noise_mask", "sample_noise_scale", "splits")
        )


def class_counts(total: int, num_classes: int, imbalance_ratio: float = 1.0) -> np.ndarray:
    """기하급수 클래스 비율(최대/최소 = imbalance_ratio)을 최대 잉여 방식으로 정수화"""
    if num_classes == 1:
        return np.array([total], dtype=np.int64)
    weights = imbalance_ratio ** (-np.arange(num_classes) / (num_classes - 1))
    quotas = total * weights / weights.sum()
    counts = np.floor(quotas).astype(np.int64)
    remainder = total - int(counts.sum())
    # 잉여가 큰 순서, 동률이면 작은 클래스 번호
    order = np.lexsort((np.arange(num_classes), -(quotas - counts)))
    counts[order[:remainder]] += 1
    return counts


def confusion_partner_map(config: GeneratorConfig) -> Dict[int, int]:
    """혼동 쌍에서 클래스 → 짝 클래스"""
    pairs = config.confusion_pairs
    if pairs is None:
        pairs = [(c, c + 1) for c in range(0, config.num_classes - 1, 2)]
    partner: Dict[int, int] = {}
    for a, b in pairs:
        partner[int(a)] = int(b)
        partner[int(b)] = int(a)
    return partner


def _choose_flips(
    candidates: np.ndarray,
    hetero: np.ndarray,
    n_flip: int,
    share: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """뒤집을 샘플 선택: n_flip 중 share 비율을 이분산 샘플에서 우선 추출"""
    ambiguous = candidates[hetero[candidates]]
    clear = candidates[~hetero[candidates]]
    from_ambiguous = min(int(round(share * n_flip)), ambiguous.size)
    from_clear = min(n_flip - from_ambiguous, clear.size)
    # 한쪽이 부족하면 다른 쪽에서 채움
    from_ambiguous = min(n_flip - from_clear, ambiguous.size)
    chosen = np.concatenate([
        rng.choice(ambiguous, size=from_ambiguous, replace=False),
        rng.choice(clear, size=from_clear, replace=False),
    ])
    return np.sort(chosen.astype(np.int64))


def generate(config: GeneratorConfig, seed: Optional[int] = None) -> SyntheticDataset:
    """설정으로부터 합성 데이터셋 생성 (같은 설정과 시드면 바이트 단위로 동일)"""
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(0 if seed is None else seed)
    C, F = config.num_classes, config.feature_dim

    directions = rng.standard_normal((C, F))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    centers = directions / np.where(norms > 0, norms, 1.0) * config.separation

    split_sizes = [("train", config.n_train), ("query", config.n_query), ("gallery", config.n_gallery)]
    labels_parts: List[np.ndarray] = []
    split_parts: List[np.ndarray] = []
    for name, size in split_sizes:
        counts = class_counts(size, C, config.imbalance_ratio)
        labels = np.repeat(np.arange(C, dtype=np.int64), counts)
        labels_parts.append(rng.permutation(labels))
        split_parts.append(np.full(size, SPLIT_CODES[name], dtype=np.uint8))
    true_labels = np.concatenate(labels_parts)
    splits = np.concatenate(split_parts)
    n = true_labels.shape[0]

    hetero = np.zeros(n, dtype=bool)
    n_hetero = int(round(config.hetero_fraction * n))
    if n_hetero:
        hetero[rng.choice(n, size=n_hetero, replace=False)] = True
    scale = np.full(n, config.base_noise, dtype=np.float64)
    scale[hetero] *= config.hetero_scale

    features = centers[true_labels] + rng.standard_normal((n, F)) * scale[:, None]

    noisy_labels = true_labels.copy()
    partner = confusion_partner_map(config) if config.flip_scheme == "confusion_pairs" else {}
    for name in config.noisy_splits:
        members = np.flatnonzero(splits == SPLIT_CODES[name])
        n_flip = int(round(config.flip_rate * members.size))
        if n_flip == 0:
            continue
        if config.flip_scheme == "confusion_pairs":
            candidates = members[np.isin(true_labels[members], list(partner))]
        else:
            candidates = members
        if candidates.size < n_flip:
            logger.warning(f"split {name}: only {candidates.size} samples can flip (requested {n_flip})")
            count_warning("data.unflippable", n_flip - int(candidates.size))
            n_flip = int(candidates.size)
        flipped = _choose_flips(candidates, hetero, n_flip, config.ambiguous_flip_share, rng)
        if config.flip_scheme == "confusion_pairs":
            noisy_labels[flipped] = [partner[int(c)] for c in true_labels[flipped]]
        else:
            # 자기 자신을 제외한 C-1개 클래스 중 균등
            offsets = rng.integers(0, C - 1, size=flipped.size)
            noisy_labels[flipped] = np.where(offsets >= true_labels[flipped], offsets + 1, offsets)

    dataset = SyntheticDataset(
        ids=np.arange(n, dtype=np.int64),
        features=features,
        true_labels=true_labels,
        noisy_labels=noisy_labels,
        noise_mask=true_labels != noisy_labels,
        sample_noise_scale=scale,
        splits=splits,
    )
    logger.info(
        f"Generated dataset: N={n}, F={F}, C={C}, flips={int(dataset.noise_mask.sum())}, hetero={n_hetero}"
    )
    return dataset


def dataset_to_bytes(dataset: SyntheticDataset) -> bytes:
    """HDST 포맷 직렬화"""
    writer = BinaryWriter(DATASET_MAGIC, DATASET_VERSION)
    writer.u64(len(dataset))
    writer.u32(dataset.feature_dim)
    writer.array(dataset.ids, "<i8")
    writer.array(dataset.features, "<f8")
    writer.array(dataset.true_labels, "<i8")
    writer.array(dataset.noisy_labels, "<i8")
    writer.array(dataset.noise_mask, "u1")
    writer.array(dataset.sample_noise_scale, "<f8")
    writer.array(dataset.splits, "u1")
    return writer.getvalue()


def dataset_from_bytes(data: bytes, path: str = "") -> SyntheticDataset:
    """HDST 포맷 역직렬화"""
    reader = BinaryReader(data, DATASET_MAGIC, (DATASET_VERSION,), path)
    n = reader.u64()
    f = reader.u32()
    ids = reader.array(n, "<i8")
    features = reader.array(n * f, "<f8").reshape(n, f)
    true_labels = reader.array(n, "<i8")
    noisy_labels = reader.array(n, "<i8")
    mask_offset = reader.offset
    noise_mask = reader.array(n, "u1")
    if np.any(noise_mask > 1):
        raise FormatError("noise mask 값은 0 또는 1이어야 합니다", offset=mask_offset, path=path)
    scale = reader.array(n, "<f8")
    split_offset = reader.offset
    splits = reader.array(n, "u1")
    if np.any(splits > max(SPLIT_NAMES)):
        raise FormatError("알 수 없는 split 태그가 있습니다", offset=split_offset, path=path)
    reader.finish()
    return SyntheticDataset(
        ids=ids,
        features=features,
        true_labels=true_labels,
        noisy_labels=noisy_labels,
        noise_mask=noise_mask.astype(bool),
        sample_noise_scale=scale,
        splits=splits,
    )


def save_features(path, dataset: SyntheticDataset) -> None:
    Path(path).write_bytes(dataset_to_bytes(dataset))
    logger.info(f"Dataset saved to {path} (N={len(dataset)}, F={dataset.feature_dim})")


def load_features(path) -> SyntheticDataset:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"데이터셋 파일을 읽을 수 없습니다: {path} ({e})")
    return dataset_from_bytes(data, str(path))


def _feature_columns(columns: Sequence[str]) -> List[str]:
    numbered = [c for c in columns if c.startswith("f") and c[1:].isdigit()]
    numbered.sort(key=lambda c: int(c[1:]))
    expected = [f"f{i}" for i in range(len(numbered))]
    if not numbered or numbered != expected:
        raise FormatError(f"특징 열은 f0..f{{F-1}} 이어야 합니다: {numbered[:5]}")
    return numbered


def import_csv(path, default_split: str = "train") -> SyntheticDataset:
    """외부 특징 CSV 가져오기

    필수 열: id, label, f0..f{F-1}. 선택 열: split (train/query/gallery), true_label, noise_scale.
    true_label이 없으면 관측 라벨을 참 라벨로 간주합니다.
    """
    if default_split not in SPLIT_CODES:
        raise ConfigError(f"알 수 없는 split: {default_split}", "split")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise FormatError(f"CSV를 읽을 수 없습니다: {e}", path=str(path))

    missing = [c for c in ("id", "label") if c not in frame.columns]
    if missing:
        raise FormatError(f"필수 열이 없습니다: {missing}", path=str(path))
    feature_cols = _feature_columns(list(frame.columns))

    try:
        features = frame[feature_cols].to_numpy(dtype=np.float64)
        ids = frame["id"].to_numpy(dtype=np.int64)
        noisy = frame["label"].to_numpy(dtype=np.int64)
        true = frame["true_label"].to_numpy(dtype=np.int64) if "true_label" in frame.columns else noisy.copy()
        scale = (
            frame["noise_scale"].to_numpy(dtype=np.float64)
            if "noise_scale" in frame.columns
            else np.zeros(len(frame), dtype=np.float64)
        )
    except (ValueError, TypeError) as e:
        raise FormatError(f"CSV 값을 숫자로 변환할 수 없습니다: {e}", path=str(path))

    if "split" in frame.columns:
        unknown = sorted(set(frame["split"].astype(str)) - set(SPLIT_CODES))
        if unknown:
            raise FormatError(f"알 수 없는 split 값: {unknown}", path=str(path))
        splits = frame["split"].astype(str).map(SPLIT_CODES).to_numpy(dtype=np.uint8)
    else:
        splits = np.full(len(frame), SPLIT_CODES[default_split], dtype=np.uint8)

    logger.info(f"Imported {len(frame)} rows with {len(feature_cols)} features from {path}")
    return SyntheticDataset(
        ids=ids,
        features=features,
        true_labels=true,
        noisy_labels=noisy,
        noise_mask=true != noisy,
        sample_noise_scale=scale,
        splits=splits,
    )


def export_csv(path, dataset: SyntheticDataset) -> None:
    """데이터셋을 CSV로 내보내기 (import_csv로 다시 읽을 수 있는 형식)"""
    frame = pd.DataFrame({
        "id": dataset.ids,
        "split": [SPLIT_NAMES[int(code)] for code in dataset.splits],
        "label": dataset.noisy_labels,
        "true_label": dataset.true_labels,
        "noise_scale": dataset.sample_noise_scale,
    })
    features = pd.DataFrame(dataset.features, columns=[f"f{i}" for i in range(dataset.feature_dim)])
    pd.concat([frame, features], axis=1).to_csv(path, index=False, float_format="%.17g")
