"""공통 pytest 픽스처"""
import numpy as np
import pytest

from src.config import reload_settings
from src.hetero.losses import BatchOutput, EmbeddingOutput
from src.schemas.config import GeneratorConfig
from src.utils.metrics import reset_global_metrics


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    """환경 변수/.env/전역 카운터가 테스트 사이에 새지 않도록 격리"""
    for name in ("HEMB_SEED", "HEMB_THREADS", "HEMB_LOG_LEVEL", "HEMB_LOG_FILE"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    reload_settings()
    reset_global_metrics()
    yield
    reset_global_metrics()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_generator_config():
    return GeneratorConfig(
        n_train=120,
        n_query=40,
        n_gallery=40,
        feature_dim=6,
        num_classes=4,
        separation=4.0,
        base_noise=0.5,
        hetero_fraction=0.3,
        hetero_scale=3.0,
        flip_rate=0.2,
        seed=11,
    )


def make_output(embedding, s=0.0) -> EmbeddingOutput:
    return EmbeddingOutput.of(embedding, s)


def random_batch(rng, size: int, dim: int, s_scale: float = 1.0) -> BatchOutput:
    return BatchOutput(rng.standard_normal((size, dim)), rng.uniform(-s_scale, s_scale, size))


def random_triplets(rng, size: int, count: int) -> np.ndarray:
    """인덱스 범위만 맞춘 임의 triplet (라벨 불변식 불필요한 손실 테스트용)"""
    return rng.integers(0, size, size=(count, 3))
