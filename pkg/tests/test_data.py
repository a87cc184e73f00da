"""합성 데이터 생성과 특징 파일 입출력 테스트"""
import struct
import zlib

import numpy as np
import pytest

from src.hetero.data import (
    SPLIT_CODES,
    SyntheticDataset,
    class_counts,
    confusion_partner_map,
    dataset_from_bytes,
    dataset_to_bytes,
    export_csv,
    generate,
    import_csv,
    load_features,
    save_features,
)
from src.hetero.evaluation import EmbeddedSplit, leave_one_out_evaluate
from src.schemas.config import GeneratorConfig
from src.utils.errors import DataError, FormatError
from src.utils.metrics import get_metrics


def reseal(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class TestClassCounts:
    @pytest.mark.parametrize(
        "total, classes, ratio, expected",
        [
            (100, 4, 1.0, [25, 25, 25, 25]),
            (10, 3, 1.0, [4, 3, 3]),
            (100, 2, 4.0, [80, 20]),
        ],
    )
    def test_known_counts(self, total, classes, ratio, expected):
        assert class_counts(total, classes, ratio).tolist() == expected

    def test_sum_and_order(self):
        counts = class_counts(997, 7, 10.0)
        assert counts.sum() == 997
        assert np.all(np.diff(counts) <= 0)


class TestGenerate:
    def test_clean_noiseless_data_is_perfectly_separable(self):
        config = GeneratorConfig(
            n_train=40, n_query=0, n_gallery=0, feature_dim=5, num_classes=4,
            base_noise=0.0, flip_rate=0.0, seed=3,
        )
        dataset = generate(config)
        assert not dataset.noise_mask.any()
        report = leave_one_out_evaluate(EmbeddedSplit.of(dataset.features, dataset.labels), ks=[1])
        assert report.micro_map == 1.0

    def test_flip_count_per_split(self, small_generator_config):
        dataset = generate(small_generator_config)
        train = dataset.split("train")
        assert len(train) == 120
        assert int(train.noise_mask.sum()) == round(0.2 * 120)
        assert not dataset.split("query").noise_mask.any()
        assert not dataset.split("gallery").noise_mask.any()

    def test_noisy_evaluation_splits(self, small_generator_config):
        config = small_generator_config.model_copy(update={"noisy_splits": ["train", "gallery"]})
        dataset = generate(config)
        assert int(dataset.split("gallery").noise_mask.sum()) == round(0.2 * 40)

    def test_flipped_labels_stay_in_range(self, small_generator_config):
        dataset = generate(small_generator_config)
        flipped = dataset.noise_mask
        assert np.all(dataset.noisy_labels[flipped] != dataset.true_labels[flipped])
        assert dataset.noisy_labels.min() >= 0
        assert dataset.noisy_labels.max() < 4

    def test_confusion_pairs(self, small_generator_config):
        config = small_generator_config.model_copy(update={"flip_scheme": "confusion_pairs", "num_classes": 5})
        dataset = generate(config)
        partner = confusion_partner_map(config)
        assert partner == {0: 1, 1: 0, 2: 3, 3: 2}
        flipped = np.flatnonzero(dataset.noise_mask)
        assert flipped.size > 0
        for i in flipped:
            assert dataset.noisy_labels[i] == partner[int(dataset.true_labels[i])]
        assert not np.any(dataset.noise_mask & (dataset.true_labels == 4))

    def test_unflippable_is_counted(self, small_generator_config):
        config = small_generator_config.model_copy(update={
            "flip_scheme": "confusion_pairs", "confusion_pairs": [(0, 1)], "flip_rate": 0.9,
        })
        dataset = generate(config)
        candidates = int(np.isin(dataset.split("train").true_labels, [0, 1]).sum())
        assert int(dataset.noise_mask.sum()) == candidates
        assert get_metrics().count("data.unflippable") == round(0.9 * 120) - candidates

    def test_ambiguous_flips_prefer_heteroscedastic_samples(self, small_generator_config):
        config = small_generator_config.model_copy(update={"hetero_fraction": 0.6, "ambiguous_flip_share": 1.0})
        dataset = generate(config)
        hetero = dataset.sample_noise_scale > config.base_noise
        assert np.all(hetero[dataset.noise_mask])

    def test_heteroscedastic_subset(self, small_generator_config):
        dataset = generate(small_generator_config)
        scales = dataset.sample_noise_scale
        assert int(np.sum(scales == 0.5 * 3.0)) == round(0.3 * 200)
        assert set(np.unique(scales).tolist()) == {0.5, 1.5}

    def test_deterministic_bytes(self, small_generator_config):
        first = dataset_to_bytes(generate(small_generator_config))
        second = dataset_to_bytes(generate(small_generator_config))
        assert first == second
        assert dataset_to_bytes(generate(small_generator_config, seed=12)) != first

    def test_split_sizes_and_ids(self, small_generator_config):
        dataset = generate(small_generator_config)
        assert len(dataset) == 200
        assert dataset.ids.tolist() == list(range(200))
        assert [len(dataset.split(name)) for name in SPLIT_CODES] == [120, 40, 40]
        assert dataset.feature_dim == 6


class TestDatasetInvariants:
    def test_mask_must_match_labels(self):
        with pytest.raises(DataError):
            SyntheticDataset(
                ids=np.arange(2), features=np.zeros((2, 1)), true_labels=np.array([0, 1]),
                noisy_labels=np.array([0, 0]), noise_mask=np.array([False, False]),
                sample_noise_scale=np.zeros(2), splits=np.zeros(2, dtype=np.uint8),
            )

    def test_unknown_split_name(self, small_generator_config):
        with pytest.raises(ValueError):
            generate(small_generator_config).split("validation")


class TestBinaryFormat:
    def test_round_trip(self, small_generator_config, tmp_path):
        dataset = generate(small_generator_config)
        path = tmp_path / "dataset.hdst"
        save_features(path, dataset)
        assert load_features(path) == dataset

    def test_truncated(self, small_generator_config):
        data = dataset_to_bytes(generate(small_generator_config))
        with pytest.raises(FormatError) as excinfo:
            dataset_from_bytes(reseal(data[:-4][:-50]))
        assert excinfo.value.offset is not None

    def test_invalid_mask_byte(self):
        dataset = SyntheticDataset(
            ids=np.arange(3), features=np.ones((3, 2)), true_labels=np.array([0, 1, 0]),
            noisy_labels=np.array([0, 1, 0]), noise_mask=np.zeros(3, dtype=bool),
            sample_noise_scale=np.zeros(3), splits=np.zeros(3, dtype=np.uint8),
        )
        body = bytearray(dataset_to_bytes(dataset)[:-4])
        mask_offset = 4 + 4 + 8 + 4 + 3 * 8 + 3 * 2 * 8 + 3 * 8 + 3 * 8
        body[mask_offset] = 2
        with pytest.raises(FormatError) as excinfo:
            dataset_from_bytes(reseal(bytes(body)))
        assert excinfo.value.offset == mask_offset

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_features(tmp_path / "nothing.hdst")


class TestCsv:
    def test_minimal_import(self, tmp_path):
        path = tmp_path / "features.csv"
        path.write_text("id,label,f0,f1\n5,0,0.5,1.5\n6,1,-1,2\n7,0,3,4\n")
        dataset = import_csv(path)
        assert dataset.ids.tolist() == [5, 6, 7]
        assert dataset.features.tolist() == [[0.5, 1.5], [-1.0, 2.0], [3.0, 4.0]]
        assert np.array_equal(dataset.true_labels, dataset.noisy_labels)
        assert not dataset.noise_mask.any()
        assert np.all(dataset.splits == SPLIT_CODES["train"])

    def test_default_split(self, tmp_path):
        path = tmp_path / "features.csv"
        path.write_text("id,label,f0\n1,0,0.5\n2,1,1.5\n")
        assert np.all(import_csv(path, default_split="gallery").splits == SPLIT_CODES["gallery"])

    def test_export_import(self, small_generator_config, tmp_path):
        dataset = generate(small_generator_config)
        path = tmp_path / "dataset.csv"
        export_csv(path, dataset)
        assert import_csv(path) == dataset

    @pytest.mark.parametrize(
        "text",
        [
            "id,f0,f1\n1,0.5,1.5\n",
            "id,label,f0,f2\n1,0,0.5,1.5\n",
            "id,label\n1,0\n",
            "id,label,f0\n1,x,0.5\n",
            "id,label,split,f0\n1,0,holdout,0.5\n",
        ],
    )
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(FormatError):
            import_csv(path)

    def test_duplicate_ids(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("id,label,f0\n1,0,0.5\n1,1,1.5\n")
        with pytest.raises(DataError):
            import_csv(path)
