"""인코더 순전파/역전파, 모멘텀 SGD, 학습률 스케줄, 모델 파일 테스트"""
import math
import struct
import zlib

import numpy as np
import pytest

from src.hetero.encoder import (
    EncoderParams,
    TrainingState,
    embed,
    forward,
    forward_batch,
    init_params,
    layer_sizes_for,
    load_model,
    lr_schedule,
    model_from_bytes,
    model_to_bytes,
    save_model,
    sgd_momentum_step,
)
from src.hetero.losses import S_BOUNDS
from src.hetero.mining import batch_hard_triplets, pairwise_distances
from src.hetero.trainer import batch_objective
from src.schemas.config import LrSchedule, MarginMode
from src.utils.errors import ConfigError, DataError, FormatError, NumericalError, ShapeError


def reseal(body: bytes) -> bytes:
    """CRC32를 다시 붙여 본문 손상만 남김"""
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def scalar_params(value: float = 1.0) -> EncoderParams:
    return EncoderParams([np.full((1, 2), value)], [np.full(2, value)])


class TestForward:
    def test_zero_weights(self):
        params = EncoderParams([np.zeros((3, 4)), np.zeros((4, 3))], [np.zeros(4), np.zeros(3)])
        out = forward(params, [1.0, -2.0, 3.0])
        assert np.array_equal(out.embedding, np.zeros(2))
        assert out.log_variance == 0.0

    def test_identity_layer_and_clamp(self):
        params = EncoderParams([np.eye(3)], [np.zeros(3)])
        out = forward(params, [0.5, -1.5, 42.0])
        assert np.array_equal(out.embedding, [0.5, -1.5])
        assert out.log_variance == S_BOUNDS[1]
        assert forward(params, [0.0, 0.0, -42.0]).log_variance == S_BOUNDS[0]

    def test_matches_fsum_oracle(self, rng):
        params = init_params([5, 7, 4], rng)
        params.biases[0][:] = rng.standard_normal(7)
        params.biases[1][:] = rng.standard_normal(4)
        x = rng.standard_normal(5)
        hidden = [
            max(math.fsum(x[i] * params.weights[0][i, j] for i in range(5)) + params.biases[0][j], 0.0)
            for j in range(7)
        ]
        final = [math.fsum(hidden[i] * params.weights[1][i, j] for i in range(7)) + params.biases[1][j] for j in range(4)]
        out = forward(params, x)
        np.testing.assert_allclose(out.embedding, final[:3], rtol=1e-10, atol=1e-12)
        assert out.log_variance == pytest.approx(final[3], rel=1e-10, abs=1e-12)

    def test_deterministic_bytes(self, rng):
        params = init_params([6, 8, 3], rng)
        x = rng.standard_normal((20, 6))
        first = embed(params, x)
        second = embed(params, x, chunk_size=7)
        assert first.embeddings.tobytes() == second.embeddings.tobytes()
        assert first.log_variances.tobytes() == second.log_variances.tobytes()

    def test_batch_matches_single(self, rng):
        params = init_params([4, 5, 3], rng)
        x = rng.standard_normal((6, 4))
        batch, _ = forward_batch(params, x)
        for i in range(6):
            single = forward(params, x[i])
            np.testing.assert_allclose(batch.embeddings[i], single.embedding, rtol=1e-12)

    def test_feature_length_mismatch(self, rng):
        params = init_params([4, 3], rng)
        with pytest.raises(ShapeError):
            forward(params, [1.0, 2.0])
        with pytest.raises(ShapeError):
            embed(params, np.zeros((3, 5)))

    def test_initial_output_shapes(self, rng):
        params = init_params(layer_sizes_for(6, [16, 8], 4), rng)
        assert params.layer_sizes == [6, 16, 8, 5]
        assert params.embedding_dim == 4
        assert all(np.all(b == 0.0) for b in params.biases)

    def test_invalid_layer_sizes(self, rng):
        with pytest.raises(ConfigError):
            init_params([4], rng)
        with pytest.raises(ConfigError):
            init_params([4, 0, 3], rng)


class TestSGDMomentum:
    def test_zero_momentum_is_plain_sgd(self, rng):
        params = init_params([3, 4], rng)
        grads = init_params([3, 4], rng)
        new_params, _ = sgd_momentum_step(params, grads, params.zeros_like(), 0.1, 0.0)
        for w, g, new in zip(params.weights, grads.weights, new_params.weights):
            np.testing.assert_allclose(new, w - 0.1 * g, rtol=1e-15)

    def test_hand_computed_recurrence(self):
        params = scalar_params(1.0)
        velocity = params.zeros_like()
        expected = [0.9, 1.01, 1.059]
        for g, want in zip((1.0, -2.0, 0.5), expected):
            params, velocity = sgd_momentum_step(params, scalar_params(g), velocity, 0.1, 0.9)
            np.testing.assert_allclose(params.weights[0], want, rtol=1e-12)
            np.testing.assert_allclose(params.biases[0], want, rtol=1e-12)

    def test_velocity_reaches_geometric_fixed_point(self):
        params = scalar_params(0.0)
        velocity = params.zeros_like()
        for _ in range(500):
            params, velocity = sgd_momentum_step(params, scalar_params(0.5), velocity, 1e-3, 0.9)
        np.testing.assert_allclose(velocity.weights[0], 0.5 / (1 - 0.9), rtol=1e-12)

    def test_non_finite_gradient(self):
        grads = scalar_params(1.0)
        grads.weights[0][0, 1] = np.nan
        with pytest.raises(NumericalError) as excinfo:
            sgd_momentum_step(scalar_params(), grads, scalar_params(0.0), 0.1, 0.9)
        assert excinfo.value.code == "NON_FINITE_GRADIENT"
        assert excinfo.value.details["layers"] == [{"layer": 0, "weights": 1, "biases": 0}]

    def test_overflowing_update(self):
        with pytest.raises(NumericalError) as excinfo:
            sgd_momentum_step(scalar_params(1.0), scalar_params(1e308), scalar_params(0.0), 1e10, 0.0)
        assert excinfo.value.code == "NON_FINITE_PARAMS"


class TestLrSchedule:
    def test_exponential(self):
        schedule = LrSchedule(kind="exponential", lr0=3e-4, t0=15000, t1=25000, lr1=1e-7)
        assert lr_schedule(schedule, 0) == 3e-4
        assert lr_schedule(schedule, 14999) == 3e-4
        assert lr_schedule(schedule, 25000) == 1e-7
        assert lr_schedule(schedule, 40000) == 1e-7
        assert lr_schedule(schedule, 20000) == pytest.approx(math.sqrt(3e-4 * 1e-7), rel=1e-12)

    def test_exponential_is_monotone(self):
        schedule = LrSchedule(kind="exponential", lr0=0.1, t0=10, t1=20, lr1=1e-3)
        values = [lr_schedule(schedule, t) for t in range(0, 30)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_linear(self):
        schedule = LrSchedule(kind="linear", lr0=0.01, t0=100, t1=200)
        assert lr_schedule(schedule, 50) == 0.01
        assert lr_schedule(schedule, 150) == pytest.approx(0.005, rel=1e-15)
        assert lr_schedule(schedule, 200) == 0.0
        assert lr_schedule(schedule, 1000) == 0.0

    def test_constant(self):
        assert lr_schedule(LrSchedule(kind="constant", lr0=0.02), 10 ** 6) == 0.02

    def test_bad_knees(self):
        schedule = LrSchedule.model_construct(kind="linear", lr0=0.01, t0=200, t1=100, lr1=1e-4, unit="iteration")
        with pytest.raises(ConfigError):
            lr_schedule(schedule, 0)
        with pytest.raises(ValueError):
            LrSchedule(kind="linear", t0=200, t1=100)

    def test_negative_time(self):
        with pytest.raises(ConfigError):
            lr_schedule(LrSchedule(kind="constant"), -1)


class TestModelFile:
    def test_round_trip_with_state(self, rng, tmp_path):
        params = init_params([5, 6, 3], rng)
        velocity = init_params([5, 6, 3], rng)
        path = tmp_path / "model.hemb"
        save_model(path, params, TrainingState(42, velocity))
        loaded, state = load_model(path)
        assert model_to_bytes(loaded, state) == path.read_bytes()
        assert state.iteration == 42
        for a, b in zip(loaded.arrays() + state.velocity.arrays(), params.arrays() + velocity.arrays()):
            assert np.array_equal(a, b)

    def test_without_state(self, rng):
        params = init_params([3, 2], rng)
        loaded, state = model_from_bytes(model_to_bytes(params))
        assert state is None
        assert np.array_equal(loaded.weights[0], params.weights[0])

    def test_truncated_body(self, rng):
        data = model_to_bytes(init_params([5, 6, 3], rng))
        with pytest.raises(FormatError) as excinfo:
            model_from_bytes(reseal(data[:-4][:-20]))
        assert excinfo.value.offset is not None

    def test_trailing_bytes(self, rng):
        data = model_to_bytes(init_params([3, 2], rng))
        with pytest.raises(FormatError):
            model_from_bytes(reseal(data[:-4] + b"\x00" * 8))

    def test_bad_magic(self, rng):
        data = model_to_bytes(init_params([3, 2], rng))
        with pytest.raises(FormatError) as excinfo:
            model_from_bytes(b"XXXX" + data[4:])
        assert excinfo.value.offset == 0

    def test_crc_mismatch(self, rng):
        data = bytearray(model_to_bytes(init_params([3, 2], rng)))
        data[20] ^= 0xFF
        with pytest.raises(FormatError):
            model_from_bytes(bytes(data))

    def test_unsupported_version(self, rng):
        data = model_to_bytes(init_params([3, 2], rng))
        body = data[:4] + struct.pack("<I", 99) + data[8:-4]
        with pytest.raises(FormatError) as excinfo:
            model_from_bytes(reseal(body))
        assert excinfo.value.offset == 4

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_model(tmp_path / "absent.hemb")


def _numeric_param_gradient(params, x, triplets, mode, loss, freeze=False, h=1e-6):
    grads = []
    for array in params.arrays():
        g = np.zeros_like(array)
        for idx in np.ndindex(array.shape):
            original = array[idx]
            array[idx] = original + h
            plus = batch_objective(params, x, triplets, mode, 0.01, loss, S_BOUNDS, freeze)[0].total
            array[idx] = original - h
            minus = batch_objective(params, x, triplets, mode, 0.01, loss, S_BOUNDS, freeze)[0].total
            array[idx] = original
            g[idx] = (plus - minus) / (2 * h)
        grads.append(g)
    return grads


class TestBackward:
    @pytest.mark.parametrize("loss", ["hetero", "vanilla"])
    def test_matches_finite_differences(self, loss):
        mode = MarginMode.soft()
        for trial in range(50):
            rng = np.random.default_rng(trial)
            params = init_params([3, 5, 3], rng)
            for b in params.biases:
                b[:] = rng.normal(0.0, 0.3, size=b.shape)
            x = rng.standard_normal((6, 3))
            labels = np.array([0, 0, 1, 1, 2, 2])
            outputs, _ = forward_batch(params, x)
            triplets = batch_hard_triplets(pairwise_distances(outputs.embeddings), labels)
            _, analytic, _ = batch_objective(params, x, triplets, mode, 0.01, loss, S_BOUNDS)
            numeric = _numeric_param_gradient(params, x, triplets, mode, loss)
            for a, n in zip(analytic.arrays(), numeric):
                np.testing.assert_allclose(a, n, rtol=1e-4, atol=1e-6)

    def test_frozen_log_variance(self, rng):
        mode = MarginMode.soft()
        params = init_params([3, 5, 3], rng)
        params.biases[-1][-1] = 2.0
        x = rng.standard_normal((6, 3))
        triplets = [(0, 1, 2), (3, 2, 5), (4, 5, 0)]
        frozen, frozen_grads, outputs = batch_objective(params, x, triplets, mode, 0.0, "hetero", S_BOUNDS, True)
        vanilla, vanilla_grads, _ = batch_objective(params, x, triplets, mode, 0.0, "vanilla", S_BOUNDS)
        assert np.all(outputs.log_variances == 0.0)
        assert frozen.total == pytest.approx(1.5 * vanilla.total, rel=1e-14)
        for a, b in zip(frozen_grads.arrays(), vanilla_grads.arrays()):
            np.testing.assert_allclose(a, 1.5 * b, rtol=1e-12, atol=1e-15)

    def test_frozen_matches_finite_differences(self, rng):
        mode = MarginMode.soft()
        params = init_params([3, 5, 3], rng)
        x = rng.standard_normal((6, 3))
        triplets = [(0, 1, 2), (3, 2, 5), (4, 5, 0)]
        _, analytic, _ = batch_objective(params, x, triplets, mode, 0.01, "hetero", S_BOUNDS, True)
        numeric = _numeric_param_gradient(params, x, triplets, mode, "hetero", freeze=True)
        for a, n in zip(analytic.arrays(), numeric):
            np.testing.assert_allclose(a, n, rtol=1e-4, atol=1e-6)


class TestEpochSchedule:
    def test_linear_epoch_fixture(self):
        schedule = LrSchedule(kind="linear", lr0=0.01, t0=250, t1=500, unit="epoch")
        assert lr_schedule(schedule, 0) == 0.01
        assert lr_schedule(schedule, 249.5) == 0.01
        assert lr_schedule(schedule, 250) == 0.01
        assert lr_schedule(schedule, 375) == 0.005
        assert lr_schedule(schedule, 500) == 0.0
