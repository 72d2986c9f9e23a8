import numpy as np
import pytest

from lpcr_shield.core.exceptions import (
    ArchitectureError,
    DatasetValidationError,
    GradientCheckFailedError,
    LayerShapeError,
    ModelFileError,
)
from lpcr_shield.nn import (
    LayerKind,
    LayerSpec,
    batchnorm,
    conv,
    decode_params,
    dropout,
    encode_params,
    fc,
    gradient_check,
    load_params,
    maxpool,
    relu,
    save_params,
    softmax_layer,
)
from lpcr_shield.nn import layers as nl
from lpcr_shield.nn.network import (
    Mode,
    ModelParams,
    cross_entropy,
    forward,
    infer_shapes,
    init_params,
    loss_and_grad,
    sgd_momentum_step,
    softmax,
    tensor_name,
)
from lpcr_shield.utils.rng import RngStream

pytestmark = pytest.mark.unit

SMALL_CONV_NET = (conv(2, bias=False), batchnorm(), relu(), maxpool(), fc(5), relu(), fc(3), softmax_layer())


def linear_net(weight, bias) -> ModelParams:
    specs = (fc(len(bias)), softmax_layer())
    model = init_params(specs, (len(weight),), RngStream(0), dtype=np.float64)
    return model.replace(params={
        tensor_name(0, "weight"): np.asarray(weight, dtype=np.float64),
        tensor_name(0, "bias"): np.asarray(bias, dtype=np.float64),
    })


class TestLayerSpecs:
    def test_dict_round_trip(self):
        for spec in (conv(4, bias=False), fc(3), dropout(0.25), maxpool(), softmax_layer()):
            assert LayerSpec.from_dict(spec.to_dict()) == spec

    def test_infer_shapes_lpcr_stack(self):
        specs = (conv(4), maxpool(), conv(4), maxpool(), fc(10), softmax_layer())
        shapes = infer_shapes(specs, (80, 48, 3))
        assert shapes[1] == (40, 24, 4)
        assert shapes[3] == (20, 12, 4)
        assert shapes[-1] == (10,)

    def test_softmax_must_be_last(self):
        with pytest.raises(ArchitectureError):
            infer_shapes((fc(3), softmax_layer(), fc(3)), (4,))

    def test_pooling_to_zero(self):
        with pytest.raises(LayerShapeError):
            infer_shapes((maxpool(), maxpool(), fc(2)), (2, 2, 1))

    def test_conv_after_flatten(self):
        with pytest.raises(LayerShapeError):
            infer_shapes((fc(4), conv(2), fc(2)), (4, 4, 3))


class TestKernels:
    def test_conv_matches_direct_sum(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 5, 4, 3))
        weight = rng.standard_normal((3, 3, 3, 2))
        bias = rng.standard_normal(2)
        out = nl.conv_forward(x, weight, bias)

        padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        expected = np.zeros((2, 5, 4, 2))
        for i in range(5):
            for j in range(4):
                window = padded[:, i:i + 3, j:j + 3, :]
                expected[:, i, j, :] = np.einsum("nhwc,hwcf->nf", window, weight) + bias
        assert np.allclose(out, expected)

    def test_maxpool_forward_and_routing(self):
        x = np.array([[1, 2, 5, 0], [3, 4, 1, 1], [0, 0, 2, 2], [9, 0, 2, 7]], dtype=np.float64)
        x = x.reshape(1, 4, 4, 1)
        out, argmax = nl.maxpool_forward(x)
        assert out[0, :, :, 0].tolist() == [[4, 5], [9, 7]]
        dx = nl.maxpool_backward(np.ones_like(out), argmax, x.shape)
        assert dx[0, :, :, 0].tolist() == [[0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0], [1, 0, 0, 1]]

    def test_maxpool_drops_odd_edge(self):
        out, _ = nl.maxpool_forward(np.ones((1, 5, 3, 2)))
        assert out.shape == (1, 2, 1, 2)

    def test_batchnorm_train_normalizes(self):
        rng = np.random.default_rng(1)
        x = rng.normal(3.0, 2.0, (8, 4, 4, 3))
        out, _, (mean, var) = nl.batchnorm_forward(x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3), train=True)
        assert np.all(np.abs(out.mean(axis=(0, 1, 2))) < 1e-5)
        assert np.all(np.abs(out.var(axis=(0, 1, 2)) - 1.0) < 1e-4)
        # running stats move 10% of the way towards the batch statistics
        assert np.allclose(mean, 0.1 * x.mean(axis=(0, 1, 2)))
        count = 8 * 4 * 4
        assert np.allclose(var, 0.9 + 0.1 * x.var(axis=(0, 1, 2)) * count / (count - 1))

    def test_batchnorm_eval_uses_running_stats(self):
        x = np.full((2, 1, 1, 1), 5.0)
        out, _, buffers = nl.batchnorm_forward(
            x, np.array([2.0]), np.array([1.0]), np.array([1.0]), np.array([4.0]), train=False
        )
        assert np.allclose(out, 2.0 * 4.0 / np.sqrt(4.0 + 1e-5) + 1.0)
        assert buffers[0][0] == 1.0 and buffers[1][0] == 4.0

    def test_inverted_dropout_scaling(self):
        rng = np.random.default_rng(2)
        x = np.ones((1000, 10), dtype=np.float32)
        out, keep = nl.dropout_forward(x, 0.5, rng)
        assert set(np.unique(out).tolist()) <= {0.0, 2.0}
        assert abs(out.mean() - 1.0) < 0.05


class TestForward:
    def test_linear_logits(self):
        model = linear_net([[1.0, -1.0], [0.5, 2.0]], [0.0, 1.0])
        result = forward(model, np.array([[2.0, 4.0]]))
        assert result.logits.tolist() == [[4.0, 7.0]]

    def test_softmax_rows_sum_to_one(self):
        probabilities = softmax(np.array([[1000.0, 1000.0], [0.0, np.log(3.0)]]))
        assert np.allclose(probabilities, [[0.5, 0.5], [0.25, 0.75]])

    def test_eval_is_deterministic_and_pure(self):
        model = init_params(SMALL_CONV_NET, (4, 4, 3), RngStream(3))
        batch = np.random.default_rng(0).random((3, 4, 4, 3)).astype(np.float32)
        before = {k: v.copy() for k, v in model.buffers.items()}
        a = forward(model, batch, mode=Mode.EVAL).logits
        b = forward(model, batch, mode=Mode.EVAL).logits
        assert np.array_equal(a, b)
        assert all(np.array_equal(before[k], model.buffers[k]) for k in before)

    def test_train_mode_returns_new_buffers(self):
        model = init_params(SMALL_CONV_NET, (4, 4, 3), RngStream(3))
        batch = np.random.default_rng(0).random((3, 4, 4, 3)).astype(np.float32)
        result = forward(model, batch, mode=Mode.TRAIN)
        key = tensor_name(1, "running_mean")
        assert not np.array_equal(result.buffers[key], model.buffers[key])
        assert np.array_equal(model.buffers[key], np.zeros(2, dtype=np.float32))

    def test_empty_batch(self):
        model = linear_net([[1.0], [1.0]], [0.0])
        with pytest.raises(LayerShapeError):
            forward(model, np.zeros((0, 2)))

    def test_wrong_input_shape(self):
        model = linear_net([[1.0], [1.0]], [0.0])
        with pytest.raises(LayerShapeError):
            forward(model, np.zeros((1, 3)))

    def test_train_dropout_needs_rng(self):
        model = init_params((fc(4), dropout(0.5), fc(2), softmax_layer()), (3,), RngStream(0))
        with pytest.raises(ArchitectureError):
            forward(model, np.ones((2, 3), dtype=np.float32), mode=Mode.TRAIN)

    def test_init_is_seeded(self):
        a = init_params(SMALL_CONV_NET, (4, 4, 3), RngStream(5, ("init",)))
        b = init_params(SMALL_CONV_NET, (4, 4, 3), RngStream(5, ("init",)))
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
        assert tensor_name(0, "bias") not in a.params
        assert a.params[tensor_name(4, "bias")].tolist() == [0.0] * 5


class TestLoss:
    def test_uniform_logits(self):
        loss, dlogits = cross_entropy(np.zeros((2, 4)), np.array([1, 3]))
        assert loss == pytest.approx(np.log(4.0))
        assert np.allclose(dlogits, [[0.125, -0.375, 0.125, 0.125], [0.125, 0.125, 0.125, -0.375]])

    def test_loss_and_grad_linear(self):
        model = linear_net([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0])
        step = loss_and_grad(model, np.array([[1.0, 2.0]]), [0])
        assert step.loss == pytest.approx(np.log(2.0))
        assert np.allclose(step.grads[tensor_name(0, "weight")], [[-0.5, 0.5], [-1.0, 1.0]])
        assert np.allclose(step.grads[tensor_name(0, "bias")], [-0.5, 0.5])

    def test_labels_validated(self):
        model = linear_net([[0.0, 0.0]], [0.0, 0.0])
        with pytest.raises(DatasetValidationError):
            loss_and_grad(model, np.ones((1, 1)), [2])
        with pytest.raises(DatasetValidationError):
            loss_and_grad(model, np.ones((2, 1)), [0])

    def test_batch_order_does_not_change_loss(self):
        model = init_params(SMALL_CONV_NET, (4, 4, 3), RngStream(6), dtype=np.float64)
        batch = np.random.default_rng(1).random((5, 4, 4, 3))
        labels = np.array([0, 2, 1, 1, 0])
        order = np.array([3, 0, 4, 2, 1])
        a = loss_and_grad(model, batch, labels)
        b = loss_and_grad(model, batch[order], labels[order])
        assert b.loss == pytest.approx(a.loss, rel=1e-12)
        for name, grad in a.grads.items():
            np.testing.assert_allclose(b.grads[name], grad, rtol=1e-9, atol=1e-12)


class TestSgdMomentum:
    def test_two_steps(self):
        params = {"w": np.array([1.0])}
        grads = {"w": np.array([0.5])}
        params, velocity = sgd_momentum_step(params, {}, grads, lr=0.1, momentum=0.9)
        assert params["w"][0] == pytest.approx(0.95)
        assert velocity["w"][0] == pytest.approx(0.5)
        params, velocity = sgd_momentum_step(params, velocity, grads, lr=0.1, momentum=0.9)
        assert velocity["w"][0] == pytest.approx(0.95)
        assert params["w"][0] == pytest.approx(0.855)

    def test_inputs_untouched(self):
        params = {"w": np.array([1.0])}
        sgd_momentum_step(params, {}, {"w": np.array([1.0])}, lr=0.5, momentum=0.0)
        assert params["w"][0] == 1.0

    def test_name_mismatch(self):
        with pytest.raises(ArchitectureError):
            sgd_momentum_step({"w": np.zeros(1)}, {}, {"v": np.zeros(1)}, lr=0.1, momentum=0.9)


class TestGradientCheck:
    def test_fc_layers_within_1e4(self):
        report = gradient_check((fc(6), relu(), fc(4), softmax_layer()), seed=1, input_shape=(3, 2, 1),
                                include_input=True)
        assert report.passed(1e-4), report.errors
        assert set(report.errors) == {"layer00.weight", "layer00.bias", "layer02.weight", "layer02.bias", "input"}

    def test_conv_batchnorm_eval(self):
        report = gradient_check(SMALL_CONV_NET, seed=2, input_shape=(4, 4, 3))
        assert report.passed(1e-3), report.errors

    def test_conv_batchnorm_train_statistics(self):
        report = gradient_check(SMALL_CONV_NET, seed=3, input_shape=(4, 4, 3), batch_size=3, mode=Mode.TRAIN)
        assert report.passed(1e-3), report.errors

    def test_dropout_in_train_mode_is_rejected(self):
        with pytest.raises(ArchitectureError):
            gradient_check((fc(3), dropout(0.5), fc(2), softmax_layer()), seed=0, input_shape=(2,), mode="train")

    def test_parameter_budget(self):
        with pytest.raises(ArchitectureError):
            gradient_check((fc(600), fc(2), softmax_layer()), seed=0, input_shape=(16,))

    def test_broken_backward_is_caught(self, monkeypatch):
        original = nl.fc_backward

        def doubled(x, weight, dout, has_bias):
            dx, dweight, dbias = original(x, weight, dout, has_bias)
            return dx, 2.0 * dweight, dbias

        monkeypatch.setattr(nl, "fc_backward", doubled)
        report = gradient_check((fc(4), relu(), fc(3), softmax_layer()), seed=1, input_shape=(3,))
        assert not report.passed(1e-4)
        with pytest.raises(GradientCheckFailedError):
            report.raise_for_tolerance(1e-4)


class TestSerialization:
    def make_model(self) -> ModelParams:
        return init_params(SMALL_CONV_NET, (4, 4, 3), RngStream(9))

    def test_round_trip_is_exact(self, tmp_path):
        model = self.make_model()
        save_params(tmp_path / "m.bin", model, {"note": "x"})
        loaded, metadata = load_params(tmp_path / "m.bin")
        assert metadata == {"note": "x"}
        assert loaded.specs == model.specs
        assert set(loaded.params) == set(model.params)
        assert all(np.array_equal(loaded.params[k], model.params[k]) for k in model.params)
        assert all(np.array_equal(loaded.buffers[k], model.buffers[k]) for k in model.buffers)

    def test_encoding_is_byte_stable(self):
        model = self.make_model()
        assert encode_params(model, {"a": 1}) == encode_params(model.copy(), {"a": 1})

    def test_bad_magic(self):
        data = bytearray(encode_params(self.make_model()))
        data[0:8] = b"NOTMODEL"
        with pytest.raises(ModelFileError):
            decode_params(bytes(data))

    def test_truncated(self):
        data = encode_params(self.make_model())
        with pytest.raises(ModelFileError):
            decode_params(data[:-4])

    def test_flipped_weight_byte(self):
        data = bytearray(encode_params(self.make_model()))
        data[-1] ^= 0x01
        with pytest.raises(ModelFileError):
            decode_params(bytes(data))

    def test_trailing_bytes(self):
        with pytest.raises(ModelFileError):
            decode_params(encode_params(self.make_model()) + b"\x00")

    def test_layer_kinds_survive(self, tmp_path):
        save_params(tmp_path / "m.bin", self.make_model())
        loaded, _ = load_params(tmp_path / "m.bin")
        assert [spec.kind for spec in loaded.specs][:4] == [
            LayerKind.CONV3X3, LayerKind.BATCHNORM, LayerKind.RELU, LayerKind.MAXPOOL2
        ]
