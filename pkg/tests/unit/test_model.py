import dataclasses

import numpy as np
import pytest

from lpcr_shield.core.exceptions import (
    ArchitectureError,
    ConfigurationError,
    DatasetValidationError,
    ModelFileError,
    TrainingDivergenceError,
)
from lpcr_shield.dataset import generate_dataset, split
from lpcr_shield.dataset.types import DatasetConfig
from lpcr_shield.model import (
    build_from_config,
    build_lpcr,
    evaluate,
    flatten_width,
    kfold_cv,
    load_model,
    lpcr_layer_specs,
    preprocess,
    save_model,
    train,
)
from lpcr_shield.model import training
from lpcr_shield.model.types import TrainConfig
from lpcr_shield.nn import LayerKind
from lpcr_shield.nn.network import infer_shapes

pytestmark = pytest.mark.unit


def params_equal(a, b) -> bool:
    return set(a.network.params) == set(b.network.params) and all(
        np.array_equal(a.network.params[k], b.network.params[k]) for k in a.network.params
    )


class TestArchitecture:
    def test_desk_flatten_width(self):
        assert flatten_width((80, 48)) == 1920
        shapes = infer_shapes(lpcr_layer_specs(), (80, 48, 3))
        last_pool = max(i for i, spec in enumerate(lpcr_layer_specs()) if spec.kind == LayerKind.MAXPOOL2)
        assert shapes[last_pool] == (5, 3, 128)

    def test_full_size_flatten_width(self):
        assert flatten_width((160, 112)) == 10 * 7 * 128

    def test_layer_order(self):
        specs = lpcr_layer_specs()
        kinds = [spec.kind for spec in specs]
        assert kinds.count(LayerKind.CONV3X3) == 9
        assert kinds.count(LayerKind.BATCHNORM) == 9
        assert kinds.count(LayerKind.MAXPOOL2) == 4
        assert all(not spec.bias for spec in specs if spec.kind == LayerKind.CONV3X3)
        assert [spec.units for spec in specs if spec.kind == LayerKind.FC] == [2304, 500, 13]
        assert kinds[-4:] == [LayerKind.FC, LayerKind.RELU, LayerKind.FC, LayerKind.SOFTMAX]

    def test_width_multiplier_scales_filters(self):
        specs = lpcr_layer_specs(width_multiplier=0.25)
        assert [spec.units for spec in specs if spec.kind == LayerKind.CONV3X3] == [4, 4, 8, 8, 16, 16, 32, 32, 32]

    @pytest.mark.parametrize("dims", [(80, 50), (8, 16), (0, 16), (16,)])
    def test_rejects_bad_dims(self, dims):
        with pytest.raises(ArchitectureError):
            build_lpcr(dims)

    def test_seeded_init(self, tiny_model):
        again = build_lpcr((16, 16), fc_widths=(8, 8), width_multiplier=1.0 / 16.0, seed=7)
        other = build_lpcr((16, 16), fc_widths=(8, 8), width_multiplier=1.0 / 16.0, seed=8)
        assert params_equal(tiny_model, again)
        assert not params_equal(tiny_model, other)

    def test_build_from_config_needs_seed(self):
        with pytest.raises(ConfigurationError):
            build_from_config((16, 16), TrainConfig())


class TestInference:
    def test_preprocess_scales_uint8(self):
        batch = preprocess(np.full((16, 16, 3), 255, dtype=np.uint8))
        assert batch.shape == (1, 16, 16, 3)
        assert batch.dtype == np.float32
        assert batch.max() == 1.0

    def test_probabilities(self, tiny_model, tiny_dataset):
        pixels = np.stack([image.pixels for image in tiny_dataset])
        proba = tiny_model.predict_proba(pixels)
        assert proba.shape == (18, 13)
        assert np.allclose(proba.sum(axis=1), 1.0)
        assert np.array_equal(tiny_model.predict(pixels), proba.argmax(axis=1))

    def test_batching_does_not_change_scores(self, tiny_model, tiny_dataset):
        pixels = np.stack([image.pixels for image in tiny_dataset])
        whole = tiny_model.predict_log_proba(pixels)
        tiny_model.eval_batch_size = 5
        assert np.allclose(tiny_model.predict_log_proba(pixels), whole, atol=1e-6)

    def test_input_gradient_shape(self, tiny_model, tiny_dataset):
        pixels = np.stack([image.pixels for image in tiny_dataset][:2])
        grad = tiny_model.loss_input_gradient(pixels, [0, 1])
        assert grad.shape == (2, 16, 16, 3)


class TestTraining:
    def test_reproducible(self, tiny_model, tiny_dataset, tiny_train_config):
        train_set, val_set = split(tiny_dataset, 0.5, seed=1)
        a = train(tiny_model, train_set, val_set, tiny_train_config)
        b = train(tiny_model, train_set, val_set, tiny_train_config)
        assert params_equal(a.model, b.model)
        assert a.history.to_frame().equals(b.history.to_frame())

    def test_history_and_best_epoch(self, tiny_model, tiny_dataset, tiny_train_config):
        train_set, val_set = split(tiny_dataset, 0.5, seed=1)
        result = train(tiny_model, train_set, val_set, tiny_train_config)
        history = result.history
        assert [record.epoch for record in history.records] == [1, 2]
        accuracies = [record.val_acc for record in history.records]
        assert history.best_epoch == 1 + accuracies.index(max(accuracies))
        assert evaluate(result.model, val_set).accuracy == pytest.approx(history.best_val_acc)
        assert result.model.provenance["best_epoch"] == history.best_epoch
        assert result.model.provenance["train_seed"] == tiny_train_config.seed

    def test_input_model_untouched(self, tiny_model, tiny_dataset, tiny_train_config):
        before = tiny_model.copy()
        train_set, val_set = split(tiny_dataset, 0.5, seed=1)
        train(tiny_model, train_set, val_set, tiny_train_config)
        assert params_equal(before, tiny_model)

    def test_zero_epochs_returns_initial_model(self, tiny_model, tiny_dataset, tiny_train_config):
        train_set, val_set = split(tiny_dataset, 0.5, seed=1)
        config = tiny_train_config.model_copy(update={"epochs": 0})
        result = train(tiny_model, train_set, val_set, config)
        assert params_equal(result.model, tiny_model)
        assert result.history.records == []
        assert result.history.best_epoch is None

    def test_learns_a_separable_problem(self, tiny_model, tiny_dataset, tiny_train_config):
        config = tiny_train_config.model_copy(update={"epochs": 20, "learning_rate": 0.02, "dropout": False})
        before = evaluate(tiny_model, tiny_dataset).mean_loss
        result = train(tiny_model, tiny_dataset, tiny_dataset, config)
        assert evaluate(result.model, tiny_dataset).mean_loss < before

    def test_empty_sets(self, tiny_model, tiny_dataset, tiny_train_config):
        with pytest.raises(DatasetValidationError):
            train(tiny_model, [], list(tiny_dataset), tiny_train_config)
        with pytest.raises(DatasetValidationError):
            evaluate(tiny_model, [])

    def test_evaluate_per_class(self, tiny_model, tiny_dataset):
        metrics = evaluate(tiny_model, tiny_dataset)
        assert metrics.count == 18
        assert metrics.per_class_counts[0] == 6 and metrics.per_class_counts[2] == 0
        assert metrics.per_class_accuracy[2] == 0.0
        assert 0.0 <= metrics.accuracy <= 1.0

    def test_untrained_accuracy_is_chance(self):
        balanced = generate_dataset(DatasetConfig(per_class_count=4, image_dims=(16, 16), seed=5))
        accuracies = [
            evaluate(build_lpcr((16, 16), fc_widths=(8, 8), width_multiplier=1.0 / 16.0, seed=seed), balanced).accuracy
            for seed in range(5)
        ]
        assert abs(float(np.mean(accuracies)) - 1.0 / 13.0) <= 0.1

    def test_history_csv(self, tmp_path, tiny_model, tiny_dataset, tiny_train_config):
        train_set, val_set = split(tiny_dataset, 0.5, seed=1)
        result = train(tiny_model, train_set, val_set, tiny_train_config)
        result.history.to_csv(tmp_path / "h.csv")
        assert (tmp_path / "h.csv").read_text().splitlines()[0] == "epoch,train_loss,val_acc,val_loss"


class TestCrossValidation:
    def test_each_image_validated_once(self, tiny_dataset, tiny_train_config):
        config = tiny_train_config.model_copy(update={"epochs": 1})
        result = kfold_cv(tiny_dataset, 3, config)
        assert result.fold_sizes == [6, 6, 6]
        assert sum(metrics.count for metrics in result.folds) == len(tiny_dataset)
        assert result.mean_accuracy == pytest.approx(np.mean([m.accuracy for m in result.folds]))
        assert list(result.to_frame().columns) == ["fold", "size", "accuracy", "mean_loss"]

    def test_checkpoint_never_sees_the_scored_fold(self, monkeypatch, tiny_dataset, tiny_train_config):
        seen = []
        original = training.train

        def recording(model, train_set, val_set, config, epoch_transform=None):
            seen.append(({i.id for i in train_set}, {i.id for i in val_set}))
            return original(model, train_set, val_set, config, epoch_transform)

        monkeypatch.setattr(training, "train", recording)
        config = tiny_train_config.model_copy(update={"epochs": 1})
        result = kfold_cv(tiny_dataset, 3, config)
        assert len(seen) == 3
        all_ids = {image.id for image in tiny_dataset}
        validated = set()
        for (train_ids, val_ids), metrics in zip(seen, result.folds):
            assert val_ids and not train_ids & val_ids
            held_out = all_ids - train_ids - val_ids
            assert len(held_out) == metrics.count == 6
            validated |= held_out
        assert validated == all_ids


class TestModelFiles:
    def test_round_trip_predictions(self, tmp_path, tiny_model, tiny_dataset):
        tiny_model.provenance["note"] = "x"
        save_model(tiny_model, tmp_path / "models" / "m.bin")
        loaded = load_model(tmp_path / "models" / "m.bin")
        pixels = np.stack([image.pixels for image in tiny_dataset])
        assert np.array_equal(loaded.predict_log_proba(pixels), tiny_model.predict_log_proba(pixels))
        assert loaded.provenance["note"] == "x"

    def test_class_count_mismatch(self, tmp_path, tiny_model):
        save_model(tiny_model, tmp_path / "m.bin")
        with pytest.raises(ModelFileError):
            load_model(tmp_path / "m.bin", num_classes=10)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFileError):
            load_model(tmp_path / "absent.bin")


class TestDivergence:
    def test_non_finite_loss_stops_training(self, monkeypatch, tiny_model, tiny_dataset, tiny_train_config):
        original = training.loss_and_grad

        def exploding(*args, **kwargs):
            return dataclasses.replace(original(*args, **kwargs), loss=float("nan"))

        monkeypatch.setattr(training, "loss_and_grad", exploding)
        train_set, val_set = split(tiny_dataset, 0.5, seed=1)
        with pytest.raises(TrainingDivergenceError) as excinfo:
            train(tiny_model, train_set, val_set, tiny_train_config)
        assert excinfo.value.details["epoch"] == 1
