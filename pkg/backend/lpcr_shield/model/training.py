# LPCR Shield - Training, Evaluation and Cross-Validation
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..core.exceptions import ConfigurationError, DatasetValidationError, TrainingDivergenceError, log_and_raise
from ..core.logging import get_logger, log_performance_metric, log_training_epoch
from ..dataset.split import split, stratified_folds
from ..dataset.types import GlyphImage, stack_pixels
from ..nn.network import Mode, loss_and_grad, sgd_momentum_step
from ..utils.helpers import sha256_bytes, stable_hash
from ..utils.rng import RngStream, derive_seed
from .lpcr import LpcrModel, build_from_config, preprocess
from .types import CrossValidationResult, EpochRecord, Metrics, TrainConfig, TrainingHistory

logger = get_logger('lpcr.model')

# (epoch, clean training images) -> images actually used for that epoch
EpochTransform = Callable[[int, Sequence[GlyphImage]], Sequence[GlyphImage]]


@dataclass
class TrainResult:
    model: LpcrModel
    history: TrainingHistory


def dataset_fingerprint(images: Sequence[GlyphImage]) -> str:
    """Content hash over ids, labels and pixels, in order"""
    digest_parts = [f"{image.id}:{image.label}:{sha256_bytes(image.pixels.tobytes())}" for image in images]
    return sha256_bytes("\n".join(digest_parts).encode("utf-8"))[:16]


def _labels(images: Sequence[GlyphImage]) -> np.ndarray:
    return np.array([image.label for image in images], dtype=np.int64)


def evaluate(model: LpcrModel, dataset: Sequence[GlyphImage]) -> Metrics:
    """Eval-mode accuracy, per-class accuracy and mean cross-entropy"""
    images = list(dataset)
    if not images:
        raise DatasetValidationError("dataset", "cannot evaluate on an empty dataset")

    labels = _labels(images)
    log_proba = model.predict_log_proba(stack_pixels(images))
    predictions = log_proba.argmax(axis=1)
    correct = predictions == labels

    counts = np.bincount(labels, minlength=model.num_classes)
    hits = np.bincount(labels, weights=correct.astype(np.float64), minlength=model.num_classes)
    per_class = np.divide(hits, counts, out=np.zeros(model.num_classes), where=counts > 0)

    return Metrics(
        accuracy=float(correct.mean()),
        per_class_accuracy=[float(v) for v in per_class],
        per_class_counts=[int(c) for c in counts],
        mean_loss=float(-log_proba[np.arange(len(labels)), labels].mean()),
        count=len(labels),
    )


def train(
    model: LpcrModel,
    train_set: Sequence[GlyphImage],
    val_set: Sequence[GlyphImage],
    config: TrainConfig,
    epoch_transform: Optional[EpochTransform] = None,
) -> TrainResult:
    """Mini-batch SGD with momentum; keeps the epoch with the best validation accuracy.

    Shuffling and dropout draw from per-epoch child streams of the training
    seed, so a rerun with the same inputs reproduces every update bit for bit.
    `epoch_transform` may replace the training images each epoch (used for
    online adversarial mixing); labels must stay aligned with the input.
    """
    train_images = list(train_set)
    val_images = list(val_set)
    if not train_images or not val_images:
        raise DatasetValidationError("dataset", "training and validation sets must be non-empty")
    if config.seed is None:
        raise ConfigurationError("train.seed", "seed must be resolved before training")

    stream = RngStream(config.seed, ("train",))
    network = model.network.copy()
    velocity: dict = {}
    history = TrainingHistory()
    best_network = network.copy()
    best_acc = -1.0
    started = time.perf_counter()

    static_batch = None if epoch_transform else preprocess(stack_pixels(train_images))
    labels = _labels(train_images)

    for epoch in range(1, config.epochs + 1):
        if epoch_transform is not None:
            epoch_images = list(epoch_transform(epoch, train_images))
            batch_source = preprocess(stack_pixels(epoch_images))
            epoch_labels = _labels(epoch_images)
        else:
            batch_source = static_batch
            epoch_labels = labels

        order = stream.child("shuffle", epoch).generator().permutation(len(epoch_labels))
        dropout_rng = stream.child("dropout", epoch).generator()
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            index = order[start:start + config.batch_size]
            step = loss_and_grad(
                network,
                batch_source[index],
                epoch_labels[index],
                mode=Mode.TRAIN,
                rng=dropout_rng,
                dropout=config.dropout,
            )
            if not np.isfinite(step.loss):
                log_and_raise(TrainingDivergenceError, epoch, step.loss)
            params, velocity = sgd_momentum_step(
                network.params, velocity, step.grads, config.learning_rate, config.momentum
            )
            network = network.replace(params=params, buffers=step.buffers)
            total_loss += step.loss * len(index)

        train_loss = total_loss / len(order)
        candidate = LpcrModel(network=network, num_classes=model.num_classes, eval_batch_size=model.eval_batch_size)
        val_metrics = evaluate(candidate, val_images)
        if not np.isfinite(val_metrics.mean_loss):
            log_and_raise(TrainingDivergenceError, epoch, val_metrics.mean_loss)
        history.append(EpochRecord(epoch, train_loss, val_metrics.accuracy, val_metrics.mean_loss))
        log_training_epoch(epoch, train_loss, val_metrics.accuracy, val_loss=val_metrics.mean_loss)

        if val_metrics.accuracy > best_acc:
            best_acc = val_metrics.accuracy
            best_network = network.copy()
            history.best_epoch = epoch

    provenance = dict(model.provenance)
    provenance.update({
        "config_hash": stable_hash(config.model_dump(mode="json")),
        "dataset_hash": dataset_fingerprint(train_images),
        "train_seed": config.seed,
        "epochs": config.epochs,
        "best_epoch": history.best_epoch,
    })
    trained = LpcrModel(
        network=best_network,
        num_classes=model.num_classes,
        provenance=provenance,
        eval_batch_size=model.eval_batch_size,
    )
    log_performance_metric("training_time", time.perf_counter() - started, "s", epochs=config.epochs)
    return TrainResult(model=trained, history=history)


def kfold_cv(dataset: Sequence[GlyphImage], k: int, config: TrainConfig) -> CrossValidationResult:
    """Stratified k-fold: each image is validated exactly once, by a freshly initialized model.

    The checkpoint of each fold is chosen on an inner split of that fold's
    training part; the held-out fold is only ever scored.
    """
    images = list(dataset)
    if not images:
        raise DatasetValidationError("dataset", "cannot cross-validate an empty dataset")
    if config.seed is None:
        raise ConfigurationError("train.seed", "seed must be resolved before cross-validation")

    folds = stratified_folds(images, k, derive_seed(config.seed, "kfold"))
    dims = images[0].dims
    results: List[Metrics] = []
    for fold_index, fold in enumerate(folds):
        held_out = set(fold)
        fold_val = [images[i] for i in fold]
        fold_train = [image for i, image in enumerate(images) if i not in held_out]
        fold_config = config.model_copy(update={"seed": derive_seed(config.seed, "kfold", fold_index)})
        model = build_from_config(dims, fold_config)
        inner_seed = derive_seed(config.seed, "kfold", fold_index, "inner")
        inner_train, inner_val = split(fold_train, config.split_ratio, inner_seed)
        trained = train(model, inner_train, inner_val, fold_config).model
        metrics = evaluate(trained, fold_val)
        logger.info(f"Fold {fold_index + 1}/{k}: accuracy {metrics.accuracy:.4f} on {len(fold_val)} images")
        results.append(metrics)

    return CrossValidationResult(folds=results, fold_sizes=[len(fold) for fold in folds])
