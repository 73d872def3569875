"""Supervised pretraining of the activity encoder on labelled clips."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, TrainingError
from .c3d import (
    EncoderConfig,
    WeightBundle,
    clip_to_volume,
    features_backward,
    features_forward,
    init_weights,
    logits_from_features,
    softmax,
)

log = logging.getLogger(__name__)


def softmax_cross_entropy(logits, label: int):
    """Return ``(loss, d_loss/d_logits)`` for a single example."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < logits.shape[-1]:
        raise InputError(f"label {label} out of range for {logits.shape[-1]} classes")
    z = logits - logits.max()
    log_norm = np.log(np.exp(z).sum())
    loss = float(log_norm - z[label])
    grad = np.exp(z - log_norm)
    grad[label] -= 1.0
    return loss, grad


def batch_loss_and_grads(x: np.ndarray, labels: np.ndarray, config: EncoderConfig, weights) -> tuple[float, dict]:
    """Mean cross-entropy over a batch and its gradient w.r.t. every weight tensor.

    Computes in the dtype of ``x`` and ``weights`` (float64 for gradient checks).
    """
    feats, cache = features_forward(x, config, weights, keep_cache=True)
    logits = logits_from_features(feats, weights)
    probs = softmax(logits)
    n = x.shape[0]
    picked = probs[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, np.finfo(probs.dtype).tiny))))
    d_logits = probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n
    grads = features_backward(d_logits @ weights["head.weight"], cache)
    grads["head.weight"] = d_logits.T @ feats
    grads["head.bias"] = d_logits.sum(axis=0)
    return loss, grads


@dataclass
class TrainHyper:
    lr: float = 0.003
    epochs: int = 30
    batch: int = 8
    seed: int = 0
    momentum: float = 0.9
    weight_decay: float = 0.0


@dataclass
class PretrainResult:
    weights: WeightBundle
    loss_trace: list[float] = field(default_factory=list)
    accuracy_trace: list[float] = field(default_factory=list)


def dataset_arrays(dataset, config: EncoderConfig) -> tuple[np.ndarray, np.ndarray]:
    """Stack ``(clip, label)`` pairs into an input batch and label vector."""
    items = list(dataset)
    if not items:
        raise InputError("dataset is empty")
    x = np.stack([clip_to_volume(clip, config) for clip, _ in items]).astype(np.float32)
    y = np.array([int(label) for _, label in items], dtype=np.int64)
    if y.min() < 0 or y.max() >= config.num_classes:
        raise InputError(f"labels must lie in [0, {config.num_classes})")
    return x, y


def accuracy(x: np.ndarray, y: np.ndarray, config: EncoderConfig, weights, batch: int = 16) -> float:
    hits = 0
    for i in range(0, len(y), batch):
        logits = logits_from_features(features_forward(x[i:i + batch], config, weights), weights)
        hits += int(np.sum(logits.argmax(axis=1) == y[i:i + batch]))
    return hits / len(y)


def pretrain(dataset, config: EncoderConfig, hyper: TrainHyper | None = None,
             init: WeightBundle | None = None) -> PretrainResult:
    """Minibatch SGD with momentum on the classification loss.

    Deterministic given ``hyper.seed`` (weight init and batch order).
    """
    hyper = hyper or TrainHyper()
    x, y = dataset_arrays(dataset, config)
    weights = (init.copy() if init is not None else init_weights(config, hyper.seed)).validate(config)
    velocity = {k: np.zeros_like(v) for k, v in weights.items()}
    rng = np.random.default_rng([hyper.seed, 1])
    result = PretrainResult(weights)
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(y))
        total = 0.0
        for i in range(0, len(y), hyper.batch):
            idx = np.sort(order[i:i + hyper.batch])
            loss, grads = batch_loss_and_grads(x[idx], y[idx], config, weights)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss in epoch {epoch}", epoch)
            total += loss * len(idx)
            for k in weights:
                g = grads[k].astype(np.float32)
                if hyper.weight_decay and k.endswith(".weight"):
                    g = g + np.float32(hyper.weight_decay) * weights[k]
                velocity[k] = np.float32(hyper.momentum) * velocity[k] + g
                weights[k] = weights[k] - np.float32(hyper.lr) * velocity[k]
        mean_loss = total / len(y)
        if not np.isfinite(mean_loss) or not all(np.all(np.isfinite(v)) for v in weights.values()):
            raise TrainingError(f"training diverged in epoch {epoch}", epoch)
        result.loss_trace.append(mean_loss)
        result.accuracy_trace.append(accuracy(x, y, config, weights))
        log.info("epoch %d loss %.4f acc %.3f", epoch, mean_loss, result.accuracy_trace[-1])
    result.weights = weights
    return result
