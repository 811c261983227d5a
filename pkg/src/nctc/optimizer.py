"""AdaGrad stochastic training with L2 regularization.

The training loop is single-writer: one example (or summed mini-batch) per
update, shuffled each epoch from the training seed, dropout masks drawn from
the same stream.  Everything is deterministic given the seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset, EmbeddingTable, embed
from .network import (
    Model,
    backward_model,
    cross_entropy,
    forward_model,
    one_hot,
    parameter_arrays,
    predict,
)
from .validation import DataError, check_nonnegative, check_positive_int

__all__ = [
    "TrainConfig",
    "AdaGradState",
    "EpochStats",
    "TrainResult",
    "adagrad_step",
    "apply_l2",
    "l2_penalty",
    "train",
    "predict_dataset",
    "accuracy",
]


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    l2_weight: float = 1e-5
    epochs: int = 1
    seed: int = 0
    epsilon: float = 1e-8
    shuffle: bool = True
    batch_size: int = 1

    def __post_init__(self) -> None:
        self.learning_rate = check_nonnegative(self.learning_rate, "learning_rate")
        self.l2_weight = check_nonnegative(self.l2_weight, "l2_weight")
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        check_positive_int(self.batch_size, "batch_size")


@dataclass
class AdaGradState:
    """Per-parameter squared-gradient accumulators, elementwise nondecreasing."""

    accumulators: list[np.ndarray]
    step_count: int = 0

    @classmethod
    def for_arrays(cls, arrays) -> "AdaGradState":
        return cls(accumulators=[np.zeros_like(a) for a in arrays])


def adagrad_step(params, grads, state: AdaGradState, cfg: TrainConfig) -> None:
    """One in-place update: G += g*g; theta -= lr * g / (sqrt(G) + eps)."""
    if len(params) != len(grads) or len(params) != len(state.accumulators):
        raise ValueError("params, grads, and state must have matching lengths")
    for p, g, acc in zip(params, grads, state.accumulators):
        if p.shape != g.shape or p.shape != acc.shape:
            raise ValueError(f"shape mismatch: {p.shape} vs {g.shape} vs {acc.shape}")
        acc += g * g
        p -= cfg.learning_rate * g / (np.sqrt(acc) + cfg.epsilon)
    state.step_count += 1


def apply_l2(grads, params, l2_weight: float):
    """Add the penalty gradient 2 * l2_weight * theta to each tensor, in place.

    The penalty is l2_weight * ||theta||^2 summed over all tensors, bias and
    classifier included.
    """
    l2_weight = check_nonnegative(l2_weight, "l2_weight")
    if l2_weight == 0.0:
        return grads
    for g, p in zip(grads, params):
        g += 2.0 * l2_weight * p
    return grads


def l2_penalty(params, l2_weight: float) -> float:
    """The penalty term l2_weight * sum of squared entries over all tensors."""
    if l2_weight == 0.0:
        return 0.0
    return l2_weight * sum(float((p * p).sum()) for p in params)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    dev_acc: float | None
    seconds: float


@dataclass
class TrainResult:
    model: Model
    best_model: Model
    best_epoch: int
    history: list[EpochStats]


def predict_dataset(model: Model, dataset: Dataset, table: EmbeddingTable) -> np.ndarray:
    return np.array([predict(model, embed(ex, table)) for ex in dataset], dtype=np.int64)


def accuracy(model: Model, dataset: Dataset, table: EmbeddingTable) -> float:
    if len(dataset) == 0:
        raise ValueError("cannot compute accuracy on an empty dataset")
    preds = predict_dataset(model, dataset, table)
    labels = np.array([ex.label for ex in dataset])
    return float((preds == labels).mean())


def train(
    model: Model,
    data: Dataset,
    cfg: TrainConfig,
    table: EmbeddingTable,
    dev_data: Dataset | None = None,
    on_epoch=None,
) -> TrainResult:
    """Stochastic AdaGrad training, updating ``model`` in place.

    Per update, gradients of one example (or the sum over a mini-batch) plus
    the L2 penalty gradient drive an AdaGrad step.  The reported per-epoch
    loss is the mean over examples of cross-entropy plus the L2 penalty at
    the moment the example was visited.  When ``dev_data`` is given, the
    model snapshot with the best dev accuracy (earliest on ties) is kept and
    returned as ``best_model``; otherwise the final model is.  ``on_epoch``
    is called with each EpochStats as it completes.
    """
    if len(data) == 0:
        raise ValueError("training dataset is empty")
    num_labels = model.num_labels
    for ex in data:
        if not 0 <= ex.label < num_labels:
            raise DataError(f"label {ex.label} outside the model's range [0, {num_labels})")
    if table.dim != model.config.word_dim:
        raise ValueError(
            f"embedding dim {table.dim} does not match the model word_dim {model.config.word_dim}"
        )

    rng = np.random.default_rng(cfg.seed)
    params = parameter_arrays(model)
    state = AdaGradState.for_arrays(params)
    history: list[EpochStats] = []
    best_model = None
    best_acc = -np.inf
    best_epoch = 0

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(data)) if cfg.shuffle else np.arange(len(data))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            summed = None
            for idx in batch:
                example = data.examples[idx]
                x = embed(example, table)
                target = one_hot(example.label, num_labels)
                output = forward_model(model, x, train=True, rng=rng)
                losses.append(
                    cross_entropy(output.probs, target) + l2_penalty(params, cfg.l2_weight)
                )
                grads = backward_model(model, output, target).arrays()
                if summed is None:
                    summed = grads
                else:
                    for total, g in zip(summed, grads):
                        total += g
            apply_l2(summed, params, cfg.l2_weight)
            adagrad_step(params, summed, state, cfg)
        stats = EpochStats(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            train_acc=accuracy(model, data, table),
            dev_acc=accuracy(model, dev_data, table) if dev_data is not None else None,
            seconds=time.perf_counter() - started,
        )
        history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
        if dev_data is not None and stats.dev_acc > best_acc:
            best_acc = stats.dev_acc
            best_model = model.copy()
            best_epoch = epoch
    if best_model is None:
        best_model = model.copy()
        best_epoch = len(history)
    return TrainResult(model=model, best_model=best_model, best_epoch=best_epoch, history=history)
