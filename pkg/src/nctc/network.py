"""Stacked feature layers with ReLU activations, per-layer mean pooling,
concatenation, and a softmax classifier.

Layer t maps its input sequence to features, which pass through
``relu(pre + bias)`` (and an inverted-dropout mask in train mode) before
feeding both the per-layer mean and the next layer.  The per-layer means are
concatenated and classified by a single softmax matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layer import ForwardTrace, LayerGrads, LayerParams, init_layer
from .layer import backward as layer_backward
from .layer import forward as layer_forward
from .validation import (
    as_float_matrix,
    as_float_vector,
    check_distribution,
    check_positive_int,
    check_unit_interval,
)

__all__ = [
    "ModelConfig",
    "Model",
    "ModelOutput",
    "ModelGrads",
    "init_model",
    "forward_model",
    "backward_model",
    "softmax",
    "cross_entropy",
    "one_hot",
    "per_position_scores",
    "predict",
    "parameter_arrays",
    "parameter_names",
]

PROB_FLOOR = 1e-12


@dataclass
class ModelConfig:
    """Hyperparameters that define a model's architecture."""

    order: int
    hidden: int
    layers: int
    decay: float
    dropout: float
    label_names: list[str]
    word_dim: int

    def __post_init__(self) -> None:
        check_positive_int(self.order, "order")
        check_positive_int(self.hidden, "hidden")
        check_positive_int(self.layers, "layers")
        check_positive_int(self.word_dim, "word_dim")
        self.decay = check_unit_interval(self.decay, "decay")
        self.dropout = check_unit_interval(self.dropout, "dropout")
        if not self.label_names:
            raise ValueError("label_names must be nonempty")
        if len(set(self.label_names)) != len(self.label_names):
            raise ValueError("label_names must be unique")

    @property
    def num_labels(self) -> int:
        return len(self.label_names)

    def copy(self) -> "ModelConfig":
        return ModelConfig(
            order=self.order,
            hidden=self.hidden,
            layers=self.layers,
            decay=self.decay,
            dropout=self.dropout,
            label_names=list(self.label_names),
            word_dim=self.word_dim,
        )


@dataclass
class Model:
    """Ordered feature layers plus the softmax classifier matrix."""

    layers: list[LayerParams]
    softmax_w: np.ndarray  # (layers * hidden, num_labels)
    config: ModelConfig

    def __post_init__(self) -> None:
        cfg = self.config
        if len(self.layers) != cfg.layers:
            raise ValueError(f"expected {cfg.layers} layers, got {len(self.layers)}")
        expected_in = cfg.word_dim
        for t, lp in enumerate(self.layers, 1):
            if lp.order != cfg.order or lp.dim != cfg.hidden:
                raise ValueError(f"layer {t} does not match the configured order/hidden size")
            if lp.in_dim != expected_in:
                raise ValueError(f"layer {t} expects input dim {lp.in_dim}, should be {expected_in}")
            expected_in = cfg.hidden
        rows = cfg.layers * cfg.hidden
        if self.softmax_w.shape != (rows, cfg.num_labels):
            raise ValueError(
                f"softmax_w must have shape {(rows, cfg.num_labels)}, got {self.softmax_w.shape}"
            )
        if not np.all(np.isfinite(self.softmax_w)):
            raise ValueError("softmax_w contains non-finite entries")

    @property
    def num_labels(self) -> int:
        return self.config.num_labels

    def copy(self) -> "Model":
        return Model(
            layers=[lp.copy() for lp in self.layers],
            softmax_w=self.softmax_w.copy(),
            config=self.config.copy(),
        )


@dataclass
class LayerRecord:
    """Per-layer forward state: the feature trace, the dropout mask used (if
    any), and the post-activation sequence that fed the next stage."""

    trace: ForwardTrace
    mask: np.ndarray | None
    active: np.ndarray


@dataclass
class ModelOutput:
    probs: np.ndarray
    layer_means: list[np.ndarray]
    records: list[LayerRecord]


@dataclass
class ModelGrads:
    """Gradients for every trainable tensor, mirroring the model layout."""

    layers: list[LayerGrads]
    softmax_w: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for lg in self.layers:
            out.extend(lg.slots)
            out.append(lg.mix)
            out.append(lg.bias)
        out.append(self.softmax_w)
        return out


def init_model(config: ModelConfig, rng: np.random.Generator) -> Model:
    """Build a model with freshly initialized layers and a zero classifier."""
    layers = []
    in_dim = config.word_dim
    for _ in range(config.layers):
        layers.append(init_layer(in_dim, config.hidden, config.order, rng))
        in_dim = config.hidden
    softmax_w = np.zeros((config.layers * config.hidden, config.num_labels))
    return Model(layers=layers, softmax_w=softmax_w, config=config)


def parameter_arrays(model: Model) -> list[np.ndarray]:
    """The trainable tensors in canonical order: per layer slots, mix, bias; then softmax_w."""
    out: list[np.ndarray] = []
    for lp in model.layers:
        out.extend(lp.slots)
        out.append(lp.mix)
        out.append(lp.bias)
    out.append(model.softmax_w)
    return out


def parameter_names(model: Model) -> list[str]:
    out = []
    for t, lp in enumerate(model.layers, 1):
        out.extend(f"layer{t}.slot{m}" for m in range(1, lp.order + 1))
        out.append(f"layer{t}.mix")
        out.append(f"layer{t}.bias")
    out.append("softmax_w")
    return out


def softmax(values) -> np.ndarray:
    """Max-subtracted exponential normalization; shift invariant and stable."""
    values = as_float_vector(values, "values")
    shifted = values - values.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def cross_entropy(probs, target) -> float:
    """Negative log likelihood -sum_l target_l * log(probs_l).

    ``probs`` is clamped below at 1e-12 before the log; ``target`` must be a
    distribution (one-hot or soft).
    """
    probs = as_float_vector(probs, "probs")
    target = check_distribution(target, "target", length=probs.shape[0])
    clamped = np.maximum(probs, PROB_FLOOR)
    return float(-(target * np.log(clamped)).sum())


def one_hot(label: int, num_labels: int) -> np.ndarray:
    if not 0 <= label < num_labels:
        raise ValueError(f"label {label} outside [0, {num_labels})")
    out = np.zeros(num_labels)
    out[label] = 1.0
    return out


def forward_model(
    model: Model,
    x,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> ModelOutput:
    """Run the full network on one sequence of word vectors (L, word_dim).

    In train mode one dropout mask per layer is drawn from ``rng`` and
    applied (inverted: kept units are scaled by 1/(1-p)) to the layer output
    wherever it flows, both into the per-layer mean and into the next layer.
    Eval mode is deterministic and uses no rng.
    """
    cfg = model.config
    x = as_float_matrix(x, "x", cols=cfg.word_dim)
    records = []
    means = []
    current = x
    for lp in model.layers:
        pre, trace = layer_forward(lp, current, cfg.decay)
        active = np.maximum(pre + lp.bias, 0.0)
        mask = None
        if train and cfg.dropout > 0.0:
            if rng is None:
                raise ValueError("train-mode forward with dropout requires an rng")
            keep = rng.random(lp.dim) >= cfg.dropout
            mask = keep / (1.0 - cfg.dropout)
            active = active * mask
        records.append(LayerRecord(trace=trace, mask=mask, active=active))
        means.append(active.mean(axis=0))
        current = active
    logits = np.concatenate(means) @ model.softmax_w
    return ModelOutput(probs=softmax(logits), layer_means=means, records=records)


def backward_model(model: Model, output: ModelOutput, target) -> ModelGrads:
    """Exact gradients of ``cross_entropy(forward_model(x), target)``.

    Requires the records retained by a train-mode forward pass.  Dropout
    masks are replayed from the records, the bias gradient accumulates
    through the ReLU gate, and the input gradient of layer 1 is discarded
    because word vectors stay fixed.
    """
    if not output.records:
        raise ValueError("model output carries no forward records to differentiate")
    cfg = model.config
    target = check_distribution(target, "target", length=cfg.num_labels)

    dlogits = output.probs - target
    concat = np.concatenate(output.layer_means)
    dsoftmax_w = np.outer(concat, dlogits)
    dmeans = model.softmax_w @ dlogits

    layer_grads: list[LayerGrads | None] = [None] * cfg.layers
    dnext = None  # gradient wrt the input of the layer above
    for t in range(cfg.layers - 1, -1, -1):
        lp = model.layers[t]
        rec = output.records[t]
        length = rec.active.shape[0]
        dmean = dmeans[t * cfg.hidden : (t + 1) * cfg.hidden]
        dactive = np.tile(dmean / length, (length, 1))
        if dnext is not None:
            dactive = dactive + dnext
        if rec.mask is not None:
            dactive = dactive * rec.mask
        gate = (rec.trace.pre + lp.bias) > 0.0
        dpre = dactive * gate
        grads, dnext = layer_backward(lp, rec.trace, cfg.decay, dpre)
        grads.bias = dpre.sum(axis=0)
        layer_grads[t] = grads
    return ModelGrads(layers=layer_grads, softmax_w=dsoftmax_w)


def per_position_scores(model: Model, x, score_values) -> np.ndarray:
    """Classify each position on its own features, skipping the average.

    Row i holds the softmax over the concatenated post-activation features of
    position i across all layers, followed by the expected score
    ``sum_l score_values[l] * p_i[l]``.  Shape: (L, num_labels + 1).
    """
    score_values = as_float_vector(score_values, "score_values", length=model.num_labels)
    output = forward_model(model, x, train=False)
    features = np.hstack([rec.active for rec in output.records])
    logits = features @ model.softmax_w
    table = np.empty((features.shape[0], model.num_labels + 1))
    for i in range(features.shape[0]):
        probs = softmax(logits[i])
        table[i, : model.num_labels] = probs
        table[i, model.num_labels] = float(probs @ score_values)
    return table


def predict(model: Model, x) -> int:
    """Most probable label index in eval mode; ties break toward the lowest index."""
    return int(np.argmax(forward_model(model, x, train=False).probs))
