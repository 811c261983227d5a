"""Non-consecutive tensor convolution for text classification.

Feature layers score every gappy n-gram of a token sequence through a
low-rank tensor of filters, with an exponential penalty on skipped words,
evaluated in linear time by recursive tables.  Stacked layers feed a softmax
classifier trained with AdaGrad.
"""

from .data import (
    Dataset,
    EmbeddingTable,
    Example,
    embed,
    load_dataset,
    load_embeddings,
    save_dataset,
    save_embeddings,
)
from .diagnostics import (
    check_dp_equivalence,
    check_init_variance,
    contract_ngram,
    materialize_full_tensor,
)
from .estimator import TensorNgramClassifier
from .layer import ForwardTrace, LayerParams, forward, forward_reference, init_layer
from .layer import backward as layer_backward
from .model_io import load_model, save_model
from .network import (
    Model,
    ModelConfig,
    ModelOutput,
    backward_model,
    cross_entropy,
    forward_model,
    init_model,
    per_position_scores,
    predict,
    softmax,
)
from .optimizer import AdaGradState, TrainConfig, TrainResult, adagrad_step, apply_l2, train

__version__ = "0.1.0"

__all__ = [
    "AdaGradState",
    "Dataset",
    "EmbeddingTable",
    "Example",
    "ForwardTrace",
    "LayerParams",
    "Model",
    "ModelConfig",
    "ModelOutput",
    "TensorNgramClassifier",
    "TrainConfig",
    "TrainResult",
    "adagrad_step",
    "apply_l2",
    "backward_model",
    "check_dp_equivalence",
    "check_init_variance",
    "contract_ngram",
    "cross_entropy",
    "embed",
    "forward",
    "forward_model",
    "forward_reference",
    "init_layer",
    "init_model",
    "layer_backward",
    "load_dataset",
    "load_embeddings",
    "load_model",
    "materialize_full_tensor",
    "per_position_scores",
    "predict",
    "save_dataset",
    "save_embeddings",
    "save_model",
    "softmax",
    "train",
]
