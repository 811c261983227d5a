"""Verification oracles: dense tensor expansion, fast-vs-enumeration sweeps,
initialization statistics, and finite-difference gradient checking.

Each check returns a small report object with ``as_text()`` for humans and
``as_dict()`` / ``as_json()`` for machines.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass

import numpy as np

from .layer import LayerParams, forward, forward_reference, init_layer
from .network import (
    Model,
    backward_model,
    cross_entropy,
    forward_model,
    parameter_arrays,
    parameter_names,
)

__all__ = [
    "materialize_full_tensor",
    "contract_ngram",
    "EquivalenceReport",
    "equivalence_instance",
    "check_dp_equivalence",
    "VarianceReport",
    "check_init_variance",
    "central_difference",
    "max_relative_error",
    "model_gradient_report",
]

_MODE_LETTERS = string.ascii_lowercase[:8]  # rank uses 'r', output 'z'


def materialize_full_tensor(params: LayerParams, limit: int = 1_000_000) -> np.ndarray:
    """Expand the layer's rank-decomposed filter bank into a dense tensor.

    Entry (i_1, ..., i_n, l) is ``sum_r slots[0][r, i_1] * ... *
    slots[n-1][r, i_n] * mix[r, l]``.  Refuses when the dense size
    ``in_dim**order * dim`` exceeds ``limit``; this exists for tiny
    dimensions only, to validate the factored evaluation against direct
    contraction.
    """
    if params.order > len(_MODE_LETTERS):
        raise ValueError(f"order {params.order} exceeds the supported maximum {len(_MODE_LETTERS)}")
    size = params.in_dim**params.order * params.dim
    if size > limit:
        raise ValueError(f"refusing to materialize {size} entries (limit {limit})")
    modes = _MODE_LETTERS[: params.order]
    expr = ",".join(f"r{letter}" for letter in modes) + ",rz->" + modes + "z"
    return np.einsum(expr, *params.slots, params.mix)


def contract_ngram(tensor: np.ndarray, words) -> np.ndarray:
    """Contract a dense filter tensor against one n-gram of word vectors.

    Computes ``out[l] = sum_{i_1..i_n} tensor[i_1, ..., i_n, l] *
    words[0][i_1] * ... * words[n-1][i_n]`` by direct summation.
    """
    order = tensor.ndim - 1
    words = [np.asarray(w, dtype=np.float64) for w in words]
    if len(words) != order:
        raise ValueError(f"expected {order} word vectors, got {len(words)}")
    modes = _MODE_LETTERS[:order]
    expr = modes + "z," + ",".join(modes) + "->z"
    return np.einsum(expr, tensor, *words)


@dataclass
class EquivalenceReport:
    instances: int
    max_abs_dev: float
    tolerance: float
    passed: bool
    worst_seed: int | None

    def as_dict(self) -> dict:
        return {
            "instances": self.instances,
            "max_abs_dev": self.max_abs_dev,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "worst_seed": self.worst_seed,
        }

    def as_json(self) -> str:
        return json.dumps(self.as_dict())

    def as_text(self) -> str:
        status = "pass" if self.passed else "FAIL"
        worst = "n/a" if self.worst_seed is None else str(self.worst_seed)
        return (
            f"fast-vs-enumeration sweep: {self.instances} instances, "
            f"max abs deviation {self.max_abs_dev:.3e} (tolerance {self.tolerance:.0e}), "
            f"worst instance seed {worst}: {status}"
        )


def equivalence_instance(seed: int):
    """Deterministically build the (params, x, decay) triple for ``seed``.

    Sampling ranges: L in 1..8, in_dim in 1..5, dim in 1..4, order in {2, 3},
    decay in {0, 0.3, 0.5, 0.9}.  Rerunning with a reported worst seed
    reproduces that instance exactly.
    """
    rng = np.random.default_rng(seed)
    length = int(rng.integers(1, 9))
    in_dim = int(rng.integers(1, 6))
    dim = int(rng.integers(1, 5))
    order = int(rng.choice([2, 3]))
    decay = float(rng.choice([0.0, 0.3, 0.5, 0.9]))
    params = init_layer(in_dim, dim, order, rng)
    x = rng.standard_normal((length, in_dim))
    return params, x, decay


def check_dp_equivalence(
    count: int, rng: np.random.Generator, tolerance: float = 1e-9
) -> EquivalenceReport:
    """Compare the recursive forward pass against brute-force enumeration on
    ``count`` random small instances; passes iff the worst absolute deviation
    stays below ``tolerance``."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    worst = 0.0
    worst_seed = None
    for _ in range(count):
        seed = int(rng.integers(0, 2**32))
        params, x, decay = equivalence_instance(seed)
        fast, _ = forward(params, x, decay)
        slow = forward_reference(params, x, decay)
        deviation = float(np.max(np.abs(fast - slow)))
        if worst_seed is None or deviation > worst:
            worst = deviation
            worst_seed = seed
    return EquivalenceReport(
        instances=count,
        max_abs_dev=worst,
        tolerance=tolerance,
        passed=worst < tolerance,
        worst_seed=worst_seed,
    )


@dataclass
class VarianceReport:
    samples: int
    estimate: float
    half_width: float
    passed: bool
    in_dim: int
    dim: int

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "estimate": self.estimate,
            "half_width": self.half_width,
            "pass": self.passed,
            "in_dim": self.in_dim,
            "dim": self.dim,
        }

    def as_json(self) -> str:
        return json.dumps(self.as_dict())

    def as_text(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"rank-1 slice squared norm: estimate {self.estimate:.4f} "
            f"+/- {self.half_width:.4f} over {self.samples} samples "
            f"(window [0.9, 1.1]): {status}"
        )


def check_init_variance(
    in_dim: int, dim: int, samples: int, rng: np.random.Generator, order: int = 3
) -> VarianceReport:
    """Monte-Carlo estimate of the expected squared norm of one rank-1 filter
    slice under the uniform initialization.

    The squared norm of an outer product factorizes into the product of the
    factors' squared norms, so each sample multiplies ``order`` slot-row
    norms with one mix-row norm.  The initialization targets an expectation
    of exactly 1; the pass window is [0.9, 1.1].
    """
    if samples < 10_000:
        raise ValueError(f"samples must be at least 10000 for a stable estimate, got {samples}")
    slot_bound = np.sqrt(3.0 / in_dim)
    mix_bound = np.sqrt(3.0 / dim)
    product = np.ones(samples)
    for _ in range(order):
        rows = rng.uniform(-slot_bound, slot_bound, size=(samples, in_dim))
        product *= np.einsum("ij,ij->i", rows, rows)
    rows = rng.uniform(-mix_bound, mix_bound, size=(samples, dim))
    product *= np.einsum("ij,ij->i", rows, rows)
    estimate = float(product.mean())
    half_width = float(1.96 * product.std(ddof=1) / np.sqrt(samples))
    return VarianceReport(
        samples=samples,
        estimate=estimate,
        half_width=half_width,
        passed=0.9 <= estimate <= 1.1,
        in_dim=in_dim,
        dim=dim,
    )


def central_difference(fn, array: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Numerical gradient of the scalar ``fn()`` with respect to ``array``,
    perturbing one coordinate at a time (the array is restored afterwards)."""
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        original = array[idx]
        array[idx] = original + eps
        high = fn()
        array[idx] = original - eps
        low = fn()
        array[idx] = original
        grad[idx] = (high - low) / (2.0 * eps)
    return grad


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-5) -> float:
    """Max over coordinates of |a-b| / max(|a|, |b|, floor).

    Coordinates where both magnitudes fall below ``floor`` are effectively
    compared absolutely against it, which keeps finite-difference noise on
    near-zero gradients from dominating the ratio.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / denom).max())


def model_gradient_report(
    model: Model, x: np.ndarray, target: np.ndarray, eps: float = 1e-5
) -> list[tuple[str, float]]:
    """Analytic vs central-difference gradients for every parameter tensor.

    Runs the model in train mode (dropout must be 0 so the comparison is
    deterministic) and returns (tensor name, max relative error) pairs in
    canonical parameter order.
    """
    if model.config.dropout != 0.0:
        raise ValueError("gradient checking requires dropout 0")
    output = forward_model(model, x, train=True)
    analytic = backward_model(model, output, target).arrays()

    def loss() -> float:
        return cross_entropy(forward_model(model, x, train=True).probs, target)

    rows = []
    for name, array, grad in zip(parameter_names(model), parameter_arrays(model), analytic):
        numeric = central_difference(loss, array, eps)
        rows.append((name, max_relative_error(grad, numeric)))
    return rows
