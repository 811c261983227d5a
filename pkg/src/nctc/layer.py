"""Gappy n-gram tensor feature layer.

Maps a sequence of input vectors to a sequence of feature vectors.  Each
m-gram (m = 1..order) of positions i_1 < ... < i_m contributes the
elementwise product of its per-slot projections, down-weighted by
``decay ** (i_m - i_1 - (m - 1))`` so that wider gaps count less, and the
contributions of all m-grams ending at a position are summed.  Two kinds of
running tables evaluate this in O(L * order) matrix products; the brute-force
enumeration in `forward_reference` is the ground truth that the fast path is
tested against.

The convention ``0 ** 0 == 1`` applies to the decay weight, so ``decay=0``
reduces the layer to consecutive n-grams only.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .validation import as_float_matrix, check_positive_int, check_unit_interval

__all__ = [
    "LayerParams",
    "ForwardTrace",
    "LayerGrads",
    "init_layer",
    "forward",
    "forward_reference",
    "backward",
]


@dataclass
class LayerParams:
    """Parameters of one feature layer.

    ``slots[m]`` projects the word filling slot m of an n-gram into the
    feature space; ``mix`` combines the rank components into output features;
    ``bias`` feeds the activation the network applies on top of this layer.
    """

    order: int
    in_dim: int
    dim: int
    slots: list[np.ndarray]  # order arrays, each (dim, in_dim)
    mix: np.ndarray  # (dim, dim)
    bias: np.ndarray  # (dim,)

    def __post_init__(self) -> None:
        check_positive_int(self.order, "order")
        check_positive_int(self.in_dim, "in_dim")
        check_positive_int(self.dim, "dim")
        if len(self.slots) != self.order:
            raise ValueError(f"expected {self.order} slot matrices, got {len(self.slots)}")
        for m, slot in enumerate(self.slots, 1):
            if slot.shape != (self.dim, self.in_dim):
                raise ValueError(
                    f"slot {m} must have shape {(self.dim, self.in_dim)}, got {slot.shape}"
                )
        if self.mix.shape != (self.dim, self.dim):
            raise ValueError(f"mix must have shape {(self.dim, self.dim)}, got {self.mix.shape}")
        if self.bias.shape != (self.dim,):
            raise ValueError(f"bias must have shape {(self.dim,)}, got {self.bias.shape}")
        for arr in (*self.slots, self.mix, self.bias):
            if not np.all(np.isfinite(arr)):
                raise ValueError("layer parameters contain non-finite entries")

    def copy(self) -> "LayerParams":
        return LayerParams(
            order=self.order,
            in_dim=self.in_dim,
            dim=self.dim,
            slots=[slot.copy() for slot in self.slots],
            mix=self.mix.copy(),
            bias=self.bias.copy(),
        )


@dataclass
class ForwardTrace:
    """Everything `backward` replays.

    ``grams[m]`` holds the decayed sum of (m+1)-gram features ending at each
    position; ``running[m]`` is its decayed prefix sum, defined for
    m < order - 1.  ``pre`` is the pre-activation output sequence, equal to
    ``sum(grams) @ mix`` row by row.
    """

    x: np.ndarray
    decay: float
    proj: list[np.ndarray]
    grams: list[np.ndarray]
    running: list[np.ndarray]
    pre: np.ndarray

    @property
    def length(self) -> int:
        return self.x.shape[0]


@dataclass
class LayerGrads:
    """Gradients for one layer; `bias` is filled in by the network backward
    pass since the activation owning the bias lives there."""

    slots: list[np.ndarray]
    mix: np.ndarray
    bias: np.ndarray | None = None


def init_layer(in_dim: int, dim: int, order: int, rng: np.random.Generator) -> LayerParams:
    """Draw fresh layer parameters.

    Slot entries are i.i.d. uniform on [-sqrt(3/in_dim), sqrt(3/in_dim)] and
    mix entries uniform on [-sqrt(3/dim), sqrt(3/dim)], making every row a
    unit vector in expectation.  The activation bias starts at the small
    positive constant 0.01.
    """
    check_positive_int(in_dim, "in_dim")
    check_positive_int(dim, "dim")
    check_positive_int(order, "order")
    slot_bound = np.sqrt(3.0 / in_dim)
    mix_bound = np.sqrt(3.0 / dim)
    slots = [rng.uniform(-slot_bound, slot_bound, size=(dim, in_dim)) for _ in range(order)]
    mix = rng.uniform(-mix_bound, mix_bound, size=(dim, dim))
    bias = np.full(dim, 0.01)
    return LayerParams(order=order, in_dim=in_dim, dim=dim, slots=slots, mix=mix, bias=bias)


def _decayed_prefix_sum(rows: np.ndarray, decay: float) -> np.ndarray:
    """out[k] = decay * out[k-1] + rows[k], with out[-1] treated as zero."""
    out = np.empty_like(rows)
    carry = np.zeros(rows.shape[1])
    for k in range(rows.shape[0]):
        carry = decay * carry + rows[k]
        out[k] = carry
    return out


def _decayed_suffix_sum(rows: np.ndarray, decay: float) -> np.ndarray:
    """out[k] = decay * out[k+1] + rows[k], the reverse-order twin of the prefix sum."""
    return _decayed_prefix_sum(rows[::-1], decay)[::-1]


def _shift_down(rows: np.ndarray) -> np.ndarray:
    """Row k of the result is rows[k-1]; row 0 is zero."""
    out = np.zeros_like(rows)
    out[1:] = rows[:-1]
    return out


def _shift_up(rows: np.ndarray) -> np.ndarray:
    """Row k of the result is rows[k+1]; the last row is zero."""
    out = np.zeros_like(rows)
    out[:-1] = rows[1:]
    return out


def forward(
    params: LayerParams, x, decay: float
) -> tuple[np.ndarray, ForwardTrace]:
    """Evaluate the layer on a sequence ``x`` of shape (L, in_dim).

    Returns the pre-activation feature sequence (L, dim) and the trace of
    every intermediate table.  The recurrences are

        grams[0][k]   = slots[0] @ x[k]
        running[m][k] = decay * running[m][k-1] + grams[m][k]
        grams[m][k]   = running[m-1][k-1] * (slots[m] @ x[k])
        pre[k]        = mix.T @ sum_m grams[m][k]

    which runs in O(L * order) matrix-vector products.
    """
    x = as_float_matrix(x, "x", cols=params.in_dim)
    decay = check_unit_interval(decay, "decay")
    proj = [x @ slot.T for slot in params.slots]
    grams = [proj[0]]
    running = []
    for m in range(1, params.order):
        running.append(_decayed_prefix_sum(grams[m - 1], decay))
        grams.append(_shift_down(running[m - 1]) * proj[m])
    total = grams[0].copy()
    for table in grams[1:]:
        total += table
    pre = total @ params.mix
    trace = ForwardTrace(x=x, decay=decay, proj=proj, grams=grams, running=running, pre=pre)
    return pre, trace


def forward_reference(params: LayerParams, x, decay: float) -> np.ndarray:
    """Brute-force oracle for `forward`: enumerate every gappy m-gram.

    For each position k and each m = 1..order, sums the weighted feature of
    every index tuple i_1 < ... < i_m = k.  Cost grows as L**order per
    position, so this is meant for small inputs only.
    """
    x = as_float_matrix(x, "x", cols=params.in_dim)
    decay = check_unit_interval(decay, "decay")
    length = x.shape[0]
    out = np.zeros((length, params.dim))
    for k in range(length):
        total = np.zeros(params.dim)
        for m in range(1, params.order + 1):
            for head in combinations(range(k), m - 1):
                positions = head + (k,)
                feat = params.slots[0] @ x[positions[0]]
                for slot, pos in zip(params.slots[1:m], positions[1:]):
                    feat = feat * (slot @ x[pos])
                weight = decay ** (positions[-1] - positions[0] - (m - 1))
                total += weight * feat
        out[k] = params.mix.T @ total
    return out


def backward(
    params: LayerParams, trace: ForwardTrace, decay: float, dpre
) -> tuple[LayerGrads, np.ndarray]:
    """Exact gradients of ``sum_k <dpre[k], pre[k]>`` from a forward trace.

    Reverses the forward recurrences: the mix gradient is an outer-product
    accumulation, the running tables are differentiated by a decayed suffix
    sum, and each slot receives the outer product of its projection gradient
    with the input.  Returns the parameter gradients (bias excluded; the
    activation lives in the network module) and the input gradient.
    """
    if trace.decay != decay:
        raise ValueError(f"decay {decay!r} does not match the traced value {trace.decay!r}")
    if len(trace.proj) != params.order or len(trace.grams) != params.order:
        raise ValueError("trace does not match the layer order")
    if trace.x.shape[1] != params.in_dim or trace.pre.shape[1] != params.dim:
        raise ValueError("trace does not match the layer dimensions")
    dpre = as_float_matrix(dpre, "dpre", cols=params.dim)
    if dpre.shape[0] != trace.length:
        raise ValueError(
            f"dpre must have {trace.length} rows to match the trace, got {dpre.shape[0]}"
        )

    total = trace.grams[0].copy()
    for table in trace.grams[1:]:
        total += table
    dmix = total.T @ dpre
    dtotal = dpre @ params.mix.T

    dproj: list[np.ndarray | None] = [None] * params.order
    carry = None  # gradient flowing into running[m-1] from level m
    for m in range(params.order - 1, 0, -1):
        dgram = dtotal if carry is None else dtotal + carry
        dproj[m] = dgram * _shift_down(trace.running[m - 1])
        carry = _decayed_suffix_sum(_shift_up(dgram * trace.proj[m]), decay)
    dproj[0] = dtotal if carry is None else dtotal + carry

    dslots = [dp.T @ trace.x for dp in dproj]
    dx = dproj[0] @ params.slots[0]
    for m in range(1, params.order):
        dx = dx + dproj[m] @ params.slots[m]
    return LayerGrads(slots=dslots, mix=dmix), dx
