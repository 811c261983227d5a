"""Plain-text model persistence.

Format ``NCTC/1``: a header with the architecture, label names, and shape
declarations, followed by each parameter tensor as rows of 17-significant-
digit decimals in canonical order (per layer: slots, mix, bias; then the
softmax matrix).  The encoding round-trips doubles exactly, so
save -> load -> save is byte-identical.
"""

from __future__ import annotations

import numpy as np

from .layer import LayerParams
from .network import Model, ModelConfig
from .validation import FormatError

__all__ = ["MAGIC", "save_model", "load_model"]

MAGIC = "NCTC/1"


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _matrix_lines(matrix: np.ndarray) -> list[str]:
    return [" ".join(_fmt(v) for v in row) for row in np.atleast_2d(matrix)]


def save_model(model: Model, path) -> None:
    cfg = model.config
    lines = [
        MAGIC,
        f"layers {cfg.layers}",
        f"order {cfg.order}",
        f"hidden {cfg.hidden}",
        f"word_dim {cfg.word_dim}",
        f"decay {_fmt(cfg.decay)}",
        f"dropout {_fmt(cfg.dropout)}",
        f"labels {cfg.num_labels}",
    ]
    lines.extend(cfg.label_names)
    for t, lp in enumerate(model.layers, 1):
        lines.append(f"layer {t} in_dim {lp.in_dim}")
        for m, slot in enumerate(lp.slots, 1):
            lines.append(f"slot {m} {slot.shape[0]} {slot.shape[1]}")
            lines.extend(_matrix_lines(slot))
        lines.append(f"mix {lp.dim} {lp.dim}")
        lines.extend(_matrix_lines(lp.mix))
        lines.append(f"bias {lp.dim}")
        lines.extend(_matrix_lines(lp.bias))
    rows, cols = model.softmax_w.shape
    lines.append(f"softmax_w {rows} {cols}")
    lines.extend(_matrix_lines(model.softmax_w))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, path):
        with open(path, encoding="utf-8") as handle:
            self.lines = handle.read().split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.path = path
        self.pos = 0

    def next_line(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise FormatError(f"{self.path}: line {self.pos + 1}: expected {what}, found end of file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def keyword_fields(self, keyword: str, count: int) -> list[str]:
        lineno = self.pos + 1
        parts = self.next_line(f"'{keyword}' declaration").split()
        if len(parts) != count + 1 or parts[0] != keyword:
            raise FormatError(
                f"{self.path}: line {lineno}: expected '{keyword}' with {count} field(s)"
            )
        return parts[1:]

    def keyword_int(self, keyword: str) -> int:
        lineno = self.pos + 1
        (field,) = self.keyword_fields(keyword, 1)
        try:
            return int(field)
        except ValueError:
            raise FormatError(f"{self.path}: line {lineno}: {keyword} must be an integer") from None

    def keyword_float(self, keyword: str) -> float:
        lineno = self.pos + 1
        (field,) = self.keyword_fields(keyword, 1)
        try:
            return float(field)
        except ValueError:
            raise FormatError(f"{self.path}: line {lineno}: {keyword} must be a number") from None

    def matrix(self, rows: int, cols: int, what: str) -> np.ndarray:
        out = np.empty((rows, cols))
        for r in range(rows):
            lineno = self.pos + 1
            fields = self.next_line(f"{what} row").split()
            if len(fields) != cols:
                raise FormatError(
                    f"{self.path}: line {lineno}: expected {cols} values in {what} row, got {len(fields)}"
                )
            try:
                out[r] = [float(f) for f in fields]
            except ValueError as exc:
                raise FormatError(f"{self.path}: line {lineno}: {exc}") from None
        return out


def load_model(path) -> Model:
    reader = _Reader(path)
    magic = reader.next_line("format tag")
    if magic != MAGIC:
        raise FormatError(f"{path}: line 1: not a {MAGIC} model file (found {magic!r})")
    layers = reader.keyword_int("layers")
    order = reader.keyword_int("order")
    hidden = reader.keyword_int("hidden")
    word_dim = reader.keyword_int("word_dim")
    decay = reader.keyword_float("decay")
    dropout = reader.keyword_float("dropout")
    num_labels = reader.keyword_int("labels")
    label_names = [reader.next_line("label name") for _ in range(num_labels)]
    try:
        config = ModelConfig(
            order=order,
            hidden=hidden,
            layers=layers,
            decay=decay,
            dropout=dropout,
            label_names=label_names,
            word_dim=word_dim,
        )
    except ValueError as exc:
        raise FormatError(f"{path}: invalid header: {exc}") from None

    layer_params = []
    expected_in = word_dim
    for t in range(1, layers + 1):
        index_str, _, in_dim_str = reader.keyword_fields("layer", 3)
        if index_str != str(t) or int(in_dim_str) != expected_in:
            raise FormatError(f"{path}: layer {t} header does not match the declared architecture")
        slots = []
        for m in range(1, order + 1):
            m_str, rows_str, cols_str = reader.keyword_fields("slot", 3)
            if m_str != str(m) or int(rows_str) != hidden or int(cols_str) != expected_in:
                raise FormatError(f"{path}: slot {m} of layer {t} has a mismatched shape header")
            slots.append(reader.matrix(hidden, expected_in, f"layer {t} slot {m}"))
        rows_str, cols_str = reader.keyword_fields("mix", 2)
        if int(rows_str) != hidden or int(cols_str) != hidden:
            raise FormatError(f"{path}: mix of layer {t} has a mismatched shape header")
        mix = reader.matrix(hidden, hidden, f"layer {t} mix")
        (bias_len,) = reader.keyword_fields("bias", 1)
        if int(bias_len) != hidden:
            raise FormatError(f"{path}: bias of layer {t} has a mismatched shape header")
        bias = reader.matrix(1, hidden, f"layer {t} bias")[0]
        try:
            layer_params.append(
                LayerParams(
                    order=order, in_dim=expected_in, dim=hidden, slots=slots, mix=mix, bias=bias
                )
            )
        except ValueError as exc:
            raise FormatError(f"{path}: layer {t}: {exc}") from None
        expected_in = hidden

    rows_str, cols_str = reader.keyword_fields("softmax_w", 2)
    if int(rows_str) != layers * hidden or int(cols_str) != num_labels:
        raise FormatError(f"{path}: softmax_w has a mismatched shape header")
    softmax_w = reader.matrix(layers * hidden, num_labels, "softmax_w")
    if reader.pos != len(reader.lines):
        raise FormatError(f"{path}: line {reader.pos + 1}: trailing content after the model payload")
    try:
        return Model(layers=layer_params, softmax_w=softmax_w, config=config)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
