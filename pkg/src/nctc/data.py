"""Corpus and embedding ingestion.

Embedding files are word2vec-text compatible: one ``<token> <v1> ... <vd>``
entry per line, whitespace separated, with an optional leading
``<count> <dim>`` header that is detected and skipped.  Dataset files hold
one example per line as ``<label>\t<tok> <tok> ...`` in UTF-8; text is
expected to be pre-tokenized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .validation import DataError, FormatError

__all__ = [
    "EmbeddingTable",
    "Example",
    "Dataset",
    "load_embeddings",
    "save_embeddings",
    "load_dataset",
    "save_dataset",
    "embed",
]


@dataclass
class EmbeddingTable:
    """Vocabulary-indexed fixed word vectors; nonzero rows are unit-norm."""

    dim: int
    vocab: dict[str, int]
    vectors: np.ndarray  # (V, dim)

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape != (len(self.vocab), self.dim):
            raise ValueError(
                f"vectors must have shape {(len(self.vocab), self.dim)}, got {self.vectors.shape}"
            )
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding vectors contain non-finite entries")

    @classmethod
    def from_pairs(cls, tokens, vectors, normalize: bool = True) -> "EmbeddingTable":
        """Build a table from parallel token/vector lists.

        Rows are normalized to unit norm unless ``normalize`` is False; zero
        rows are kept as zero since they cannot be normalized.
        """
        tokens = list(tokens)
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(tokens):
            raise ValueError("vectors must be a (len(tokens), dim) array")
        if len(set(tokens)) != len(tokens):
            raise ValueError("tokens must be unique")
        if normalize:
            matrix = normalize_rows(matrix)
        vocab = {tok: i for i, tok in enumerate(tokens)}
        return cls(dim=matrix.shape[1], vocab=vocab, vectors=matrix)

    def lookup(self, token: str) -> np.ndarray:
        """The vector for ``token``, or the zero vector when unknown."""
        idx = self.vocab.get(token)
        if idx is None:
            return np.zeros(self.dim)
        return self.vectors[idx]

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __len__(self) -> int:
        return len(self.vocab)


@dataclass
class Example:
    tokens: list[str]
    label: int


@dataclass
class Dataset:
    examples: list[Example]
    label_names: list[str]

    @property
    def num_labels(self) -> int:
        return len(self.label_names)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Scale each nonzero row to unit Euclidean norm."""
    matrix = np.array(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    nonzero = norms > 0.0
    matrix[nonzero] /= norms[nonzero, None]
    return matrix


def load_embeddings(path) -> EmbeddingTable:
    """Parse an embedding file into a unit-norm table.

    Raises FormatError (with the offending line number) on inconsistent
    dimensions, unparseable or non-finite values, or an empty file.
    Duplicate tokens keep the last occurrence and emit a warning.
    """
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    index: dict[str, int] = {}
    dim = None
    first_data_line = True
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            parts = raw.split()
            if not parts:
                continue
            if first_data_line and len(parts) == 2 and _both_ints(parts):
                first_data_line = False
                continue  # word2vec-style count/dim header
            first_data_line = False
            token, values = parts[0], parts[1:]
            if not values:
                raise FormatError(f"{path}: line {lineno}: entry has no vector values")
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise FormatError(
                    f"{path}: line {lineno}: expected {dim} values, got {len(values)}"
                )
            try:
                vector = np.array([float(v) for v in values])
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from None
            if not np.all(np.isfinite(vector)):
                raise FormatError(f"{path}: line {lineno}: non-finite vector value")
            if token in index:
                warnings.warn(
                    f"{path}: line {lineno}: duplicate token {token!r}, keeping the later entry"
                )
                rows[index[token]] = vector
            else:
                index[token] = len(tokens)
                tokens.append(token)
                rows.append(vector)
    if not tokens:
        raise FormatError(f"{path}: no embedding entries found")
    return EmbeddingTable.from_pairs(tokens, np.vstack(rows), normalize=True)


def _both_ints(parts: list[str]) -> bool:
    try:
        int(parts[0])
        int(parts[1])
    except ValueError:
        return False
    return True


def save_embeddings(table: EmbeddingTable, path) -> None:
    """Write the table in the same text format, 17 significant digits per value."""
    ordered = sorted(table.vocab.items(), key=lambda item: item[1])
    with open(path, "w", encoding="utf-8") as handle:
        for token, idx in ordered:
            values = " ".join(format(v, ".17g") for v in table.vectors[idx])
            handle.write(f"{token} {values}\n")


def load_dataset(path, label_names) -> Dataset:
    """Parse a ``<label>\t<text>`` file, mapping labels through ``label_names``.

    Preserves file order.  Blank lines are skipped with a warning; unknown
    labels, missing tabs, and empty text raise DataError with a line number.
    """
    label_names = list(label_names)
    if len(set(label_names)) != len(label_names):
        raise ValueError("label_names must be unique")
    label_to_index = {name: i for i, name in enumerate(label_names)}
    examples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                warnings.warn(f"{path}: line {lineno}: blank line skipped")
                continue
            if "\t" not in line:
                raise DataError(f"{path}: line {lineno}: expected '<label>\\t<text>'")
            label_str, text = line.split("\t", 1)
            tokens = text.split()
            if not tokens:
                raise DataError(f"{path}: line {lineno}: empty text")
            if label_str not in label_to_index:
                raise DataError(f"{path}: line {lineno}: unknown label {label_str!r}")
            examples.append(Example(tokens=tokens, label=label_to_index[label_str]))
    return Dataset(examples=examples, label_names=label_names)


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for example in dataset.examples:
            handle.write(f"{dataset.label_names[example.label]}\t{' '.join(example.tokens)}\n")


def embed(example, table: EmbeddingTable) -> np.ndarray:
    """Stack the vectors of an example's tokens into an (L, dim) matrix.

    Accepts an Example or a plain token sequence; unknown tokens become zero
    rows.
    """
    tokens = example.tokens if isinstance(example, Example) else list(example)
    if not tokens:
        raise ValueError("cannot embed an empty token sequence")
    return np.stack([table.lookup(token) for token in tokens])
