"""Shared builders for synthetic corpora and embedding tables."""

from __future__ import annotations

import numpy as np

from nctc.data import Dataset, EmbeddingTable, Example


def random_table(tokens, dim: int, seed: int) -> EmbeddingTable:
    """Unit-norm random vectors for a fixed vocabulary."""
    tokens = sorted(set(tokens))
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((len(tokens), dim))
    return EmbeddingTable.from_pairs(tokens, vectors, normalize=True)


def marker_dataset(n_examples: int = 40, seed: int = 11, length: int = 7):
    """Trivially separable two-class set: each class carries its own marker token.

    Returns (dataset, vocabulary).  Used for overfitting runs.
    """
    rng = np.random.default_rng(seed)
    fillers = [f"w{i:02d}" for i in range(12)]
    markers = ["kaz", "lum"]
    examples = []
    for i in range(n_examples):
        label = i % 2
        tokens = list(rng.choice(fillers, size=length - 1))
        tokens.insert(int(rng.integers(length)), markers[label])
        examples.append(Example(tokens=tokens, label=label))
    return Dataset(examples, ["neg", "pos"]), fillers + markers


def gappy_pair_dataset(n_examples: int, seed: int, length: int = 8, n_fillers: int = 10):
    """Two classes distinguishable only through a non-consecutive pair.

    Class 1 carries trigger A followed by trigger B with 2 or 3 filler tokens
    in between (so the two triggers never share any 3-token window).  Class 0
    carries two copies of the *same* trigger at identical gap statistics, so
    per-trigger counts and window contents match across classes and only the
    cross-trigger co-occurrence separates them.  Returns (dataset, vocabulary).
    """
    rng = np.random.default_rng(seed)
    fillers = [f"f{i:02d}" for i in range(n_fillers)]
    trig_a, trig_b = "trg_a", "trg_b"
    examples = []
    for i in range(n_examples):
        label = i % 2
        tokens = list(rng.choice(fillers, size=length))
        gap = int(rng.integers(2, 4))
        start = int(rng.integers(0, length - gap - 1))
        if label == 1:
            first, second = trig_a, trig_b
        else:
            first = second = trig_a if rng.random() < 0.5 else trig_b
        tokens[start] = first
        tokens[start + gap + 1] = second
        examples.append(Example(tokens=tokens, label=label))
    return Dataset(examples, ["no_pair", "pair"]), fillers + [trig_a, trig_b]
