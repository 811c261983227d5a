"""Scikit-learn estimator wrapper around the tensor n-gram network."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .data import Dataset, EmbeddingTable, Example, embed, load_embeddings
from .network import ModelConfig, forward_model, init_model
from .optimizer import TrainConfig, train

__all__ = ["TensorNgramClassifier"]


class TensorNgramClassifier(BaseEstimator, ClassifierMixin):
    """Text classifier over non-consecutive n-gram tensor features.

    Documents are token sequences (or whitespace-splittable strings).  Word
    vectors stay fixed during training; when no embedding table is supplied,
    random unit-norm vectors are drawn for the training vocabulary so the
    estimator works standalone.

    Parameters
    ----------
    embeddings : EmbeddingTable, str, or None
        Fixed word vectors, a path to an embedding file, or None to draw
        random unit-norm vectors of size ``embedding_dim``.
    embedding_dim : int
        Dimension of the random vectors used when ``embeddings`` is None.
    layers, order, hidden : int
        Number of stacked feature layers, the n-gram order, and the feature
        dimension.
    decay : float
        Span decay in [0, 1); 0 restricts the features to consecutive
        n-grams.
    dropout : float
        Inverted-dropout probability on each layer's output at train time.
    learning_rate, l2_weight, epochs, batch_size, seed
        AdaGrad training settings.
    """

    def __init__(
        self,
        embeddings=None,
        embedding_dim: int = 50,
        layers: int = 1,
        order: int = 3,
        hidden: int = 50,
        decay: float = 0.5,
        dropout: float = 0.0,
        learning_rate: float = 0.01,
        l2_weight: float = 1e-5,
        epochs: int = 10,
        batch_size: int = 1,
        seed: int = 0,
    ):
        self.embeddings = embeddings
        self.embedding_dim = embedding_dim
        self.layers = layers
        self.order = order
        self.hidden = hidden
        self.decay = decay
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.l2_weight = l2_weight
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    @staticmethod
    def _tokenize(doc) -> list[str]:
        tokens = doc.split() if isinstance(doc, str) else [str(t) for t in doc]
        if not tokens:
            raise ValueError("documents must contain at least one token")
        return tokens

    def _resolve_table(self, docs: list[list[str]]) -> EmbeddingTable:
        if isinstance(self.embeddings, EmbeddingTable):
            return self.embeddings
        if isinstance(self.embeddings, str):
            return load_embeddings(self.embeddings)
        if self.embeddings is None:
            vocab = sorted({token for doc in docs for token in doc})
            rng = np.random.default_rng(self.seed)
            vectors = rng.standard_normal((len(vocab), self.embedding_dim))
            return EmbeddingTable.from_pairs(vocab, vectors, normalize=True)
        raise TypeError("embeddings must be an EmbeddingTable, a path, or None")

    def fit(self, X, y):
        docs = [self._tokenize(doc) for doc in X]
        y = np.asarray(y)
        if len(docs) != len(y):
            raise ValueError(f"X has {len(docs)} documents but y has {len(y)} labels")
        self.classes_ = np.unique(y)
        indices = np.searchsorted(self.classes_, y)
        label_names = [str(c) for c in self.classes_]

        table = self._resolve_table(docs)
        config = ModelConfig(
            order=self.order,
            hidden=self.hidden,
            layers=self.layers,
            decay=self.decay,
            dropout=self.dropout,
            label_names=label_names,
            word_dim=table.dim,
        )
        model = init_model(config, np.random.default_rng(self.seed))
        dataset = Dataset(
            examples=[Example(tokens=doc, label=int(i)) for doc, i in zip(docs, indices)],
            label_names=label_names,
        )
        train_cfg = TrainConfig(
            learning_rate=self.learning_rate,
            l2_weight=self.l2_weight,
            epochs=self.epochs,
            seed=self.seed,
            batch_size=self.batch_size,
        )
        result = train(model, dataset, train_cfg, table)
        self.model_ = result.model
        self.table_ = table
        self.history_ = result.history
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError("this TensorNgramClassifier instance is not fitted yet")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        rows = []
        for doc in X:
            x = embed(self._tokenize(doc), self.table_)
            rows.append(forward_model(self.model_, x, train=False).probs)
        return np.array(rows)

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]
