"""Multi-level complexity classifier over readability features.

A softmax-linear model trained by mini-batch gradient descent with either
plain cross-entropy or symmetric cross-entropy (CE plus a reverse-CE term
whose log 0 is truncated to a negative constant).  The estimator follows the
scikit-learn API so it composes with pipelines and ``clone``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import (
    DegenerateDatasetError,
    DimensionMismatchError,
    EmptyInputError,
)
from .textcore import FEATURE_NAMES, extract_features, tokenize

__all__ = [
    "LevelClassifier",
    "PrecisionProfile",
    "ce_loss",
    "sce_loss",
    "softmax",
    "features_matrix",
    "per_class_precision",
    "save_classifier",
    "load_classifier",
]

MODEL_FORMAT_VERSION = 1

_PROB_FLOOR = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row max."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def ce_loss(distribution: np.ndarray, true_label: int) -> float:
    """Cross-entropy -log p[true_label]; zero probability is floored at 1e-12."""
    p = max(float(distribution[true_label]), _PROB_FLOOR)
    return -float(np.log(p))


def sce_loss(
    distribution: np.ndarray,
    true_label: int,
    alpha: float,
    beta: float,
    log_floor: float,
) -> float:
    """Symmetric cross-entropy alpha*CE + beta*RCE.

    The reverse term swaps prediction and one-hot target; its log 0 is
    truncated to ``log_floor`` (a negative constant), which collapses to
    RCE = -log_floor * (1 - p[true_label]).
    """
    if log_floor >= 0:
        raise ValueError(f"log_floor must be negative, got {log_floor}")
    p_true = float(distribution[true_label])
    rce = -log_floor * (1.0 - p_true)
    return alpha * ce_loss(distribution, true_label) + beta * rce


def features_matrix(texts, freq_table: dict[str, int]) -> np.ndarray:
    """Stack raw (unstandardized) feature vectors for a list of texts."""
    rows = [extract_features(tokenize(t), freq_table).as_list() for t in texts]
    return np.asarray(rows, dtype=np.float64)


@dataclass(frozen=True)
class PrecisionProfile:
    """Per-class precision of a classifier on an evaluation split.

    Classes the model never predicts get precision 0, which downstream
    drives their confidence weights to 0 (do-not-trust policy).
    """

    per_class: np.ndarray
    support: np.ndarray

    def to_dict(self) -> dict:
        return {
            "per_class": [float(p) for p in self.per_class],
            "support": [int(s) for s in self.support],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PrecisionProfile":
        return cls(
            per_class=np.asarray(data["per_class"], dtype=np.float64),
            support=np.asarray(data["support"], dtype=np.int64),
        )


class LevelClassifier(ClassifierMixin, BaseEstimator):
    """Softmax-linear complexity-level classifier.

    Parameters
    ----------
    num_classes : number of levels, class 0 meaning "original".
    freq_table : word -> 1-based frequency rank, used by feature extraction.
    loss : "ce" or "sce".
    alpha, beta : SCE mixing weights (ignored for "ce").
    log_floor : truncation constant for the SCE reverse term, must be < 0.
    learning_rate, n_steps, batch_size, seed : plain mini-batch GD settings.
    """

    def __init__(
        self,
        num_classes: int = 5,
        freq_table: dict | None = None,
        loss: str = "ce",
        alpha: float = 0.1,
        beta: float = 1.0,
        log_floor: float = -4.0,
        learning_rate: float = 0.5,
        n_steps: int = 2000,
        batch_size: int = 32,
        seed: int = 0,
    ):
        self.num_classes = num_classes
        self.freq_table = freq_table
        self.loss = loss
        self.alpha = alpha
        self.beta = beta
        self.log_floor = log_floor
        self.learning_rate = learning_rate
        self.n_steps = n_steps
        self.batch_size = batch_size
        self.seed = seed

    # -- fitting ---------------------------------------------------------

    def fit(self, texts, levels) -> "LevelClassifier":
        """Train on raw sentence strings and integer levels in [0, K]."""
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.loss not in ("ce", "sce"):
            raise ValueError(f"unknown loss {self.loss!r}")
        levels = np.asarray(list(levels), dtype=np.int64)
        if len(levels) == 0:
            raise DegenerateDatasetError("empty training set")
        if levels.min() < 0 or levels.max() >= self.num_classes:
            raise ValueError("levels out of range for num_classes")
        if len(np.unique(levels)) < 2:
            raise DegenerateDatasetError("training set holds a single class")

        X = features_matrix(texts, self.freq_table or {})
        self.feature_names_ = list(FEATURE_NAMES)
        self.feature_means_ = X.mean(axis=0)
        stds = X.std(axis=0)
        stds[stds == 0.0] = 1.0
        self.feature_stds_ = stds
        Xs = (X - self.feature_means_) / self.feature_stds_

        rng = np.random.default_rng(self.seed)
        n, dim = Xs.shape
        W = rng.normal(0.0, 0.01, size=(self.num_classes, dim))
        b = np.zeros(self.num_classes)

        onehot = np.zeros((n, self.num_classes))
        onehot[np.arange(n), levels] = 1.0

        order = rng.permutation(n)
        cursor = 0
        for _ in range(self.n_steps):
            if cursor >= n:
                order = rng.permutation(n)
                cursor = 0
            batch = order[cursor : cursor + self.batch_size]
            cursor += self.batch_size
            xb, yb = Xs[batch], onehot[batch]
            probs = softmax(xb @ W.T + b)
            d_logits = self._loss_grad_logits(probs, yb) / len(batch)
            W -= self.learning_rate * (d_logits.T @ xb)
            b -= self.learning_rate * d_logits.sum(axis=0)

        self.coef_ = W
        self.intercept_ = b
        self.classes_ = np.arange(self.num_classes)
        return self

    def _loss_grad_logits(self, probs: np.ndarray, onehot: np.ndarray) -> np.ndarray:
        """Gradient of the per-example loss w.r.t. logits, summed form."""
        if self.loss == "ce":
            return probs - onehot
        p_true = (probs * onehot).sum(axis=1, keepdims=True)
        scale = self.alpha - self.log_floor * self.beta * p_true
        return scale * (probs - onehot)

    # -- inference -------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise RuntimeError("classifier is not fitted")

    def standardize(self, X: np.ndarray) -> np.ndarray:
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.coef_.shape[1]:
            raise DimensionMismatchError(
                f"expected {self.coef_.shape[1]} features, got {X.shape[1]}"
            )
        return (X - self.feature_means_) / self.feature_stds_

    def predict_proba_features(self, X: np.ndarray) -> np.ndarray:
        """Probabilities from raw (unstandardized) feature rows."""
        return softmax(self.standardize(X) @ self.coef_.T + self.intercept_)

    def predict_proba(self, texts) -> np.ndarray:
        return self.predict_proba_features(
            features_matrix(texts, self.freq_table or {})
        )

    def predict(self, texts) -> np.ndarray:
        return np.argmax(self.predict_proba(texts), axis=1)

    def predict_one(self, text: str) -> tuple[int, float, np.ndarray]:
        """Predict a single sentence: (level, confidence, distribution).

        Ties in the argmax resolve to the lowest class index.
        """
        dist = self.predict_proba([text])[0]
        level = int(np.argmax(dist))
        return level, float(dist[level]), dist

    def fit_loss(self, distribution: np.ndarray, true_label: int) -> float:
        """The configured per-example loss, for inspection and tests."""
        if self.loss == "ce":
            return ce_loss(distribution, true_label)
        return sce_loss(
            distribution, true_label, self.alpha, self.beta, self.log_floor
        )


def per_class_precision(
    clf: LevelClassifier, texts, levels
) -> PrecisionProfile:
    """Precision of each class on an evaluation split.

    precision_k = correct predictions of class k / predictions of class k,
    0 for classes never predicted.
    """
    levels = np.asarray(list(levels), dtype=np.int64)
    if len(levels) == 0:
        raise EmptyInputError("empty evaluation split")
    predicted = clf.predict(texts)
    per_class = np.zeros(clf.num_classes)
    support = np.zeros(clf.num_classes, dtype=np.int64)
    for k in range(clf.num_classes):
        mask = predicted == k
        support[k] = int(mask.sum())
        if support[k] > 0:
            per_class[k] = float((levels[mask] == k).mean())
    return PrecisionProfile(per_class=per_class, support=support)


def save_classifier(clf: LevelClassifier, path) -> None:
    """Write the fitted model as a versioned JSON document."""
    clf._check_fitted()
    document = {
        "version": MODEL_FORMAT_VERSION,
        "num_classes": clf.num_classes,
        "feature_spec": {
            "names": clf.feature_names_,
            "means": [float(v) for v in clf.feature_means_],
            "stds": [float(v) for v in clf.feature_stds_],
        },
        "W": [[float(v) for v in row] for row in clf.coef_],
        "b": [float(v) for v in clf.intercept_],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=1, sort_keys=True)
        handle.write("\n")


def load_classifier(path, freq_table: dict[str, int]) -> LevelClassifier:
    """Rebuild a fitted classifier from JSON plus its frequency table."""
    with open(path, encoding="utf-8") as handle:
        document = json.load(handle)
    if document.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model version {document.get('version')!r}")
    clf = LevelClassifier(
        num_classes=int(document["num_classes"]), freq_table=freq_table
    )
    clf.feature_names_ = list(document["feature_spec"]["names"])
    clf.feature_means_ = np.asarray(document["feature_spec"]["means"])
    clf.feature_stds_ = np.asarray(document["feature_spec"]["stds"])
    clf.coef_ = np.asarray(document["W"], dtype=np.float64)
    clf.intercept_ = np.asarray(document["b"], dtype=np.float64)
    clf.classes_ = np.arange(clf.num_classes)
    return clf
