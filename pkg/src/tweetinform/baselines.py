"""Classical classifiers over TF-IDF features: logistic regression, multinomial
naive Bayes and a linear SVM.

The linear models are trained with deterministic full-batch (sub)gradient
descent from zero initialization, trading speed for exact reproducibility.
Naive Bayes consumes raw counts; the other two consume tf-idf rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import ClassLabel
from .ensemble import PredictionVector
from .textfeat import SparseVector

DEFAULT_L2 = 1e-4
DEFAULT_LR = 0.5
DEFAULT_EPOCHS = 200
DEFAULT_ALPHA = 1.0


@dataclass
class LinearModel:
    kind: str  # "logreg" or "svm"
    weights: np.ndarray
    bias: float

    def decision(self, x: SparseVector) -> float:
        if x.dimension != self.weights.shape[0]:
            raise ValueError(
                f"dimension mismatch: vector has {x.dimension}, model has {self.weights.shape[0]}"
            )
        return float(self.weights[x.indices] @ x.values + self.bias)


@dataclass
class NaiveBayesModel:
    log_prior: np.ndarray  # (2,)
    log_likelihood: np.ndarray  # (2, vocab)
    alpha: float

    def scores(self, x: SparseVector) -> np.ndarray:
        if x.dimension != self.log_likelihood.shape[1]:
            raise ValueError(
                f"dimension mismatch: vector has {x.dimension}, "
                f"model has {self.log_likelihood.shape[1]}"
            )
        return self.log_prior + self.log_likelihood[:, x.indices] @ x.values


def stack_rows(X: Sequence[SparseVector]) -> sp.csr_matrix:
    """Pack sparse rows into one CSR matrix for vectorized training."""
    if not X:
        raise ValueError("empty feature list")
    dim = X[0].dimension
    if any(x.dimension != dim for x in X):
        raise ValueError("inconsistent feature dimensions")
    indptr = np.zeros(len(X) + 1, dtype=np.int64)
    for i, x in enumerate(X):
        indptr[i + 1] = indptr[i] + x.indices.size
    indices = np.concatenate([x.indices for x in X]) if indptr[-1] else np.zeros(0, np.int64)
    data = np.concatenate([x.values for x in X]) if indptr[-1] else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(X), dim))


def _labels_array(y: Sequence[ClassLabel]) -> np.ndarray:
    arr = np.array([int(label) for label in y], dtype=np.int64)
    if arr.size < 2 or len(np.unique(arr)) < 2:
        raise ValueError("training requires at least two examples covering both classes")
    return arr


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(weights: np.ndarray, bias: float, X: sp.csr_matrix,
                  y: np.ndarray, l2: float) -> float:
    """Mean L2-regularized negative log likelihood (bias unregularized)."""
    z = X @ weights + bias
    # log(1 + exp(-m)) with m = (2y-1) z, computed stably
    margins = np.where(y == 1, z, -z)
    loss = np.mean(np.logaddexp(0.0, -margins))
    return float(loss + 0.5 * l2 * weights @ weights)


def hinge_loss(weights: np.ndarray, bias: float, X: sp.csr_matrix,
               y: np.ndarray, l2: float) -> float:
    """Mean hinge loss max(0, 1 - y*f(x)) with y in {-1, +1}, plus L2 term."""
    signed = 2.0 * y - 1.0
    margins = signed * (X @ weights + bias)
    loss = np.mean(np.maximum(0.0, 1.0 - margins))
    return float(loss + 0.5 * l2 * weights @ weights)


def train_logreg(
    X: Sequence[SparseVector],
    y: Sequence[ClassLabel],
    l2: float = DEFAULT_L2,
    epochs: int = DEFAULT_EPOCHS,
    lr: float = DEFAULT_LR,
) -> LinearModel:
    """Full-batch gradient descent on the regularized logistic loss."""
    labels = _labels_array(y)
    mat = stack_rows(X)
    n, dim = mat.shape
    weights = np.zeros(dim)
    bias = 0.0
    for _ in range(epochs):
        probs = _sigmoid(mat @ weights + bias)
        residual = probs - labels
        grad_w = (mat.T @ residual) / n + l2 * weights
        grad_b = float(residual.mean())
        weights -= lr * grad_w
        bias -= lr * grad_b
    return LinearModel("logreg", weights, bias)


def train_svm(
    X: Sequence[SparseVector],
    y: Sequence[ClassLabel],
    l2: float = DEFAULT_L2,
    epochs: int = DEFAULT_EPOCHS,
    lr: float = DEFAULT_LR,
) -> LinearModel:
    """Full-batch subgradient descent on the regularized hinge loss."""
    labels = _labels_array(y)
    mat = stack_rows(X)
    n, dim = mat.shape
    signed = 2.0 * labels - 1.0
    weights = np.zeros(dim)
    bias = 0.0
    for _ in range(epochs):
        margins = signed * (mat @ weights + bias)
        active = margins < 1.0
        coeff = np.where(active, -signed, 0.0)
        grad_w = (mat.T @ coeff) / n + l2 * weights
        grad_b = float(coeff.mean())
        weights -= lr * grad_w
        bias -= lr * grad_b
    return LinearModel("svm", weights, bias)


def train_nb(
    X: Sequence[SparseVector],
    y: Sequence[ClassLabel],
    alpha: float = DEFAULT_ALPHA,
) -> NaiveBayesModel:
    """Multinomial naive Bayes with add-alpha smoothing over raw counts."""
    if alpha <= 0:
        raise ValueError(f"smoothing constant alpha must be positive, got {alpha}")
    labels = _labels_array(y)
    mat = stack_rows(X)
    if mat.nnz and mat.data.min() < 0:
        raise ValueError("naive Bayes expects nonnegative count features")
    n, dim = mat.shape
    class_counts = np.zeros((2, dim))
    priors = np.zeros(2)
    for cls in (0, 1):
        rows = labels == cls
        class_counts[cls] = np.asarray(mat[rows].sum(axis=0)).ravel()
        priors[cls] = rows.sum() / n
    log_prior = np.log(priors)
    smoothed = class_counts + alpha
    log_likelihood = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    return NaiveBayesModel(log_prior, log_likelihood, alpha)


def predict_baseline(
    model: LinearModel | NaiveBayesModel, x: SparseVector
) -> PredictionVector:
    """Uniform two-class prediction interface.

    Logistic regression emits (1-sigma, sigma); naive Bayes emits normalized
    posteriors; the SVM emits a hard one-hot by the sign of the decision value
    (zero counts as INFORMATIVE).
    """
    if isinstance(model, NaiveBayesModel):
        scores = model.scores(x)
        shifted = np.exp(scores - scores.max())
        posterior = shifted / shifted.sum()
        return PredictionVector(float(posterior[0]), float(posterior[1]))
    if model.kind == "logreg":
        p = float(_sigmoid(np.array([model.decision(x)]))[0])
        return PredictionVector(1.0 - p, p)
    if model.kind == "svm":
        return PredictionVector(0.0, 1.0) if model.decision(x) >= 0 else PredictionVector(1.0, 0.0)
    raise ValueError(f"unknown linear model kind {model.kind!r}")
