"""Bag-of-words counting and TF-IDF transformation for the classical baselines.

Tokens are lowercased maximal alphanumeric runs of length >= 2 (underscores
split runs). The idf uses add-one smoothing with a +1 shift,
``ln((1 + n) / (1 + df)) + 1``, and transformed vectors are L2-normalized.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import LabeledCorpus

_TOKEN_RE = re.compile(r"[^\W_]{2,}", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    """Immutable term index with per-term document frequencies."""

    index: dict[str, int]
    doc_freq: np.ndarray  # int64, aligned with term indices
    n_documents: int

    def __post_init__(self) -> None:
        if self.n_documents < 1:
            raise ValueError("vocabulary must cover at least one document")
        if len(self.index) != len(self.doc_freq):
            raise ValueError("index and doc_freq sizes differ")
        if sorted(self.index.values()) != list(range(len(self.index))):
            raise ValueError("term indices must be contiguous from 0")
        if len(self.doc_freq) and int(self.doc_freq.min()) < 1:
            raise ValueError("every stored term needs document frequency >= 1")

    def __len__(self) -> int:
        return len(self.index)

    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_documents) / (1.0 + self.doc_freq)) + 1.0


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse row: (index, value) pairs plus the dense dimension."""

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64
    dimension: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if self.indices.size:
            if int(self.indices.min()) < 0 or int(self.indices.max()) >= self.dimension:
                raise ValueError("index out of range for dimension")
            if np.any(np.diff(self.indices) <= 0):
                raise ValueError("indices must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        dense[self.indices] = self.values
        return dense

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2)))


def _texts_of(corpus: LabeledCorpus | Sequence[str]) -> list[str]:
    if isinstance(corpus, LabeledCorpus):
        return corpus.texts()
    return list(corpus)


def fit_vocabulary(corpus: LabeledCorpus | Sequence[str]) -> Vocabulary:
    """Build the term index and document frequencies from a corpus.

    Terms are indexed in sorted order so the mapping is deterministic.
    Document frequency counts each term once per document.
    """
    texts = _texts_of(corpus)
    if not texts:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    doc_freq: dict[str, int] = {}
    for text in texts:
        for term in set(tokenize(text)):
            doc_freq[term] = doc_freq.get(term, 0) + 1
    if not doc_freq:
        raise ValueError("corpus yields no tokens (all tokens shorter than 2 characters?)")
    terms = sorted(doc_freq)
    index = {term: i for i, term in enumerate(terms)}
    freqs = np.array([doc_freq[term] for term in terms], dtype=np.int64)
    return Vocabulary(index, freqs, len(texts))


def count_vector(text: str, vocab: Vocabulary) -> SparseVector:
    """Raw term counts for one document; out-of-vocabulary tokens are ignored."""
    counts: dict[int, float] = {}
    for term in tokenize(text):
        idx = vocab.index.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0.0) + 1.0
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    return SparseVector(indices, values, len(vocab))


def tfidf_transform(counts: SparseVector, vocab: Vocabulary) -> SparseVector:
    """Scale counts by smoothed idf and L2-normalize; zero rows stay zero."""
    if counts.dimension != len(vocab):
        raise ValueError(
            f"dimension mismatch: vector has {counts.dimension}, vocabulary has {len(vocab)}"
        )
    idf = vocab.idf()
    values = counts.values * idf[counts.indices]
    norm = float(np.sqrt(np.sum(values**2)))
    if norm > 0.0:
        values = values / norm
    return SparseVector(counts.indices.copy(), values, counts.dimension)


def count_matrix(texts: Iterable[str], vocab: Vocabulary) -> list[SparseVector]:
    return [count_vector(text, vocab) for text in texts]


def tfidf_matrix(texts: Iterable[str], vocab: Vocabulary) -> list[SparseVector]:
    return [tfidf_transform(count_vector(text, vocab), vocab) for text in texts]


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Line-oriented text format: header ``#n_documents=<n>``, then
    ``term<TAB>index<TAB>df`` rows in index order."""
    lines = [f"#n_documents={vocab.n_documents}"]
    by_index = sorted(vocab.index.items(), key=lambda kv: kv[1])
    for term, idx in by_index:
        lines.append(f"{term}\t{idx}\t{int(vocab.doc_freq[idx])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#n_documents="):
        raise ValueError(f"{path}: missing #n_documents header")
    n_documents = int(lines[0].split("=", 1)[1])
    index: dict[str, int] = {}
    freqs: dict[int, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}: line {lineno}: expected term<TAB>index<TAB>df")
        term, idx_s, df_s = parts
        index[term] = int(idx_s)
        freqs[int(idx_s)] = int(df_s)
    doc_freq = np.array([freqs[i] for i in range(len(index))], dtype=np.int64)
    return Vocabulary(index, doc_freq, n_documents)
