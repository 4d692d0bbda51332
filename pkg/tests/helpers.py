"""Shared test utilities: finite-difference oracles and synthetic corpora."""

from __future__ import annotations

from typing import Callable

import numpy as np

from tweetinform.corpus import ClassLabel, LabeledCorpus, TweetRecord


def finite_difference(loss_fn: Callable[[], float], array: np.ndarray,
                      h: float = 1e-6) -> np.ndarray:
    """Central finite differences of ``loss_fn()`` w.r.t. ``array``.

    The array is perturbed in place and restored, so ``loss_fn`` must read it
    afresh on every call.
    """
    grad = np.zeros_like(array)
    for idx in np.ndindex(*array.shape):
        original = array[idx]
        array[idx] = original + h
        up = loss_fn()
        array[idx] = original - h
        down = loss_fn()
        array[idx] = original
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray,
                       floor: float = 1e-4) -> float:
    """Largest per-coordinate relative error, with a floor so near-zero
    gradients are compared absolutely at the floor scale."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


# Disjoint word pools make the synthetic corpus linearly separable.
INFORMATIVE_WORDS = (
    "confirmed", "cases", "deaths", "hospital", "county", "reported",
    "update", "positive", "total", "health",
)
UNINFORMATIVE_WORDS = (
    "lol", "meme", "funny", "cat", "mood", "vibes", "haha", "bored",
    "random", "tunes",
)


def synthetic_corpus(n: int, seed: int = 0, split_tag: str = "train") -> LabeledCorpus:
    """Balanced, trivially separable corpus of short synthetic tweets."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        informative = i % 2 == 0
        pool = INFORMATIVE_WORDS if informative else UNINFORMATIVE_WORDS
        length = int(rng.integers(3, 7))
        words = [pool[int(rng.integers(0, len(pool)))] for _ in range(length)]
        label = ClassLabel.INFORMATIVE if informative else ClassLabel.UNINFORMATIVE
        records.append(TweetRecord(f"t{i}", " ".join(words), label))
    return LabeledCorpus(tuple(records), split_tag)
