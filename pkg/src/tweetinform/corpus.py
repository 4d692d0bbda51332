"""Loading, validation, re-splitting and length bucketing of tweet datasets.

The on-disk format is UTF-8 TSV with columns ``Id<TAB>Text<TAB>Label``; the
``Label`` column is absent for unlabeled data. Labels are exactly
``INFORMATIVE`` or ``UNINFORMATIVE``. Tab characters inside the text field
are not supported and surface as column-count errors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

SPLIT_TAGS = ("train", "validation", "test")

_LABELED_HEADER = ("id", "text", "label")
_UNLABELED_HEADER = ("id", "text")


class CorpusError(ValueError):
    """Malformed corpus file or inconsistent corpus contents."""


class ClassLabel(enum.IntEnum):
    """Binary tweet label. The 0/1 index mapping is fixed: class index 1 is
    the positive (INFORMATIVE) class everywhere, including metrics."""

    UNINFORMATIVE = 0
    INFORMATIVE = 1

    @classmethod
    def from_string(cls, value: str) -> "ClassLabel":
        try:
            return cls[value]
        except KeyError:
            raise CorpusError(f"unknown label string {value!r}") from None


class LengthBucket(enum.Enum):
    """Tweet length categories, measured in whitespace-delimited words."""

    SHORT = "short"  # 0-22 words
    MEDIUM = "medium"  # 23-44 words
    LONG = "long"  # >44 words


@dataclass(frozen=True)
class TweetRecord:
    id: str
    text: str
    label: ClassLabel | None = None


@dataclass(frozen=True)
class LabeledCorpus:
    """An ordered, validated collection of tweets tied to one dataset split.

    Records in the ``train`` and ``validation`` splits must all carry labels;
    ``test`` records may be unlabeled.
    """

    records: tuple[TweetRecord, ...]
    split_tag: str = "train"

    def __post_init__(self) -> None:
        if self.split_tag not in SPLIT_TAGS:
            raise CorpusError(f"split_tag must be one of {SPLIT_TAGS}, got {self.split_tag!r}")
        seen: set[str] = set()
        for rec in self.records:
            if not rec.text.strip():
                raise CorpusError(f"record {rec.id!r} has empty text")
            if rec.id in seen:
                raise CorpusError(f"duplicate id {rec.id!r}")
            seen.add(rec.id)
            if self.split_tag in ("train", "validation") and rec.label is None:
                raise CorpusError(f"record {rec.id!r} in split {self.split_tag!r} is unlabeled")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TweetRecord]:
        return iter(self.records)

    def texts(self) -> list[str]:
        return [rec.text for rec in self.records]

    def labels(self) -> list[ClassLabel]:
        missing = [rec.id for rec in self.records if rec.label is None]
        if missing:
            raise CorpusError(f"corpus has unlabeled records, e.g. id {missing[0]!r}")
        return [rec.label for rec in self.records]  # type: ignore[misc]

    def label_counts(self) -> dict[ClassLabel, int]:
        counts = {ClassLabel.UNINFORMATIVE: 0, ClassLabel.INFORMATIVE: 0}
        for rec in self.records:
            if rec.label is not None:
                counts[rec.label] += 1
        return counts


def load_corpus(
    path: str | Path,
    has_labels: bool = True,
    expect_header: bool = True,
    split_tag: str | None = None,
) -> LabeledCorpus:
    """Parse a TSV tweet file into a :class:`LabeledCorpus`.

    Row order is preserved. Errors carry 1-based physical line numbers.
    ``expect_header=False`` treats every line as data (for files written
    without the official header row).
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    n_columns = 3 if has_labels else 2
    start = 0
    if expect_header:
        if not lines:
            raise CorpusError(f"{path}: empty file, expected a header row")
        header = tuple(col.strip().lower() for col in lines[0].split("\t"))
        expected = _LABELED_HEADER if has_labels else _UNLABELED_HEADER
        if header != expected:
            raise CorpusError(
                f"{path}: line 1: expected header {expected}, got {header} "
                "(use expect_header=False for headerless files)"
            )
        start = 1

    records: list[TweetRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[start:], start=start + 1):
        cols = line.split("\t")
        if len(cols) != n_columns:
            raise CorpusError(
                f"{path}: line {lineno}: expected {n_columns} tab-separated columns, "
                f"got {len(cols)}"
            )
        rec_id = cols[0].strip()
        text = cols[1]
        if not text.strip():
            raise CorpusError(f"{path}: line {lineno}: empty text")
        if rec_id in seen:
            raise CorpusError(f"{path}: line {lineno}: duplicate id {rec_id!r}")
        seen.add(rec_id)
        label: ClassLabel | None = None
        if has_labels:
            raw = cols[2].strip()
            try:
                label = ClassLabel.from_string(raw)
            except CorpusError:
                raise CorpusError(f"{path}: line {lineno}: unknown label string {raw!r}") from None
        records.append(TweetRecord(rec_id, text, label))

    if split_tag is None:
        split_tag = "train" if has_labels else "test"
    return LabeledCorpus(tuple(records), split_tag)


def save_corpus(corpus: LabeledCorpus, path: str | Path, include_header: bool = True) -> None:
    """Write a corpus back to TSV; inverse of :func:`load_corpus`."""
    labeled = all(rec.label is not None for rec in corpus.records)
    lines: list[str] = []
    if include_header:
        lines.append("Id\tText\tLabel" if labeled else "Id\tText")
    for rec in corpus.records:
        if "\t" in rec.text or "\n" in rec.text:
            raise CorpusError(f"record {rec.id!r}: text contains tab or newline")
        if labeled:
            lines.append(f"{rec.id}\t{rec.text}\t{rec.label.name}")  # type: ignore[union-attr]
        else:
            lines.append(f"{rec.id}\t{rec.text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def resplit(
    train: LabeledCorpus, validation: LabeledCorpus, seed: int
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Pool two labeled corpora and re-divide them 90/10 at random.

    The shuffle is a deterministic function of ``seed``; the output multiset
    of records equals the input multiset. New train size is
    ``round(0.9 * total)``.
    """
    for corpus in (train, validation):
        if any(rec.label is None for rec in corpus.records):
            raise CorpusError("resplit requires fully labeled corpora")
    pooled = list(train.records) + list(validation.records)
    total = len(pooled)
    if total < 10:
        raise CorpusError(f"cannot form a 90/10 split from {total} records (need at least 10)")
    order = np.random.default_rng(seed).permutation(total)
    shuffled = [pooled[i] for i in order]
    n_train = int(round(0.9 * total))
    return (
        LabeledCorpus(tuple(shuffled[:n_train]), "train"),
        LabeledCorpus(tuple(shuffled[n_train:]), "validation"),
    )


def word_count(text: str) -> int:
    """Number of maximal whitespace-delimited tokens in the raw text."""
    return len(text.split())


def bucket_of(count: int) -> LengthBucket:
    """Map a word count to its length bucket (boundaries 22/23 and 44/45)."""
    if count < 0:
        raise ValueError(f"word count must be nonnegative, got {count}")
    if count <= 22:
        return LengthBucket.SHORT
    if count <= 44:
        return LengthBucket.MEDIUM
    return LengthBucket.LONG
