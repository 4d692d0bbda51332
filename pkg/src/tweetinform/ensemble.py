"""Model combination: majority voting, softmax averaging, and length-bucketed
selective ensembles.

Vote ties (possible only for even ensemble sizes) fall back to softmax
averaging over the same predictions; averaging ties resolve to INFORMATIVE,
the class whose misses are assumed costlier. Both tie rules are documented
here and the classify tie is configurable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import ClassLabel, LabeledCorpus, LengthBucket, bucket_of, word_count

NORMALIZATION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class PredictionVector:
    """A two-class softmax vector (p_uninformative, p_informative)."""

    p_uninformative: float
    p_informative: float

    def __post_init__(self) -> None:
        total = self.p_uninformative + self.p_informative
        slack = NORMALIZATION_TOLERANCE
        if not (abs(total - 1.0) <= slack):
            raise ValueError(f"prediction vector sums to {total!r}, expected 1 within {slack}")
        for value in (self.p_uninformative, self.p_informative):
            if not (-slack <= value <= 1.0 + slack):
                raise ValueError(f"prediction component {value!r} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float]:
        return (self.p_uninformative, self.p_informative)

    def __getitem__(self, cls: int) -> float:
        return self.as_tuple()[cls]


def classify(
    pred: PredictionVector, tie_break: ClassLabel = ClassLabel.INFORMATIVE
) -> ClassLabel:
    """Argmax over the two components; exact ties go to ``tie_break``."""
    if pred.p_informative > pred.p_uninformative:
        return ClassLabel.INFORMATIVE
    if pred.p_informative < pred.p_uninformative:
        return ClassLabel.UNINFORMATIVE
    return tie_break


def majority_vote(preds: Sequence[PredictionVector]) -> ClassLabel:
    """Argmax over per-model hard votes; vote ties fall back to averaging."""
    if not preds:
        raise ValueError("majority_vote requires at least one prediction")
    votes = [0, 0]
    for pred in preds:
        votes[int(classify(pred))] += 1
    if votes[0] == votes[1]:
        return average_softmax(preds)
    return ClassLabel.INFORMATIVE if votes[1] > votes[0] else ClassLabel.UNINFORMATIVE


def average_softmax(preds: Sequence[PredictionVector]) -> ClassLabel:
    """Argmax of the componentwise mean vector; ties go to INFORMATIVE."""
    if not preds:
        raise ValueError("average_softmax requires at least one prediction")
    # plain sequential sums keep the result bit-for-bit checkable
    total_uninf = 0.0
    total_inf = 0.0
    for pred in preds:
        total_uninf += pred.p_uninformative
        total_inf += pred.p_informative
    count = len(preds)
    mean_uninf = total_uninf / count
    mean_inf = total_inf / count
    if mean_inf > mean_uninf:
        return ClassLabel.INFORMATIVE
    if mean_inf < mean_uninf:
        return ClassLabel.UNINFORMATIVE
    return ClassLabel.INFORMATIVE


COMBINATION_RULES = ("vote", "average")


def combine(preds: Sequence[PredictionVector], rule: str) -> ClassLabel:
    if rule == "vote":
        return majority_vote(preds)
    if rule == "average":
        return average_softmax(preds)
    raise ValueError(f"unknown combination rule {rule!r}, expected one of {COMBINATION_RULES}")


def select_top_models_per_bucket(
    predictions: Mapping[str, Sequence[PredictionVector]],
    reference: LabeledCorpus,
    k: int = 7,
) -> dict[LengthBucket, tuple[str, ...]]:
    """Pick the ``k`` models with the most correct predictions per length bucket.

    ``predictions`` maps model id to its prediction for every record of
    ``reference`` (same order). Ties break by higher overall correct count,
    then by model id. A bucket with no reference tweets inherits the overall
    top ``k``.
    """
    if len(predictions) < k:
        raise ValueError(f"need at least k={k} candidate models, got {len(predictions)}")
    golds = reference.labels()
    n = len(reference)
    for model_id, preds in predictions.items():
        if len(preds) != n:
            raise ValueError(
                f"model {model_id!r} has {len(preds)} predictions for {n} reference tweets"
            )

    buckets = [bucket_of(word_count(rec.text)) for rec in reference.records]
    correct: dict[str, list[bool]] = {
        model_id: [classify(p) == gold for p, gold in zip(preds, golds)]
        for model_id, preds in predictions.items()
    }
    overall = {model_id: sum(flags) for model_id, flags in correct.items()}

    bucket_map: dict[LengthBucket, tuple[str, ...]] = {}
    for bucket in LengthBucket:
        rows = [i for i, b in enumerate(buckets) if b == bucket]
        if rows:
            scores = {
                model_id: sum(flags[i] for i in rows) for model_id, flags in correct.items()
            }
            ranked = sorted(predictions, key=lambda m: (-scores[m], -overall[m], m))
        else:
            ranked = sorted(predictions, key=lambda m: (-overall[m], m))
        bucket_map[bucket] = tuple(ranked[:k])
    return bucket_map


def bucketed_predict(
    text: str,
    predictions: Mapping[str, PredictionVector],
    bucket_map: Mapping[LengthBucket, Sequence[str]],
    rule: str = "vote",
) -> ClassLabel:
    """Route a tweet to its length bucket's model list and combine."""
    bucket = bucket_of(word_count(text))
    if bucket not in bucket_map:
        raise ValueError(f"bucket map has no entry for {bucket.value!r} tweets")
    selected = []
    for model_id in bucket_map[bucket]:
        if model_id not in predictions:
            raise ValueError(f"missing prediction for model {model_id!r}")
        selected.append(predictions[model_id])
    return combine(selected, rule)


# ---------------------------------------------------------------------------
# Prediction interchange files
# ---------------------------------------------------------------------------

def save_predictions(
    path: str | Path, ids: Sequence[str], preds: Sequence[PredictionVector]
) -> None:
    """One record per line: ``id<TAB>p_uninformative<TAB>p_informative``."""
    if len(ids) != len(preds):
        raise ValueError("ids and predictions differ in length")
    lines = [
        f"{rec_id}\t{p.p_uninformative!r}\t{p.p_informative!r}"
        for rec_id, p in zip(ids, preds)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_predictions(path: str | Path) -> tuple[list[str], list[PredictionVector]]:
    ids: list[str] = []
    preds: list[PredictionVector] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}: line {lineno}: expected id<TAB>p0<TAB>p1")
        ids.append(parts[0])
        preds.append(PredictionVector(float(parts[1]), float(parts[2])))
    return ids, preds


def save_labels(path: str | Path, ids: Sequence[str], labels: Sequence[ClassLabel]) -> None:
    """Ensemble output format: ``id<TAB>LABEL`` per line."""
    if len(ids) != len(labels):
        raise ValueError("ids and labels differ in length")
    lines = [f"{rec_id}\t{label.name}" for rec_id, label in zip(ids, labels)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_labels(path: str | Path) -> tuple[list[str], list[ClassLabel]]:
    ids: list[str] = []
    labels: list[ClassLabel] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}: line {lineno}: expected id<TAB>LABEL")
        ids.append(parts[0])
        labels.append(ClassLabel.from_string(parts[1].strip()))
    return ids, labels
