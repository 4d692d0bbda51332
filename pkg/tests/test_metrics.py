"""Metric formulas and their degenerate-case conventions."""

import numpy as np
import pytest

from tweetinform.corpus import ClassLabel
from tweetinform.metrics import ConfusionMatrix, confusion, f1_informative

INF = ClassLabel.INFORMATIVE
UNINF = ClassLabel.UNINFORMATIVE


def labels_for(tp, fp, fn, tn):
    """Construct (preds, golds) realizing a given confusion matrix."""
    preds = [INF] * tp + [INF] * fp + [UNINF] * fn + [UNINF] * tn
    golds = [INF] * tp + [UNINF] * fp + [INF] * fn + [UNINF] * tn
    return preds, golds


class TestF1:
    def test_perfect(self):
        preds, golds = labels_for(tp=5, fp=0, fn=0, tn=5)
        score, matrix = f1_informative(preds, golds)
        assert score == 1.0
        assert matrix == ConfusionMatrix(5, 0, 0, 5)

    def test_hand_computed_value(self):
        preds, golds = labels_for(tp=8, fp=2, fn=2, tn=0)
        score, matrix = f1_informative(preds, golds)
        assert matrix.precision() == pytest.approx(0.8, abs=1e-12)
        assert matrix.recall() == pytest.approx(0.8, abs=1e-12)
        assert score == pytest.approx(0.8, abs=1e-12)

    def test_all_negative_predictions(self):
        preds, golds = labels_for(tp=0, fp=0, fn=4, tn=6)
        score, _ = f1_informative(preds, golds)
        assert score == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            f1_informative([INF], [INF, UNINF])

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        preds = [ClassLabel(int(v)) for v in rng.integers(0, 2, size=50)]
        golds = [ClassLabel(int(v)) for v in rng.integers(0, 2, size=50)]
        base, base_matrix = f1_informative(preds, golds)
        order = rng.permutation(50)
        permuted, matrix = f1_informative([preds[i] for i in order], [golds[i] for i in order])
        assert permuted == base
        assert matrix == base_matrix

    def test_f1_is_one_iff_no_errors(self):
        score, _ = f1_informative(*labels_for(tp=3, fp=1, fn=0, tn=2))
        assert score < 1.0
        score, _ = f1_informative(*labels_for(tp=3, fp=0, fn=1, tn=2))
        assert score < 1.0


class TestConfusionMatrix:
    def test_total(self):
        matrix = confusion(*labels_for(2, 3, 4, 5))
        assert matrix.total == 14

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(-1, 0, 0, 0)

    def test_accuracy(self):
        matrix = confusion(*labels_for(2, 1, 1, 6))
        assert matrix.accuracy() == pytest.approx(0.8)
