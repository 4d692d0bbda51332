"""Desk-scale toolkit for classifying short social-media posts as
INFORMATIVE vs UNINFORMATIVE: subword tokenization, a from-scratch
transformer encoder with layer-extraction strategies, a global-local
multi-encoder model, two-phase training, classical TF-IDF baselines, and
vote/average/length-bucketed ensembling."""

__version__ = "0.1.0"

from .corpus import ClassLabel, LabeledCorpus, LengthBucket, TweetRecord
from .ensemble import PredictionVector

__all__ = [
    "ClassLabel",
    "LabeledCorpus",
    "LengthBucket",
    "TweetRecord",
    "PredictionVector",
    "__version__",
]
