"""Three-encoder model: whole tweet plus head and tail fragments.

The tweet is split at the word-level midpoint (``ceil(w * head_fraction)``,
default half). Each fragment is re-framed with [CLS]/[SEP] at the full
``max_len`` and runs through its own encoder; none of the three encoders
share parameters. Their pooled embeddings concatenate as
[global || head || tail] and feed one shared classification block, so one
optimizer trains all three jointly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .bpe import MergeTable, merge_table_digest
from .encoder import EncoderConfig, EncoderModel, ExtractionStrategy, pooled_rows
from .optim import Parameter
from .trainer import ClassificationBlock, batch_encode, _encoder_config_dict


#: Benchmarked (global, head, tail) strategy combinations, as parse_strategy
#: strings. The third entry is the strongest single-model configuration.
MULTI_VIEW_PRESETS: tuple[tuple[str, str, str], ...] = (
    ("last", "last", "last"),
    ("last4", "last", "last"),
    ("last4", "last+first", "first"),
    ("last4:avg", "last+first", "first"),
    ("last2+first2", "last+first2", "last+first2"),
)


def split_head_tail(text: str, head_fraction: float = 0.5) -> tuple[str, str]:
    """Split the whitespace token list at ``ceil(w * head_fraction)``.

    The head and tail word lists always partition the tweet's words; the tail
    may be empty for very short tweets.
    """
    if not 0.0 < head_fraction < 1.0:
        raise ValueError("head_fraction must be strictly between 0 and 1")
    words = text.split()
    cut = math.ceil(len(words) * head_fraction)
    return " ".join(words[:cut]), " ".join(words[cut:])


@dataclass(frozen=True)
class GlobalLocalConfig:
    encoder: EncoderConfig
    global_strategy: ExtractionStrategy
    head_strategy: ExtractionStrategy
    tail_strategy: ExtractionStrategy
    head_fraction: float = 0.5

    def __post_init__(self) -> None:
        for strategy in (self.global_strategy, self.head_strategy, self.tail_strategy):
            strategy.validate(self.encoder.n_layers)
        if not 0.0 < self.head_fraction < 1.0:
            raise ValueError("head_fraction must be strictly between 0 and 1")

    def embedding_dim(self) -> int:
        d = self.encoder.d_model
        return (
            self.global_strategy.output_dim(d)
            + self.head_strategy.output_dim(d)
            + self.tail_strategy.output_dim(d)
        )


class GlobalLocalModel:
    """Three independent encoders plus one classification block."""

    kind = "global_local"

    VIEWS = ("global", "head", "tail")

    def __init__(self, tokenizer: MergeTable, config: GlobalLocalConfig,
                 clf_depth: int = 2, clf_hidden: int | None = None, seed: int = 0):
        if config.encoder.vocab_size != tokenizer.vocab_size:
            raise ValueError(
                f"config vocab_size {config.encoder.vocab_size} != tokenizer vocab "
                f"{tokenizer.vocab_size}"
            )
        self.tokenizer = tokenizer
        self.config = config
        self.seed = seed
        self.encoders = {
            view: EncoderModel(config.encoder, seed=seed, prefix=view)
            for view in self.VIEWS
        }
        self.strategies = {
            "global": config.global_strategy,
            "head": config.head_strategy,
            "tail": config.tail_strategy,
        }
        self.clf = ClassificationBlock(
            config.embedding_dim(), depth=clf_depth, hidden=clf_hidden, seed=seed,
        )

    # views -----------------------------------------------------------------

    def _view_texts(self, texts: Sequence[str]) -> dict[str, list[str]]:
        heads, tails = [], []
        for text in texts:
            head, tail = split_head_tail(text, self.config.head_fraction)
            heads.append(head)
            tails.append(tail)
        return {"global": list(texts), "head": heads, "tail": tails}

    def embed(self, texts: Sequence[str], rng: np.random.Generator | None = None) -> Tensor:
        """Concatenated [global || head || tail] pooled embeddings, (B, dim)."""
        views = self._view_texts(texts)
        pooled = []
        for view in self.VIEWS:  # fixed order keeps runs reproducible
            ids, mask = batch_encode(views[view], self.tokenizer, self.config.encoder.max_len)
            states = self.encoders[view].forward(ids, mask, rng)
            pooled.append(pooled_rows(states, self.strategies[view]))
        return ad.concat(pooled, axis=-1)

    def logits(self, texts: Sequence[str], rng: np.random.Generator | None = None) -> Tensor:
        return self.clf(self.embed(texts, rng))

    # parameters and persistence ---------------------------------------------

    def parameters(self) -> list[Parameter]:
        return self.encoder_parameters() + self.clf.parameters()

    def encoder_parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for view in self.VIEWS:
            out.extend(self.encoders[view].parameters())
        return out

    def classifier_parameters(self) -> list[Parameter]:
        return self.clf.parameters()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.parameters()}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in arrays:
                raise ValueError(f"missing array {p.name!r} in state")
            if arrays[p.name].shape != p.data.shape:
                raise ValueError(f"shape mismatch for {p.name!r}")
            p.value.data = np.array(arrays[p.name], dtype=np.float64)

    def config_snapshot(self) -> dict:
        def strategy_dict(s: ExtractionStrategy) -> dict:
            return {"combine": s.combine, "layers": list(s.layers)}

        return {
            "model": self.kind,
            "seed": self.seed,
            "encoder": _encoder_config_dict(self.config.encoder),
            "global_strategy": strategy_dict(self.config.global_strategy),
            "head_strategy": strategy_dict(self.config.head_strategy),
            "tail_strategy": strategy_dict(self.config.tail_strategy),
            "head_fraction": self.config.head_fraction,
            "clf": {"depth": self.clf.depth, "hidden": self.clf.hidden},
            "tokenizer_digest": merge_table_digest(self.tokenizer),
        }


def global_local_embed(text: str, model: GlobalLocalModel) -> Tensor:
    """Pooled [global || head || tail] embedding of one tweet (eval mode)."""
    with ad.no_grad():
        return model.embed([text], rng=None)[0]
