"""Transformer encoder that exposes every layer's hidden states, plus the
pooled-embedding extraction strategies applied to the position-0 row.

Layer indices are 1-based counting from the bottom; index 0 of a
:class:`LayerStates` holds the embedding-block output and is not selectable
by strategies. "mid" means layer ``ceil(L / 2)`` and a span of ``k`` named
layers clamps to the valid range, so named strategies stay well-defined for
shallow encoders. Concatenation order is bottom-to-top for every strategy.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .bpe import TokenSequence
from .optim import Parameter

ATTENTION_MASK_BIAS = -1e9  # finite so every intermediate stays finite


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    n_layers: int = 4
    d_model: int = 64
    n_heads: int = 4
    ffn_dim: int = 256
    max_len: int = 256
    dropout: float = 0.1

    def __post_init__(self) -> None:
        if self.n_layers < 1:
            raise ValueError("encoder needs at least one layer")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model {self.d_model} must be divisible by n_heads {self.n_heads}"
            )
        if self.max_len < 3:
            raise ValueError("max_len must be at least 3")
        if self.vocab_size < 5:
            raise ValueError("vocab_size must cover the special tokens")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass
class LayerStates:
    """Hidden states of one forward pass: embedding output plus each layer."""

    states: tuple[Tensor, ...]
    mask: np.ndarray

    @property
    def n_layers(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True)
class ExtractionStrategy:
    """Selects position-0 rows from a set of layers and combines them.

    ``combine`` is "concat" (output dim = d * n_selected, bottom-to-top
    order) or "average" (elementwise mean, output dim = d).
    """

    combine: str
    layers: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.combine not in ("concat", "average"):
            raise ValueError(f"unknown combine mode {self.combine!r}")
        if not self.layers:
            raise ValueError("strategy must select at least one layer")
        ordered = tuple(sorted(set(self.layers)))
        if ordered != self.layers:
            object.__setattr__(self, "layers", ordered)
        if self.layers[0] < 1:
            raise ValueError("layer indices are 1-based")

    def validate(self, n_layers: int) -> None:
        if self.layers[-1] > n_layers:
            raise ValueError(
                f"strategy references layer {self.layers[-1]} but encoder has {n_layers}"
            )

    def output_dim(self, d_model: int) -> int:
        return d_model * len(self.layers) if self.combine == "concat" else d_model


def mid_layer(n_layers: int) -> int:
    return math.ceil(n_layers / 2)


def last_layer(n_layers: int) -> ExtractionStrategy:
    return ExtractionStrategy("concat", (n_layers,))


def concat_all(n_layers: int) -> ExtractionStrategy:
    return ExtractionStrategy("concat", tuple(range(1, n_layers + 1)))


def concat_last(k: int, n_layers: int) -> ExtractionStrategy:
    if k < 1:
        raise ValueError("k must be >= 1")
    return ExtractionStrategy("concat", tuple(range(max(1, n_layers - k + 1), n_layers + 1)))


def concat_set(layers: Iterable[int], n_layers: int) -> ExtractionStrategy:
    strategy = ExtractionStrategy("concat", tuple(layers))
    strategy.validate(n_layers)
    return strategy


def average_set(layers: Iterable[int], n_layers: int) -> ExtractionStrategy:
    strategy = ExtractionStrategy("average", tuple(layers))
    strategy.validate(n_layers)
    return strategy


_SELECTOR_RE = re.compile(r"^(last|first|mid)(\d+)?$")


def parse_strategy(text: str, n_layers: int) -> ExtractionStrategy:
    """Parse a strategy string against a given layer count.

    Grammar: ``selector(+selector)*[:avg]`` where a selector is ``last``,
    ``first``, ``mid``, ``all``, one of those with a span count (``last4``,
    ``first2``, ``mid2``), or an explicit 1-based layer index. Spans grow
    upward from ``first``/``mid`` and downward from ``last``, clamped to the
    valid range. The default combiner concatenates; ``:avg`` averages.
    Examples: ``last``, ``last4``, ``last+first``, ``last2+mid2``,
    ``last4:avg``, ``1+12``.
    """
    spec = text.strip().lower()
    combine = "concat"
    if spec.endswith(":avg"):
        combine = "average"
        spec = spec[: -len(":avg")]
    elif spec.endswith(":concat"):
        spec = spec[: -len(":concat")]
    if not spec:
        raise ValueError(f"empty strategy string {text!r}")

    selected: set[int] = set()
    for selector in spec.split("+"):
        selector = selector.strip()
        if selector == "all":
            selected.update(range(1, n_layers + 1))
            continue
        if selector.isdigit():
            index = int(selector)
            if not 1 <= index <= n_layers:
                raise ValueError(f"layer index {index} outside [1, {n_layers}]")
            selected.add(index)
            continue
        match = _SELECTOR_RE.match(selector)
        if match is None:
            raise ValueError(f"cannot parse strategy selector {selector!r}")
        anchor, span_s = match.groups()
        span = int(span_s) if span_s else 1
        if span < 1:
            raise ValueError(f"selector span must be >= 1 in {selector!r}")
        if anchor == "last":
            lo, hi = n_layers - span + 1, n_layers
        elif anchor == "first":
            lo, hi = 1, span
        else:  # mid
            lo, hi = mid_layer(n_layers), mid_layer(n_layers) + span - 1
        selected.update(range(max(1, lo), min(n_layers, hi) + 1))

    strategy = ExtractionStrategy(combine, tuple(sorted(selected)))
    strategy.validate(n_layers)
    return strategy


#: The eight single-encoder pooling presets benchmarked by the toolkit.
SINGLE_STRATEGY_NAMES = (
    "last",
    "all",
    "last4",
    "last2",
    "last2+first2",
    "last+first",
    "last2+mid2",
    "last+mid",
)


def strategy_catalog(n_layers: int) -> dict[str, ExtractionStrategy]:
    return {name: parse_strategy(name, n_layers) for name in SINGLE_STRATEGY_NAMES}


# ---------------------------------------------------------------------------
# Encoder model
# ---------------------------------------------------------------------------

def _init_matrix(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.normal(0.0, 0.02, size=shape)


class EncoderModel:
    """Post-norm transformer encoder tracking all per-layer hidden states."""

    def __init__(self, config: EncoderConfig, seed: int = 0, prefix: str = "encoder"):
        self.config = config
        self.prefix = prefix
        rng = np.random.default_rng([seed, len(prefix)] + [ord(c) for c in prefix])
        d, ffn = config.d_model, config.ffn_dim
        self._params: list[Parameter] = []

        def param(name: str, data: np.ndarray) -> Parameter:
            p = Parameter(f"{prefix}.{name}", data)
            self._params.append(p)
            return p

        self.tok_emb = param("tok_emb", _init_matrix(rng, config.vocab_size, d))
        self.pos_emb = param("pos_emb", _init_matrix(rng, config.max_len, d))
        self.emb_gain = param("emb_gain", np.ones(d))
        self.emb_bias = param("emb_bias", np.zeros(d))
        self.layers: list[dict[str, Parameter]] = []
        for i in range(config.n_layers):
            layer = {
                "attn_q_w": param(f"layers.{i}.attn_q_w", _init_matrix(rng, d, d)),
                "attn_q_b": param(f"layers.{i}.attn_q_b", np.zeros(d)),
                "attn_k_w": param(f"layers.{i}.attn_k_w", _init_matrix(rng, d, d)),
                "attn_k_b": param(f"layers.{i}.attn_k_b", np.zeros(d)),
                "attn_v_w": param(f"layers.{i}.attn_v_w", _init_matrix(rng, d, d)),
                "attn_v_b": param(f"layers.{i}.attn_v_b", np.zeros(d)),
                "attn_o_w": param(f"layers.{i}.attn_o_w", _init_matrix(rng, d, d)),
                "attn_o_b": param(f"layers.{i}.attn_o_b", np.zeros(d)),
                "ln1_gain": param(f"layers.{i}.ln1_gain", np.ones(d)),
                "ln1_bias": param(f"layers.{i}.ln1_bias", np.zeros(d)),
                "ffn_w1": param(f"layers.{i}.ffn_w1", _init_matrix(rng, d, ffn)),
                "ffn_b1": param(f"layers.{i}.ffn_b1", np.zeros(ffn)),
                "ffn_w2": param(f"layers.{i}.ffn_w2", _init_matrix(rng, ffn, d)),
                "ffn_b2": param(f"layers.{i}.ffn_b2", np.zeros(d)),
                "ln2_gain": param(f"layers.{i}.ln2_gain", np.ones(d)),
                "ln2_bias": param(f"layers.{i}.ln2_bias", np.zeros(d)),
            }
            self.layers.append(layer)

    def parameters(self) -> list[Parameter]:
        return list(self._params)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self._params}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for p in self._params:
            if p.name not in arrays:
                raise ValueError(f"missing array {p.name!r} in state")
            if arrays[p.name].shape != p.data.shape:
                raise ValueError(f"shape mismatch for {p.name!r}")
            p.value.data = np.array(arrays[p.name], dtype=np.float64)

    # forward ---------------------------------------------------------------

    def _attention(self, hidden: Tensor, layer: dict[str, Parameter],
                   attn_bias: np.ndarray, rng: np.random.Generator | None) -> Tensor:
        cfg = self.config
        batch, seq_len, d = hidden.shape
        heads, head_dim = cfg.n_heads, d // cfg.n_heads

        def project(w: Parameter, b: Parameter) -> Tensor:
            proj = ad.matmul(hidden, w.value) + b.value
            proj = ad.reshape(proj, (batch, seq_len, heads, head_dim))
            return ad.swap_axes(proj, 1, 2)  # (batch, heads, seq, head_dim)

        queries = project(layer["attn_q_w"], layer["attn_q_b"])
        keys = project(layer["attn_k_w"], layer["attn_k_b"])
        values = project(layer["attn_v_w"], layer["attn_v_b"])

        scores = ad.matmul(queries, ad.swap_axes(keys, 2, 3)) * (1.0 / math.sqrt(head_dim))
        scores = scores + Tensor(attn_bias)
        weights = ad.softmax(scores, axis=-1)
        weights = ad.dropout(weights, cfg.dropout, rng)
        context = ad.matmul(weights, values)  # (batch, heads, seq, head_dim)
        context = ad.reshape(ad.swap_axes(context, 1, 2), (batch, seq_len, d))
        return ad.matmul(context, layer["attn_o_w"].value) + layer["attn_o_b"].value

    def forward(self, ids: np.ndarray, mask: np.ndarray,
                rng: np.random.Generator | None = None) -> list[Tensor]:
        """Batched forward pass; returns L+1 hidden-state tensors (B, T, d).

        ``rng`` drives dropout; pass None for deterministic evaluation mode.
        """
        cfg = self.config
        ids = np.asarray(ids, dtype=np.int64)
        mask = np.asarray(mask, dtype=np.int64)
        if ids.ndim != 2 or ids.shape[1] != cfg.max_len:
            raise ValueError(
                f"ids must have shape (batch, {cfg.max_len}), got {ids.shape}"
            )
        if mask.shape != ids.shape:
            raise ValueError("mask shape must match ids shape")
        if ids.min() < 0 or ids.max() >= cfg.vocab_size:
            raise ValueError("token id out of vocabulary range")

        hidden = ad.embedding(self.tok_emb.value, ids) + self.pos_emb.value
        hidden = ad.layer_norm(hidden, self.emb_gain.value, self.emb_bias.value)
        hidden = ad.dropout(hidden, cfg.dropout, rng)
        states = [hidden]

        # additive bias: 0 on real tokens, a large negative on [PAD] keys
        attn_bias = (1.0 - mask)[:, None, None, :] * ATTENTION_MASK_BIAS
        for layer in self.layers:
            attended = self._attention(hidden, layer, attn_bias, rng)
            attended = ad.dropout(attended, cfg.dropout, rng)
            hidden = ad.layer_norm(
                hidden + attended, layer["ln1_gain"].value, layer["ln1_bias"].value
            )
            ffn = ad.matmul(ad.gelu(ad.matmul(hidden, layer["ffn_w1"].value) + layer["ffn_b1"].value),
                            layer["ffn_w2"].value) + layer["ffn_b2"].value
            ffn = ad.dropout(ffn, cfg.dropout, rng)
            hidden = ad.layer_norm(
                hidden + ffn, layer["ln2_gain"].value, layer["ln2_bias"].value
            )
            states.append(hidden)
        return states


def encode_sequence(tokens: TokenSequence, model: EncoderModel) -> LayerStates:
    """Run one framed sequence through the encoder in evaluation mode."""
    cfg = model.config
    if len(tokens) != cfg.max_len:
        raise ValueError(f"sequence length {len(tokens)} != configured max_len {cfg.max_len}")
    ids = np.array([tokens.ids], dtype=np.int64)
    mask = np.array([tokens.attention_mask], dtype=np.int64)
    states = model.forward(ids, mask, rng=None)
    squeezed = tuple(state[0] for state in states)  # (T, d) views with grad
    return LayerStates(squeezed, mask[0])


def pooled_rows(states: Sequence[Tensor], strategy: ExtractionStrategy) -> Tensor:
    """Combine position-0 rows of the selected layers (works batched or not).

    ``states`` is the full L+1 list including the embedding output at index 0;
    strategy indices address transformer layers 1..L.
    """
    n_layers = len(states) - 1
    strategy.validate(n_layers)
    rows = [states[index][..., 0, :] for index in strategy.layers]
    if strategy.combine == "concat":
        return ad.concat(rows, axis=-1)
    total = rows[0]
    for row in rows[1:]:
        total = total + row
    return total * (1.0 / len(rows))


def extract_pooled(states: LayerStates, strategy: ExtractionStrategy) -> Tensor:
    """Pooled embedding of one encoded sequence (differentiable)."""
    return pooled_rows(states.states, strategy)
