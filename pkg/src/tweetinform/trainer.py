"""Classification head, two-phase training loop, and model persistence.

Phase 1 trains only the classification block with encoder parameters frozen
(frozen values stay byte-identical); phase 2 fine-tunes everything. Each
phase runs its own linear learning-rate decay over that phase's total step
count and a fresh optimizer. Validation F1 on the INFORMATIVE class is
computed after every epoch and the best checkpoint across both phases is
returned, earlier epochs winning ties.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt_io
from .autodiff import Tensor, backward, no_grad
from .bpe import MergeTable, encode, merge_table_digest
from .corpus import ClassLabel, LabeledCorpus
from .encoder import EncoderConfig, EncoderModel, ExtractionStrategy, pooled_rows
from .ensemble import PredictionVector, classify
from .metrics import f1_informative
from .optim import AdamW, Parameter, linear_decay, set_trainable

logger = logging.getLogger(__name__)


class ClassificationBlock:
    """Stack of affine layers with a GELU between them; final output dim 2."""

    def __init__(self, in_dim: int, depth: int = 2, hidden: int | None = None,
                 out_dim: int = 2, seed: int = 0, prefix: str = "clf"):
        if depth < 1:
            raise ValueError("classification block needs at least one layer")
        hidden = in_dim if hidden is None else hidden
        widths = [in_dim] + [hidden] * (depth - 1) + [out_dim]
        rng = np.random.default_rng([seed, 104729])
        self._params: list[Parameter] = []
        self.weights: list[tuple[Parameter, Parameter]] = []
        for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
            w = Parameter(f"{prefix}.{i}.weight", rng.normal(0.0, 0.02, size=(fan_in, fan_out)))
            b = Parameter(f"{prefix}.{i}.bias", np.zeros(fan_out))
            self._params.extend([w, b])
            self.weights.append((w, b))
        self.in_dim = in_dim
        self.depth = depth
        self.hidden = hidden

    def parameters(self) -> list[Parameter]:
        return list(self._params)

    def __call__(self, x: Tensor) -> Tensor:
        out = x
        for i, (w, b) in enumerate(self.weights):
            out = ad.matmul(out, w.value) + b.value
            if i < len(self.weights) - 1:
                out = ad.gelu(out)
        return out


class TextModel(Protocol):
    """What the training loop needs from a classifier model."""

    tokenizer: MergeTable

    def logits(self, texts: Sequence[str], rng: np.random.Generator | None = None) -> Tensor: ...
    def parameters(self) -> list[Parameter]: ...
    def encoder_parameters(self) -> list[Parameter]: ...
    def classifier_parameters(self) -> list[Parameter]: ...
    def state_arrays(self) -> dict[str, np.ndarray]: ...
    def load_state(self, arrays: dict[str, np.ndarray]) -> None: ...
    def config_snapshot(self) -> dict: ...


def batch_encode(texts: Sequence[str], tokenizer: MergeTable,
                 max_len: int) -> tuple[np.ndarray, np.ndarray]:
    sequences = [encode(text, tokenizer, max_len) for text in texts]
    ids = np.array([seq.ids for seq in sequences], dtype=np.int64)
    mask = np.array([seq.attention_mask for seq in sequences], dtype=np.int64)
    return ids, mask


class SingleEncoderClassifier:
    """One encoder, one pooling strategy, one classification block."""

    kind = "single"

    def __init__(self, tokenizer: MergeTable, config: EncoderConfig,
                 strategy: ExtractionStrategy, clf_depth: int = 2,
                 clf_hidden: int | None = None, seed: int = 0):
        if config.vocab_size != tokenizer.vocab_size:
            raise ValueError(
                f"config vocab_size {config.vocab_size} != tokenizer vocab "
                f"{tokenizer.vocab_size}"
            )
        strategy.validate(config.n_layers)
        self.tokenizer = tokenizer
        self.config = config
        self.strategy = strategy
        self.seed = seed
        self.encoder = EncoderModel(config, seed=seed, prefix="encoder")
        self.clf = ClassificationBlock(
            strategy.output_dim(config.d_model), depth=clf_depth,
            hidden=clf_hidden, seed=seed,
        )

    def logits(self, texts: Sequence[str], rng: np.random.Generator | None = None) -> Tensor:
        ids, mask = batch_encode(texts, self.tokenizer, self.config.max_len)
        states = self.encoder.forward(ids, mask, rng)
        return self.clf(pooled_rows(states, self.strategy))

    def parameters(self) -> list[Parameter]:
        return self.encoder.parameters() + self.clf.parameters()

    def encoder_parameters(self) -> list[Parameter]:
        return self.encoder.parameters()

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
        return {
            "model": self.kind,
            "seed": self.seed,
            "encoder": _encoder_config_dict(self.config),
            "strategy": {"combine": self.strategy.combine, "layers": list(self.strategy.layers)},
            "clf": {"depth": self.clf.depth, "hidden": self.clf.hidden},
            "tokenizer_digest": merge_table_digest(self.tokenizer),
        }


def _encoder_config_dict(config: EncoderConfig) -> dict:
    return {
        "vocab_size": config.vocab_size,
        "n_layers": config.n_layers,
        "d_model": config.d_model,
        "n_heads": config.n_heads,
        "ffn_dim": config.ffn_dim,
        "max_len": config.max_len,
        "dropout": config.dropout,
    }


# ---------------------------------------------------------------------------
# Training plans and checkpoints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhasePlan:
    lr0: float
    epochs: int

    def __post_init__(self) -> None:
        if self.lr0 <= 0:
            raise ValueError("initial learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("each phase needs at least one epoch")


@dataclass(frozen=True)
class TrainPlan:
    """Defaults follow the two-phase recipe: 5e-4 for 12 frozen-encoder
    epochs, then 4e-5 for 6 full fine-tuning epochs."""

    phase1: PhasePlan = field(default_factory=lambda: PhasePlan(5e-4, 12))
    phase2: PhasePlan = field(default_factory=lambda: PhasePlan(4e-5, 6))
    batch_size: int = 16
    seed: int = 0
    weight_decay: float = 0.01

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class Checkpoint:
    arrays: dict[str, np.ndarray]
    config: dict
    f1: float
    epoch: int
    phase: int
    history: dict = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        meta = {"f1": self.f1, "epoch": self.epoch, "phase": self.phase,
                "history": self.history}
        ckpt_io.save_arrays(path, self.arrays, config=self.config, meta=meta)

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        arrays, config, meta = ckpt_io.load_arrays(path)
        return cls(arrays, config, meta.get("f1", 0.0), meta.get("epoch", 0),
                   meta.get("phase", 0), meta.get("history", {}))


@dataclass
class PhaseResult:
    best_arrays: dict[str, np.ndarray]
    best_f1: float
    best_epoch: int
    f1_history: list[float]
    lr_history: list[float]


def evaluate_f1(model: TextModel, corpus: LabeledCorpus, batch_size: int = 32) -> float:
    preds = predict(model, corpus.texts(), batch_size=batch_size)
    labels = [classify(p) for p in preds]
    score, _ = f1_informative(labels, corpus.labels())
    return score


def train_phase(
    model: TextModel,
    train: LabeledCorpus,
    valid: LabeledCorpus,
    phase: PhasePlan,
    *,
    batch_size: int = 16,
    seed: int = 0,
    phase_index: int = 1,
    freeze_encoder: bool = False,
    weight_decay: float = 0.01,
) -> PhaseResult:
    """Run one training phase with per-phase linear learning-rate decay."""
    texts = train.texts()
    labels = np.array([int(label) for label in train.labels()], dtype=np.int64)
    n = len(texts)
    if n == 0:
        raise ValueError("empty training corpus")

    set_trainable(model.encoder_parameters(), not freeze_encoder)
    set_trainable(model.classifier_parameters(), True)

    steps_per_epoch = math.ceil(n / batch_size)
    total_steps = phase.epochs * steps_per_epoch
    optimizer = AdamW(model.parameters(), weight_decay=weight_decay)

    best_f1 = -1.0
    best_epoch = -1
    best_arrays: dict[str, np.ndarray] = {}
    f1_history: list[float] = []
    lr_history: list[float] = []
    step = 0
    for epoch in range(phase.epochs):
        order = np.random.default_rng([seed, phase_index, epoch]).permutation(n)
        for start in range(0, n, batch_size):
            chosen = order[start : start + batch_size]
            batch_texts = [texts[i] for i in chosen]
            batch_labels = labels[chosen]
            lr = linear_decay(step, total_steps, phase.lr0)
            lr_history.append(lr)
            rng = np.random.default_rng([seed, phase_index, step, 2718])
            loss = ad.cross_entropy(model.logits(batch_texts, rng), batch_labels)
            if not np.isfinite(loss.data):
                raise RuntimeError(
                    f"non-finite loss at phase {phase_index} epoch {epoch} step {step}"
                )
            optimizer.zero_grad()
            backward(loss)
            optimizer.step(lr)
            step += 1
        val_f1 = evaluate_f1(model, valid, batch_size=max(batch_size, 32))
        f1_history.append(val_f1)
        logger.info("phase %d epoch %d: validation F1 %.4f", phase_index, epoch, val_f1)
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_arrays = model.state_arrays()

    return PhaseResult(best_arrays, best_f1, best_epoch, f1_history, lr_history)


def train_two_phase(
    model: TextModel,
    train: LabeledCorpus,
    valid: LabeledCorpus,
    plan: TrainPlan | None = None,
) -> Checkpoint:
    """Frozen-encoder phase then full fine-tuning; returns the best checkpoint.

    The model object is left loaded with the returned (best) parameters.
    """
    plan = plan or TrainPlan()
    result1 = train_phase(
        model, train, valid, plan.phase1,
        batch_size=plan.batch_size, seed=plan.seed, phase_index=1,
        freeze_encoder=True, weight_decay=plan.weight_decay,
    )
    result2 = train_phase(
        model, train, valid, plan.phase2,
        batch_size=plan.batch_size, seed=plan.seed, phase_index=2,
        freeze_encoder=False, weight_decay=plan.weight_decay,
    )
    if result2.best_f1 > result1.best_f1:
        winner, phase = result2, 2
    else:
        winner, phase = result1, 1  # ties keep the earlier checkpoint
    model.load_state(winner.best_arrays)
    history = {
        "phase1_f1": result1.f1_history,
        "phase2_f1": result2.f1_history,
        "phase1_lr": result1.lr_history,
        "phase2_lr": result2.lr_history,
    }
    return Checkpoint(
        arrays=winner.best_arrays,
        config=model.config_snapshot(),
        f1=winner.best_f1,
        epoch=winner.best_epoch,
        phase=phase,
        history=history,
    )


# ---------------------------------------------------------------------------
# Prediction and model reconstruction
# ---------------------------------------------------------------------------

def predict(
    model: TextModel | Checkpoint,
    texts: Sequence[str],
    tokenizer: MergeTable | None = None,
    batch_size: int = 32,
) -> list[PredictionVector]:
    """Evaluation-mode softmax predictions, order preserved."""
    if isinstance(model, Checkpoint):
        if tokenizer is None:
            raise ValueError("predicting from a checkpoint requires the tokenizer")
        model = build_classifier(model, tokenizer)
    out: list[PredictionVector] = []
    with no_grad():
        for start in range(0, len(texts), batch_size):
            chunk = list(texts[start : start + batch_size])
            probs = ad.softmax(model.logits(chunk, rng=None), axis=-1).data
            out.extend(PredictionVector(float(row[0]), float(row[1])) for row in probs)
    return out


def build_classifier(source: Checkpoint | dict, tokenizer: MergeTable) -> TextModel:
    """Rebuild a classifier from a checkpoint (or bare config snapshot)."""
    if isinstance(source, Checkpoint):
        config, arrays = source.config, source.arrays
    else:
        config, arrays = source, None
    expected = config.get("tokenizer_digest")
    if expected is not None and expected != merge_table_digest(tokenizer):
        raise ValueError(
            "vocab mismatch: checkpoint was trained with a different tokenizer"
        )
    kind = config.get("model")
    enc_cfg = EncoderConfig(**config["encoder"])
    clf_cfg = config.get("clf", {})
    if kind == "single":
        strategy = ExtractionStrategy(
            config["strategy"]["combine"], tuple(config["strategy"]["layers"])
        )
        model: TextModel = SingleEncoderClassifier(
            tokenizer, enc_cfg, strategy,
            clf_depth=clf_cfg.get("depth", 2), clf_hidden=clf_cfg.get("hidden"),
            seed=config.get("seed", 0),
        )
    elif kind == "global_local":
        from .global_local import GlobalLocalConfig, GlobalLocalModel

        gl_cfg = GlobalLocalConfig(
            encoder=enc_cfg,
            global_strategy=ExtractionStrategy(
                config["global_strategy"]["combine"], tuple(config["global_strategy"]["layers"])
            ),
            head_strategy=ExtractionStrategy(
                config["head_strategy"]["combine"], tuple(config["head_strategy"]["layers"])
            ),
            tail_strategy=ExtractionStrategy(
                config["tail_strategy"]["combine"], tuple(config["tail_strategy"]["layers"])
            ),
            head_fraction=config.get("head_fraction", 0.5),
        )
        model = GlobalLocalModel(
            tokenizer, gl_cfg,
            clf_depth=clf_cfg.get("depth", 2), clf_hidden=clf_cfg.get("hidden"),
            seed=config.get("seed", 0),
        )
    else:
        raise ValueError(f"unknown model kind {kind!r} in checkpoint config")
    if arrays is not None:
        model.load_state(arrays)
    return model


def load_classifier(path: str | Path, tokenizer: MergeTable) -> tuple[TextModel, Checkpoint]:
    checkpoint = Checkpoint.load(path)
    return build_classifier(checkpoint, tokenizer), checkpoint
