"""Head/tail splitting and the three-encoder global-local model."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tweetinform import autodiff as ad
from tweetinform.bpe import train_bpe
from tweetinform.encoder import EncoderConfig, parse_strategy
from tweetinform.global_local import (
    MULTI_VIEW_PRESETS,
    GlobalLocalConfig,
    GlobalLocalModel,
    global_local_embed,
    split_head_tail,
)
from tweetinform.optim import AdamW
from tweetinform.autodiff import backward


class TestSplitHeadTail:
    def test_even_split(self):
        assert split_head_tail("a b c d") == ("a b", "c d")

    def test_ceil_split(self):
        assert split_head_tail("a b c") == ("a b", "c")

    def test_degenerate(self):
        assert split_head_tail("") == ("", "")
        assert split_head_tail("solo") == ("solo", "")

    def test_fraction_validation(self):
        with pytest.raises(ValueError, match="head_fraction"):
            split_head_tail("a b", head_fraction=1.0)

    @given(st.text(max_size=80))
    def test_word_multiset_preserved(self, text):
        head, tail = split_head_tail(text)
        assert head.split() + tail.split() == text.split()


@pytest.fixture(scope="module")
def table():
    return train_bpe(
        ["confirmed cases rising in the county", "funny cat does a mood"],
        vocab_size=80,
    )


def build_model(table, global_spec="last", head_spec="last", tail_spec="last",
                n_layers=2, d_model=8, seed=0):
    enc = EncoderConfig(vocab_size=table.vocab_size, n_layers=n_layers, d_model=d_model,
                        n_heads=2, ffn_dim=16, max_len=10, dropout=0.1)
    config = GlobalLocalConfig(
        encoder=enc,
        global_strategy=parse_strategy(global_spec, n_layers),
        head_strategy=parse_strategy(head_spec, n_layers),
        tail_strategy=parse_strategy(tail_spec, n_layers),
    )
    return GlobalLocalModel(table, config, seed=seed)


class TestGlobalLocalModel:
    def test_all_last_dim_is_three_d(self, table):
        model = build_model(table, "last", "last", "last", d_model=8)
        out = model.embed(["confirmed cases in the county"])
        assert out.shape == (1, 24)

    def test_best_config_dim_is_seven_d(self, table):
        # global last4 (4d) + head last+first (2d) + tail first (1d) = 7d
        model = build_model(table, "last4", "last+first", "first", n_layers=4)
        out = model.embed(["confirmed cases rising in the county today"])
        assert out.shape == (1, 7 * 8)

    def test_dim_formula_for_all_presets(self, table):
        for global_spec, head_spec, tail_spec in MULTI_VIEW_PRESETS:
            model = build_model(table, global_spec, head_spec, tail_spec, n_layers=4)
            expected = model.config.embedding_dim()
            assert model.embed(["some words here"]).shape == (1, expected)

    def test_eval_embedding_deterministic(self, table):
        model = build_model(table)
        text = "confirmed cases rising"
        one = global_local_embed(text, model)
        two = global_local_embed(text, model)
        assert one.data.tobytes() == two.data.tobytes()

    def test_encoders_do_not_share_parameters(self, table):
        model = build_model(table)
        names = [p.name for p in model.parameters()]
        assert len(names) == len(set(names))
        for view in ("global", "head", "tail"):
            assert any(name.startswith(f"{view}.") for name in names)
        assert any(name.startswith("clf.") for name in names)

    def test_gradients_reach_all_three_encoders(self, table):
        model = build_model(table)
        texts = ["confirmed cases rising in county", "funny cat mood today"]
        labels = np.array([1, 0])
        before = {p.name: p.data.copy() for p in model.parameters()}
        optimizer = AdamW(model.parameters(), weight_decay=0.0)
        loss = ad.cross_entropy(model.logits(texts, rng=np.random.default_rng(0)), labels)
        backward(loss)
        optimizer.step(lr=1e-3)
        for view in ("global", "head", "tail"):
            changed = any(
                not np.array_equal(before[p.name], p.data)
                for p in model.encoders[view].parameters()
            )
            assert changed, f"no parameter of the {view} encoder moved"

    def test_vocab_mismatch_rejected(self, table):
        other = train_bpe(["different text entirely"], vocab_size=40)
        enc = EncoderConfig(vocab_size=table.vocab_size, n_layers=2, d_model=8,
                            n_heads=2, ffn_dim=16, max_len=10)
        config = GlobalLocalConfig(
            encoder=enc,
            global_strategy=parse_strategy("last", 2),
            head_strategy=parse_strategy("last", 2),
            tail_strategy=parse_strategy("last", 2),
        )
        with pytest.raises(ValueError, match="vocab"):
            GlobalLocalModel(other, config)

    def test_strategy_validated_against_layers(self, table):
        enc = EncoderConfig(vocab_size=table.vocab_size, n_layers=2, d_model=8,
                            n_heads=2, ffn_dim=16, max_len=10)
        with pytest.raises(ValueError, match="layer"):
            GlobalLocalConfig(
                encoder=enc,
                global_strategy=parse_strategy("3", 4),
                head_strategy=parse_strategy("last", 2),
                tail_strategy=parse_strategy("last", 2),
            )
