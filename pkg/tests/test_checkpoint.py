"""Named-array container round trips and determinism."""

import numpy as np
import pytest

from tweetinform.checkpoint import load_arrays, save_arrays


class TestContainer:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {
            "enc.weight": rng.normal(size=(4, 3)),
            "enc.bias": rng.normal(size=(3,)),
            "steps": np.arange(5, dtype=np.int64),
        }
        path = tmp_path / "model.ckpt"
        save_arrays(path, arrays, config={"model": "single"}, meta={"f1": 0.5})
        loaded, config, meta = load_arrays(path)
        assert set(loaded) == set(arrays)
        for name in arrays:
            np.testing.assert_array_equal(loaded[name], arrays[name])
            assert loaded[name].dtype == arrays[name].dtype
        assert config == {"model": "single"}
        assert meta == {"f1": 0.5}

    def test_serialization_is_deterministic(self, tmp_path):
        arrays = {"b": np.ones(3), "a": np.zeros((2, 2))}
        first = tmp_path / "one.ckpt"
        second = tmp_path / "two.ckpt"
        save_arrays(first, arrays, config={"x": 1})
        save_arrays(second, dict(reversed(list(arrays.items()))), config={"x": 1})
        assert first.read_bytes() == second.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            load_arrays(path)

    def test_unsupported_dtype_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="dtype"):
            save_arrays(tmp_path / "x.ckpt", {"a": np.array(["text"])})

    def test_float32_supported(self, tmp_path):
        path = tmp_path / "f32.ckpt"
        arr = np.linspace(0, 1, 7, dtype=np.float32)
        save_arrays(path, {"a": arr})
        loaded, _, _ = load_arrays(path)
        np.testing.assert_array_equal(loaded["a"], arr)
        assert loaded["a"].dtype == np.float32
