"""Gradient checks for every primitive and the backward-pass contracts."""

import numpy as np
import pytest

from helpers import finite_difference, max_relative_error
from tweetinform import autodiff as ad
from tweetinform.autodiff import Tensor, backward, no_grad

TOLERANCE = 1e-5


def check_gradients(build_loss, *arrays, h=1e-6):
    """Compare autodiff gradients of build_loss(*tensors) to central
    finite differences for each input array."""
    tensors = [Tensor(arr, requires_grad=True) for arr in arrays]
    loss = build_loss(*tensors)
    backward(loss)
    for tensor, arr in zip(tensors, arrays):
        assert tensor.grad is not None, "missing gradient"
        analytic = tensor.grad

        def loss_value():
            with no_grad():
                plain = build_loss(*[Tensor(a) for a in arrays])
            return float(plain.data)

        numeric = finite_difference(loss_value, arr, h=h)
        err = max_relative_error(analytic, numeric)
        assert err < TOLERANCE, f"gradient mismatch: {err}"


def weighted_sum(tensor, seed=0):
    """Scalarize a tensor with fixed random weights so FD sees every output."""
    weights = np.random.default_rng(seed).normal(size=tensor.data.shape)
    return ad.reduce_sum(tensor * Tensor(weights))


RNG = np.random.default_rng(42)


class TestPrimitiveGradients:
    def test_add_broadcast(self):
        a = RNG.normal(size=(3, 4))
        b = RNG.normal(size=(4,))
        check_gradients(lambda x, y: weighted_sum(ad.add(x, y)), a, b)

    def test_mul_broadcast(self):
        a = RNG.normal(size=(3, 4))
        b = RNG.normal(size=(3, 1))
        check_gradients(lambda x, y: weighted_sum(ad.mul(x, y)), a, b)

    def test_matmul_plain(self):
        a = RNG.normal(size=(3, 4))
        b = RNG.normal(size=(4, 2))
        check_gradients(lambda x, y: weighted_sum(ad.matmul(x, y)), a, b)

    def test_matmul_batched_with_broadcast(self):
        a = RNG.normal(size=(2, 3, 4))
        b = RNG.normal(size=(4, 5))
        check_gradients(lambda x, y: weighted_sum(ad.matmul(x, y)), a, b)

    def test_gelu(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(lambda t: weighted_sum(ad.gelu(t)), x)

    def test_softmax_last_axis(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(lambda t: weighted_sum(ad.softmax(t, axis=-1)), x)

    def test_softmax_other_axis(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(lambda t: weighted_sum(ad.softmax(t, axis=0)), x)

    def test_layer_norm(self):
        x = RNG.normal(size=(3, 4))
        gain = RNG.normal(size=(4,)) + 1.0
        bias = RNG.normal(size=(4,))
        check_gradients(
            lambda t, g, b: weighted_sum(ad.layer_norm(t, g, b)), x, gain, bias
        )

    def test_dropout_with_fixed_mask(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(
            lambda t: weighted_sum(ad.dropout(t, 0.4, np.random.default_rng(7))), x
        )

    def test_cross_entropy(self):
        logits = RNG.normal(size=(3, 4))
        labels = np.array([0, 2, 3])
        check_gradients(lambda t: ad.cross_entropy(t, labels), logits)

    def test_embedding(self):
        table = RNG.normal(size=(6, 4))
        ids = np.array([[0, 5, 5], [2, 1, 0]])
        check_gradients(lambda t: weighted_sum(ad.embedding(t, ids)), table)

    def test_getitem(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(lambda t: weighted_sum(t[1:, ::2]), x)

    def test_concat(self):
        a = RNG.normal(size=(3, 2))
        b = RNG.normal(size=(3, 4))
        check_gradients(lambda x, y: weighted_sum(ad.concat([x, y], axis=-1)), a, b)

    def test_reduce_sum_axis(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(lambda t: weighted_sum(ad.reduce_sum(t, axis=0)), x)

    def test_reduce_mean_all(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(lambda t: ad.reduce_mean(t), x)

    def test_reshape_and_swap_axes(self):
        x = RNG.normal(size=(3, 4))
        check_gradients(
            lambda t: weighted_sum(ad.swap_axes(ad.reshape(t, (2, 2, 3)), 0, 2)), x
        )


class TestForwardValues:
    def test_softmax_symmetry(self):
        out = ad.softmax(Tensor(np.array([[0.0, 0.0]])), axis=-1)
        np.testing.assert_allclose(out.data, [[0.5, 0.5]])

    def test_softmax_rows_sum_to_one(self):
        x = Tensor(RNG.normal(size=(5, 7)) * 10)
        out = ad.softmax(x, axis=-1).data
        assert np.all(out >= 0)
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-9)

    def test_cross_entropy_vanishes_with_confidence(self):
        losses = []
        for scale in (1.0, 5.0, 20.0):
            logits = Tensor(np.array([[scale, -scale]]))
            losses.append(float(ad.cross_entropy(logits, np.array([0])).data))
        assert losses[0] > losses[1] > losses[2]
        assert losses[-1] < 1e-8

    def test_matmul_rejects_vectors(self):
        with pytest.raises(ValueError, match="ndim >= 2"):
            ad.matmul(Tensor(np.zeros(3)), Tensor(np.zeros((3, 2))))

    def test_cross_entropy_shape_errors(self):
        with pytest.raises(ValueError, match="batch"):
            ad.cross_entropy(Tensor(np.zeros((2, 2))), np.array([0, 1, 0]))

    def test_dropout_rate_validation(self):
        with pytest.raises(ValueError, match="rate"):
            ad.dropout(Tensor(np.zeros(3)), 1.0, np.random.default_rng(0))

    def test_dropout_eval_mode_is_identity(self):
        x = Tensor(RNG.normal(size=(4, 4)))
        assert ad.dropout(x, 0.5, None) is x


class TestBackwardContract:
    def test_sum_gives_ones(self):
        w = Tensor(RNG.normal(size=(3, 4)), requires_grad=True)
        backward(ad.reduce_sum(w))
        np.testing.assert_array_equal(w.grad, np.ones((3, 4)))

    def test_annihilated_branch_gives_zero(self):
        w = Tensor(RNG.normal(size=(3,)), requires_grad=True)
        loss = ad.reduce_sum(ad.gelu(w) * 0.0)
        backward(loss)
        np.testing.assert_array_equal(w.grad, np.zeros(3))

    def test_non_scalar_loss_rejected(self):
        w = Tensor(np.zeros((2, 2)), requires_grad=True)
        with pytest.raises(ValueError, match="scalar"):
            backward(w + 1.0)

    def test_gradients_accumulate_across_passes(self):
        w = Tensor(np.ones(3), requires_grad=True)
        backward(ad.reduce_sum(w))
        backward(ad.reduce_sum(w))
        np.testing.assert_array_equal(w.grad, 2.0 * np.ones(3))

    def test_two_layer_composite_matches_fd(self):
        w1 = RNG.normal(size=(4, 5))
        w2 = RNG.normal(size=(5, 2))
        x = RNG.normal(size=(3, 4))

        def loss_fn(a, b):
            hidden = ad.gelu(ad.matmul(Tensor(x), a))
            logits = ad.matmul(hidden, b)
            return ad.cross_entropy(logits, np.array([0, 1, 0]))

        tensors = [Tensor(w1, requires_grad=True), Tensor(w2, requires_grad=True)]
        backward(loss_fn(*tensors))
        for tensor, arr in zip(tensors, (w1, w2)):
            def value():
                with no_grad():
                    return float(loss_fn(Tensor(w1), Tensor(w2)).data)

            numeric = finite_difference(value, arr)
            assert max_relative_error(tensor.grad, numeric) < 1e-4

    def test_no_grad_disables_recording(self):
        w = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            out = ad.reduce_sum(w * 2.0)
        assert out.requires_grad is False
        assert out._parents == ()
