"""AdamW update rules, freezing, and the linear learning-rate schedule."""

import numpy as np
import pytest

from tweetinform.autodiff import Tensor, backward
from tweetinform import autodiff as ad
from tweetinform.optim import AdamW, Parameter, linear_decay, set_trainable


def make_param(name="w", data=None):
    return Parameter(name, np.array([1.0]) if data is None else np.asarray(data, float))


class TestAdamW:
    def test_zero_grad_zero_decay_is_fixed_point(self):
        param = make_param()
        optimizer = AdamW([param], weight_decay=0.0)
        before = param.data.copy()
        optimizer.step(lr=0.1)
        np.testing.assert_array_equal(param.data, before)

    def test_decay_only_path_is_exact(self):
        # zero gradients with decay: w <- w * (1 - lr * wd), the decoupling signature
        param = make_param(data=[2.0, -3.0])
        optimizer = AdamW([param], weight_decay=0.01)
        optimizer.step(lr=0.1)
        np.testing.assert_allclose(param.data, np.array([2.0, -3.0]) * (1 - 0.1 * 0.01),
                                   rtol=0, atol=0)

    def test_single_step_hand_value(self):
        # w=1, g=1, defaults: m_hat = v_hat = 1 after bias correction, so the
        # update is lr / (1 + eps) and w lands at 1 - 0.1 / (1 + 1e-8)
        param = make_param(data=[1.0])
        param.value.grad = np.array([1.0])
        optimizer = AdamW([param], weight_decay=0.0)
        optimizer.step(lr=0.1)
        expected = 1.0 - 0.1 / (1.0 + 1e-8)
        assert param.data[0] == pytest.approx(expected, abs=1e-15)
        assert param.data[0] == pytest.approx(0.9, abs=1e-8)

    def test_frozen_parameter_bit_identical(self):
        param = make_param(data=[1.0, 2.0])
        param.trainable = False
        optimizer = AdamW([param], weight_decay=0.5)
        before = param.data.tobytes()
        param.value.grad = np.array([5.0, 5.0])  # even with a stale grad set
        optimizer.step(lr=1.0)
        assert param.data.tobytes() == before

    def test_non_finite_grad_names_parameter(self):
        param = make_param(name="clf.0.weight")
        param.value.grad = np.array([np.nan])
        optimizer = AdamW([param], weight_decay=0.0)
        with pytest.raises(FloatingPointError, match="clf.0.weight"):
            optimizer.step(lr=0.1)

    def test_negative_lr_rejected(self):
        optimizer = AdamW([make_param()])
        with pytest.raises(ValueError, match="learning rate"):
            optimizer.step(lr=-0.1)

    def test_descends_a_quadratic(self):
        param = make_param(data=[3.0])
        optimizer = AdamW([param], weight_decay=0.0)
        for _ in range(400):
            optimizer.zero_grad()
            loss = ad.reduce_sum(param.value * param.value)
            backward(loss)
            optimizer.step(lr=0.05)
        assert abs(param.data[0]) < 1e-2


class TestParameter:
    def test_grad_defaults_to_zeros(self):
        param = make_param(data=[1.0, 2.0, 3.0])
        np.testing.assert_array_equal(param.grad, np.zeros(3))

    def test_freezing_detaches_from_graph(self):
        param = make_param(data=[1.0, 2.0])
        param.trainable = False
        out = ad.reduce_sum(param.value * 2.0)
        assert out.requires_grad is False

    def test_set_trainable_round_trip(self):
        params = [make_param(name=f"p{i}") for i in range(3)]
        set_trainable(params, False)
        assert all(not p.trainable for p in params)
        set_trainable(params, True)
        assert all(p.trainable for p in params)


class TestLinearDecay:
    def test_endpoints(self):
        assert linear_decay(0, 10, 5e-4) == 5e-4
        assert linear_decay(10, 10, 5e-4) == 0.0

    def test_midpoint(self):
        assert linear_decay(5, 10, 1.0) == pytest.approx(0.5)

    def test_step_beyond_total_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            linear_decay(11, 10, 1.0)
        with pytest.raises(ValueError, match="outside"):
            linear_decay(-1, 10, 1.0)

    def test_total_steps_validation(self):
        with pytest.raises(ValueError, match="total_steps"):
            linear_decay(0, 0, 1.0)
