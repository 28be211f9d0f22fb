"""Backward-pass contracts: seeding, accumulation, determinism, tape lifecycle."""

import numpy as np
import pytest

from brainvis_forge.autodiff import Tensor, active_tape, backward, no_grad, tsum
from brainvis_forge.autodiff.ops import mse_loss
from brainvis_forge.autodiff.tensor import mul


def test_backward_of_sum_is_ones():
    x = Tensor(np.random.default_rng(0).standard_normal((3, 4)), requires_grad=True)
    backward(tsum(x))
    np.testing.assert_array_equal(x.grad, np.ones((3, 4), dtype=x.data.dtype))


def test_backward_of_mse_at_minimum_is_zero():
    x0 = np.random.default_rng(1).standard_normal(5)
    x = Tensor(x0.copy(), requires_grad=True)
    backward(mse_loss(x, Tensor(x0)))
    np.testing.assert_array_equal(x.grad, np.zeros(5, dtype=x.data.dtype))


def test_non_scalar_loss_rejected():
    x = Tensor(np.ones(3), requires_grad=True)
    y = mul(x, 2.0)
    with pytest.raises(ValueError, match="scalar"):
        backward(y)
    active_tape().clear()


def test_empty_tape_rejected():
    with pytest.raises(RuntimeError, match="tape is empty"):
        backward(Tensor(np.array(1.0)))


def test_tape_cleared_after_backward():
    x = Tensor(np.ones(3), requires_grad=True)
    backward(tsum(mul(x, x)))
    assert len(active_tape()) == 0


def test_gradients_accumulate_across_backward_calls():
    x = Tensor(np.ones(3), requires_grad=True)
    backward(tsum(mul(x, 2.0)))
    first = x.grad.copy()
    backward(tsum(mul(x, 3.0)))
    np.testing.assert_allclose(x.grad, first + 3.0)


def test_gradient_additivity_sum_of_losses():
    rng = np.random.default_rng(7)
    base = rng.standard_normal((4, 4))

    def grads_of(fn):
        x = Tensor(base.copy(), requires_grad=True)
        backward(fn(x))
        return x.grad

    g1 = grads_of(lambda x: tsum(mul(x, x)))
    g2 = grads_of(lambda x: mse_loss(x, Tensor(np.zeros((4, 4)))))
    g_sum = grads_of(lambda x: tsum(mul(x, x)) + mse_loss(x, Tensor(np.zeros((4, 4)))))
    np.testing.assert_allclose(g_sum, g1 + g2, rtol=1e-6)


def test_no_grad_suppresses_recording():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = mul(x, 2.0)
    assert not y.requires_grad
    assert len(active_tape()) == 0


def test_shared_input_used_twice_accumulates():
    x = Tensor(np.array([3.0]), requires_grad=True)
    backward(tsum(mul(x, x)))  # d/dx x^2 = 2x
    np.testing.assert_allclose(x.grad, [6.0])


def test_determinism_bitwise():
    def run():
        rng = np.random.default_rng(42)
        x = Tensor(rng.standard_normal((6, 6)), requires_grad=True)
        w = Tensor(rng.standard_normal((6, 6)), requires_grad=True)
        from brainvis_forge.autodiff import matmul, softmax

        loss = tsum(softmax(matmul(x, w), axis=-1))
        backward(loss)
        return loss.item(), x.grad.copy(), w.grad.copy()

    l1, gx1, gw1 = run()
    l2, gx2, gw2 = run()
    assert l1 == l2
    np.testing.assert_array_equal(gx1, gx2)
    np.testing.assert_array_equal(gw1, gw2)
