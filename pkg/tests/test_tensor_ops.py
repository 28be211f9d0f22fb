"""Forward semantics of the tensor ops: identities, hand values, error paths."""

import numpy as np
import pytest

from brainvis_forge.autodiff import (
    NonFiniteError,
    ShapeError,
    Tensor,
    concat,
    matmul,
    narrow,
    softmax,
    take,
)
from brainvis_forge.autodiff import ops


def test_matmul_identity():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 5))
    out = matmul(Tensor(np.eye(3)), Tensor(a))
    np.testing.assert_array_equal(out.data, a.astype(out.data.dtype))


def test_matmul_shape_error_names_op_and_shapes():
    with pytest.raises(ShapeError, match=r"matmul.*\(3, 4\).*\(5, 2\)"):
        matmul(Tensor(np.zeros((3, 4))), Tensor(np.zeros((5, 2))))


def test_softmax_uniform_on_zeros():
    out = softmax(Tensor(np.zeros(4, dtype=np.float64)))
    np.testing.assert_allclose(out.data, [0.25, 0.25, 0.25, 0.25], atol=1e-12)


def test_cross_entropy_uniform_is_log_classes():
    n = 660
    logits = Tensor(np.zeros((1, n), dtype=np.float64))
    onehot = np.zeros((1, n))
    onehot[0, 17] = 1.0
    loss = ops.cross_entropy(logits, Tensor(onehot))
    assert abs(loss.item() - np.log(660)) < 1e-6


def test_nonfinite_forward_is_hard_error():
    with pytest.raises(NonFiniteError, match="div"):
        Tensor(np.ones(3)) / Tensor(np.zeros(3))


def test_tensor_rejects_nan_input():
    with pytest.raises(NonFiniteError):
        Tensor(np.array([1.0, np.nan]))


def test_take_gathers_and_narrow_slices():
    x = Tensor(np.arange(12.0).reshape(3, 4))
    np.testing.assert_array_equal(take(x, np.array([2, 0]), axis=0).data, x.data[[2, 0]])
    np.testing.assert_array_equal(narrow(x, 1, 1, 2).data, x.data[:, 1:3])
    with pytest.raises(ShapeError):
        narrow(x, 1, 3, 2)


def test_concat_roundtrip_shapes():
    a, b = Tensor(np.ones((2, 3))), Tensor(np.zeros((2, 2)))
    out = concat([a, b], axis=1)
    assert out.shape == (2, 5)
    with pytest.raises(ShapeError):
        concat([a, Tensor(np.zeros((3, 2)))], axis=1)


def test_layer_norm_normalizes_last_axis():
    rng = np.random.default_rng(3)
    x = Tensor(np.asarray(rng.standard_normal((4, 7)) * 5 + 2, dtype=np.float64))
    out = ops.layer_norm(x, Tensor(np.ones(7)), Tensor(np.zeros(7)))
    np.testing.assert_allclose(out.data.mean(axis=-1), 0.0, atol=1e-7)
    np.testing.assert_allclose(out.data.std(axis=-1), 1.0, atol=1e-3)


def test_cosine_similarity_rejects_zero_norm():
    with pytest.raises(ValueError, match="zero-norm"):
        ops.cosine_similarity(Tensor(np.zeros(4)), Tensor(np.ones(4)))


def test_lstm_cell_zero_weights_give_zero_hidden():
    h, c = ops.lstm_cell(
        Tensor(np.ones((2, 3))),
        Tensor(np.zeros((2, 5))),
        Tensor(np.zeros((2, 5))),
        Tensor(np.zeros((3, 20))),
        Tensor(np.zeros((5, 20))),
        Tensor(np.zeros(20)),
    )
    np.testing.assert_array_equal(h.data, np.zeros((2, 5)))
    np.testing.assert_array_equal(c.data, np.zeros((2, 5)))


def test_mse_loss_hand_value():
    loss = ops.mse_loss(Tensor(np.array([0.0, 0.0, 0.0, 0.0])), Tensor(np.array([1.0, 0.0, 0.0, 0.0])))
    assert loss.item() == pytest.approx(0.25)


def test_attention_output_shape_and_batch():
    rng = np.random.default_rng(5)
    d, heads = 8, 2
    ws = [Tensor(rng.standard_normal((d, d)) * 0.3) for _ in range(4)]
    bs = [Tensor(np.zeros(d)) for _ in range(4)]
    x = Tensor(rng.standard_normal((2, 5, d)))
    out = ops.multi_head_attention(x, x, ws[0], bs[0], ws[1], bs[1], ws[2], bs[2], ws[3], bs[3], heads)
    assert out.shape == (2, 5, d)
