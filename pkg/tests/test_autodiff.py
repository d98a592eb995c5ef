"""
Unit tests for the tensor / tape core and its primitives.
"""
import numpy as np
import pytest

from anchorkit import autodiff as ad
from anchorkit.autodiff import Rng, Tape, Tensor, backward, grad_check, paused
from anchorkit.errors import NumericError, ShapeError, TapeError
from anchorkit.training import mse_loss


def _weighted(out: Tensor, seed: int) -> Tensor:
    """Scalar <out, w> with fixed random w so no gradient cancels by symmetry."""
    w = np.random.default_rng(seed).normal(size=out.shape)
    return ad.reduce_sum(ad.mul(out, w))


UNARY = {
    "square": (ad.square, (-1.0, 1.0)),
    "sqrt": (ad.sqrt, (0.5, 2.0)),
    "exp": (ad.exp, (-1.0, 1.0)),
    "log": (ad.log, (0.5, 2.0)),
    "sigmoid": (ad.sigmoid, (-3.0, 3.0)),
    "softplus": (ad.softplus, (-3.0, 3.0)),
    "power": (lambda x: ad.power(x, -0.5), (0.5, 2.0)),
    "neg": (ad.neg, (-1.0, 1.0)),
    "mean_axis": (lambda x: ad.reduce_mean(x, axis=1, keepdims=True), (-1.0, 1.0)),
    "transpose": (lambda x: ad.transpose(x, (1, 0)), (-1.0, 1.0)),
    "reshape": (lambda x: ad.reshape(x, (-1,)), (-1.0, 1.0)),
}


@pytest.mark.parametrize("name", sorted(UNARY))
@pytest.mark.parametrize("seed", range(10))
def test_unary_ops_pass_grad_check(name, seed):
    """Every elementwise / shape primitive matches central differences."""
    fn, (lo, hi) = UNARY[name]
    x = Tensor(np.random.default_rng(seed).uniform(lo, hi, size=(3, 4)))
    assert grad_check(lambda t: _weighted(fn(t), seed), x) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_binary_ops_pass_grad_check(seed):
    """add/sub/mul/div/matmul/concat/prelu w.r.t. each operand."""
    rng = np.random.default_rng(seed)
    other = Tensor(rng.uniform(0.5, 2.0, size=(3, 4)))
    mat = Tensor(rng.normal(size=(4, 2)))
    slope = Tensor(rng.uniform(0.1, 0.4, size=(4,)))
    x = Tensor(rng.normal(size=(3, 4)))
    for fn in (
        lambda t: ad.add(t, other),
        lambda t: ad.sub(other, t),
        lambda t: ad.mul(t, other),
        lambda t: ad.div(t, other),
        lambda t: ad.div(other, ad.add(ad.square(t), 1.0)),
        lambda t: ad.matmul(t, mat),
        lambda t: ad.concat([t, other], axis=0),
        lambda t: ad.prelu(ad.transpose(t, (1, 0)), slope, axis=0),
    ):
        assert grad_check(lambda t: _weighted(fn(t), seed), x) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_conv_ops_pass_grad_check(seed):
    """conv2d, conv_transpose2d and avg_pool2d w.r.t. input and kernel."""
    rng = np.random.default_rng(seed)
    x = Tensor(rng.normal(size=(2, 2, 6, 6)))
    k = Tensor(rng.normal(size=(3, 2, 3, 3)))
    tk = Tensor(rng.normal(size=(2, 3, 5, 5)))
    b = Tensor(rng.normal(size=(3,)))
    assert grad_check(lambda t: _weighted(ad.conv2d(t, k, b, stride=2, pad=1), seed), x) < 1e-4
    assert grad_check(lambda t: _weighted(ad.conv2d(x, t, b, stride=1, pad=1), seed), k) < 1e-4
    assert grad_check(lambda t: _weighted(ad.conv_transpose2d(t, tk, b, stride=2, pad=2, output_padding=1), seed),
                      x) < 1e-4
    assert grad_check(lambda t: _weighted(ad.conv_transpose2d(x, t, b, stride=2, pad=2, output_padding=1), seed),
                      tk) < 1e-4
    assert grad_check(lambda t: _weighted(ad.avg_pool2d(t, 2), seed), x) < 1e-4


def test_conv_transpose_doubles_spatial_size():
    """Stride-2 5x5 transpose conv with output_padding 1 maps 4x4 to 8x8."""
    x = Tensor(np.ones((1, 2, 4, 4)))
    out = ad.conv_transpose2d(x, np.zeros((2, 3, 5, 5)), np.zeros(3), stride=2, pad=2, output_padding=1)
    assert out.shape == (1, 3, 8, 8)


def test_conv_transpose_is_adjoint_of_conv():
    """<conv(x), y> == <x, conv_transpose(y)> for a shared kernel."""
    rng = np.random.default_rng(4)
    kernel = rng.normal(size=(3, 2, 5, 5))
    x = rng.normal(size=(1, 2, 8, 8))
    y = rng.normal(size=(1, 3, 4, 4))
    fwd = ad.conv2d(x, kernel, np.zeros(3), stride=2, pad=2).data
    adj = ad.conv_transpose2d(y, kernel, np.zeros(2), stride=2, pad=2, output_padding=1).data
    assert fwd.shape == y.shape and adj.shape == x.shape
    assert abs(np.sum(fwd * y) - np.sum(x * adj)) < 1e-10


def test_reused_operand_accumulates_gradient():
    """d/dx (x*x + x) = 2x + 1."""
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    with Tape() as tape:
        loss = ad.reduce_sum(ad.add(ad.mul(x, x), x))
    grads = backward(loss, tape)
    np.testing.assert_allclose(grads.of(x), [3.0, -3.0, 7.0])
    np.testing.assert_allclose(x.grad, [3.0, -3.0, 7.0])


def test_full_reduction_backward_is_scalar():
    """A full reduction stays 0-d, so it can be scaled and backpropagated."""
    x = Tensor(np.array([0.1, -0.4, 0.7]), requires_grad=True)
    with Tape() as tape:
        total = ad.reduce_sum(ad.exp(x))
        loss = ad.mul(total, -0.5)
    assert total.shape == () and loss.shape == ()
    grads = backward(loss, tape)
    np.testing.assert_allclose(grads.of(x), -0.5 * np.exp(x.data))
    assert Tensor(3.0).shape == ()


def test_mse_backward_on_image_batch():
    rng = np.random.default_rng(6)
    target = Tensor(rng.uniform(size=(2, 3, 4, 4)))
    x = Tensor(rng.uniform(size=(2, 3, 4, 4)), requires_grad=True)
    with Tape() as tape:
        loss = mse_loss(target, x)
    grads = backward(loss, tape)
    assert loss.shape == ()
    np.testing.assert_allclose(grads.of(x), 2.0 * (x.data - target.data) / x.size, rtol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_backward_is_linear_in_the_loss(seed):
    """grad(a*L1 + b*L2) == a*grad(L1) + b*grad(L2)."""
    rng = np.random.default_rng(seed)
    x = Tensor(rng.uniform(0.5, 2.0, size=(3, 4)), requires_grad=True)
    alpha, beta = rng.normal(size=2)

    def first():
        return _weighted(ad.sqrt(x), seed)

    def second():
        return ad.reduce_mean(ad.square(ad.sigmoid(x)))

    def grad_of(fn):
        with Tape() as tape:
            loss = fn()
        return backward(loss, tape).of(x)

    combined = grad_of(lambda: ad.add(ad.mul(first(), alpha), ad.mul(second(), beta)))
    np.testing.assert_allclose(combined, alpha * grad_of(first) + beta * grad_of(second), rtol=0, atol=1e-12)


def test_add_broadcast_reduces_gradient():
    a = Tensor(np.zeros((2, 3)), requires_grad=True)
    b = Tensor(np.zeros(3), requires_grad=True)
    with Tape() as tape:
        loss = ad.reduce_sum(ad.add(a, b))
    grads = backward(loss, tape)
    np.testing.assert_allclose(grads.of(b), [2.0, 2.0, 2.0])
    np.testing.assert_allclose(grads.of(a), np.ones((2, 3)))


def test_stop_gradient_blocks_flow():
    x = Tensor(np.array([2.0]), requires_grad=True)
    with Tape() as tape:
        loss = ad.reduce_sum(ad.add(ad.mul(ad.stop_gradient(x), x), 0.0))
    grads = backward(loss, tape)
    np.testing.assert_allclose(grads.of(x), [2.0])


def test_ops_outside_tape_are_not_recorded():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        with paused():
            ad.square(x)
        assert len(tape) == 0
        ad.square(x)
        assert len(tape) == 1
    ad.square(x)
    assert len(tape) == 1


def test_backward_rejects_non_scalar_and_detached_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = ad.square(x)
    with pytest.raises(TapeError):
        backward(y, tape)
    detached = ad.reduce_sum(ad.square(x))
    with pytest.raises(TapeError):
        backward(detached, tape)


def test_invalid_operands_raise():
    with pytest.raises(ShapeError):
        ad.add(np.ones((2, 3)), np.ones(4))
    with pytest.raises(NumericError):
        ad.div(np.ones(2), np.array([1.0, 0.0]))
    with pytest.raises(NumericError):
        ad.sqrt(np.array([-1.0]))
    with pytest.raises(ShapeError):
        ad.conv2d(np.ones((1, 2, 4, 4)), np.ones((3, 1, 3, 3)), np.zeros(3))


def test_rng_streams_are_keyed_not_sequential():
    """Same key path gives the same stream; siblings differ."""
    a = Rng(11).child("epoch", 3).normal(5)
    b = Rng(11).child("epoch", 3).normal(5)
    c = Rng(11).child("epoch", 4).normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert Rng(11).child("snr", 4.0).choice([1, 2, 3]) == Rng(11).child("snr", 4.0).choice([1, 2, 3])
    with pytest.raises(ValueError):
        Rng(-1)
