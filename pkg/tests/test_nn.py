"""Finite-difference checks for every layer's backward pass (float64)."""

import numpy as np
import pytest

from modhall import nn
from modhall.evaluation import max_relative_error

F64 = np.float64


def fd_layer_check(layer, x, train=True, h=1e-6, tol=1e-6):
    """Compare analytic input and parameter grads against central FD.

    The scalar objective is sum(y * G) for a fixed random G, which makes
    d(obj)/dy = G and exercises the whole backward path.
    """
    rng = np.random.default_rng(7)
    g = rng.standard_normal(layer.forward(x, train=train).shape)

    def obj():
        return float((layer.forward(x, train=train) * g).sum())

    layer.forward(x, train=train)
    layer.zero_grads()
    gx = layer.backward(g.copy())

    # input gradient
    num_gx = np.empty_like(x)
    flat, nflat = x.ravel(), num_gx.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f1 = obj()
        flat[i] = orig - h
        f0 = obj()
        flat[i] = orig
        nflat[i] = (f1 - f0) / (2 * h)
    assert max_relative_error(gx, num_gx) < tol

    # parameter gradients
    for name, p in layer.named_params():
        ana = p.grad.copy()
        num = np.empty_like(ana)
        flat, nflat = p.value.ravel(), num.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f1 = obj()
            flat[i] = orig - h
            f0 = obj()
            flat[i] = orig
            nflat[i] = (f1 - f0) / (2 * h)
        assert max_relative_error(ana, num) < tol, name


@pytest.fixture
def x_img(rng):
    # offset from zero so no ReLU-style kink sits inside the FD interval
    return rng.standard_normal((2, 6, 6, 3)).astype(F64) * 0.7 + 0.05


def test_conv2d_grads(rng, x_img):
    layer = nn.Conv2d(3, 4, 3, stride=1, pad=1, rng=rng, dtype=F64)
    fd_layer_check(layer, x_img)


def test_conv2d_strided_no_bias_grads(rng, x_img):
    layer = nn.Conv2d(3, 2, 3, stride=2, pad=0, bias=False, rng=rng, dtype=F64)
    fd_layer_check(layer, x_img)


def test_linear_grads(rng):
    layer = nn.Linear(5, 4, rng=rng, dtype=F64)
    fd_layer_check(layer, rng.standard_normal((3, 5)))


def test_relu_grads(rng):
    x = rng.standard_normal((4, 7))
    x[np.abs(x) < 1e-3] = 0.5  # keep FD away from the kink
    fd_layer_check(nn.ReLU(), x)


def test_batchnorm_train_grads(rng, x_img):
    layer = nn.BatchNorm2d(3, dtype=F64)
    layer.gamma.value[...] = rng.uniform(0.5, 1.5, 3)
    layer.beta.value[...] = rng.uniform(-0.3, 0.3, 3)
    fd_layer_check(layer, x_img, tol=1e-5)


def test_batchnorm_eval_uses_running_stats(rng):
    layer = nn.BatchNorm2d(2, dtype=F64)
    x = rng.standard_normal((8, 4, 4, 2)) * 3 + 1
    layer.forward(x, train=True)
    y1 = layer.forward(np.zeros((2, 4, 4, 2)), train=False)
    y2 = layer.forward(np.ones((2, 4, 4, 2)), train=False)
    # eval output is an affine map of the input, frozen stats
    assert not np.allclose(y1, y2)
    assert np.allclose(y1, y1[0])


def test_avgpool_grads(rng, x_img):
    fd_layer_check(nn.AvgPool2d(2), x_img)


def test_global_avgpool_grads(rng, x_img):
    fd_layer_check(nn.GlobalAvgPool(), x_img)


def test_flatten_roundtrip(rng, x_img):
    layer = nn.Flatten()
    y = layer.forward(x_img)
    assert y.shape == (2, 6 * 6 * 3)
    gx = layer.backward(y.copy())
    assert gx.shape == x_img.shape
    np.testing.assert_array_equal(gx, x_img)


def test_upsample_grads(rng):
    x = rng.standard_normal((2, 3, 3, 2))
    layer = nn.UpsampleNearest2x()
    assert layer.forward(x).shape == (2, 6, 6, 2)
    fd_layer_check(layer, x)


def test_temporal_conv_identity_init(rng):
    layer = nn.TemporalConv(4, t=3, dtype=F64)
    x = rng.standard_normal((6, 2, 2, 4))  # [B*T] = 6 with T=3
    np.testing.assert_allclose(layer.forward(x), x, atol=1e-12)


def test_temporal_conv_grads(rng):
    layer = nn.TemporalConv(3, t=2, dtype=F64)
    layer.w.value[...] = rng.standard_normal((3, 3, 3)) * 0.3
    fd_layer_check(layer, rng.standard_normal((4, 2, 2, 3)))


def test_temporal_conv_reset_identity(rng):
    layer = nn.TemporalConv(3, t=2, dtype=F64)
    layer.w.value[...] = rng.standard_normal((3, 3, 3))
    layer.reset_identity()
    x = rng.standard_normal((4, 2, 2, 3))
    np.testing.assert_allclose(layer.forward(x), x, atol=1e-12)


def test_sequential_and_residual_grads(rng):
    branch = nn.Sequential([
        nn.Conv2d(2, 2, 3, pad=1, rng=rng, dtype=F64),
        nn.ReLU(),
        nn.Conv2d(2, 2, 3, pad=1, rng=rng, dtype=F64),
    ])
    layer = nn.ResidualUnit(branch)
    x = rng.standard_normal((2, 5, 5, 2)) + 0.1
    fd_layer_check(layer, x, tol=1e-5)


def test_residual_with_projection_shortcut(rng):
    branch = nn.Sequential([nn.Conv2d(2, 3, 3, stride=2, pad=1, rng=rng, dtype=F64)])
    short = nn.Conv2d(2, 3, 1, stride=2, pad=0, rng=rng, dtype=F64)
    layer = nn.ResidualUnit(branch, shortcut=short)
    fd_layer_check(layer, rng.standard_normal((2, 6, 6, 2)))


def test_grads_accumulate_across_backwards(rng):
    layer = nn.Linear(4, 3, rng=rng, dtype=F64)
    x = rng.standard_normal((5, 4))
    g = rng.standard_normal((5, 3))
    layer.zero_grads()
    layer.forward(x)
    layer.backward(g.copy())
    once = layer.w.grad.copy()
    layer.forward(x)
    layer.backward(g.copy())
    np.testing.assert_allclose(layer.w.grad, 2 * once)
    layer.zero_grads()
    assert np.all(layer.w.grad == 0)


def test_named_params_nested_names(rng):
    seq = nn.Sequential([
        nn.Conv2d(1, 2, 3, rng=rng),
        nn.BatchNorm2d(2),
    ])
    names = [n for n, _ in seq.named_params()]
    assert any(n.endswith(".w") for n in names)
    assert any("gamma" in n for n in names)
    assert len(names) == len(set(names))


def test_prerelu_audit_collects_margins(rng):
    sink = []
    nn.set_prerelu_audit(sink)
    try:
        layer = nn.ReLU()
        layer.forward(np.array([[0.4, -2.0, 1.5]]))
    finally:
        nn.set_prerelu_audit(None)
    assert sink and min(sink) == pytest.approx(0.4)
