"""Kernel equivalence: both conv backends against a brute-force oracle."""

import numpy as np
import pytest

from modhall import backend

BACKENDS = ["numpy"] + (["numba"] if backend.numba_available() else [])


@pytest.fixture(autouse=True)
def restore_backend():
    yield
    backend.set_backend("auto")


def conv2d_loops(x, w, stride, pad):
    """Direct 6-loop convolution, NHWC in, [kh,kw,cin,cout] weights."""
    n, h, ww, cin = x.shape
    kh, kw, _, cout = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (ww + 2 * pad - kw) // stride + 1
    y = np.zeros((n, ho, wo, cout), dtype=x.dtype)
    for i in range(ho):
        for j in range(wo):
            patch = xp[:, i * stride:i * stride + kh, j * stride:j * stride + kw, :]
            y[:, i, j, :] = np.tensordot(patch, w, axes=([1, 2, 3], [0, 1, 2]))
    return y


CASES = [
    # (n, h, w, cin, cout, k, stride, pad)
    (2, 8, 8, 3, 4, 3, 1, 1),
    (2, 9, 7, 2, 3, 3, 2, 1),
    (1, 5, 5, 1, 2, 1, 1, 0),
    (3, 6, 6, 4, 2, 5, 1, 2),
    (2, 8, 8, 2, 2, 3, 2, 0),
]


@pytest.mark.parametrize("name", BACKENDS)
@pytest.mark.parametrize("case", CASES)
def test_conv2d_matches_loops(name, case):
    n, h, w_, cin, cout, k, stride, pad = case
    rng = np.random.default_rng(hash(case) % 2**31)
    x = rng.standard_normal((n, h, w_, cin))
    w = rng.standard_normal((k, k, cin, cout))
    backend.set_backend(name)
    got = backend.conv2d(x, w, stride, pad)
    want = conv2d_loops(x, w, stride, pad)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("name", BACKENDS)
@pytest.mark.parametrize("case", CASES)
def test_backward_kernels_match_finite_differences(name, case):
    n, h, w_, cin, cout, k, stride, pad = case
    rng = np.random.default_rng(hash(case) % 2**31)
    x = rng.standard_normal((n, h, w_, cin))
    w = rng.standard_normal((k, k, cin, cout))
    backend.set_backend(name)
    gy = rng.standard_normal(backend.conv2d(x, w, stride, pad).shape)

    def loss(x_, w_v):
        return float((backend.conv2d(x_, w_v, stride, pad) * gy).sum())

    gx = backend.conv2d_backward_data(gy, w, stride, pad, (h, w_))
    gw = backend.conv2d_backward_weight(x, gy, stride, pad, (k, k))

    # conv is linear in both arguments, so one-sided differences are exact
    # up to rounding; spot-check a handful of coordinates
    eps = 1e-6
    flat_idx = rng.choice(x.size, size=min(12, x.size), replace=False)
    for i in flat_idx:
        xp = x.copy().ravel()
        xp[i] += eps
        num = (loss(xp.reshape(x.shape), w) - loss(x, w)) / eps
        assert abs(num - gx.ravel()[i]) < 1e-4
    flat_idx = rng.choice(w.size, size=min(12, w.size), replace=False)
    for i in flat_idx:
        wp = w.copy().ravel()
        wp[i] += eps
        num = (loss(x, wp.reshape(w.shape)) - loss(x, w)) / eps
        assert abs(num - gw.ravel()[i]) < 1e-4


@pytest.mark.skipif(not backend.numba_available(), reason="numba not installed")
@pytest.mark.parametrize("case", CASES)
def test_backends_agree(case):
    n, h, w_, cin, cout, k, stride, pad = case
    rng = np.random.default_rng(1)
    x = rng.standard_normal((n, h, w_, cin))
    w = rng.standard_normal((k, k, cin, cout))
    outs = {}
    for name in ("numpy", "numba"):
        backend.set_backend(name)
        y = backend.conv2d(x, w, stride, pad)
        gy = np.ones_like(y)
        outs[name] = (
            y,
            backend.conv2d_backward_data(gy, w, stride, pad, (h, w_)),
            backend.conv2d_backward_weight(x, gy, stride, pad, (k, k)),
        )
    for a, b in zip(outs["numpy"], outs["numba"]):
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)


def test_float32_path_stays_float32():
    x = np.ones((1, 4, 4, 2), dtype=np.float32)
    w = np.ones((3, 3, 2, 2), dtype=np.float32)
    for name in BACKENDS:
        backend.set_backend(name)
        assert backend.conv2d(x, w, 1, 1).dtype == np.float32


def test_unknown_backend_rejected():
    with pytest.raises(RuntimeError, match="unknown MODHALL_BACKEND"):
        backend.set_backend("cuda")


def test_set_backend_reports_active():
    assert backend.set_backend("numpy") == "numpy"
    assert backend.active_backend() == "numpy"
