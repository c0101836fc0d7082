import numpy as np
import pytest
from sklearn.metrics import log_loss

from modhall.losses import (cross_entropy, cross_entropy_index, log_softmax,
                            mse, softmax)


def test_cross_entropy_matches_sklearn(rng):
    logits = rng.standard_normal((12, 4))
    y = rng.integers(0, 4, 12)
    onehot = np.eye(4)[y]
    loss, _ = cross_entropy(logits, onehot)
    ref = log_loss(y, softmax(logits), labels=list(range(4)))
    assert loss == pytest.approx(ref, rel=1e-6)


def test_cross_entropy_index_equals_onehot_form(rng):
    logits = rng.standard_normal((6, 3))
    y = rng.integers(0, 3, 6)
    l1, g1 = cross_entropy_index(logits, y)
    l2, g2 = cross_entropy(logits, np.eye(3)[y])
    assert l1 == pytest.approx(l2)
    np.testing.assert_allclose(g1, g2)


def test_cross_entropy_gradient_finite_difference(rng):
    logits = rng.standard_normal((5, 3))
    targets = rng.dirichlet(np.ones(3), 5)  # soft targets allowed
    _, grad = cross_entropy(logits, targets)
    h = 1e-6
    num = np.empty_like(logits)
    for i in np.ndindex(logits.shape):
        lp = logits.copy()
        lp[i] += h
        lm = logits.copy()
        lm[i] -= h
        num[i] = (cross_entropy(lp, targets)[0] - cross_entropy(lm, targets)[0]) / (2 * h)
    np.testing.assert_allclose(grad, num, atol=1e-8)


def test_cross_entropy_grad_includes_batch_mean(rng):
    logits = rng.standard_normal((8, 4))
    y = np.eye(4)[rng.integers(0, 4, 8)]
    _, grad = cross_entropy(logits, y)
    # each row of the grad is softmax - target scaled by 1/N
    np.testing.assert_allclose(grad, (softmax(logits) - y) / 8, atol=1e-12)


def test_softmax_stable_at_large_logits():
    logits = np.array([[1000.0, 1000.0, -1000.0]])
    p = softmax(logits)
    assert np.all(np.isfinite(p))
    np.testing.assert_allclose(p[0, :2], [0.5, 0.5], atol=1e-9)
    l, _ = cross_entropy(logits, np.array([[1.0, 0.0, 0.0]]))
    assert np.isfinite(l)


def test_log_softmax_consistency(rng):
    logits = rng.standard_normal((4, 5))
    np.testing.assert_allclose(np.exp(log_softmax(logits)), softmax(logits))


def test_mse_value_and_gradient(rng):
    pred = rng.standard_normal((3, 4))
    tgt = rng.standard_normal((3, 4))
    loss, grad = mse(pred, tgt)
    assert loss == pytest.approx(np.mean((pred - tgt) ** 2))
    np.testing.assert_allclose(grad, 2 * (pred - tgt) / pred.size)


def test_mse_zero_at_identity(rng):
    x = rng.standard_normal((2, 2))
    loss, grad = mse(x, x.copy())
    assert loss == 0.0
    assert np.all(grad == 0)
