"""Minimal layer stack with explicit forward/backward passes.

Activations are NHWC ``[N, H, W, C]`` (video inputs fold time into the
batch axis, ``N = B*T``). Every layer caches what its backward needs during
forward; ``backward`` consumes that cache once and accumulates parameter
gradients (``+=``), so two loss terms can be backpropagated into the same
parameters before an optimizer step. Gradients are exact — the test suite
checks every layer against central finite differences in float64.
"""

import numpy as np

from . import backend

# When set to a list, every forward records min |pre-activation| of each
# rectifier here. Used by the finite-difference checker to reject model/
# input draws whose activations sit on a kink (FD is wrong there).
_prerelu_audit = None


def set_prerelu_audit(sink):
    global _prerelu_audit
    _prerelu_audit = sink


def _audit(x):
    if _prerelu_audit is not None:
        _prerelu_audit.append(float(np.abs(x).min()))


class Param:
    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = value
        self.grad = np.zeros_like(value)


class Layer:
    """Base class: stateless by default, subclasses add params/caches."""

    def params(self):
        return [p for _, p in self.named_params()]

    def named_params(self):
        out = []
        for name in getattr(self, "_pnames", ()):
            out.append((name, getattr(self, name)))
        for cname, child in getattr(self, "_children", ()):
            for pname, p in child.named_params():
                out.append((f"{cname}.{pname}", p))
        return out

    def zero_grads(self):
        for p in self.params():
            p.grad[...] = 0.0

    def forward(self, x, train=True):
        raise NotImplementedError

    def backward(self, gy):
        raise NotImplementedError

    def __call__(self, x, train=True):
        return self.forward(x, train=train)


def he_normal(rng, shape, fan_in, dtype):
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


class Conv2d(Layer):
    def __init__(self, cin, cout, k, stride=1, pad=0, bias=True, rng=None,
                 dtype=np.float32):
        self.k, self.stride, self.pad = k, stride, pad
        self.w = Param(he_normal(rng, (k, k, cin, cout), k * k * cin, dtype))
        self.b = Param(np.zeros(cout, dtype)) if bias else None
        self._pnames = ("w", "b") if bias else ("w",)

    def forward(self, x, train=True):
        self._x = x
        y = backend.conv2d(x, self.w.value, self.stride, self.pad)
        if self.b is not None:
            y += self.b.value
        return y

    def backward(self, gy):
        x = self._x
        self._x = None
        if self.b is not None:
            self.b.grad += gy.sum(axis=(0, 1, 2))
        self.w.grad += backend.conv2d_backward_weight(
            x, gy, self.stride, self.pad, (self.k, self.k)
        )
        return backend.conv2d_backward_data(
            gy, self.w.value, self.stride, self.pad, x.shape[1:3]
        )


class Linear(Layer):
    def __init__(self, din, dout, bias=True, rng=None, dtype=np.float32):
        self.w = Param(he_normal(rng, (din, dout), din, dtype))
        self.b = Param(np.zeros(dout, dtype)) if bias else None
        self._pnames = ("w", "b") if bias else ("w",)

    def forward(self, x, train=True):
        self._x = x
        y = x @ self.w.value
        if self.b is not None:
            y += self.b.value
        return y

    def backward(self, gy):
        x = self._x
        self._x = None
        self.w.grad += x.T @ gy
        if self.b is not None:
            self.b.grad += gy.sum(axis=0)
        return gy @ self.w.value.T


class ReLU(Layer):
    def forward(self, x, train=True):
        _audit(x)
        self._mask = x > 0
        return x * self._mask

    def backward(self, gy):
        m = self._mask
        self._mask = None
        return gy * m


class GlobalAvgPool(Layer):
    """[N, H, W, C] -> [N, C]."""

    def forward(self, x, train=True):
        self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, gy):
        n, h, w, c = self._shape
        g = np.broadcast_to(gy[:, None, None, :] / (h * w), self._shape)
        return np.ascontiguousarray(g)


class AvgPool2d(Layer):
    """Non-overlapping k x k average pooling; H and W must divide by k."""

    def __init__(self, k):
        self.k = k

    def forward(self, x, train=True):
        n, h, w, c = x.shape
        k = self.k
        if h % k or w % k:
            raise ValueError(f"pool size {k} does not divide map {h}x{w}")
        self._shape = x.shape
        return x.reshape(n, h // k, k, w // k, k, c).mean(axis=(2, 4))

    def backward(self, gy):
        n, h, w, c = self._shape
        k = self.k
        g = np.broadcast_to(
            gy[:, :, None, :, None, :] / (k * k),
            (n, h // k, k, w // k, k, c),
        )
        return np.ascontiguousarray(g).reshape(n, h, w, c)


class Flatten(Layer):
    """[N, H, W, C] -> [N, H*W*C]."""

    def forward(self, x, train=True):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gy):
        return gy.reshape(self._shape)


class UpsampleNearest2x(Layer):
    def forward(self, x, train=True):
        return x.repeat(2, axis=1).repeat(2, axis=2)

    def backward(self, gy):
        n, h2, w2, c = gy.shape
        return gy.reshape(n, h2 // 2, 2, w2 // 2, 2, c).sum(axis=(2, 4))


class BatchNorm2d(Layer):
    def __init__(self, c, momentum=0.9, eps=1e-5, dtype=np.float32):
        self.gamma = Param(np.ones(c, dtype))
        self.beta = Param(np.zeros(c, dtype))
        self._pnames = ("gamma", "beta")
        self.momentum, self.eps = momentum, eps
        self.running_mean = np.zeros(c, dtype)
        self.running_var = np.ones(c, dtype)

    def forward(self, x, train=True):
        if train:
            mean = x.mean(axis=(0, 1, 2))
            var = x.var(axis=(0, 1, 2))
            m = self.momentum
            self.running_mean = m * self.running_mean + (1 - m) * mean
            self.running_var = m * self.running_var + (1 - m) * var
        else:
            mean, var = self.running_mean, self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv
        self._cache = (xhat, inv, train, x.shape)
        return xhat * self.gamma.value + self.beta.value

    def backward(self, gy):
        xhat, inv, train, shape = self._cache
        self._cache = None
        self.gamma.grad += (gy * xhat).sum(axis=(0, 1, 2))
        self.beta.grad += gy.sum(axis=(0, 1, 2))
        gxhat = gy * self.gamma.value
        if not train:
            return gxhat * inv
        m = shape[0] * shape[1] * shape[2]
        return (inv / m) * (
            m * gxhat
            - gxhat.sum(axis=(0, 1, 2))
            - xhat * (gxhat * xhat).sum(axis=(0, 1, 2))
        )


class TemporalConv(Layer):
    """Time-axis convolution with kernel size 3, zero-padded along time.

    Acts on ``[B*T, H, W, C]`` by unfolding the leading axis into
    ``[B, T, ...]``. The three ``[C, C]`` taps are initialized so the layer
    starts as the identity over time: the center tap is the identity
    matrix, the side taps are zero. Output shape equals input shape.
    """

    def __init__(self, c, t, dtype=np.float32):
        self.t = t
        w = np.zeros((3, c, c), dtype)
        w[1] = np.eye(c, dtype=dtype)
        self.w = Param(w)
        self._pnames = ("w",)

    def reset_identity(self):
        c = self.w.value.shape[1]
        self.w.value[...] = 0.0
        self.w.value[1] = np.eye(c, dtype=self.w.value.dtype)

    def forward(self, x, train=True):
        n, h, wd, c = x.shape
        t = self.t
        b = n // t
        xv = x.reshape(b, t, h * wd, c)
        self._xv = xv
        w = self.w.value
        y = xv @ w[1]
        y[:, 1:] += xv[:, :-1] @ w[0]
        y[:, :-1] += xv[:, 1:] @ w[2]
        return y.reshape(n, h, wd, c)

    def backward(self, gy):
        xv = self._xv
        self._xv = None
        b, t, p, c = xv.shape
        gv = gy.reshape(b, t, p, c)
        w = self.w.value
        x2 = xv.reshape(-1, c)
        # taps: y[t] = x[t-1] @ w0 + x[t] @ w1 + x[t+1] @ w2
        self.w.grad[1] += x2.T @ gv.reshape(-1, c)
        self.w.grad[0] += xv[:, :-1].reshape(-1, c).T @ gv[:, 1:].reshape(-1, c)
        self.w.grad[2] += xv[:, 1:].reshape(-1, c).T @ gv[:, :-1].reshape(-1, c)
        gx = gv @ w[1].T
        gx[:, :-1] += gv[:, 1:] @ w[0].T
        gx[:, 1:] += gv[:, :-1] @ w[2].T
        return np.ascontiguousarray(gx.reshape(b * t, -1)).reshape(
            b * t, *gy.shape[1:]
        )


class Sequential(Layer):
    def __init__(self, layers):
        self.layers = layers
        self._children = [(str(i), l) for i, l in enumerate(layers)]

    def forward(self, x, train=True):
        for l in self.layers:
            x = l.forward(x, train=train)
        return x

    def backward(self, gy):
        for l in reversed(self.layers):
            gy = l.backward(gy)
        return gy


class ResidualUnit(Layer):
    """relu(branch(x) + shortcut(x)); shortcut=None means identity."""

    def __init__(self, branch, shortcut=None):
        self.branch = branch
        self.shortcut = shortcut
        self._children = [("branch", branch)]
        if shortcut is not None:
            self._children.append(("shortcut", shortcut))

    def forward(self, x, train=True):
        y = self.branch.forward(x, train=train)
        s = x if self.shortcut is None else self.shortcut.forward(x, train=train)
        out = y + s
        _audit(out)
        self._mask = out > 0
        return out * self._mask

    def backward(self, gy):
        gy = gy * self._mask
        self._mask = None
        gx = self.branch.backward(gy)
        if self.shortcut is None:
            gx = gx + gy
        else:
            gx = gx + self.shortcut.backward(gy)
        return gx
