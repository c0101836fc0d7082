"""Jit-compiled convolution kernels.

The im2col gather and the col2im scatter are ``@njit(parallel=True)``
loops (parallel across samples, so every output element has exactly one
writer and results are deterministic at any thread count); the contraction
itself goes through ``np.dot`` (BLAS). Thin python wrappers do the padding
and reshapes.
"""

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def _gather(xp, kh, kw, stride, Ho, Wo):
    N, Hp, Wp, Ci = xp.shape
    K = kh * kw * Ci
    cols = np.empty((N * Ho * Wo, K), xp.dtype)
    for n in prange(N):
        for ho in range(Ho):
            row0 = (n * Ho + ho) * Wo
            hi0 = ho * stride
            for wo in range(Wo):
                row = row0 + wo
                wi0 = wo * stride
                k = 0
                for r in range(kh):
                    for c in range(kw):
                        xv = xp[n, hi0 + r, wi0 + c]
                        for ci in range(Ci):
                            cols[row, k] = xv[ci]
                            k += 1
    return cols


@njit(parallel=True, cache=True)
def _scatter(gcols, N, Hp, Wp, Ci, kh, kw, stride, Ho, Wo):
    gxp = np.zeros((N, Hp, Wp, Ci), gcols.dtype)
    for n in prange(N):
        for ho in range(Ho):
            row0 = (n * Ho + ho) * Wo
            hi0 = ho * stride
            for wo in range(Wo):
                row = row0 + wo
                wi0 = wo * stride
                k = 0
                for r in range(kh):
                    for c in range(kw):
                        gv = gxp[n, hi0 + r, wi0 + c]
                        for ci in range(Ci):
                            gv[ci] += gcols[row, k]
                            k += 1
    return gxp


def _out_size(size, k, stride, pad):
    return (size + 2 * pad - k) // stride + 1


def _padded(x, pad):
    if pad:
        return np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    return np.ascontiguousarray(x)


def conv2d(x, w, stride=1, pad=0):
    N, H, W, Ci = x.shape
    kh, kw, _, Co = w.shape
    Ho = _out_size(H, kh, stride, pad)
    Wo = _out_size(W, kw, stride, pad)
    cols = _gather(_padded(x, pad), kh, kw, stride, Ho, Wo)
    y = cols @ np.ascontiguousarray(w.reshape(-1, Co))
    return y.reshape(N, Ho, Wo, Co)


def conv2d_backward_weight(x, gy, stride, pad, khw):
    kh, kw = khw
    N, H, W, Ci = x.shape
    _, Ho, Wo, Co = gy.shape
    cols = _gather(_padded(x, pad), kh, kw, stride, Ho, Wo)
    gw = cols.T @ gy.reshape(-1, Co)
    return np.ascontiguousarray(gw).reshape(kh, kw, Ci, Co)


def conv2d_backward_data(gy, w, stride, pad, in_hw):
    H, W = in_hw
    N, Ho, Wo, Co = gy.shape
    kh, kw, Ci, _ = w.shape
    gcols = gy.reshape(-1, Co) @ np.ascontiguousarray(w.reshape(-1, Co).T)
    Hp, Wp = H + 2 * pad, W + 2 * pad
    gxp = _scatter(
        np.ascontiguousarray(gcols), N, Hp, Wp, Ci, kh, kw, stride, Ho, Wo
    )
    if pad:
        return np.ascontiguousarray(gxp[:, pad : pad + H, pad : pad + W])
    return gxp
