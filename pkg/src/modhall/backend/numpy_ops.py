"""Pure-numpy convolution kernels (im2col + BLAS matmul).

The backward-data pass is expressed as a dilated forward convolution with
the spatially flipped, channel-transposed kernel, so every pass stays a
single GEMM and no scatter-add is needed.
"""

import numpy as np


def _out_size(size, k, stride, pad):
    return (size + 2 * pad - k) // stride + 1


def _im2col(xp, kh, kw, stride, Ho, Wo):
    # xp: padded [N, Hp, Wp, C] -> cols [N*Ho*Wo, kh*kw*C]
    N, Hp, Wp, C = xp.shape
    s0, s1, s2, s3 = xp.strides
    cols = np.lib.stride_tricks.as_strided(
        xp,
        (N, Ho, Wo, kh, kw, C),
        (s0, s1 * stride, s2 * stride, s1, s2, s3),
    )
    return np.ascontiguousarray(cols).reshape(N * Ho * Wo, kh * kw * C)


def conv2d(x, w, stride=1, pad=0):
    N, H, W, Ci = x.shape
    kh, kw, _, Co = w.shape
    Ho = _out_size(H, kh, stride, pad)
    Wo = _out_size(W, kw, stride, pad)
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    cols = _im2col(xp, kh, kw, stride, Ho, Wo)
    y = cols @ w.reshape(-1, Co)
    return y.reshape(N, Ho, Wo, Co)


def conv2d_backward_weight(x, gy, stride, pad, khw):
    kh, kw = khw
    N, H, W, Ci = x.shape
    _, Ho, Wo, Co = gy.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    cols = _im2col(xp, kh, kw, stride, Ho, Wo)
    gw = cols.T @ gy.reshape(-1, Co)
    return gw.reshape(kh, kw, Ci, Co)


def conv2d_backward_data(gy, w, stride, pad, in_hw):
    H, W = in_hw
    N, Ho, Wo, Co = gy.shape
    kh, kw, Ci, _ = w.shape
    # dilate by the stride, then full-correlate with the flipped kernel
    if stride > 1:
        gyd = np.zeros(
            (N, (Ho - 1) * stride + 1, (Wo - 1) * stride + 1, Co), dtype=gy.dtype
        )
        gyd[:, ::stride, ::stride] = gy
    else:
        gyd = gy
    wt = np.ascontiguousarray(w[::-1, ::-1].transpose(0, 1, 3, 2))  # [kh,kw,Co,Ci]
    gp = np.pad(gyd, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)))
    gxp_core = conv2d(gp, wt, stride=1, pad=0)
    # gxp_core covers rows [0, (Ho-1)*stride + kh); remaining padded-input
    # rows receive no gradient
    Hp, Wp = H + 2 * pad, W + 2 * pad
    gxp = np.zeros((N, Hp, Wp, Ci), dtype=gy.dtype)
    ch, cw = gxp_core.shape[1], gxp_core.shape[2]
    gxp[:, :ch, :cw] = gxp_core
    return np.ascontiguousarray(gxp[:, pad : pad + H, pad : pad + W])
