"""Convolution kernel backend selection.

The 2D convolutions are the hot loops of every training run. Two
interchangeable implementations are provided:

* ``numba_ops``  — jit-compiled gather/scatter kernels (``@njit`` with
  ``prange``); the im2col gather parallelizes across samples, the GEMM goes
  through BLAS. Faster even single-core at training shapes (see the
  ``benchmark`` CLI subcommand), at the price of a one-off compile.
* ``numpy_ops``  — pure numpy (stride-tricks im2col + BLAS matmul). No
  compilation cost, no dependency beyond numpy itself.

Selection is controlled by the ``MODHALL_BACKEND`` environment variable:
``numba``, ``numpy``, or ``auto`` (default). ``auto`` picks numba whenever
it imports cleanly, else numpy.

All kernels use NHWC layout: activations ``[N, H, W, C]``, weights
``[kh, kw, Cin, Cout]``. They are dtype-generic (float32 for training,
float64 for gradient checking).
"""

import os

from . import numpy_ops

try:
    from . import numba_ops

    _NUMBA_OK = True
except Exception:  # pragma: no cover - numba missing or broken install
    numba_ops = None
    _NUMBA_OK = False


def _resolve(name: str):
    name = (name or "auto").lower()
    if name == "numpy":
        return numpy_ops, "numpy"
    if name == "numba":
        if not _NUMBA_OK:
            raise RuntimeError(
                "MODHALL_BACKEND=numba requested but numba is not importable"
            )
        return numba_ops, "numba"
    if name == "auto":
        if _NUMBA_OK:
            return numba_ops, "numba"
        return numpy_ops, "numpy"
    raise RuntimeError(f"unknown MODHALL_BACKEND value: {name!r}")


_impl, _active = _resolve(os.environ.get("MODHALL_BACKEND", "auto"))


def active_backend() -> str:
    return _active


def set_backend(name: str) -> str:
    """Switch the kernel implementation at runtime. Returns the new name."""
    global _impl, _active
    _impl, _active = _resolve(name)
    return _active


def numba_available() -> bool:
    return _NUMBA_OK


def conv2d(x, w, stride=1, pad=0):
    return _impl.conv2d(x, w, stride, pad)


def conv2d_backward_data(gy, w, stride, pad, in_hw):
    return _impl.conv2d_backward_data(gy, w, stride, pad, in_hw)


def conv2d_backward_weight(x, gy, stride, pad, khw):
    return _impl.conv2d_backward_weight(x, gy, stride, pad, khw)
