"""Layers with hand-written backward passes, channels-last: (batch, length, channels).

Each layer keeps what it needs from ``forward`` to run ``backward`` and
exposes ``params``/``grads`` dicts keyed by the same names.
"""

from __future__ import annotations

import numpy as np

from .conv import (ShapeError, SpectralMask, conv1d_backward_cl, conv1d_cl, fft_conv1d_backward_cl, fft_conv1d_cl,
                   fft_length)


class Layer:
    params: dict
    grads: dict

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.training = True

    def forward(self, x):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError


class Conv1d(Layer):
    """'same' correlation layer; ``compression`` > 0 switches to the masked FFT route."""

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator, dtype=np.float32,
                 spectral: bool = False, compression: float = 0.0):
        super().__init__()
        bound = 1.0 / np.sqrt(c_in * k)
        self.params["w"] = rng.uniform(-bound, bound, size=(c_out, c_in, k)).astype(dtype)
        self.params["b"] = rng.uniform(-bound, bound, size=c_out).astype(dtype)
        self.k = k
        self.spectral = spectral or compression > 0
        self.compression = compression
        self._mask_cache: dict[int, SpectralMask] = {}
        self.need_dx = True

    def mask_for(self, length: int) -> SpectralMask:
        if length not in self._mask_cache:
            n = fft_length(length, self.k)
            self._mask_cache[length] = SpectralMask.for_rate(n, self.compression)
        return self._mask_cache[length]

    def forward(self, x):
        self._x = x
        w, b = self.params["w"], self.params["b"]
        if self.spectral:
            self._cache = {}
            return fft_conv1d_cl(x, w, self.mask_for(x.shape[1]), b, self._cache)
        return conv1d_cl(x, w, b)

    def backward(self, g):
        x, w = self._x, self.params["w"]
        if self.spectral:
            dx, dw, db = fft_conv1d_backward_cl(x, w, g, self.mask_for(x.shape[1]), self.need_dx, self._cache)
            self._cache = None
        else:
            dx, dw, db = conv1d_backward_cl(x, w, g, self.need_dx)
        self.grads["w"] = dw.astype(w.dtype, copy=False)
        self.grads["b"] = db.astype(w.dtype, copy=False)
        return dx


def _col_mean(x2: np.ndarray) -> np.ndarray:
    """Column means of a 2-d array as one GEMV, much faster than a strided reduce."""
    return np.ones(x2.shape[0], dtype=x2.dtype) @ x2 / x2.shape[0]


class BatchNorm1d(Layer):
    """Per-channel normalization over the batch and length axes.

    Running statistics are exponential averages of the batch mean and the
    biased batch variance, so feeding the same batch repeatedly converges
    to that batch's statistics.
    """

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1, dtype=np.float32):
        super().__init__()
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.eps = eps
        self.momentum = momentum
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def forward(self, x):
        if x.shape[0] == 0:
            raise ShapeError("batch norm on an empty batch")
        gamma, beta = self.params["gamma"], self.params["beta"]
        x2 = x.reshape(-1, x.shape[-1])
        if self.training:
            mean = _col_mean(x2)
            xc = x - mean
            var = _col_mean(np.square(xc).reshape(x2.shape))
            m = self.momentum
            self.running_mean = ((1 - m) * self.running_mean + m * mean).astype(self.running_mean.dtype)
            self.running_var = ((1 - m) * self.running_var + m * var).astype(self.running_var.dtype)
        else:
            mean, var = self.running_mean, self.running_var
            xc = x - mean
        inv = (1.0 / np.sqrt(var + self.eps)).astype(x.dtype, copy=False)
        xhat = xc
        xhat *= inv
        self._xhat, self._inv = xhat, inv
        return gamma * xhat + beta

    def backward(self, g):
        xhat, inv = self._xhat, self._inv
        gamma = self.params["gamma"]
        c = g.shape[-1]
        gsum = _col_mean(g.reshape(-1, c)) * (g.size // c)
        gxs = _col_mean((g * xhat).reshape(-1, c)) * (g.size // c)
        self.grads["gamma"], self.grads["beta"] = gxs, gsum
        if not self.training:
            return g * (gamma * inv)
        m = g.size // c
        # d/dx of gamma * xhat + beta, with the batch mean and variance depending on x
        return (gamma * inv / m) * (m * g - gsum - xhat * gxs)


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, g):
        return g * self._mask


class GlobalAvgPool(Layer):
    def forward(self, x):
        self._len = x.shape[1]
        return x.mean(axis=1)

    def backward(self, g):
        return np.broadcast_to((g / self._len)[:, None, :], (g.shape[0], self._len, g.shape[1]))


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        bound = 1.0 / np.sqrt(n_in)
        self.params["w"] = rng.uniform(-bound, bound, size=(n_in, n_out)).astype(dtype)
        self.params["b"] = np.zeros(n_out, dtype=dtype)

    def forward(self, x):
        if x.shape[1] != self.params["w"].shape[0]:
            raise ShapeError(f"dense expects width {self.params['w'].shape[0]}, got {x.shape[1]}")
        self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, g):
        self.grads["w"] = self._x.T @ g
        self.grads["b"] = g.sum(axis=0)
        return g @ self.params["w"].T


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    p = softmax(logits.astype(np.float64))
    n = len(labels)
    loss = -np.log(np.clip(p[np.arange(n), labels], 1e-300, None)).mean()
    g = p.copy()
    g[np.arange(n), labels] -= 1.0
    return float(loss), (g / n).astype(logits.dtype)
