"""1D cross-correlation ("convolution" in deep-learning usage), direct and spectral.

Public functions take (batch, channels, length) arrays and (out, in, kernel)
filters.  Both routes use 'same' zero padding with ``P = (K - 1) // 2`` on
the left, so ``out[s, f, t] = sum_c sum_k x[s, c, t + k - P] * w[f, c, k]``.

The ``*_cl`` kernels work channels-last, (batch, length, channels), which is
the layout the network uses internally: every tap becomes one contiguous GEMM
accumulated in place.  Thin inputs (few channels times taps) are unrolled into
columns first, since a GEMM with an inner dimension of 1 is all overhead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import blas

IM2COL_MAX = 32  # unroll into columns when channels * taps is at most this


class ShapeError(ValueError):
    pass


def _check(x: np.ndarray, w: np.ndarray, channel_axis: int) -> None:
    if x.ndim != 3 or w.ndim != 3:
        raise ShapeError(f"expected 3-d input and filters, got {x.shape} and {w.shape}")
    if x.shape[channel_axis] != w.shape[1]:
        raise ShapeError(f"filters expect {w.shape[1]} channels, input has {x.shape[channel_axis]}")


# ── direct route ──

def _padded_flat(x: np.ndarray, k: int) -> np.ndarray:
    s, length, c = x.shape
    left = (k - 1) // 2
    xp = np.zeros((s, length + k - 1, c), dtype=x.dtype)
    xp[:, left:left + length] = x
    return xp.reshape(-1, c)


def _gemm_acc(a: np.ndarray, b: np.ndarray, out: np.ndarray) -> None:
    """``out += a @ b`` for C-contiguous 2-d arrays, without a temporary."""
    gemm = {np.dtype(np.float32): blas.sgemm, np.dtype(np.float64): blas.dgemm}.get(out.dtype)
    if gemm is None or a.dtype != out.dtype or b.dtype != out.dtype or not (
            a.flags.c_contiguous and b.flags.c_contiguous and out.flags.c_contiguous):
        out += a @ b
        return
    # a C-order (m, n) array is the Fortran-order transpose, so compute out.T += b.T @ a.T
    gemm(1.0, b.T, a.T, beta=1.0, c=out.T, overwrite_c=1)


def _gemm_tn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a.T @ b`` for C-contiguous 2-d arrays of one float dtype."""
    gemm = {np.dtype(np.float32): blas.sgemm, np.dtype(np.float64): blas.dgemm}.get(a.dtype)
    if gemm is None or a.dtype != b.dtype or not (a.flags.c_contiguous and b.flags.c_contiguous):
        return a.T @ b
    return gemm(1.0, b.T, a.T, trans_b=1).T


def _columns(x: np.ndarray, k: int) -> np.ndarray:
    """(S*L, C*K) matrix of padded windows, channel-major like ``w.reshape(F, C*K)``."""
    s, length, c = x.shape
    left = (k - 1) // 2
    xp = np.zeros((s, length + k - 1, c), dtype=x.dtype)
    xp[:, left:left + length] = x
    return sliding_window_view(xp, k, axis=1).reshape(s * length, c * k)


def conv1d_cl(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    _check(x, w, 2)
    s, length, c = x.shape
    f, _, k = w.shape
    dtype = np.result_type(x, w)
    if c * k <= IM2COL_MAX:
        out = (_columns(x, k).astype(dtype, copy=False) @ w.reshape(f, c * k).T.astype(dtype)).reshape(s, length, f)
        if b is not None:
            out += b
        return out
    lp = length + k - 1
    xf = _padded_flat(x.astype(dtype, copy=False), k)
    rows = s * lp - (k - 1)
    acc = np.zeros((s * lp, f), dtype=dtype)
    taps = np.ascontiguousarray(w.transpose(2, 1, 0), dtype=dtype)  # (K, C, F); strided slices would skip BLAS
    for j in range(k):
        _gemm_acc(xf[j:j + rows], taps[j], acc[:rows])
    out = acc.reshape(s, lp, f)[:, :length]
    if b is not None:
        out = out + b
    return np.ascontiguousarray(out)


def conv1d_backward_cl(x: np.ndarray, w: np.ndarray, gout: np.ndarray, need_dx: bool = True):
    s, length, c = x.shape
    f, _, k = w.shape
    if c * k <= IM2COL_MAX and not need_dx:
        g2 = gout.reshape(s * length, f)
        dw = (g2.T @ _columns(x, k)).reshape(f, c, k).astype(w.dtype, copy=False)
        return None, dw, gout.sum(axis=(0, 1))
    lp = length + k - 1
    rows = s * lp - (k - 1)
    xf = _padded_flat(x, k)
    gp = np.zeros((s, lp, f), dtype=gout.dtype)
    gp[:, :length] = gout
    gf = gp.reshape(-1, f)[:rows]
    dw = np.empty((k, f, c), dtype=w.dtype)
    for j in range(k):
        dw[j] = _gemm_tn(gf, xf[j:j + rows])
    dw = np.ascontiguousarray(dw.transpose(1, 2, 0))
    db = gout.sum(axis=(0, 1))
    dx = None
    if need_dx:
        dxf = np.zeros((s * lp, c), dtype=np.result_type(gout, w))
        taps = np.ascontiguousarray(w.transpose(2, 0, 1), dtype=dxf.dtype)  # (K, F, C)
        for j in range(k):
            _gemm_acc(gf, taps[j], dxf[j:j + rows])
        left = (k - 1) // 2
        dx = np.ascontiguousarray(dxf.reshape(s, lp, c)[:, left:left + length])
    return dx, dw, db


def conv1d(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    _check(x, w, 1)
    return np.ascontiguousarray(conv1d_cl(x.transpose(0, 2, 1), w, b).transpose(0, 2, 1))


def conv1d_backward(x: np.ndarray, w: np.ndarray, gout: np.ndarray, need_dx: bool = True):
    """Gradients of :func:`conv1d`; returns ``(dx, dw, db)``."""
    dx, dw, db = conv1d_backward_cl(x.transpose(0, 2, 1), w, gout.transpose(0, 2, 1), need_dx)
    if dx is not None:
        dx = np.ascontiguousarray(dx.transpose(0, 2, 1))
    return dx, dw, db


def conv1d_reference(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Plain loops over batch, filter, time, channel and tap; a test oracle only."""
    _check(x, w, 1)
    s, c, length = x.shape
    f, _, k = w.shape
    left = (k - 1) // 2
    out = np.zeros((s, f, length))
    for si in range(s):
        for fi in range(f):
            for t in range(length):
                acc = 0.0
                for ci in range(c):
                    for j in range(k):
                        src = t + j - left
                        if 0 <= src < length:
                            acc += x[si, ci, src] * w[fi, ci, j]
                out[si, fi, t] = acc
    return out


# ── spectral route ──

def fft_length(length: int, k: int) -> int:
    n = length + k - 1
    return 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class SpectralMask:
    """Low-pass mask keeping rfft bins ``0..cutoff`` of an ``n_fft`` transform."""

    cutoff: int
    n_fft: int

    def __post_init__(self):
        if self.n_fft < 1:
            raise ValueError("n_fft must be positive")
        if not 0 <= self.cutoff <= self.n_fft // 2:
            raise ValueError(f"cutoff {self.cutoff} outside 0..{self.n_fft // 2}")

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def kept(self) -> int:
        return self.cutoff + 1

    @property
    def compression_rate(self) -> float:
        return (self.n_bins - self.kept) / self.n_bins

    @classmethod
    def full(cls, n_fft: int) -> "SpectralMask":
        return cls(n_fft // 2, n_fft)

    @classmethod
    def for_rate(cls, n_fft: int, rate: float) -> "SpectralMask":
        """Mask discarding at least ``rate`` of the rfft bins; DC is always kept."""
        if not 0 <= rate < 1:
            raise ValueError("compression rate must be in [0, 1)")
        n_bins = n_fft // 2 + 1
        kept = max(1, int(np.floor(n_bins * (1 - rate) + 1e-9)))
        return cls(kept - 1, n_fft)

    def values(self) -> np.ndarray:
        m = np.zeros(self.n_bins)
        m[: self.kept] = 1.0
        return m


def _bin_weights(mask: SpectralMask) -> np.ndarray:
    # irfft counts interior bins twice (their conjugate twins are implicit)
    wt = np.full(mask.kept, 2.0)
    wt[0] = 1.0
    if mask.n_fft % 2 == 0 and mask.kept == mask.n_bins:
        wt[-1] = 1.0
    return wt


def _resolve_mask(mask, length, k) -> SpectralMask:
    n = fft_length(length, k)
    if mask is None:
        return SpectralMask.full(n)
    if mask.n_fft != n:
        raise ShapeError(f"mask built for n_fft={mask.n_fft}, need {n}")
    return mask


def _half_to_real(zf: np.ndarray, mask: SpectralMask, axis: int, dtype) -> np.ndarray:
    """``sum_b Re(z_b exp(2 pi i b t / n))`` over the kept bins, along ``axis``."""
    n = mask.n_fft
    shape = list(zf.shape)
    shape[axis] = mask.n_bins
    full = np.zeros(shape, dtype=zf.dtype)
    sl = [slice(None)] * zf.ndim
    sl[axis] = slice(0, mask.kept)
    scale = np.full(mask.n_bins, 0.5 * n)
    scale[0] = n
    if n % 2 == 0:
        scale[-1] = n
    bshape = [1] * zf.ndim
    bshape[axis] = mask.kept
    real = np.real(zf[..., :0]).dtype
    full[tuple(sl)] = zf * scale[: mask.kept].astype(real).reshape(bshape)
    return sfft.irfft(full, n=n, axis=axis).astype(dtype, copy=False)


def _spectrum_bsc(x: np.ndarray, mask: SpectralMask) -> np.ndarray:
    """Kept rfft bins of a channels-last (S, L, C) array, as (B, S, C)."""
    xt = np.ascontiguousarray(x.transpose(0, 2, 1))
    xf = sfft.rfft(xt, n=mask.n_fft, axis=-1)[..., : mask.kept]
    return np.ascontiguousarray(xf.transpose(2, 0, 1))


def fft_conv1d_cl(x: np.ndarray, w: np.ndarray, mask: SpectralMask | None = None,
                  b: np.ndarray | None = None, cache: dict | None = None) -> np.ndarray:
    """Channels-last spectral route; ``cache`` keeps the spectra for the backward pass."""
    _check(x, w, 2)
    s, length, c = x.shape
    f, _, k = w.shape
    mask = _resolve_mask(mask, length, k)
    if mask.cutoff == 0 and mask.compression_rate > 0:
        warnings.warn("spectral mask keeps only the DC bin; output is constant per channel", stacklevel=3)
    n, kept = mask.n_fft, mask.kept
    xf = _spectrum_bsc(x, mask)
    wf = np.ascontiguousarray(np.conj(sfft.rfft(w, n=n, axis=2)[:, :, :kept]).transpose(2, 1, 0))  # (B, C, F)
    if cache is not None:
        cache["xf"], cache["wf_conj"] = xf, wf
    yf = np.matmul(xf, wf)  # (B, S, F)
    full = np.zeros((s, f, mask.n_bins), dtype=yf.dtype)
    full[:, :, :kept] = yf.transpose(1, 2, 0)
    circ = sfft.irfft(full, n=n, axis=-1)  # (S, F, N)
    idx = (np.arange(length) - (k - 1) // 2) % n
    out = circ[:, :, idx].transpose(0, 2, 1).astype(x.dtype, copy=False)
    if b is not None:
        out = out + b
    return np.ascontiguousarray(out)


def fft_conv1d_backward_cl(x: np.ndarray, w: np.ndarray, gout: np.ndarray, mask: SpectralMask | None = None,
                           need_dx: bool = True, cache: dict | None = None):
    """Adjoint of the masked spectral correlation.

    ``irfft . M . rfft`` is a symmetric projection, so the upstream gradient
    is projected once; then ``DX = G' W`` and ``DW = X conj(G')`` per bin.
    """
    s, length, c = x.shape
    f, _, k = w.shape
    mask = _resolve_mask(mask, length, k)
    n, kept = mask.n_fft, mask.kept
    circ = np.zeros((s, f, n), dtype=gout.dtype)
    circ[:, :, (np.arange(length) - (k - 1) // 2) % n] = gout.transpose(0, 2, 1)
    wt = (_bin_weights(mask) / n).astype(gout.dtype)
    gf = sfft.rfft(circ, n=n, axis=-1)[..., :kept] * wt  # (S, F, B)
    gfb = np.ascontiguousarray(gf.transpose(2, 0, 1))  # (B, S, F)
    xf = cache["xf"] if cache else _spectrum_bsc(x, mask)
    xf = xf.transpose(0, 2, 1)  # (B, C, S)
    dwf = np.matmul(xf, np.conj(gfb))  # (B, C, F)
    dw = _half_to_real(np.ascontiguousarray(dwf.transpose(2, 1, 0)), mask, -1, w.dtype)[..., :k]
    db = gout.sum(axis=(0, 1))
    dx = None
    if need_dx:
        if cache:
            wf = np.conj(cache["wf_conj"]).transpose(0, 2, 1)  # (B, F, C)
        else:
            wf = np.ascontiguousarray(sfft.rfft(w, n=n, axis=2)[:, :, :kept].transpose(2, 0, 1))
        dxf = np.matmul(gfb, wf)  # (B, S, C)
        dx = _half_to_real(np.ascontiguousarray(dxf.transpose(1, 2, 0)), mask, -1, x.dtype)[..., :length]
        dx = np.ascontiguousarray(dx.transpose(0, 2, 1))
    return dx, np.ascontiguousarray(dw), db


def fft_conv1d(x: np.ndarray, w: np.ndarray, mask: SpectralMask | None = None,
               b: np.ndarray | None = None) -> np.ndarray:
    """'same' correlation as a masked product of spectra (filter spectrum conjugated).

    Masking both spectra equals masking their product once, which is what is done.
    """
    _check(x, w, 1)
    return np.ascontiguousarray(fft_conv1d_cl(x.transpose(0, 2, 1), w, mask, b).transpose(0, 2, 1))


def fft_conv1d_backward(x: np.ndarray, w: np.ndarray, gout: np.ndarray, mask: SpectralMask | None = None,
                        need_dx: bool = True):
    """Gradients of :func:`fft_conv1d`; returns ``(dx, dw, db)``."""
    dx, dw, db = fft_conv1d_backward_cl(x.transpose(0, 2, 1), w, gout.transpose(0, 2, 1), mask, need_dx)
    if dx is not None:
        dx = np.ascontiguousarray(dx.transpose(0, 2, 1))
    return dx, dw, db
