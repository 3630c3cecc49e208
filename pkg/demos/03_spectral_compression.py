"""
Convolution in the frequency domain
===================================

A 'same' correlation equals a product of spectra once both signals are
zero-padded to a common FFT length.  Dropping the high-frequency bins of
that product (the spectral mask) compresses every conv layer.  This script
checks the spectral route against the direct one, then shows what
compression does to a smooth and to a noisy signal.

Run:  python3 demos/03_spectral_compression.py
"""

import numpy as np

from coexlab.nn import SpectralMask, conv1d, fft_conv1d, fft_length

rng = np.random.default_rng(0)
x = rng.normal(size=(4, 2, 512))
w = rng.normal(size=(3, 2, 8))

n_fft = fft_length(512, 8)
print("FFT length for w=512, k=8:", n_fft)
print("full mask, max |fft - direct| =", np.abs(fft_conv1d(x, w) - conv1d(x, w)).max())

t = np.arange(512)
smooth = np.sin(2 * np.pi * t / 128)[None, None, :]
noisy = smooth + 0.5 * rng.normal(size=smooth.shape)
avg = np.full((1, 1, 8), 1 / 8)
for rate in (0.0, 0.2, 0.4, 0.6, 0.8):
    mask = SpectralMask.for_rate(n_fft, rate)
    e_s = np.abs(fft_conv1d(smooth, avg, mask) - conv1d(smooth, avg))[..., 16:-16].max()
    e_n = np.abs(fft_conv1d(noisy, avg, mask) - conv1d(noisy, avg))[..., 16:-16].max()
    print(f"rate {mask.compression_rate:.2f}: kept {mask.kept:4d} bins, "
          f"error smooth {e_s:.2e}  noisy {e_n:.2e}")
