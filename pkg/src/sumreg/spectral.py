"""Spectral fast path: DFT wrappers, circular convolution, summary vectors.

The summary vector of the cross-correlation matrix C of two n x d views is
computed in O(n d log d) without forming C: transform each sample, multiply
conjugated spectra componentwise, accumulate over samples in the frequency
domain, and apply a single inverse transform at the end. The grouped
variant does the same per b-wide feature block, reusing each block spectrum
across all ceil(d/b)^2 block pairings.

Real-input symmetry is exploited throughout (half-spectrum rfft storage);
the full-spectrum dft/idft wrappers exist for callers that want the plain
complex transform with its integrity checks.
"""

from __future__ import annotations

import math

import numpy as np

from .batch import _batch_array
from .errors import BatchError, ConfigError, DimensionError, NumericError

# Above this relative level, the imaginary residue of an inverse transform
# that should be real indicates a corrupted spectrum rather than roundoff.
RESIDUE_TOL = 1e-6


def dft(x: np.ndarray) -> np.ndarray:
    """Full complex DFT of a vector (FFT-backed, O(d log d) for any d).

    For real input the spectrum is conjugate-symmetric:
    F[k] == conj(F[(d-k) mod d]).
    """
    x = np.asarray(x)
    if x.ndim != 1 or x.size < 1:
        raise DimensionError("dft expects a non-empty vector")
    return np.fft.fft(x)


def idft(s: np.ndarray, residue_tol: float = RESIDUE_TOL) -> np.ndarray:
    """Inverse DFT, returning the real part.

    The input is expected to be (numerically) conjugate-symmetric, so the
    exact-arithmetic result is real; the imaginary residue is checked
    against ``residue_tol`` (relative to the output scale) and discarded.
    """
    s = np.asarray(s)
    if s.ndim != 1 or s.size < 1:
        raise DimensionError("idft expects a non-empty vector")
    out = np.fft.ifft(s)
    scale = max(1.0, float(np.max(np.abs(out.real))))
    residue = float(np.max(np.abs(out.imag)))
    if residue > residue_tol * scale:
        raise NumericError(
            f"imaginary residue {residue:.3e} exceeds {residue_tol:.1e} x scale"
        )
    return np.ascontiguousarray(out.real)


def circ_conv_fft(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Circular convolution via the convolution theorem."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"need equal-length vectors, got {x.shape} and {y.shape}")
    d = x.size
    return np.fft.irfft(np.fft.rfft(x) * np.fft.rfft(y), d)


def _check_views(a, b) -> tuple[np.ndarray, np.ndarray]:
    xa = _batch_array(a)
    xb = _batch_array(b)
    if xa.shape != xb.shape:
        raise DimensionError(f"shape mismatch: {xa.shape} vs {xb.shape}")
    if xa.shape[0] < 2:
        raise BatchError("need n >= 2 (the 1/(n-1) normalization is undefined)")
    return xa, xb


def summary_fft(a, b) -> np.ndarray:
    """Summary vector of C(a, b) straight from the embeddings.

    v = (1/(n-1)) F^-1( sum_k conj(F(a_k)) . F(b_k) ); the sum over samples
    happens on the accumulated spectrum so only one inverse transform runs.
    """
    xa, xb = _check_views(a, b)
    n, d = xa.shape
    spec = np.sum(np.conj(np.fft.rfft(xa, axis=1)) * np.fft.rfft(xb, axis=1), axis=0)
    return np.fft.irfft(spec, d) / (n - 1)


def summary_power_fft(x) -> np.ndarray:
    """Summary vector of the self-product matrix of one mean-zero view.

    With both arguments equal, conj(F(c)) . F(c) = |F(c)|^2, so the
    accumulated spectrum is a real power spectrum and the result is
    symmetric: v[i] == v[(d-i) mod d].
    """
    xc = _batch_array(x)
    n, d = xc.shape
    if n < 2:
        raise BatchError("need n >= 2 (the 1/(n-1) normalization is undefined)")
    f = np.fft.rfft(xc, axis=1)
    power = np.sum(f.real * f.real + f.imag * f.imag, axis=0)
    return np.fft.irfft(power.astype(np.complex128), d) / (n - 1)


def block_count(d: int, b: int) -> int:
    if b < 1 or b > d:
        raise ConfigError(f"block size must satisfy 1 <= b <= d, got b={b}, d={d}")
    return math.ceil(d / b)


def _block_spectra(x: np.ndarray, b: int) -> np.ndarray:
    """rfft of each b-wide feature block of every sample: (n, g, b//2+1)."""
    n, d = x.shape
    g = math.ceil(d / b)
    if g * b != d:
        padded = np.zeros((n, g * b), dtype=x.dtype)
        padded[:, :d] = x
        x = padded
    return np.fft.rfft(x.reshape(n, g, b), axis=2)


def summary_fft_grouped(a, b, blk: int) -> np.ndarray:
    """Per-block-pair summary vectors, shape (g, g, blk) with g = ceil(d/blk).

    out[i, j] is the summary vector of the (i, j) block of C; the last
    block is zero-padded (dummy features that are constantly 0). Each block
    spectrum is computed once and reused across all pairings: O(n d log b)
    transforms plus O(g^2 n b) spectral products.
    """
    xa, xb = _check_views(a, b)
    n, d = xa.shape
    g = block_count(d, blk)
    fa = _block_spectra(xa, blk)
    fb = _block_spectra(xb, blk)
    spec = np.einsum("kif,kjf->ijf", np.conj(fa), fb, optimize=True)
    return np.fft.irfft(spec, blk, axis=2) / (n - 1)
