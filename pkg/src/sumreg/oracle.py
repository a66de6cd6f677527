"""Naive reference implementations of every summary/regularizer quantity.

Everything here materializes matrices explicitly and runs in O(n d^2) or
O(d^2). These are the ground truth the spectral fast paths are tested
against, and the baseline the benchmark times as the "existing method".
All arithmetic is double precision.
"""

from __future__ import annotations

import math

import numpy as np

from .batch import CorrMatrix, cross_correlation
from .errors import BatchError, ConfigError, DimensionError, NumericError


def _matrix(m) -> np.ndarray:
    if isinstance(m, CorrMatrix):
        return m.data
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def roff_naive(m) -> float:
    """Sum of squared off-diagonal entries."""
    m = _matrix(m)
    return float(np.sum(m * m) - np.sum(np.diag(m) ** 2))


def rvar(k, gamma: float, eps: float = 0.0) -> float:
    """Hinge on per-feature std: sum_i max(0, gamma - sqrt(k_ii + eps))."""
    k = _matrix(k)
    diag = np.diag(k)
    if np.any(diag < -eps):
        raise NumericError("covariance diagonal is negative beyond -eps")
    std = np.sqrt(np.maximum(diag + eps, 0.0))
    return float(np.sum(np.maximum(0.0, gamma - std)))


def summary_naive(m) -> np.ndarray:
    """Wrapped-diagonal sums of a square matrix: v[i] = sum_j m[j, (i+j) mod d].

    v[0] is the trace; each remaining component sums d distinct off-diagonal
    entries, and every entry of m lands in exactly one component.
    """
    m = _matrix(m)
    d = m.shape[0]
    v = np.zeros(d, dtype=np.float64)
    for j in range(d):
        v += np.roll(m[j], -j)
    return v


def rsum_from_summary(v: np.ndarray, q: int) -> float:
    """sum_{i=1}^{d-1} |v[i]|^q; the zeroth (trace) component is excluded."""
    if q not in (1, 2):
        raise ConfigError(f"q must be 1 or 2, got {q}")
    v = np.asarray(v, dtype=np.float64)
    tail = v[1:]
    if q == 1:
        return float(np.sum(np.abs(tail)))
    return float(np.sum(tail * tail))


def _padded_blocks(m: np.ndarray, b: int) -> tuple[np.ndarray, int]:
    d = m.shape[0]
    g = math.ceil(d / b)
    if g * b == d:
        return m, g
    padded = np.zeros((g * b, g * b), dtype=m.dtype)
    padded[:d, :d] = m
    return padded, g


def rsum_grouped_naive(m, b: int, q: int) -> float:
    """Block-partitioned summary regularizer.

    The matrix is zero-padded to a multiple of b and cut into b x b blocks.
    Diagonal blocks contribute components 1..b-1 of their summary vector,
    off-diagonal blocks contribute all b components. b=1 with q=2 reduces to
    roff_naive; b=d recovers the ungrouped regularizer.
    """
    m = _matrix(m)
    d = m.shape[0]
    if b < 1 or b > d:
        raise ConfigError(f"block size must satisfy 1 <= b <= d, got b={b}, d={d}")
    if q not in (1, 2):
        raise ConfigError(f"q must be 1 or 2, got {q}")
    padded, g = _padded_blocks(m, b)
    total = 0.0
    for i in range(g):
        for j in range(g):
            block = padded[i * b:(i + 1) * b, j * b:(j + 1) * b]
            v = summary_naive(block)
            lo = 1 if i == j else 0
            if q == 1:
                total += float(np.sum(np.abs(v[lo:])))
            else:
                total += float(np.sum(v[lo:] ** 2))
    return total


def circ_conv_naive(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Circular convolution: out[i] = sum_j x[j] y[(i-j) mod d]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"need equal-length vectors, got {x.shape} and {y.shape}")
    d = x.size
    idx = (np.arange(d)[:, None] - np.arange(d)[None, :]) % d
    return (x[None, :] * y[idx]).sum(axis=1)


def involution_naive(x: np.ndarray) -> np.ndarray:
    """Reverse components 1..d-1, keeping component 0: out[i] = x[(d-i) mod d]."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("involution expects a vector")
    return np.concatenate([x[:1], x[:0:-1]])


def summary_via_circcorr_naive(a, b) -> np.ndarray:
    """Summary vector as averaged circular correlations, never forming C.

    (1/(n-1)) sum_k inv(a_k) * b_k; equal to summary_naive(cross_correlation)
    in exact arithmetic.
    """
    from .batch import _batch_array

    xa = _batch_array(a)
    xb = _batch_array(b)
    if xa.shape != xb.shape:
        raise DimensionError(f"shape mismatch: {xa.shape} vs {xb.shape}")
    n = xa.shape[0]
    if n < 2:
        raise BatchError("need n >= 2 (the 1/(n-1) normalization is undefined)")
    acc = np.zeros(xa.shape[1], dtype=np.float64)
    for k in range(n):
        acc += circ_conv_naive(involution_naive(xa[k]), xb[k])
    return acc / (n - 1)


def summary_of_views_naive(a, b) -> np.ndarray:
    """Oracle composition: standardize is assumed done; forms C explicitly."""
    return summary_naive(cross_correlation(a, b).data)
