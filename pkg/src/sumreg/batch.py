"""Embedding-batch containers, standardization and correlation constructors.

A batch is an n x d real matrix: rows are samples, columns are features.
Everything downstream (summary vectors, regularizers, losses) consumes the
types defined here. All operations are pure; arrays are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BatchError, ContractError, DimensionError

STANDARDIZED = "standardized"
CENTERED = "centered"

CROSS_CORRELATION = "cross_correlation"
COVARIANCE = "covariance"

DEFAULT_EPS = 1e-8


def _as_2d_float(data, name: str = "data") -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D (n x d), got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be at least 1 x 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise BatchError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class EmbeddingBatch:
    """An n x d matrix of projected embeddings for one view.

    Invariants: all entries finite, n >= 1, d >= 1.
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_2d_float(self.data, "batch"))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class StandardizedBatch(EmbeddingBatch):
    """EmbeddingBatch whose columns were standardized or centered.

    ``mode`` records which transform produced it: "standardized" columns
    have mean 0 and unbiased std 1 (zero-variance columns are all-zero),
    "centered" columns have mean 0.
    """

    mode: str = STANDARDIZED

    def __post_init__(self):
        super().__post_init__()
        if self.mode not in (STANDARDIZED, CENTERED):
            raise ContractError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class CorrMatrix:
    """A d x d cross-correlation or covariance matrix."""

    data: np.ndarray
    kind: str = CROSS_CORRELATION

    def __post_init__(self):
        arr = _as_2d_float(self.data, "matrix")
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"matrix must be square, got {arr.shape}")
        if self.kind not in (CROSS_CORRELATION, COVARIANCE):
            raise ContractError(f"unknown matrix kind {self.kind!r}")
        if self.kind == COVARIANCE:
            if not np.allclose(arr, arr.T, atol=1e-10, rtol=0.0):
                raise ContractError("covariance matrix must be symmetric")
            if np.any(np.diag(arr) < -1e-12):
                raise ContractError("covariance matrix has negative diagonal")
        object.__setattr__(self, "data", arr)

    @property
    def d(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class PermutationSpec:
    """A bijection on feature indices {0, ..., d-1} plus the seed it came from."""

    pi: np.ndarray
    seed: int = 0

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.int64)
        if pi.ndim != 1:
            raise DimensionError("permutation must be 1-D")
        if not np.array_equal(np.sort(pi), np.arange(pi.size)):
            raise ContractError("permutation is not a bijection on {0..d-1}")
        object.__setattr__(self, "pi", pi)

    @property
    def d(self) -> int:
        return self.pi.size

    def inverse(self) -> np.ndarray:
        inv = np.empty(self.d, dtype=np.int64)
        inv[self.pi] = np.arange(self.d)
        return inv


def _batch_array(batch) -> np.ndarray:
    if isinstance(batch, EmbeddingBatch):
        return batch.data
    return _as_2d_float(batch, "batch")


def standardize_array(x: np.ndarray, eps: float = DEFAULT_EPS):
    """Column-standardize, returning (z, mean, scale, sigma) for gradient reuse.

    scale = max(sigma, eps) where sigma is the unbiased column std. Columns
    with sigma == 0 come out all-zero (the zero numerator does it; no special
    case needed).
    """
    if x.shape[0] < 2:
        raise BatchError("standardize requires n >= 2 (unbiased std undefined)")
    mean = x.mean(axis=0)
    sigma = x.std(axis=0, ddof=1)
    scale = np.maximum(sigma, eps)
    z = (x - mean) / scale
    return z, mean, scale, sigma


def standardize(batch, eps: float = DEFAULT_EPS) -> StandardizedBatch:
    """Standardize each column to mean 0, unbiased std 1.

    Zero-variance columns map to all-zero rather than raising; collapsed
    features must still flow through the loss.
    """
    x = _batch_array(batch)
    z, _, _, _ = standardize_array(x, eps)
    return StandardizedBatch(z, mode=STANDARDIZED)


def center(batch) -> StandardizedBatch:
    """Subtract the column mean from each column."""
    x = _batch_array(batch)
    if x.shape[0] < 2:
        raise BatchError("center requires n >= 2")
    return StandardizedBatch(x - x.mean(axis=0), mode=CENTERED)


def cross_correlation(a: StandardizedBatch, b: StandardizedBatch) -> CorrMatrix:
    """C = (1/(n-1)) sum_k a_k b_k^T over standardized views.

    Diagonal entries measure per-feature view agreement; off-diagonals
    measure feature redundancy.
    """
    for name, v in (("a", a), ("b", b)):
        if not isinstance(v, StandardizedBatch) or v.mode != STANDARDIZED:
            raise ContractError(f"{name} must be a standardized batch")
    if a.data.shape != b.data.shape:
        raise DimensionError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")
    n = a.n
    c = (a.data.T @ b.data) / (n - 1)
    return CorrMatrix(c, kind=CROSS_CORRELATION)


def covariance(x: StandardizedBatch) -> CorrMatrix:
    """K = (1/(n-1)) sum_k c_k c_k^T over a mean-zero batch."""
    if not isinstance(x, StandardizedBatch):
        raise ContractError("covariance requires a centered (or standardized) batch")
    n = x.n
    k = (x.data.T @ x.data) / (n - 1)
    # enforce exact symmetry; the matmul is symmetric only up to roundoff
    k = 0.5 * (k + k.T)
    return CorrMatrix(k, kind=COVARIANCE)


def sample_permutation(d: int, seed: int = 0) -> PermutationSpec:
    """Draw a uniformly random permutation of {0..d-1}, reproducible from seed.

    Fisher-Yates with draws from PCG64(seed); the loop below is the
    documented reference generator and is frozen by a regression test.
    """
    if d < 1:
        raise DimensionError("d must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return PermutationSpec(_fisher_yates(d, rng), seed=seed)


def _fisher_yates(d: int, rng: np.random.Generator) -> np.ndarray:
    pi = np.arange(d, dtype=np.int64)
    for i in range(d - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        pi[i], pi[j] = pi[j], pi[i]
    return pi


def permute_features(batch, p: PermutationSpec) -> EmbeddingBatch:
    """Relabel features: output column p.pi[j] holds input column j.

    Applying the same permutation to both views conjugates the
    cross-correlation matrix: C' = P C P^T.
    """
    x = _batch_array(batch)
    if p.d != x.shape[1]:
        raise DimensionError(f"permutation length {p.d} != feature count {x.shape[1]}")
    out = np.empty_like(x)
    out[:, p.pi] = x
    if isinstance(batch, StandardizedBatch):
        return StandardizedBatch(out, mode=batch.mode)
    return EmbeddingBatch(out)


def permute_matrix(m: np.ndarray, p: PermutationSpec) -> np.ndarray:
    """Conjugate a d x d matrix by the permutation: out[pi(i), pi(j)] = m[i, j]."""
    out = np.empty_like(m)
    out[np.ix_(p.pi, p.pi)] = m
    return out
