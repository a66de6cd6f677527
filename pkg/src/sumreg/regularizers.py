"""Decorrelating regularizers: forward values and analytic gradients.

Four user-facing operations, each differentiated by hand with respect to
the raw embedding batches (no autodiff anywhere):

* ``rsum_cross``  - summary regularizer of the cross-correlation matrix,
  computed spectrally in O(n d log d) (or the grouped block variant).
* ``rsum_cov``    - summary regularizer of one view's covariance matrix,
  using the power-spectrum shortcut conj(F(c)) . F(c) = |F(c)|^2.
* ``roff_baseline`` - the explicit-matrix sum of squared off-diagonals,
  O(n d^2) by design; this is the benchmark baseline.
* ``rvar_batch``  - hinge on per-feature std, O(n d), never forms the
  covariance matrix.

Gradient notes. The summary pipeline is linear in each batch given the
other, so its adjoint reuses the same transforms: with gv the gradient at
the summary vector,

    d/d a_k = (1/(n-1)) inv(gv) * b_k = F^-1( conj(F(gv)) . F(b_k) )
    d/d b_k = (1/(n-1))     gv  * a_k = F^-1(      F(gv)  . F(a_k) )

(those are forward-mode circular convolutions, so no rfft-adjoint scaling
subtleties arise). The standardization adjoint accounts for the mean/std
coupling; the eps floor makes the scale constant where sigma <= eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .batch import (
    PermutationSpec,
    _batch_array,
    _fisher_yates,
    standardize_array,
)
from .errors import BatchError, ConfigError, DimensionError
from .spectral import _block_spectra, block_count


@dataclass(frozen=True)
class RegConfig:
    """All loss/regularizer hyperparameters.

    q is the exponent of the summary regularizer; lam weights the
    cross-correlation regularizer; alpha/mu/nu weight the view-distance,
    variance and covariance terms; gamma is the target per-feature std;
    block enables the grouped variant; permute draws a feature permutation
    per call (seeded).
    """

    q: int = 2
    lam: float = 5e-3
    alpha: float = 25.0
    mu: float = 25.0
    nu: float = 1.0
    gamma: float = 1.0
    block: int | None = None
    eps_std: float = 1e-8
    eps_var: float = 1e-4
    permute: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.q not in (1, 2):
            raise ConfigError(f"q must be 1 or 2, got {self.q}")
        for name in ("lam", "alpha", "mu", "nu"):
            w = getattr(self, name)
            if not math.isfinite(w) or w < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {w}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.block is not None and self.block < 1:
            raise ConfigError(f"block size must be >= 1, got {self.block}")
        if not (self.eps_std > 0 and self.eps_var >= 0):
            raise ConfigError("eps_std must be > 0 and eps_var >= 0")


@dataclass(frozen=True)
class GradBatch:
    """Gradients of a scalar with respect to the two input batches."""

    wrt_a: np.ndarray
    wrt_b: np.ndarray


class PermutationStream:
    """Deterministic sequence of feature permutations.

    Each trainer run owns one; every ``next`` call advances the counter, so
    a different permutation is drawn in every mini-batch while the whole
    sequence replays exactly from the seed.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.count = 0
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def next(self, d: int) -> PermutationSpec:
        pi = _fisher_yates(d, self._rng)
        self.count += 1
        return PermutationSpec(pi, seed=self.seed)


def draw_permutation(d, cfg: RegConfig, perm_stream=None):
    """The permutation for this call, or None when cfg.permute is off.

    Without a caller-owned stream the draw is permutation #0 from cfg.seed,
    i.e. repeated standalone calls reuse the same permutation.
    """
    if not cfg.permute:
        return None
    if perm_stream is None:
        return PermutationStream(cfg.seed).next(d)
    return perm_stream.next(d)


def _permute_cols(x: np.ndarray, p: PermutationSpec) -> np.ndarray:
    out = np.empty_like(x)
    out[:, p.pi] = x
    return out


def _unpermute_grad(g: np.ndarray, p: PermutationSpec) -> np.ndarray:
    # grad wrt original column j lives at permuted column pi[j]
    return g[:, p.pi]


def _std_adjoint(gz, z, scale, sigma, eps):
    """Pull a gradient back through column standardization.

    Where sigma > eps the scale is the (input-dependent) unbiased std;
    where sigma <= eps the max() floor is flat and the scale is constant.
    """
    n = z.shape[0]
    gx = gz - gz.mean(axis=0)
    live = sigma > eps
    if np.any(live):
        coupling = np.einsum("ki,ki->i", gz, z) / (n - 1)
        gx = gx - np.where(live, coupling, 0.0) * z
    return gx / scale


def _center_adjoint(gz):
    return gz - gz.mean(axis=0)


def _q_value_grad(v: np.ndarray, q: int, lo: int):
    """Value and gradient of sum_{i>=lo} |v_i|^q. sign(0) = 0 for q=1."""
    gv = np.zeros_like(v)
    tail = v[lo:]
    if q == 1:
        value = float(np.sum(np.abs(tail)))
        gv[lo:] = np.sign(tail)
    else:
        value = float(np.sum(tail * tail))
        gv[lo:] = 2.0 * tail
    return value, gv


def _q_value_grad_blocks(v: np.ndarray, q: int):
    """Grouped variant: diagonal blocks skip component 0, the rest keep all."""
    g = v.shape[0]
    masked = v.copy()
    masked[np.arange(g), np.arange(g), 0] = 0.0
    if q == 1:
        value = float(np.sum(np.abs(masked)))
        gv = np.sign(masked)
    else:
        value = float(np.sum(masked * masked))
        gv = 2.0 * masked
    return value, gv


def _rsum_pair_std(za: np.ndarray, zb: np.ndarray, q: int):
    """Ungrouped summary regularizer of C(za, zb) plus grads wrt za, zb."""
    n, d = za.shape
    fa = np.fft.rfft(za, axis=1)
    fb = np.fft.rfft(zb, axis=1)
    v = np.fft.irfft(np.sum(np.conj(fa) * fb, axis=0), d) / (n - 1)
    value, gv = _q_value_grad(v, q, lo=1)
    fg = np.fft.rfft(gv)
    gza = np.fft.irfft(np.conj(fg)[None, :] * fb, d, axis=1) / (n - 1)
    gzb = np.fft.irfft(fg[None, :] * fa, d, axis=1) / (n - 1)
    return value, gza, gzb


def _rsum_pair_grouped(za: np.ndarray, zb: np.ndarray, q: int, blk: int):
    """Grouped summary regularizer of C(za, zb) plus grads wrt za, zb."""
    n, d = za.shape
    g = block_count(d, blk)
    fa = _block_spectra(za, blk)
    fb = _block_spectra(zb, blk)
    spec = np.einsum("kif,kjf->ijf", np.conj(fa), fb, optimize=True)
    v = np.fft.irfft(spec, blk, axis=2) / (n - 1)
    value, gv = _q_value_grad_blocks(v, q)
    fg = np.fft.rfft(gv, axis=2)
    gza = np.fft.irfft(
        np.einsum("ijf,kjf->kif", np.conj(fg), fb, optimize=True), blk, axis=2
    ) / (n - 1)
    gzb = np.fft.irfft(
        np.einsum("ijf,kif->kjf", fg, fa, optimize=True), blk, axis=2
    ) / (n - 1)
    return value, gza.reshape(n, g * blk)[:, :d], gzb.reshape(n, g * blk)[:, :d]


def _rsum_self_centered(zc: np.ndarray, q: int):
    """Summary regularizer of the covariance of one centered view."""
    n, d = zc.shape
    f = np.fft.rfft(zc, axis=1)
    power = np.sum(f.real * f.real + f.imag * f.imag, axis=0)
    v = np.fft.irfft(power, d) / (n - 1)
    value, gv = _q_value_grad(v, q, lo=1)
    fg = np.fft.rfft(gv)
    # both summary arguments are the same vector: conj(G) + G = 2 Re(G)
    gzc = np.fft.irfft((2.0 * fg.real)[None, :] * f, d, axis=1) / (n - 1)
    return value, gzc


def _rsum_self_grouped(zc: np.ndarray, q: int, blk: int):
    n, d = zc.shape
    g = block_count(d, blk)
    f = _block_spectra(zc, blk)
    spec = np.einsum("kif,kjf->ijf", np.conj(f), f, optimize=True)
    v = np.fft.irfft(spec, blk, axis=2) / (n - 1)
    value, gv = _q_value_grad_blocks(v, q)
    fg = np.fft.rfft(gv, axis=2)
    gzc = np.fft.irfft(
        np.einsum("ijf,kjf->kif", np.conj(fg), f, optimize=True)
        + np.einsum("jif,kjf->kif", fg, f, optimize=True),
        blk,
        axis=2,
    ) / (n - 1)
    return value, gzc.reshape(n, g * blk)[:, :d]


def _roff_pair_std(za: np.ndarray, zb: np.ndarray):
    """Explicit-matrix off-diagonal penalty of C(za, zb) plus grads."""
    n = za.shape[0]
    c = (za.T @ zb) / (n - 1)
    value = float(np.sum(c * c) - np.sum(np.diag(c) ** 2))
    gc = 2.0 * c
    np.fill_diagonal(gc, 0.0)
    gza = (zb @ gc.T) / (n - 1)
    gzb = (za @ gc) / (n - 1)
    return value, gza, gzb


def _roff_self_centered(zc: np.ndarray):
    n = zc.shape[0]
    k = (zc.T @ zc) / (n - 1)
    value = float(np.sum(k * k) - np.sum(np.diag(k) ** 2))
    gk = 2.0 * k
    np.fill_diagonal(gk, 0.0)
    # K is symmetric and so is gk: the two matmul terms coincide
    gzc = 2.0 * (zc @ gk) / (n - 1)
    return value, gzc


def _rvar_raw(x: np.ndarray, gamma: float, eps_var: float):
    """Hinge on per-feature std from the raw batch, O(n d)."""
    n = x.shape[0]
    centered = x - x.mean(axis=0)
    var = np.sum(centered * centered, axis=0) / (n - 1)
    s = np.sqrt(var + eps_var)
    active = s < gamma
    value = float(np.sum(np.maximum(0.0, gamma - s)))
    safe = np.where(s > 0, s, 1.0)
    gx = np.where(active & (s > 0), -1.0 / ((n - 1) * safe), 0.0) * centered
    return value, gx


def _pair_arrays(a, b):
    xa = _batch_array(a)
    xb = _batch_array(b)
    if xa.shape != xb.shape:
        raise DimensionError(f"shape mismatch: {xa.shape} vs {xb.shape}")
    if xa.shape[0] < 2:
        raise BatchError("need n >= 2")
    return xa, xb


def _resolve_block(cfg: RegConfig, d: int):
    """None for the ungrouped path, otherwise a validated block size."""
    if cfg.block is None or cfg.block == d:
        return None
    block_count(d, cfg.block)
    return cfg.block


def rsum_cross(a, b, cfg: RegConfig = RegConfig(), perm_stream=None):
    """Summary regularizer of the two-view cross-correlation matrix.

    Standardizes internally, computes the summary vector spectrally (the
    grouped path when cfg.block is set), and returns the value together
    with exact gradients with respect to the raw batches.
    """
    xa, xb = _pair_arrays(a, b)
    d = xa.shape[1]
    p = draw_permutation(d, cfg, perm_stream)
    if p is not None:
        xa, xb = _permute_cols(xa, p), _permute_cols(xb, p)
    za, _, sa, siga = standardize_array(xa, cfg.eps_std)
    zb, _, sb, sigb = standardize_array(xb, cfg.eps_std)
    blk = _resolve_block(cfg, d)
    if blk is None:
        value, gza, gzb = _rsum_pair_std(za, zb, cfg.q)
    else:
        value, gza, gzb = _rsum_pair_grouped(za, zb, cfg.q, blk)
    ga = _std_adjoint(gza, za, sa, siga, cfg.eps_std)
    gb = _std_adjoint(gzb, zb, sb, sigb, cfg.eps_std)
    if p is not None:
        ga, gb = _unpermute_grad(ga, p), _unpermute_grad(gb, p)
    return value, GradBatch(ga, gb)


def rsum_cov(x, cfg: RegConfig = RegConfig(), perm_stream=None):
    """Summary regularizer of one view's covariance matrix.

    Centers internally; the accumulated spectrum is the power spectrum of
    the centered samples, so the summary vector is symmetric.
    """
    xc = _batch_array(x)
    if xc.shape[0] < 2:
        raise BatchError("need n >= 2")
    d = xc.shape[1]
    p = draw_permutation(d, cfg, perm_stream)
    if p is not None:
        xc = _permute_cols(xc, p)
    zc = xc - xc.mean(axis=0)
    blk = _resolve_block(cfg, d)
    if blk is None:
        value, gzc = _rsum_self_centered(zc, cfg.q)
    else:
        value, gzc = _rsum_self_grouped(zc, cfg.q, blk)
    gx = _center_adjoint(gzc)
    if p is not None:
        gx = _unpermute_grad(gx, p)
    return value, gx


def roff_baseline(a, b=None, cfg: RegConfig = RegConfig(), perm_stream=None):
    """Sum of squared off-diagonals via the explicit matrix (the baseline).

    Two-batch form penalizes the cross-correlation matrix and returns a
    GradBatch; one-batch form (b=None) penalizes the covariance matrix and
    returns a single gradient array. O(n d^2) by design.
    """
    if b is None:
        xc = _batch_array(a)
        if xc.shape[0] < 2:
            raise BatchError("need n >= 2")
        p = draw_permutation(xc.shape[1], cfg, perm_stream)
        if p is not None:
            xc = _permute_cols(xc, p)
        zc = xc - xc.mean(axis=0)
        value, gzc = _roff_self_centered(zc)
        gx = _center_adjoint(gzc)
        if p is not None:
            gx = _unpermute_grad(gx, p)
        return value, gx
    xa, xb = _pair_arrays(a, b)
    p = draw_permutation(xa.shape[1], cfg, perm_stream)
    if p is not None:
        xa, xb = _permute_cols(xa, p), _permute_cols(xb, p)
    za, _, sa, siga = standardize_array(xa, cfg.eps_std)
    zb, _, sb, sigb = standardize_array(xb, cfg.eps_std)
    value, gza, gzb = _roff_pair_std(za, zb)
    ga = _std_adjoint(gza, za, sa, siga, cfg.eps_std)
    gb = _std_adjoint(gzb, zb, sb, sigb, cfg.eps_std)
    if p is not None:
        ga, gb = _unpermute_grad(ga, p), _unpermute_grad(gb, p)
    return value, GradBatch(ga, gb)


def rvar_batch(x, cfg: RegConfig = RegConfig(), perm_stream=None):
    """Per-feature std hinge, computed in O(n d) without the covariance matrix.

    Subgradient 0 exactly at the hinge.
    """
    xc = _batch_array(x)
    if xc.shape[0] < 2:
        raise BatchError("need n >= 2")
    p = draw_permutation(xc.shape[1], cfg, perm_stream)
    if p is not None:
        xc = _permute_cols(xc, p)
    value, gx = _rvar_raw(xc, cfg.gamma, cfg.eps_var)
    if p is not None:
        gx = _unpermute_grad(gx, p)
    return value, gx
