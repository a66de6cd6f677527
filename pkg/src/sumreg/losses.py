"""Composite twin-view losses and the normalized decorrelation metrics.

Two loss families, each in a "proposed" (summary regularizer, spectral
path) and an "original" (explicit off-diagonal penalty) variant:

* cross-correlation style: sum_i (1 - C_ii)^2 + lam * R(C)
* covariance style: (alpha/n) sum_k ||a_k - b_k||^2
                    + (mu/d) (Rvar(K^A) + Rvar(K^B))
                    + (nu/d) (R(K^A) + R(K^B))

The original variants with q=2 reproduce the classic Barlow Twins / VICReg
losses exactly. When cfg.permute is on, ONE permutation is drawn per call
and applied identically to both views before every term, so the invariance
terms are unaffected while the regularizer sees re-labeled features.

The normalized metrics at the bottom are evaluation-only and always go
through the explicit-matrix oracle path, so they can audit the fast path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle
from .batch import center, cross_correlation, covariance, standardize, standardize_array
from .errors import ConfigError, DimensionError
from .regularizers import (
    GradBatch,
    RegConfig,
    _center_adjoint,
    _pair_arrays,
    _permute_cols,
    _resolve_block,
    _roff_pair_std,
    _roff_self_centered,
    _rsum_pair_grouped,
    _rsum_pair_std,
    _rsum_self_centered,
    _rsum_self_grouped,
    _rvar_raw,
    _std_adjoint,
    _unpermute_grad,
    draw_permutation,
)

PROPOSED = "proposed"
ORIGINAL = "original"


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term decomposition of a composite loss.

    The parts are stored unweighted; ``total`` applies the weights of the
    active formula (invariance + lam * regularizer for the cross-correlation
    style; alpha * invariance + (mu/d) * variance + (nu/d) * regularizer for
    the covariance style). ``variance`` is None for the cross-correlation
    style.
    """

    total: float
    invariance: float
    variance: float | None
    regularizer: float
    grads: GradBatch


def _check_variant(variant: str):
    if variant not in (PROPOSED, ORIGINAL):
        raise ConfigError(f"variant must be 'proposed' or 'original', got {variant!r}")


def bt_style_loss(
    a, b, cfg: RegConfig = RegConfig(), variant: str = PROPOSED, perm_stream=None
) -> LossBreakdown:
    """Cross-correlation-style loss: sum_i (1 - C_ii)^2 + lam * R(C).

    The invariance term needs only the diagonal of C and is computed in
    O(n d) without forming the matrix.
    """
    _check_variant(variant)
    xa, xb = _pair_arrays(a, b)
    n, d = xa.shape
    p = draw_permutation(d, cfg, perm_stream)
    if p is not None:
        xa, xb = _permute_cols(xa, p), _permute_cols(xb, p)
    za, _, sa, siga = standardize_array(xa, cfg.eps_std)
    zb, _, sb, sigb = standardize_array(xb, cfg.eps_std)

    cdiag = np.einsum("ki,ki->i", za, zb) / (n - 1)
    invariance = float(np.sum((1.0 - cdiag) ** 2))
    gdiag = -2.0 * (1.0 - cdiag) / (n - 1)
    gza = gdiag[None, :] * zb
    gzb = gdiag[None, :] * za

    if variant == PROPOSED:
        blk = _resolve_block(cfg, d)
        if blk is None:
            reg, rga, rgb = _rsum_pair_std(za, zb, cfg.q)
        else:
            reg, rga, rgb = _rsum_pair_grouped(za, zb, cfg.q, blk)
    else:
        reg, rga, rgb = _roff_pair_std(za, zb)
    gza += cfg.lam * rga
    gzb += cfg.lam * rgb

    ga = _std_adjoint(gza, za, sa, siga, cfg.eps_std)
    gb = _std_adjoint(gzb, zb, sb, sigb, cfg.eps_std)
    if p is not None:
        ga, gb = _unpermute_grad(ga, p), _unpermute_grad(gb, p)
    total = invariance + cfg.lam * reg
    return LossBreakdown(total, invariance, None, reg, GradBatch(ga, gb))


def _vic_view_terms(x: np.ndarray, cfg: RegConfig, variant: str):
    """Variance and covariance-regularizer terms for one view, plus grads."""
    zc = x - x.mean(axis=0)
    var_val, gvar = _rvar_raw(x, cfg.gamma, cfg.eps_var)
    if variant == PROPOSED:
        blk = _resolve_block(cfg, x.shape[1])
        if blk is None:
            reg_val, gzc = _rsum_self_centered(zc, cfg.q)
        else:
            reg_val, gzc = _rsum_self_grouped(zc, cfg.q, blk)
    else:
        reg_val, gzc = _roff_self_centered(zc)
    return var_val, gvar, reg_val, _center_adjoint(gzc)


def vic_style_loss(
    a, b, cfg: RegConfig = RegConfig(), variant: str = PROPOSED, perm_stream=None
) -> LossBreakdown:
    """Covariance-style loss with distance, variance and covariance terms.

    The invariance term is the raw squared distance (embeddings are NOT
    standardized there); covariances use centered embeddings.
    """
    _check_variant(variant)
    xa, xb = _pair_arrays(a, b)
    n, d = xa.shape
    p = draw_permutation(d, cfg, perm_stream)
    if p is not None:
        xa, xb = _permute_cols(xa, p), _permute_cols(xb, p)

    diff = xa - xb
    invariance = float(np.sum(diff * diff)) / n

    var_a, gvar_a, reg_a, greg_a = _vic_view_terms(xa, cfg, variant)
    var_b, gvar_b, reg_b, greg_b = _vic_view_terms(xb, cfg, variant)
    variance = var_a + var_b
    regularizer = reg_a + reg_b

    ga = cfg.alpha * (2.0 / n) * diff + (cfg.mu / d) * gvar_a + (cfg.nu / d) * greg_a
    gb = -cfg.alpha * (2.0 / n) * diff + (cfg.mu / d) * gvar_b + (cfg.nu / d) * greg_b
    if p is not None:
        ga, gb = _unpermute_grad(ga, p), _unpermute_grad(gb, p)
    total = cfg.alpha * invariance + (cfg.mu / d) * variance + (cfg.nu / d) * regularizer
    return LossBreakdown(total, invariance, variance, regularizer, GradBatch(ga, gb))


def normalized_bt_metric(a, b, eps: float = 1e-8) -> float:
    """Mean squared off-diagonal cross-correlation: Roff(C) / (d (d-1)).

    Always uses the explicit-matrix oracle path (this metric exists to
    audit the fast path, so it must be independent of it).
    """
    xa, xb = _pair_arrays(a, b)
    d = xa.shape[1]
    if d < 2:
        raise DimensionError("metric undefined for d = 1 (no off-diagonals)")
    c = cross_correlation(standardize(xa, eps), standardize(xb, eps))
    return oracle.roff_naive(c) / (d * (d - 1))


def normalized_vic_metric(a, b) -> float:
    """(Roff(K^A) + Roff(K^B)) / (2 d (d-1)): mean over both views' entries."""
    xa, xb = _pair_arrays(a, b)
    d = xa.shape[1]
    if d < 2:
        raise DimensionError("metric undefined for d = 1 (no off-diagonals)")
    ka = covariance(center(xa))
    kb = covariance(center(xb))
    return (oracle.roff_naive(ka) + oracle.roff_naive(kb)) / (2.0 * d * (d - 1))
