"""Pooled overlapping-block statistics and the pooled autoregressive fit.

For a series y_1..y_T and blocklength B the T-B overlapping blocks are
(y_j, ..., y_{j+B}), j = 1..T-B, each demeaned by its first observation.
The two pooled statistics are

    Y1 = (B^{3/2} T^{1/2})^{-1} sum_j sum_{t=2}^{B} dy_{t+j} (y_{t+j-1} - y_j)
    Y2 = (B^2 T)^{-1}          sum_j sum_{t=2}^{B} (y_{t+j-1} - y_j)^2

and the pooled estimator satisfies sqrt(BT)(rho_hat - 1) = Y1/Y2.

Everything is computed from first differences and the anchored partial
sum path (y_t - y_1), never from raw levels, so results are bit-identical
under y -> y + c whenever the shift itself is exact in floating point.
The double sums collapse to O(T): the inner numerator telescopes to
((y_{j+B} - y_j)^2 - sum of squared block increments) / 2 and both inner
sums reduce to sliding-window prefix sums.  The literal double loop is
kept in the test tree as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BadBlocklength, DegenerateSeries, UrblockError, as_series

__all__ = ["BlockStats", "PooledFit", "block_stats", "pooled_fit"]


@dataclass(frozen=True)
class BlockStats:
    """Pooled numerator/denominator statistics for one (series, B)."""

    y1: float
    y2: float
    B: int
    T: int


@dataclass
class PooledFit:
    """Pooled AR fit: rho_hat, phi_hat = rho_hat - 1, and residuals.

    residuals[0] is fixed to 0 by convention; residuals[t] = y_t -
    rho_hat*y_{t-1} for t = 2..T (1-indexed).  centered_residuals holds
    the mathematically identical deviations (u_t - mean u) computed from
    differences only, which is the numerically shift-stable form every
    downstream nuisance estimator consumes.
    """

    rho_hat: float
    phi_hat: float
    stats: BlockStats
    residuals: np.ndarray
    centered_residuals: np.ndarray


def _window_sums(y: np.ndarray, B: int):
    """Raw double-sum values (numerator N, denominator D) in O(T).

    Returns the unnormalized sums so callers can pick their own scaling;
    both are exact functions of np.diff(y).
    """
    T = y.shape[0]
    d = np.diff(y)
    p = np.empty(T)
    p[0] = 0.0
    np.cumsum(d, out=p[1:])

    a = np.arange(T - B)

    # Numerator: sum over blocks of ((y_{j+B}-y_j)^2 - sum d^2) / 2.
    q = np.concatenate(([0.0], np.cumsum(d * d)))
    diffp = p[a + B] - p[a]
    num_inner = 0.5 * (diffp * diffp - (q[a + B] - q[a]))

    # Denominator: sum over blocks of sum_{m=j+1}^{j+B-1} (y_m - y_j)^2,
    # expanded through prefix sums of p and p^2.
    s1 = np.concatenate(([0.0], np.cumsum(p)))
    s2 = np.concatenate(([0.0], np.cumsum(p * p)))
    sum1 = s1[a + B] - s1[a + 1]
    sum2 = s2[a + B] - s2[a + 1]
    den_inner = sum2 - 2.0 * p[a] * sum1 + (B - 1) * p[a] * p[a]
    np.maximum(den_inner, 0.0, out=den_inner)

    return float(num_inner.sum()), float(den_inner.sum()), d, p


def block_stats(series, B: int) -> BlockStats:
    """Pooled block statistics Y1, Y2 for blocklength B (2 <= B < T)."""
    y = as_series(series)
    T = y.shape[0]
    B = int(B)
    if not 2 <= B < T:
        raise BadBlocklength(f"need 2 <= B < T, got B={B}, T={T}")
    num, den, _, _ = _window_sums(y, B)
    y1 = num / (B**1.5 * np.sqrt(T))
    y2 = den / (B * B * T)
    if not (np.isfinite(y1) and np.isfinite(y2)):
        raise UrblockError(
            f"non-finite block statistics (y1={y1}, y2={y2}); "
            "input scale is too extreme"
        )
    return BlockStats(y1=y1, y2=y2, B=B, T=T)


def pooled_fit(series, B: int) -> PooledFit:
    """Pooled OLS fit of rho across all overlapping blocks.

    Raises DegenerateSeries when every within-block deviation is zero
    (constant series), leaving the estimator undefined.
    """
    y = as_series(series)
    T = y.shape[0]
    B = int(B)
    if not 2 <= B < T:
        raise BadBlocklength(f"need 2 <= B < T, got B={B}, T={T}")
    num, den, d, p = _window_sums(y, B)
    if den == 0.0:
        raise DegenerateSeries(
            "series is constant within every block; pooled estimator undefined"
        )
    # phi_hat = Y1/(Y2*sqrt(BT)) simplifies exactly to the raw-sum ratio.
    phi = num / den
    rho = 1.0 + phi
    if not np.isfinite(phi):
        raise UrblockError("non-finite pooled estimate; input scale too extreme")

    residuals = np.empty(T)
    residuals[0] = 0.0
    residuals[1:] = y[1:] - rho * y[:-1]

    # Same residual deviations, assembled from differences only:
    # u_t - mean u = (dy_t - mean dy) - phi*((y_{t-1}-y_1) - mean(y-y_1)).
    pl = p[:-1]
    e = (d - d.mean()) - phi * (pl - pl.mean())
    centered = np.empty(T)
    centered[0] = 0.0
    centered[1:] = e

    y1 = num / (B**1.5 * np.sqrt(T))
    y2 = den / (B * B * T)
    stats = BlockStats(y1=y1, y2=y2, B=B, T=T)
    return PooledFit(
        rho_hat=rho,
        phi_hat=phi,
        stats=stats,
        residuals=residuals,
        centered_residuals=centered,
    )
