"""Heteroskedasticity nuisance estimators and the variance time transform.

All three estimators consume the residual vector u with the convention
u[0] = 0 (the first residual is undefined and never enters any sum):

    sigma2 = (T-2)^{-1} sum_{j=2}^{T} (u_j - ubar)^2
    kappa2 = [sum_j sum_t (u_{j+1} - ubar)^2 (u_{j+t} - blockmean_j)^2]
             / [sum_j sum_t (u_{j+t} - blockmean_j)^2]
    eta(s) = cumulative share of squared residual deviations up to floor(sT)

eta is self-normalized (eta(1) = 1 exactly), nondecreasing by
construction, and made strictly increasing by an epsilon blend so the
piecewise-linear inverse is well defined.  The time transform re-indexes
the series by the inverse profile, optionally on an auxiliary grid
T~ = k*T (k <= 10) chosen as the smallest multiple whose index map
covers every original observation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    BadBlocklength,
    DegenerateResiduals,
    ProfileDegenerate,
    as_series,
)

__all__ = [
    "VarianceProfile",
    "NuisanceEstimates",
    "sigma2_hat",
    "kappa2_hat",
    "variance_profile",
    "invert_profile",
    "time_transform",
    "nuisance_estimates",
]

# Profile segments flatter than this (slope of eta per unit s) count as
# flat; a run of more than MAX_FLAT_RUN consecutive flat segments makes
# the inverse increment unbounded for practical purposes.  Runs up to
# MAX_FLAT_RUN are structural: the estimated profile always starts with
# two zero-variance segments.
MIN_PROFILE_SLOPE = 1e-9
MAX_FLAT_RUN = 2

# Largest auxiliary-grid multiple tried by the time transform.
MAX_AUX_MULTIPLE = 10


def _residual_vector(residuals) -> np.ndarray:
    u = np.ascontiguousarray(residuals, dtype=np.float64)
    if u.ndim != 1:
        raise ValueError("residuals must be 1-dimensional")
    if u.shape[0] < 4:
        raise ValueError(f"need at least 4 residuals, got {u.shape[0]}")
    if not np.all(np.isfinite(u)):
        raise ValueError("residuals contain non-finite values")
    return u


def sigma2_hat(residuals) -> float:
    """Sample variance of the residuals u_2..u_T with divisor T-2."""
    u = _residual_vector(residuals)
    T = u.shape[0]
    tail = u[1:]
    dev = tail - tail.mean()
    ss = float(dev @ dev)
    if ss == 0.0:
        raise DegenerateResiduals("all residuals identical; sigma2 is zero")
    return ss / (T - 2)


def kappa2_hat(residuals, B: int) -> float:
    """Fourth-to-second-moment ratio over all overlapping residual blocks.

    Weight for block j is (u_{j+1} - ubar)^2; the block terms are squared
    deviations from the block's own mean.  Equals the common squared
    deviation when residual deviations are all of one magnitude, and
    estimates (integral of sigma^4)/(integral of sigma^2) in general.
    """
    u = _residual_vector(residuals)
    T = u.shape[0]
    B = int(B)
    if not 2 <= B < T:
        raise BadBlocklength(f"need 2 <= B < T, got B={B}, T={T}")
    ubar = u[1:].mean()

    p = np.concatenate(([0.0], np.cumsum(u)))
    q = np.concatenate(([0.0], np.cumsum(u * u)))
    j = np.arange(1, T - B + 1)
    bsum = p[j + B] - p[j]
    # Sum of squared deviations from the block mean, per block.
    s = (q[j + B] - q[j]) - bsum * bsum / B
    np.maximum(s, 0.0, out=s)

    lead = u[j] - ubar
    den = float(s.sum())
    if den <= 0.0:
        raise DegenerateResiduals("residual blocks carry no variance")
    num = float((lead * lead * s).sum())
    return num / den


@dataclass(frozen=True)
class VarianceProfile:
    """Estimated cumulative variance share on a uniform grid.

    breakpoints is the grid 0, 1/T, ..., 1; values are the profile
    heights with values[0] = 0 and values[-1] = 1 exactly, strictly
    increasing.  Both evaluation and inversion are piecewise linear.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def value(self, s):
        return np.interp(s, self.breakpoints, self.values)

    def inverse(self, u):
        return np.interp(u, self.values, self.breakpoints)

    @property
    def grid_size(self) -> int:
        return self.breakpoints.shape[0] - 1

    def min_slope(self) -> float:
        return float(np.min(np.diff(self.values)) * self.grid_size)


@dataclass(frozen=True)
class NuisanceEstimates:
    sigma2_hat: float
    kappa2_hat: float
    profile: VarianceProfile


def variance_profile(residuals) -> VarianceProfile:
    """Cumulative variance-share profile of the residuals.

    Grid value i/T carries the share of sum_{j=2}^{i} (u_j - running
    mean)^2 in the total sum of squared deviations; increments are
    accumulated in the Welford product form (u_i - m_{i-1})(u_i - m_i),
    which is nonnegative, so the raw profile is nondecreasing.  A blend
    with an epsilon multiple of the identity plus a nextafter sweep then
    guarantees strict increase without moving the endpoints.
    """
    u = _residual_vector(residuals)
    T = u.shape[0]
    tail = u[1:]

    counts = np.arange(1, T, dtype=np.float64)
    means = np.cumsum(tail) / counts
    inc = (tail[1:] - means[:-1]) * (tail[1:] - means[1:])
    np.maximum(inc, 0.0, out=inc)

    w = np.zeros(T + 1)
    np.cumsum(inc, out=w[3:])
    total = w[T]
    if total <= 0.0:
        raise DegenerateResiduals("all residuals identical; profile undefined")

    grid = np.arange(T + 1, dtype=np.float64) / T
    v = (w / total + 1e-12 * grid) / (1.0 + 1e-12)
    v[0] = 0.0
    v[T] = 1.0

    if np.any(np.diff(v) <= 0.0):
        # The epsilon blend is below one ulp for large T near 1; repair
        # residual ties without disturbing the exact endpoints.
        for i in range(1, T + 1):
            if v[i] <= v[i - 1]:
                v[i] = np.nextafter(v[i - 1], np.inf)
        if v[T] != 1.0:
            v[T] = 1.0
            for i in range(T - 1, 0, -1):
                if v[i] >= v[i + 1]:
                    v[i] = np.nextafter(v[i + 1], -np.inf)
                else:
                    break
        if v[0] != 0.0 or np.any(np.diff(v) <= 0.0):
            raise DegenerateResiduals(
                "variance profile cannot be made strictly increasing"
            )
    return VarianceProfile(breakpoints=grid, values=v)


def invert_profile(profile: VarianceProfile, u):
    """Piecewise-linear inverse of the profile at u in [0,1].

    Values outside [0,1] by more than 1e-9 trigger a diagnostic warning;
    all inputs are clamped into [0,1] before inversion.
    """
    arr = np.asarray(u, dtype=np.float64)
    if np.any(arr < -1e-9) or np.any(arr > 1.0 + 1e-9):
        warnings.warn(
            "invert_profile input outside [0,1]; clamping", stacklevel=2
        )
    arr = np.clip(arr, 0.0, 1.0)
    out = np.interp(arr, profile.values, profile.breakpoints)
    return float(out) if np.isscalar(u) or np.ndim(u) == 0 else out


def _transform_indices(profile: VarianceProfile, T: int, k: int) -> np.ndarray:
    """0-based source indices of the transformed series on grid k*T."""
    n_aux = k * T
    t = np.arange(1, n_aux + 1, dtype=np.float64) / n_aux
    inv = np.interp(t, profile.values, profile.breakpoints)
    # Defensive floor: inv*T can land one ulp below an exact integer.
    idx = np.floor(inv * T + 1e-9).astype(np.int64)
    np.clip(idx, 1, T, out=idx)
    return idx - 1


def time_transform(series, profile: VarianceProfile) -> np.ndarray:
    """Re-index the series by the inverse variance profile.

    The auxiliary length is k*T for the smallest k in 1..10 whose index
    map covers every original observation at least once (duplicating
    points in low-volatility stretches instead of dropping points in
    high-volatility stretches).  When no multiple up to the cap achieves
    full coverage -- the generic outcome for an estimated profile, since
    some index interval is always narrower than any bounded grid -- the
    transform falls back to the plain T-point grid (k = 1), matching the
    statistic's definition on an untransformed-length series.

    Raises ProfileDegenerate when the profile is flat (slope below
    MIN_PROFILE_SLOPE) over a run of more than MAX_FLAT_RUN consecutive
    grid segments: across such a stretch the inverse jumps an unbounded
    number of observations in a single step.  Shorter flat runs are
    structural — the first two segments of any estimated profile carry
    no variance yet — and leave the inverse increments bounded.
    """
    y = as_series(series)
    T = y.shape[0]
    if profile.breakpoints.shape[0] != T + 1:
        raise ValueError(
            f"profile grid size {profile.grid_size} does not match T={T}"
        )
    flat = np.diff(profile.values) * T < MIN_PROFILE_SLOPE
    if flat.any():
        # Longest run of consecutive flat segments.
        edged = np.concatenate(([False], flat, [False]))
        starts = np.flatnonzero(edged[1:] & ~edged[:-1])
        ends = np.flatnonzero(~edged[1:] & edged[:-1])
        if int((ends - starts).max()) > MAX_FLAT_RUN:
            raise ProfileDegenerate(
                f"profile is flat (slope < {MIN_PROFILE_SLOPE:g}) over "
                f"{int((ends - starts).max())} consecutive segments; "
                "inverse increment unbounded"
            )
    chosen = None
    for k in range(1, MAX_AUX_MULTIPLE + 1):
        idx = _transform_indices(profile, T, k)
        seen = np.zeros(T, dtype=bool)
        seen[idx] = True
        # Coverage of the first observation is not required: it carries
        # no profile mass (the profile's first two grid values are both
        # zero), so no inverse value can map to it.
        if seen[1:].all():
            chosen = idx
            break
    if chosen is None:
        chosen = _transform_indices(profile, T, 1)
    return y[chosen]


def nuisance_estimates(residuals, B: int) -> NuisanceEstimates:
    """Convenience bundle: sigma2, kappa2, and the variance profile."""
    return NuisanceEstimates(
        sigma2_hat=sigma2_hat(residuals),
        kappa2_hat=kappa2_hat(residuals, B),
        profile=variance_profile(residuals),
    )
