"""Shared domain types, validation, and numerical utilities.

Series values are plain 1-d float64 ndarrays throughout the package;
:func:`as_series` is the single validation gate (length, finiteness).
Blocklength schemes, the least-squares kernel, and the seeded stream
contract used by every simulation live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.linalg import qr, svd

__all__ = [
    "UrblockError",
    "SchemeInfeasible",
    "RankDeficient",
    "BadBlocklength",
    "DegenerateSeries",
    "DegenerateResiduals",
    "ProfileDegenerate",
    "LagTooLarge",
    "as_series",
    "BlockScheme",
    "resolve_blocklength",
    "OlsFit",
    "ols",
    "RngStream",
]

MIN_SERIES_LENGTH = 4

# Relative singular-value cutoff below which a design matrix is treated
# as numerically singular.
RCOND_SINGULAR = 1e-12


class UrblockError(Exception):
    """Base class for all package-specific errors."""


class SchemeInfeasible(UrblockError):
    """Blocklength scheme cannot produce 2 <= B < T for this sample size."""


class RankDeficient(UrblockError):
    """Design matrix is numerically singular."""


class BadBlocklength(UrblockError):
    """Explicit blocklength outside 2 <= B < T."""


class DegenerateSeries(UrblockError):
    """Series is constant within blocks; pooled estimator undefined."""


class DegenerateResiduals(UrblockError):
    """Residuals carry no variance; nuisance estimators undefined."""


class ProfileDegenerate(UrblockError):
    """Variance profile has a near-flat segment; inverse is unbounded."""


class LagTooLarge(UrblockError):
    """Lag order leaves too few effective observations."""


def as_series(values, min_length: int = MIN_SERIES_LENGTH) -> np.ndarray:
    """Validate and return a series as a contiguous 1-d float64 array.

    Raises ValueError on wrong dimensionality, insufficient length, or
    non-finite entries.  This is the only place input data is vetted;
    all downstream functions assume a validated array.
    """
    y = np.ascontiguousarray(values, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError(f"series must be 1-dimensional, got shape {y.shape}")
    if y.shape[0] < min_length:
        raise ValueError(
            f"series too short: T={y.shape[0]} < minimum {min_length}"
        )
    if not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise ValueError(f"series contains a non-finite value at index {bad}")
    return y


@dataclass(frozen=True)
class BlockScheme:
    """How the blocklength B is derived from the sample size T.

    kind is one of:

    - "power":    B = max(2, floor(T**gamma)),  0 < gamma < 1
    - "fraction": B = max(2, floor(b*T)),       0 < b < 1
    - "explicit": B given directly

    Use the classmethod constructors; ``resolve`` returns B and enforces
    2 <= B < T.
    """

    kind: str
    param: float

    @classmethod
    def power_rule(cls, gamma: float) -> "BlockScheme":
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0,1), got {gamma}")
        return cls("power", float(gamma))

    @classmethod
    def fixed_fraction(cls, b: float) -> "BlockScheme":
        if not 0.0 < b < 1.0:
            raise ValueError(f"b must lie in (0,1), got {b}")
        return cls("fraction", float(b))

    @classmethod
    def explicit(cls, B: int) -> "BlockScheme":
        return cls("explicit", float(int(B)))

    def resolve(self, T: int) -> int:
        return resolve_blocklength(self, T)

    def label(self) -> str:
        if self.kind == "power":
            return f"T^{self.param:g}"
        if self.kind == "fraction":
            return f"{self.param:g}T"
        return f"B={int(self.param)}"


def resolve_blocklength(scheme: BlockScheme, T: int) -> int:
    """Resolve a block scheme to an integer blocklength with 2 <= B < T."""
    if T < MIN_SERIES_LENGTH:
        raise SchemeInfeasible(f"T={T} is below the minimum sample size 4")
    if scheme.kind == "power":
        B = max(2, int(np.floor(T ** scheme.param)))
    elif scheme.kind == "fraction":
        B = max(2, int(np.floor(scheme.param * T)))
    elif scheme.kind == "explicit":
        B = int(scheme.param)
    else:
        raise ValueError(f"unknown block scheme kind {scheme.kind!r}")
    if not 2 <= B < T:
        raise SchemeInfeasible(
            f"resolved blocklength B={B} violates 2 <= B < T for T={T}"
        )
    return B


@dataclass
class OlsFit:
    """Least-squares fit: coefficients, residuals, and scale diagnostics.

    stderr holds the conventional coefficient standard errors computed
    with s^2 = ssr / (n_obs - n_params); it is NaN-filled when the fit
    is saturated (n_obs == n_params).
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    ssr: float
    n_obs: int
    n_params: int
    stderr: np.ndarray = field(default=None, repr=False)

    def tstat(self, j: int) -> float:
        """t-ratio of coefficient j against zero."""
        return float(self.coefficients[j] / self.stderr[j])


def ols(design, response) -> OlsFit:
    """Least squares via QR with an explicit numerical-rank check.

    Raises RankDeficient when the design's smallest singular value is
    below RCOND_SINGULAR times its largest.  Chosen over normal
    equations for the sake of the near-collinear Fourier regressors in
    the baseline tests.
    """
    X = np.ascontiguousarray(design, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.ascontiguousarray(response, dtype=np.float64)
    n, k = X.shape
    if y.shape != (n,):
        raise ValueError(f"response shape {y.shape} does not match {n} rows")
    if n < k or k < 1:
        raise ValueError(f"need rows >= cols >= 1, got {n}x{k}")

    Q, R = qr(X, mode="reduced")
    sv = svd(R, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] / sv[0] < RCOND_SINGULAR:
        raise RankDeficient(
            f"design matrix is numerically singular "
            f"(condition ratio {0.0 if sv[0] == 0.0 else sv[-1] / sv[0]:.2e})"
        )
    beta = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ beta
    ssr = float(resid @ resid)

    if n > k:
        s2 = ssr / (n - k)
        Rinv = np.linalg.solve(R, np.eye(k))
        stderr = np.sqrt(s2 * np.sum(Rinv * Rinv, axis=1))
    else:
        stderr = np.full(k, np.nan)
    return OlsFit(beta, resid, ssr, n, k, stderr)


_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Deterministic, splittable random stream: (seed, stream id).

    Streams are backed by the Philox counter-based generator keyed by
    the 128-bit word (stream << 64) | seed, so identical (seed, stream)
    pairs reproduce identical draws bit-for-bit and distinct stream ids
    are independent regardless of execution order or parallelism.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & _MASK64) | ((self.stream & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Substream for work item ``index`` (e.g. one MC replication)."""
        return RngStream(self.seed, self.stream + index)
