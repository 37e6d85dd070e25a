"""Multi-asset Black-Scholes market: covariance assembly and path mapping.

The scaled Brownian vector stacks sigma_i * W_i(t_j) in asset-major order:
row index i (0-based) corresponds to asset i1 = i // m and monitoring date
i2 = i % m.  Every module in the package shares this single row
convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FactorizationError

PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class MarketSpec:
    """Black-Scholes market description with a discrete monitoring grid.

    Parameters
    ----------
    s0 : array_like, shape (n,)
        Initial asset prices, strictly positive.
    sigma : array_like, shape (n,)
        Volatilities per sqrt(year), strictly positive.
    rho : array_like, shape (n, n)
        Instantaneous correlation matrix (symmetric, unit diagonal).
    rate : float
        Risk-free rate per year.
    horizon : float
        Maturity T in years.
    steps : int
        Number of monitoring dates m; the default grid is t_j = j*T/m.
    times : array_like, shape (m,), optional
        Explicit (increasing, positive) monitoring dates overriding the
        equally spaced grid.
    """

    s0: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    rate: float
    horizon: float
    steps: int
    times: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "s0",
                           np.atleast_1d(np.asarray(self.s0, float)))
        object.__setattr__(self, "sigma",
                           np.atleast_1d(np.asarray(self.sigma, float)))
        object.__setattr__(self, "rho", np.asarray(self.rho, float))
        if self.times is not None:
            object.__setattr__(self, "times", np.asarray(self.times, float))
        n = self.s0.size
        if self.sigma.size != n or self.rho.shape != (n, n):
            raise ValueError("s0, sigma and rho dimensions are inconsistent")
        if np.any(self.s0 <= 0) or np.any(self.sigma <= 0):
            raise ValueError("initial prices and volatilities must be > 0")
        if self.horizon <= 0 or self.steps < 1:
            raise ValueError("need horizon > 0 and at least one date")
        if not np.allclose(self.rho, self.rho.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(self.rho), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        if self.times is not None:
            if self.times.shape != (self.steps,):
                raise ValueError("times must have one entry per step")
            if self.times[0] <= 0 or np.any(np.diff(self.times) <= 0):
                raise ValueError("times must be positive and increasing")

    @property
    def n_assets(self) -> int:
        return self.s0.size

    @property
    def dimension(self) -> int:
        """Total problem dimension m*n."""
        return self.n_assets * self.steps

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def monitor_times(self) -> np.ndarray:
        if self.times is not None:
            return self.times
        return np.arange(1, self.steps + 1) * self.dt

    def row_asset(self, row: int) -> int:
        return row // self.steps

    def row_time_index(self, row: int) -> int:
        return row % self.steps

    def asset_rows(self, asset: int) -> np.ndarray:
        """Row indices of one asset's monitored values."""
        return np.arange(asset * self.steps, (asset + 1) * self.steps)

    def log_drift_rows(self) -> np.ndarray:
        """(r - sigma^2/2) t per row, asset-major."""
        nu = self.rate - 0.5 * self.sigma**2
        return np.repeat(nu, self.steps) * np.tile(self.monitor_times,
                                                   self.n_assets)

    def key(self) -> bytes:
        """Stable content hashable across processes (used for caching)."""
        parts = [self.s0, self.sigma, self.rho,
                 np.array([self.rate, self.horizon, float(self.steps)]),
                 self.monitor_times]
        return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)


@dataclass(frozen=True)
class CovarianceFactor:
    """Lower-triangular Cholesky factor of the path covariance.

    Rows follow the shared asset-major convention: row i holds asset
    i // m at date index i % m.
    """

    matrix: np.ndarray


def build_covariance(spec: MarketSpec) -> np.ndarray:
    """Covariance of the stacked scaled Brownian vector, shape (mn, mn).

    Block (i, j) is min(t_a, t_b) scaled by rho_ij * sigma_i * sigma_j.
    """
    t = spec.monitor_times
    min_pattern = np.minimum.outer(t, t)
    scale = spec.rho * np.outer(spec.sigma, spec.sigma)
    return np.kron(scale, min_pattern)


def cholesky(matrix: np.ndarray,
             pivot_rtol: float = PIVOT_RTOL) -> CovarianceFactor:
    """Lower-triangular factor L with L L' = matrix.

    Raises
    ------
    FactorizationError
        If a pivot falls below pivot_rtol times the largest diagonal
        entry, naming the failing index (signals rank deficiency, e.g. a
        correlation of exactly +/-1).
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise FactorizationError("matrix is not symmetric")
    n = a.shape[0]
    tol = pivot_rtol * np.diag(a).max()
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if pivot <= tol:
            raise FactorizationError(
                f"pivot {pivot:.3e} at index {j} below tolerance {tol:.3e}; "
                "matrix is rank deficient or indefinite")
        low[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            low[j + 1:, j] = (a[j + 1:, j]
                              - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return CovarianceFactor(low)


def log_prices_from_normals(spec: MarketSpec, a: np.ndarray,
                            z: np.ndarray) -> np.ndarray:
    """Log prices for a batch of standard-normal vectors.

    ``z`` has shape (..., mn); the result has the same shape, rows in the
    shared asset-major convention.
    """
    eta = np.log(np.repeat(spec.s0, spec.steps)) + spec.log_drift_rows()
    return eta + z @ a.T


def asset_paths(spec: MarketSpec, transform, z: np.ndarray) -> np.ndarray:
    """Asset prices S_i(t_j) for one normal vector, shape (n, m)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (spec.dimension,):
        raise ValueError(f"z must have shape ({spec.dimension},)")
    if not np.all(np.isfinite(z)):
        raise ValueError("normal vector contains non-finite components")
    a = transform.a if hasattr(transform, "a") else np.asarray(transform)
    log_s = log_prices_from_normals(spec, a, z)
    return np.exp(log_s).reshape(spec.n_assets, spec.steps)
