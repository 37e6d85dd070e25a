"""Orthogonal transform construction for variance concentration.

Starting from the Cholesky factor C of the path covariance, an orthogonal
matrix Q is built column by column so that A = C Q concentrates the
variance of the linearized smooth payoff in the leading coordinates.
Column k maximizes the squared gradient of the linearized payoff subject
to unit norm and orthogonality to the previous columns; the exact
maximizer is the normalized projection of the gradient vector onto the
orthogonal complement of the span of the previous columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FactorizationError
from .market import CovarianceFactor, MarketSpec, build_covariance, cholesky

ORTHO_TOL = 1e-9
RECONSTRUCT_RTOL = 1e-9
DEGENERATE_RTOL = 1e-13
# keep exponentials representable; direction is unaffected by the shift
EXP_SHIFT_LIMIT = 600.0


@dataclass(frozen=True)
class LinearizedPayoff:
    """Log-scale linearization data for the smooth payoff part.

    ``mu[i] = log(weights[i] * s0_{i1}) + (r - sigma_{i1}^2/2) * t_{i2}``
    per asset-major row; rows with zero weight carry mu = -inf and drop
    out of the gradient sums.
    """

    mu: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class PathTransform:
    """The mn x mn matrix mapping standard normals to the path vector.

    ``kind`` records the provenance: plain Cholesky factor or Cholesky
    times the variance-concentrating orthogonal matrix.
    """

    a: np.ndarray
    kind: str  # cholesky_only | cholesky_lt
    q: np.ndarray | None = None


def linearization(spec: MarketSpec, weights: np.ndarray) -> LinearizedPayoff:
    """Linearized-payoff data for given basket weights (asset-major rows)."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (spec.dimension,):
        raise ValueError(f"weights must have shape ({spec.dimension},)")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    mu = log_w + np.log(np.repeat(spec.s0, spec.steps)) + spec.log_drift_rows()
    return LinearizedPayoff(mu=mu, weights=weights)


def _exp_weights(mu: np.ndarray,
                 offset: np.ndarray | float = 0.0) -> np.ndarray:
    """exp(mu + offset), shifted into representable range if needed."""
    s = mu + offset
    top = np.max(s[np.isfinite(s)], initial=-np.inf)
    if not np.isfinite(top):
        raise ValueError("all linearization weights are zero")
    shift = max(0.0, top - EXP_SHIFT_LIMIT)
    return np.exp(s - shift)


def lt_gradient_vector(chol: CovarianceFactor | np.ndarray,
                       q_prev: np.ndarray,
                       lin: LinearizedPayoff) -> np.ndarray:
    """Gradient of the linearized payoff at the column-k expansion point.

    ``q_prev`` holds the previously fixed orthonormal columns, shape
    (mn, k-1).  Under exponent overflow the vector is rescaled by a common
    positive factor (the direction is what the optimization consumes).
    """
    c = chol.matrix if isinstance(chol, CovarianceFactor) else np.asarray(chol)
    q_prev = np.asarray(q_prev, dtype=float).reshape(c.shape[0], -1)
    offset = c @ q_prev.sum(axis=1) if q_prev.shape[1] else 0.0
    return c.T @ _exp_weights(lin.mu, offset)


def next_lt_column(v: np.ndarray, q_prev: np.ndarray) -> np.ndarray:
    """Unit vector maximizing <v, q>^2 among q orthogonal to q_prev.

    The maximizer is the normalized projection of v onto the orthogonal
    complement; a doubly-applied projection keeps the result orthogonal to
    working precision.  A degenerate projection (v inside the span) falls
    back to the first canonical basis vector with a nonzero projection.
    """
    v = np.asarray(v, dtype=float)
    q_prev = np.asarray(q_prev, dtype=float).reshape(v.size, -1)

    def project(x: np.ndarray) -> np.ndarray:
        if q_prev.shape[1] == 0:
            return x
        x = x - q_prev @ (q_prev.T @ x)
        return x - q_prev @ (q_prev.T @ x)

    p = project(v)
    norm_p = np.linalg.norm(p)
    if norm_p >= DEGENERATE_RTOL * max(np.linalg.norm(v), 1.0):
        return p / norm_p
    for i in range(v.size):
        e = np.zeros(v.size)
        e[i] = 1.0
        p = project(e)
        norm_p = np.linalg.norm(p)
        if norm_p > 1e-8:
            return p / norm_p
    raise FactorizationError("no orthogonal complement direction found")


def build_lt_matrix(chol: CovarianceFactor | np.ndarray,
                    lin: LinearizedPayoff) -> np.ndarray:
    """All mn orthogonal columns, built iteratively."""
    c = chol.matrix if isinstance(chol, CovarianceFactor) else np.asarray(chol)
    mn = c.shape[0]
    q = np.zeros((mn, mn))
    exponent_offset = np.zeros(mn)
    for k in range(mn):
        v = c.T @ _exp_weights(lin.mu, exponent_offset)
        col = next_lt_column(v, q[:, :k])
        q[:, k] = col
        exponent_offset += c @ col
    return q


def fix_first_column_sign(chol: CovarianceFactor | np.ndarray, q: np.ndarray,
                          barrier_rows: np.ndarray) -> np.ndarray:
    """Orient the first column so the barrier rows of A are mostly positive.

    The sign of each column is free; flipping the first one makes the
    conditional-sampling bounds deterministic.  Returns a copy when a flip
    is needed, otherwise the input.
    """
    c = chol.matrix if isinstance(chol, CovarianceFactor) else np.asarray(chol)
    barrier_rows = np.asarray(barrier_rows, dtype=int)
    if barrier_rows.size == 0:
        return q
    first = c[barrier_rows] @ q[:, 0]
    if first.sum() < 0:
        q = q.copy()
        q[:, 0] = -q[:, 0]
    return q


def _check_transform(a: np.ndarray, cov: np.ndarray,
                     q: np.ndarray | None) -> None:
    scale = max(np.abs(cov).max(), 1e-300)
    resid = np.abs(a @ a.T - cov).max() / scale
    if resid > RECONSTRUCT_RTOL:
        raise FactorizationError("transform does not reproduce the "
                                 f"covariance (residual {resid:.2e})")
    if q is not None:
        ortho = np.abs(q.T @ q - np.eye(q.shape[0])).max()
        if ortho > ORTHO_TOL:
            raise FactorizationError("transform columns are not "
                                     f"orthonormal (residual {ortho:.2e})")


def build_path_transform(spec: MarketSpec, weights: np.ndarray | None = None,
                         barrier_rows: np.ndarray | None = None,
                         kind: str = "cholesky_lt") -> PathTransform:
    """Assemble the full transform for a market, with validity checks."""
    cov = build_covariance(spec)
    c = cholesky(cov)
    if kind == "cholesky_only":
        transform = PathTransform(a=c.matrix, kind=kind, q=None)
        _check_transform(transform.a, cov, None)
        return transform
    if kind != "cholesky_lt":
        raise ValueError(f"unknown transform kind {kind!r}")
    if weights is None:
        weights = np.full(spec.dimension, 1.0 / spec.dimension)
    lin = linearization(spec, weights)
    q = build_lt_matrix(c, lin)
    if barrier_rows is not None:
        q = fix_first_column_sign(c, q, barrier_rows)
    a = c.matrix @ q
    transform = PathTransform(a=a, kind=kind, q=q)
    _check_transform(a, cov, q)
    return transform
