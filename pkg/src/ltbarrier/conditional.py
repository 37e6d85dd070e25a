"""Conditional sampling of the first uniform coordinate.

Given the transform A and the other mn-1 uniforms, every barrier clause
restricts z_1 = Phi^{-1}(u_1) to a half-line per monitored date.  A set of
knock-out clauses intersects to a single z-interval; a knock-in clause
admits exactly the complement of its survive-everywhere interval, a union
of up to two intervals.  The first uniform is rescaled into the admissible
region and the sample is weighted by the region's measure, which keeps
the estimator unbiased.

A second, incremental scheme conditions the barrier asset step by step
(the classical conditional Monte Carlo estimator); it serves as the
pseudo-random baseline and cannot be combined with the full-matrix
transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._normal import norm_cdf, norm_ppf
from .contracts import (BarrierClause, ContractSpec, barrier_thresholds,
                        payoff_values, smooth_values)
from .errors import CapabilityError
from .market import MarketSpec, cholesky, log_prices_from_normals


@dataclass(frozen=True)
class BoundPair:
    """Admissible interval [lower, upper] for the first uniform."""

    lower: float
    upper: float

    @property
    def weight(self) -> float:
        return max(self.upper - self.lower, 0.0)


@dataclass(frozen=True)
class IntervalUnion:
    """Union of up to two disjoint subintervals of [0, 1], sorted."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        last = -1.0
        for lo, hi in self.intervals:
            if not (0.0 <= lo <= hi <= 1.0) or lo < last:
                raise ValueError("intervals must be sorted, disjoint subsets "
                                 "of [0, 1]")
            last = hi

    @property
    def weight(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)


def _transform_matrix(a) -> np.ndarray:
    return a.a if hasattr(a, "a") else np.asarray(a, dtype=float)


def _clause_z_interval(a: np.ndarray, spec: MarketSpec, clause: BarrierClause,
                       z_rest: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Survive-every-date interval (z_lo, z_hi) for one clause.

    ``z_rest`` has shape (N, mn-1).  The clause's knock effect is ignored
    here; callers intersect (knock-out) or take the complement (knock-in).
    An infeasible fixed part (rows with zero first-column coefficient)
    yields the empty interval (+inf, -inf).
    """
    rows = spec.asset_rows(clause.asset)
    a1 = a[rows, 0]
    num = barrier_thresholds(spec, clause)[None, :] - z_rest @ a[rows, 1:].T
    n = z_rest.shape[0]
    pos, neg, zero = a1 > 0, a1 < 0, a1 == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / a1[None, :]

    def row_min(mask):
        return (np.min(ratio[:, mask], axis=1) if mask.any()
                else np.full(n, np.inf))

    def row_max(mask):
        return (np.max(ratio[:, mask], axis=1) if mask.any()
                else np.full(n, -np.inf))

    if clause.direction == "up":  # survive: a1 * z1 < num
        z_hi, z_lo = row_min(pos), row_max(neg)
        feasible = (np.all(num[:, zero] > 0, axis=1) if zero.any()
                    else np.ones(n, dtype=bool))
    else:  # survive: a1 * z1 > num
        z_lo, z_hi = row_max(pos), row_min(neg)
        feasible = (np.all(num[:, zero] < 0, axis=1) if zero.any()
                    else np.ones(n, dtype=bool))
    z_lo = np.where(feasible, z_lo, np.inf)
    z_hi = np.where(feasible, z_hi, -np.inf)
    return z_lo, z_hi


def knockout_z_interval(a, spec: MarketSpec, contract: ContractSpec,
                        z_rest: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Intersection of all knock-out clauses' survive intervals, z-space."""
    mat = _transform_matrix(a)
    n = z_rest.shape[0]
    z_lo, z_hi = np.full(n, -np.inf), np.full(n, np.inf)
    for clause in contract.barriers:
        lo_c, hi_c = _clause_z_interval(mat, spec, clause, z_rest)
        z_lo, z_hi = np.maximum(z_lo, lo_c), np.minimum(z_hi, hi_c)
    return z_lo, z_hi


def knockin_z_pieces(a, spec: MarketSpec, contract: ContractSpec,
                     z_rest: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Knock-in admissible set as (-inf, lo_cap] union [hi_floor, inf).

    Returns (lo_cap, hi_floor): the complement of the clause's survive
    interval.  Overlapping pieces mean the whole line is admissible.
    """
    mat = _transform_matrix(a)
    clause = contract.barriers[0]
    z_lo, z_hi = _clause_z_interval(mat, spec, clause, z_rest)
    return z_lo, z_hi


def knockout_bounds(a, contract: ContractSpec, spec: MarketSpec,
                    u_rest: np.ndarray) -> BoundPair:
    """Bounds on u_1 enforcing every knock-out clause, given u_2..u_mn."""
    z_rest = norm_ppf(np.asarray(u_rest, dtype=float))[None, :]
    z_lo, z_hi = knockout_z_interval(a, spec, contract, z_rest)
    return BoundPair(float(norm_cdf(z_lo[0])), float(norm_cdf(z_hi[0])))


def knockin_region(a, contract: ContractSpec, spec: MarketSpec,
                   u_rest: np.ndarray) -> IntervalUnion:
    """Admissible u_1 region forcing the knock-in clause to trigger."""
    z_rest = norm_ppf(np.asarray(u_rest, dtype=float))[None, :]
    lo_cap, hi_floor = knockin_z_pieces(a, spec, contract, z_rest)
    p_low = float(norm_cdf(lo_cap[0]))
    p_high = float(norm_cdf(hi_floor[0]))
    if p_low >= p_high:
        return IntervalUnion(((0.0, 1.0),))
    pieces = []
    if p_low > 0.0:
        pieces.append((0.0, p_low))
    if p_high < 1.0:
        pieces.append((p_high, 1.0))
    return IntervalUnion(tuple(pieces))


def admissible_region(a, contract: ContractSpec, spec: MarketSpec,
                      u_rest: np.ndarray):
    """Region for u_1 under the contract's clauses (pair or union)."""
    if contract.barriers and contract.barriers[0].kind == "knock_in":
        return knockin_region(a, contract, spec, u_rest)
    return knockout_bounds(a, contract, spec, u_rest)


def rescale_u1(u1: float, region) -> tuple[float, float]:
    """Map u_1 into the admissible region; returns (u_hat, weight).

    A single interval maps affinely; a union maps u_1 proportionally into
    the concatenation of the pieces, preserving uniformity on the union.
    With weight 0 the returned u_hat is NaN and must not be used.
    """
    if isinstance(region, BoundPair):
        w = region.weight
        if w <= 0.0:
            return float("nan"), 0.0
        return region.lower + (region.upper - region.lower) * u1, w
    total = region.weight
    if total <= 0.0:
        return float("nan"), 0.0
    pos = u1 * total
    for lo, hi in region.intervals:
        width = hi - lo
        if pos <= width or (lo, hi) == region.intervals[-1]:
            return lo + min(pos, width), total
        pos -= width
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# batch kernels


def cs_values(u: np.ndarray, a, contract: ContractSpec,
              spec: MarketSpec) -> tuple[np.ndarray, np.ndarray]:
    """Conditional samples for a batch of uniforms, shape (N, mn).

    Returns (discounted weighted payoffs, weights).  Weight-0 samples
    contribute exactly zero.
    """
    u = np.asarray(u, dtype=float)
    mat = _transform_matrix(a)
    z_rest = norm_ppf(u[:, 1:])
    knock_in = (bool(contract.barriers)
                and contract.barriers[0].kind == "knock_in")
    if knock_in:
        lo_cap, hi_floor = knockin_z_pieces(mat, spec, contract, z_rest)
        p_low, p_high = norm_cdf(lo_cap), norm_cdf(hi_floor)
        w = np.minimum(p_low + 1.0 - p_high, 1.0)
        pos = u[:, 0] * w
        u_hat = np.where(pos <= p_low, pos, p_high + (pos - p_low))
        u_hat = np.where(w >= 1.0, u[:, 0], u_hat)
    else:
        z_lo, z_hi = knockout_z_interval(mat, spec, contract, z_rest)
        low, high = norm_cdf(z_lo), norm_cdf(z_hi)
        w = np.maximum(high - low, 0.0)
        u_hat = low + (high - low) * u[:, 0]
    z = np.empty_like(u)
    z[:, 0] = norm_ppf(np.where(w > 0, u_hat, 0.5))
    z[:, 1:] = z_rest
    prices = np.exp(log_prices_from_normals(spec, mat, z))
    f = np.maximum(smooth_values(prices, contract, spec), 0.0)
    discount = math.exp(-spec.rate * spec.horizon)
    values = np.where(w > 0, w * discount * f, 0.0)
    return values, w


def cs_sample(u: np.ndarray, a, contract: ContractSpec,
              spec: MarketSpec) -> float:
    """One conditional sample from one uniform vector of length mn."""
    u = np.asarray(u, dtype=float)
    if u.shape != (spec.dimension,):
        raise ValueError(f"point must have shape ({spec.dimension},)")
    values, _ = cs_values(u[None, :], a, contract, spec)
    return float(values[0])


def plain_values(u: np.ndarray, a, contract: ContractSpec,
                 spec: MarketSpec) -> np.ndarray:
    """Unconditional discounted payoffs for a batch of uniforms."""
    u = np.asarray(u, dtype=float)
    mat = _transform_matrix(a)
    z = norm_ppf(u)
    prices = np.exp(log_prices_from_normals(spec, mat, z))
    return payoff_values(prices, contract, spec)


# ---------------------------------------------------------------------------
# incremental (stepwise) conditional sampling baseline


def _stepwise_clauses(contract: ContractSpec) -> tuple[BarrierClause, ...]:
    clauses = contract.barriers
    if not clauses:
        raise CapabilityError(
            "stepwise conditional sampling needs a barrier clause")
    if any(c.kind == "knock_in" for c in clauses):
        raise CapabilityError(
            "stepwise conditional sampling supports knock-out clauses only; "
            "knock-in needs a closed-form option value at every date")
    assets = {c.asset for c in clauses}
    if len(assets) > 1:
        raise CapabilityError(
            "stepwise conditional sampling conditions a single asset's "
            f"increments; got clauses on assets {sorted(assets)}")
    return clauses


def stepwise_cs_values(
        u: np.ndarray, spec: MarketSpec,
        contract: ContractSpec) -> tuple[np.ndarray, np.ndarray]:
    """Incremental-construction conditional samples for a uniform batch.

    Coordinates are consumed time-major (one block of n per date) with the
    barrier asset first inside each block, so its increment depends only
    on the block's first coordinate.  Returns (values, likelihoods).
    """
    clauses = _stepwise_clauses(contract)
    u = np.asarray(u, dtype=float)
    n_samples, n, m = u.shape[0], spec.n_assets, spec.steps
    barrier_asset = clauses[0].asset
    order = [barrier_asset] + [i for i in range(n) if i != barrier_asset]
    order = np.asarray(order)

    dt = spec.dt
    sig = spec.sigma[order]
    step_cov = spec.rho[np.ix_(order, order)] * np.outer(sig, sig) * dt
    low = cholesky(step_cov).matrix
    drift = (spec.rate - 0.5 * sig**2) * dt
    sig_root_dt = sig[0] * math.sqrt(dt)

    up_levels = [math.log(c.level) for c in clauses if c.direction == "up"]
    dn_levels = [math.log(c.level) for c in clauses if c.direction == "down"]

    x = np.tile(np.log(spec.s0[order]), (n_samples, 1))
    likelihood = np.ones(n_samples)
    prices = np.empty((n_samples, spec.dimension))
    z_block = np.empty((n_samples, n))
    for j in range(m):
        block = u[:, j * n:(j + 1) * n]
        base = x[:, 0] + drift[0]
        p_hi = np.ones(n_samples)
        p_lo = np.zeros(n_samples)
        for level in up_levels:
            p_hi = np.minimum(p_hi, norm_cdf((level - base) / sig_root_dt))
        for level in dn_levels:
            p_lo = np.maximum(p_lo, norm_cdf((level - base) / sig_root_dt))
        gamma = np.maximum(p_hi - p_lo, 0.0)
        u_hat = p_lo + gamma * block[:, 0]
        z_block[:, 0] = norm_ppf(u_hat)
        if n > 1:
            z_block[:, 1:] = norm_ppf(block[:, 1:])
        x = x + drift + z_block @ low.T
        likelihood *= gamma
        prices[:, order * m + j] = np.exp(x)
    f = np.maximum(smooth_values(prices, contract, spec), 0.0)
    discount = math.exp(-spec.rate * spec.horizon)
    return likelihood * discount * f, likelihood


def stepwise_cs_sample(u: np.ndarray, spec: MarketSpec,
                       contract: ContractSpec) -> float:
    """One incremental conditional sample from one uniform vector."""
    u = np.asarray(u, dtype=float)
    if u.shape != (spec.dimension,):
        raise ValueError(f"point must have shape ({spec.dimension},)")
    values, _ = stepwise_cs_values(u[None, :], spec, contract)
    return float(values[0])
