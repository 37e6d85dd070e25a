"""Payoff families, barrier clauses and the quantities the samplers need.

Barrier comparisons use strict inequality for survival (S < B for an up
barrier, S > B for a down barrier); a knock-in clause is triggered on the
exact complement, so in-out parity holds pathwise at the indicator level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._normal import norm_cdf
from .market import MarketSpec

FAMILIES = ("asian_basket_call", "binary_asian", "binary", "vanilla_put")
DIRECTIONS = ("up", "down")
BARRIER_KINDS = ("knock_out", "knock_in")


@dataclass(frozen=True)
class BarrierClause:
    """One monitored barrier: asset index, level, direction and effect."""

    asset: int
    level: float
    direction: str  # up | down
    kind: str       # knock_out | knock_in

    def __post_init__(self) -> None:
        if self.level <= 0:
            raise ValueError("barrier level must be positive")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.kind not in BARRIER_KINDS:
            raise ValueError(f"unknown barrier kind {self.kind!r}")
        if self.asset < 0:
            raise ValueError("asset index must be nonnegative")


@dataclass(frozen=True)
class ContractSpec:
    """Payoff family plus an ordered list of barrier clauses.

    ``strike`` is the strike K for price payoffs and the average threshold
    for ``binary_asian``.  ``weights`` are basket weights per asset-major
    row; when omitted, price averages use the uniform 1/(mn) convention
    and the terminal row for ``vanilla_put``.
    """

    family: str
    strike: float
    barriers: tuple[BarrierClause, ...] = ()
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown payoff family {self.family!r}")
        object.__setattr__(self, "barriers", tuple(self.barriers))
        n_in = sum(1 for b in self.barriers if b.kind == "knock_in")
        if n_in > 1 or (n_in == 1 and len(self.barriers) > 1):
            raise ValueError(
                "supported barrier sets: one knock-in clause, or any "
                "number of knock-out clauses")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise ValueError("basket weights must be nonnegative")
            object.__setattr__(self, "weights", w)

    def row_weights(self, spec: MarketSpec) -> np.ndarray:
        """Basket weights per asset-major row (family default if unset)."""
        if self.weights is not None:
            w = self.weights
            if w.shape != (spec.dimension,):
                raise ValueError(
                    f"weights must have shape ({spec.dimension},)")
            return w
        if self.family == "vanilla_put":
            w = np.zeros(spec.dimension)
            w[spec.steps - 1] = 1.0  # terminal date of the first asset
            return w
        return np.full(spec.dimension, 1.0 / spec.dimension)

    def conditioned_rows(self, spec: MarketSpec) -> np.ndarray:
        """Rows of all barrier assets (used to orient the transform)."""
        rows = [spec.asset_rows(b.asset) for b in self.barriers]
        if not rows:
            return np.array([], dtype=int)
        return np.unique(np.concatenate(rows))

    def key(self) -> bytes:
        parts = [self.family, repr(self.strike)]
        for b in self.barriers:
            parts.append(f"{b.asset}|{b.level!r}|{b.direction}|{b.kind}")
        if self.weights is not None:
            parts.append(self.weights.tobytes().hex())
        return "/".join(parts).encode()


def barrier_threshold(spec: MarketSpec, clause: BarrierClause,
                      j: int) -> float:
    """Log-space level b(t_j) that sigma*W must stay below (above) at date j.

    ``j`` is 1-based following the monitoring-date numbering.
    """
    if not 1 <= j <= spec.steps:
        raise ValueError(f"time index {j} outside 1..{spec.steps}")
    t = spec.monitor_times[j - 1]
    sig = spec.sigma[clause.asset]
    return math.log(clause.level / spec.s0[clause.asset]) - (
        spec.rate - 0.5 * sig**2) * t


def barrier_thresholds(spec: MarketSpec, clause: BarrierClause) -> np.ndarray:
    """b(t_j) for all monitoring dates, shape (m,)."""
    sig = spec.sigma[clause.asset]
    return np.log(clause.level / spec.s0[clause.asset]) - (
        spec.rate - 0.5 * sig**2) * spec.monitor_times


def smooth_values(prices: np.ndarray, contract: ContractSpec,
                  spec: MarketSpec) -> np.ndarray:
    """Smooth payoff part f for a batch of flat price rows (..., mn).

    Returns the inner value before flooring at zero: basket average minus
    strike, the average-threshold indicator, the constant 1, or K minus
    the terminal price.
    """
    prices = np.asarray(prices, dtype=float)
    if contract.family == "asian_basket_call":
        return prices @ contract.row_weights(spec) - contract.strike
    if contract.family == "binary_asian":
        avg = prices @ contract.row_weights(spec)
        return (avg >= contract.strike).astype(float)
    if contract.family == "binary":
        return np.ones(prices.shape[:-1])
    # vanilla_put: terminal price of the first asset
    return contract.strike - prices[..., spec.steps - 1]


def smooth_payoff(paths: np.ndarray, contract: ContractSpec,
                  spec: MarketSpec) -> float:
    """Smooth payoff part for one path matrix of shape (n, m)."""
    paths = np.asarray(paths, dtype=float)
    if paths.shape != (spec.n_assets, spec.steps):
        raise ValueError(f"paths must have shape "
                         f"({spec.n_assets}, {spec.steps})")
    return float(smooth_values(paths.reshape(-1), contract, spec))


def clause_survival(prices: np.ndarray, clause: BarrierClause,
                    spec: MarketSpec) -> np.ndarray:
    """True where the path never crosses the clause level (strictly)."""
    rows = spec.asset_rows(clause.asset)
    vals = prices[..., rows]
    if clause.direction == "up":
        return np.max(vals, axis=-1) < clause.level
    return np.min(vals, axis=-1) > clause.level


def barrier_factor(prices: np.ndarray, contract: ContractSpec,
                   spec: MarketSpec) -> np.ndarray:
    """Product of barrier indicators for flat price rows (..., mn)."""
    factor = np.ones(prices.shape[:-1])
    for clause in contract.barriers:
        alive = clause_survival(prices, clause, spec)
        if clause.kind == "knock_out":
            factor = factor * alive
        else:
            factor = factor * ~alive
    return factor


def payoff_values(prices: np.ndarray, contract: ContractSpec,
                  spec: MarketSpec) -> np.ndarray:
    """Discounted payoff for flat price rows (..., mn)."""
    f = np.maximum(smooth_values(prices, contract, spec), 0.0)
    discount = math.exp(-spec.rate * spec.horizon)
    return discount * f * barrier_factor(prices, contract, spec)


def evaluate_payoff(paths: np.ndarray, contract: ContractSpec,
                    spec: MarketSpec) -> float:
    """Discounted payoff sample for one path matrix of shape (n, m)."""
    paths = np.asarray(paths, dtype=float)
    if paths.shape != (spec.n_assets, spec.steps):
        raise ValueError(f"paths must have shape "
                         f"({spec.n_assets}, {spec.steps})")
    return float(payoff_values(paths.reshape(-1), contract, spec))


def survival_probability(s_now: float, spec: MarketSpec,
                         clause: BarrierClause) -> float:
    """One-step survival probability given the current price of the asset.

    Up barrier: P[S(t+dt) < B | S(t)]; down barrier the complementary
    tail.  Uses the equally spaced step dt = T/m.
    """
    if s_now <= 0:
        raise ValueError("current price must be positive")
    sig = spec.sigma[clause.asset]
    dt = spec.dt
    z = (math.log(clause.level / s_now) - (spec.rate - 0.5 * sig**2) * dt) / (
        sig * math.sqrt(dt))
    p_below = float(norm_cdf(z))
    return p_below if clause.direction == "up" else 1.0 - p_below
