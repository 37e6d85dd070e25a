"""Ready-made experiment configurations for the shipped studies.

These builders define the markets and contracts used by the bundled
config files and by the acceptance suite: a four-asset Asian basket with
a single monitored barrier (knock-out and knock-in variants), a
double-barrier binary Asian, a tight two-date binary Asian with a
mixed-sign transform column, a pure binary barrier, and down-and-in puts
including the fine-grid benchmark against the continuous-barrier formula.
"""

from __future__ import annotations

import numpy as np

from .contracts import BarrierClause, ContractSpec
from .harness import ExperimentConfig
from .market import MarketSpec

EQUI_CORR = np.array([
    [1.0, 0.6, 0.6, 0.6],
    [0.6, 1.0, 0.6, 0.6],
    [0.6, 0.6, 1.0, 0.6],
    [0.6, 0.6, 0.6, 1.0],
])

MIXED_CORR = np.array([
    [1.0, -0.5, 0.6, 0.2],
    [-0.5, 1.0, -0.2, -0.1],
    [0.6, -0.2, 1.0, 0.25],
    [0.2, -0.1, 0.25, 1.0],
])

CORR_PRESETS = {"equi": EQUI_CORR, "mixed": MIXED_CORR}


def basket_market(corr: str, sigma1: float) -> MarketSpec:
    """Four-asset basket market: six-month horizon, 130 dates."""
    return MarketSpec(
        s0=[100.0, 100.0, 100.0, 100.0],
        sigma=[sigma1, 0.25, 0.25, 0.35],
        rho=CORR_PRESETS[corr],
        rate=0.05,
        horizon=0.5,
        steps=130,
    )


def basket_barrier_config(corr: str, sigma1: float, barrier: float,
                          strike: float, knock: str = "knock_out",
                          point_kind: str = "sobol",
                          seed: int = 0) -> ExperimentConfig:
    """Asian basket call with one monitored up-barrier on the first asset."""
    market = basket_market(corr, sigma1)
    contract = ContractSpec(
        family="asian_basket_call", strike=strike,
        barriers=(BarrierClause(asset=0, level=barrier, direction="up",
                                kind=knock),))
    tag = "out" if knock == "knock_out" else "in"
    name = f"{corr}_s{int(sigma1 * 100)}_B{barrier:g}_K{strike:g}_{tag}"
    return ExperimentConfig(name=name, market=market, contract=contract,
                            point_kind=point_kind, seed=seed)


# (corr, sigma1, barrier, strike) rows of the knock-out ratio study
KNOCKOUT_ROWS = tuple(
    (corr, sigma1, barrier, strike)
    for corr in ("equi", "mixed")
    for sigma1, barrier, strike in (
        (0.25, 10000.0, 70.0),
        (0.25, 125.0, 70.0),
        (0.25, 105.0, 70.0),
        (0.25, 110.0, 100.0),
        (0.55, 105.0, 70.0),
        (0.55, 105.0, 90.0),
        (0.55, 150.0, 110.0),
    )
)

KNOCKIN_ROWS = tuple(
    (corr, sigma1, barrier, strike)
    for corr in ("equi", "mixed")
    for sigma1, barrier, strike in (
        (0.25, 105.0, 70.0),
        (0.25, 125.0, 70.0),
        (0.25, 200.0, 70.0),
        (0.55, 125.0, 70.0),
        (0.55, 125.0, 90.0),
        (0.25, 120.0, 110.0),
        (0.25, 110.0, 100.0),
    )
)

ROOTFINDING_ROWS = tuple(
    (corr, sigma1, barrier, strike)
    for corr in ("equi", "mixed")
    for sigma1, barrier, strike in (
        (0.25, 125.0, 100.0),
        (0.25, 110.0, 100.0),
        (0.25, 105.0, 100.0),
        (0.25, 110.0, 90.0),
        (0.25, 105.0, 90.0),
        (0.25, 125.0, 110.0),
        (0.55, 125.0, 100.0),
        (0.55, 125.0, 110.0),
    )
)


def knockout_table_configs(point_kind: str = "sobol",
                           seed: int = 0) -> list[ExperimentConfig]:
    return [basket_barrier_config(*row, point_kind=point_kind, seed=seed)
            for row in KNOCKOUT_ROWS]


def knockin_table_configs(point_kind: str = "sobol",
                          seed: int = 0) -> list[ExperimentConfig]:
    return [basket_barrier_config(*row, knock="knock_in",
                                  point_kind=point_kind, seed=seed)
            for row in KNOCKIN_ROWS]


def rootfinding_table_configs(point_kind: str = "sobol",
                              seed: int = 0) -> list[ExperimentConfig]:
    return [basket_barrier_config(*row, point_kind=point_kind, seed=seed)
            for row in ROOTFINDING_ROWS]


def binary_double_barrier_config(lower: float, upper: float, steps: int,
                                 seed: int = 0) -> ExperimentConfig:
    """Single-asset binary Asian knocked out at either of two levels."""
    market = MarketSpec(s0=[100.0], sigma=[0.3], rho=np.eye(1), rate=0.0,
                        horizon=0.25, steps=steps)
    contract = ContractSpec(
        family="binary_asian", strike=100.0,
        barriers=(
            BarrierClause(asset=0, level=lower, direction="down",
                          kind="knock_out"),
            BarrierClause(asset=0, level=upper, direction="up",
                          kind="knock_out"),
        ))
    name = f"double_L{lower:g}_U{upper:g}_m{steps}"
    return ExperimentConfig(name=name, market=market, contract=contract,
                            seed=seed)


DOUBLE_BARRIER_ROWS = ((1.0, 1000.0, 60), (50.0, 150.0, 60),
                       (90.0, 110.0, 60), (98.0, 102.0, 2),
                       (98.0, 102.0, 3), (98.0, 102.0, 4))


def double_barrier_table_configs(seed: int = 0) -> list[ExperimentConfig]:
    return [binary_double_barrier_config(*row, seed=seed)
            for row in DOUBLE_BARRIER_ROWS]


def mixed_sign_config(rho: float = -0.72, seed: int = 0) -> ExperimentConfig:
    """Two assets, two dates; transform column with mixed signs.

    Binary payoff on the average of the four prices, knocked out when the
    first asset leaves the region below 1.1 at either date.
    """
    market = MarketSpec(s0=[1.0, 1.0], sigma=[0.4, 0.6],
                        rho=np.array([[1.0, rho], [rho, 1.0]]), rate=0.08,
                        horizon=1.0, steps=2)
    contract = ContractSpec(
        family="binary_asian", strike=1.0,
        barriers=(BarrierClause(asset=0, level=1.1, direction="up",
                                kind="knock_out"),))
    return ExperimentConfig(name="mixed_sign_two_asset", market=market,
                            contract=contract, seed=seed)


def binary_barrier_config(steps: int, seed: int = 0) -> ExperimentConfig:
    """Pure binary knock-out: pays 1 when the asset stays below 105."""
    market = MarketSpec(s0=[100.0], sigma=[0.3], rho=np.eye(1), rate=0.0,
                        horizon=0.25, steps=steps)
    contract = ContractSpec(
        family="binary", strike=1.0,
        barriers=(BarrierClause(asset=0, level=105.0, direction="up",
                                kind="knock_out"),))
    return ExperimentConfig(name=f"binary_barrier_m{steps}", market=market,
                            contract=contract, seed=seed)


def down_in_put_config(sigma: float, barrier: float, strike: float,
                       seed: int = 0) -> ExperimentConfig:
    """Single-asset down-and-in put, six-month horizon, 130 dates."""
    market = MarketSpec(s0=[100.0], sigma=[sigma], rho=np.eye(1), rate=0.05,
                        horizon=0.5, steps=130)
    contract = ContractSpec(
        family="vanilla_put", strike=strike,
        barriers=(BarrierClause(asset=0, level=barrier, direction="down",
                                kind="knock_in"),))
    name = f"downin_put_s{int(sigma * 100)}_B{barrier:g}_K{strike:g}"
    return ExperimentConfig(name=name, market=market, contract=contract,
                            seed=seed)


DOWN_IN_PUT_ROWS = ((0.25, 90.0, 100.0), (0.25, 90.0, 90.0),
                    (0.25, 90.0, 80.0), (0.25, 75.0, 80.0),
                    (0.55, 75.0, 80.0), (0.55, 70.0, 60.0))


def down_in_put_table_configs(seed: int = 0) -> list[ExperimentConfig]:
    return [down_in_put_config(*row, seed=seed) for row in DOWN_IN_PUT_ROWS]


def continuous_benchmark_config(s0: float, horizon: float,
                                seed: int = 0) -> ExperimentConfig:
    """Fine-grid down-and-in put used against the continuous formula.

    500 monitoring dates approximate continuous monitoring; the barrier
    sits at 80 with strike 100 and a 20% volatility.
    """
    market = MarketSpec(s0=[s0], sigma=[0.2], rho=np.eye(1), rate=0.05,
                        horizon=horizon, steps=500)
    contract = ContractSpec(
        family="vanilla_put", strike=100.0,
        barriers=(BarrierClause(asset=0, level=80.0, direction="down",
                                kind="knock_in"),))
    name = f"cont_bench_S{s0:g}_T{horizon:g}"
    return ExperimentConfig(name=name, market=market, contract=contract,
                            methods=("QMC_LT_CS",), seed=seed)
