import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltbarrier._normal import norm_cdf, norm_ppf
from ltbarrier.conditional import (BoundPair, IntervalUnion, cs_sample,
                                   cs_values, knockin_region, knockout_bounds,
                                   plain_values, rescale_u1,
                                   stepwise_cs_sample, stepwise_cs_values)
from ltbarrier.contracts import (BarrierClause, ContractSpec, clause_survival)
from ltbarrier.errors import CapabilityError
from ltbarrier.lt import build_path_transform
from ltbarrier.market import MarketSpec, log_prices_from_normals


def _contract(level=120.0, direction="up", kind="knock_out", asset=0,
              family="asian_basket_call", strike=90.0, extra=()):
    clause = BarrierClause(asset=asset, level=level, direction=direction,
                           kind=kind)
    return ContractSpec(family=family, strike=strike,
                        barriers=(clause, *extra))


def test_unreachable_barrier_gives_unit_weight(single_asset_market):
    spec = single_asset_market
    transform = build_path_transform(spec)
    contract = _contract(level=1e6)
    bounds = knockout_bounds(transform, contract, spec, np.array([0.4]))
    assert (bounds.lower, bounds.upper) == (0.0, 1.0)
    assert bounds.weight == 1.0


def test_positive_first_column_has_no_lower_bound(single_asset_market):
    spec = single_asset_market
    transform = build_path_transform(
        spec, barrier_rows=np.arange(spec.steps))
    assert np.all(transform.a[:, 0] > 0)
    bounds = knockout_bounds(transform, _contract(level=118.0), spec,
                             np.array([0.37]))
    assert bounds.lower == 0.0
    assert 0.0 < bounds.upper < 1.0


def test_knockout_bounds_hand_case():
    # market chosen so the log-space thresholds are exactly (0.5, 0.8) and
    # the Cholesky factor is exactly [[1,0],[1,1]]: with u2 = 0.5 the row
    # conditions are z1 < 0.5 and z1 < 0.8, so the upper bound is Phi(0.5)
    spec = MarketSpec(s0=[1.0], sigma=[1.0], rho=np.eye(1), rate=0.2,
                      horizon=2.0, steps=2)
    from ltbarrier.contracts import barrier_thresholds
    from ltbarrier.market import build_covariance, cholesky
    contract = _contract(level=float(math.exp(0.2)))
    assert np.allclose(barrier_thresholds(spec, contract.barriers[0]),
                       [0.5, 0.8], atol=1e-15)
    a = cholesky(build_covariance(spec)).matrix
    assert np.allclose(a, [[1.0, 0.0], [1.0, 1.0]], atol=1e-15)
    bounds = knockout_bounds(a, contract, spec, np.array([0.5]))
    assert np.isclose(bounds.upper, norm_cdf(0.5), atol=1e-12)
    assert np.isclose(bounds.upper, 0.6915, atol=5e-5)
    assert bounds.lower == 0.0


def test_knockin_region_examples():
    spec = MarketSpec(s0=[100.0], sigma=[1.0], rho=np.eye(1), rate=0.5,
                      horizon=1.0, steps=1)
    # b(t_1) = log(B/S0); level = S0 gives b = 0
    a = np.array([[1.0]])
    up_in = _contract(level=100.0, kind="knock_in")
    region = knockin_region(a, up_in, spec, np.zeros(0))
    assert region.intervals == ((0.5, 1.0),)
    assert np.isclose(region.weight, 0.5, atol=1e-15)

    # down barrier above all achievable prices: always triggered
    down_in = _contract(level=1e9, direction="down", kind="knock_in")
    region = knockin_region(a, down_in, spec, np.zeros(0))
    assert region.intervals == ((0.0, 1.0),)
    assert region.weight == 1.0

    # up barrier far out of reach: crossing cannot be forced
    up_in_far = _contract(level=1e9, kind="knock_in")
    region = knockin_region(a, up_in_far, spec, np.zeros(0))
    assert region.intervals == ()
    assert region.weight == 0.0


def test_rescale_examples():
    assert rescale_u1(0.3, BoundPair(0.0, 1.0)) == (0.3, 1.0)
    u_hat, w = rescale_u1(0.5, BoundPair(0.2, 0.7))
    assert np.isclose(u_hat, 0.45, atol=1e-15)
    assert np.isclose(w, 0.5, atol=1e-15)
    union = IntervalUnion(((0.0, 0.25), (0.75, 1.0)))
    u_hat, w = rescale_u1(0.6, union)
    assert np.isclose(u_hat, 0.80, atol=1e-15)
    assert np.isclose(w, 0.5, atol=1e-15)
    empty_hat, empty_w = rescale_u1(0.4, BoundPair(0.9, 0.1))
    assert empty_w == 0.0 and math.isnan(empty_hat)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.001, 0.999), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_rescale_lands_inside_interval(u1, a, b):
    lo, hi = min(a, b), max(a, b)
    region = BoundPair(lo, hi)
    u_hat, w = rescale_u1(u1, region)
    if w > 0:
        assert lo <= u_hat <= hi


def test_interval_union_validation():
    with pytest.raises(ValueError):
        IntervalUnion(((0.5, 0.2),))
    with pytest.raises(ValueError):
        IntervalUnion(((0.0, 0.6), (0.5, 1.0)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_knockout_knockin_measures_are_complementary(seed):
    rng = np.random.default_rng(seed)
    spec = MarketSpec(s0=[1.0, 1.0], sigma=[0.4, 0.6],
                      rho=np.array([[1.0, -0.72], [-0.72, 1.0]]), rate=0.08,
                      horizon=1.0, steps=2)
    transform = build_path_transform(
        spec, barrier_rows=np.arange(2))
    u_rest = rng.uniform(0.05, 0.95, size=3)
    out = knockout_bounds(transform, _contract(level=1.1), spec, u_rest)
    into = knockin_region(transform, _contract(level=1.1, kind="knock_in"),
                          spec, u_rest)
    assert abs(out.weight + into.weight - 1.0) < 1e-12


def test_cs_sample_weight_zero_returns_zero():
    spec = MarketSpec(s0=[1.0, 1.0], sigma=[0.4, 0.6],
                      rho=np.array([[1.0, -0.72], [-0.72, 1.0]]), rate=0.08,
                      horizon=1.0, steps=2)
    contract = _contract(level=1.1, family="binary_asian", strike=1.0)
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    rng = np.random.default_rng(7)
    u = rng.random((4096, 4))
    values, w = cs_values(u, transform, contract, spec)
    assert np.all(values[w == 0.0] == 0.0)
    assert 0.35 < np.mean(w == 0.0) < 0.65  # about half the samples wasted
    assert np.all((w >= 0.0) & (w <= 1.0))


def test_cs_sample_equals_plain_when_barrier_unreachable(
        single_asset_market, rng):
    spec = single_asset_market
    contract = _contract(level=1e7)
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    u = rng.random((64, 2))
    cs, w = cs_values(u, transform, contract, spec)
    plain = plain_values(u, transform, contract, spec)
    assert np.array_equal(cs, plain)
    assert np.all(w == 1.0)
    one = cs_sample(u[0], transform, contract, spec)
    assert one == plain[0]


def test_cs_constructed_paths_satisfy_barriers(small_basket_market, rng):
    spec = small_basket_market
    contract = _contract(level=115.0, extra=(
        BarrierClause(asset=1, level=70.0, direction="down",
                      kind="knock_out"),))
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    u = rng.random((2000, spec.dimension))
    _, w = cs_values(u, transform, contract, spec)

    z_rest = norm_ppf(u[:, 1:])
    from ltbarrier.conditional import knockout_z_interval
    z_lo, z_hi = knockout_z_interval(transform.a, spec, contract, z_rest)
    low, high = norm_cdf(z_lo), norm_cdf(z_hi)
    u_hat = low + (high - low) * u[:, 0]
    z = np.column_stack([norm_ppf(u_hat), z_rest])
    prices = np.exp(log_prices_from_normals(spec, transform.a, z))
    alive = np.ones(len(u), dtype=bool)
    for clause in contract.barriers:
        rows = spec.asset_rows(clause.asset)
        vals = prices[:, rows]
        if clause.direction == "up":
            alive &= np.max(vals, axis=1) < clause.level * (1 + 1e-12)
        else:
            alive &= np.min(vals, axis=1) > clause.level * (1 - 1e-12)
    assert np.all(alive[w > 0])
    assert np.any(w > 0)


def test_cs_knockin_paths_cross_barrier(single_asset_market, rng):
    spec = single_asset_market
    contract = _contract(level=130.0, kind="knock_in")
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    u = rng.random((2000, 2))
    values, w = cs_values(u, transform, contract, spec)
    assert np.all(w > 0)  # a single up-in clause can always be forced

    from ltbarrier.conditional import knockin_z_pieces
    z_rest = norm_ppf(u[:, 1:])
    lo_cap, hi_floor = knockin_z_pieces(transform.a, spec, contract, z_rest)
    p_low, p_high = norm_cdf(lo_cap), norm_cdf(hi_floor)
    w2 = np.minimum(p_low + 1.0 - p_high, 1.0)
    pos = u[:, 0] * w2
    u_hat = np.where(pos <= p_low, pos, p_high + (pos - p_low))
    z = np.column_stack([norm_ppf(u_hat), z_rest])
    prices = np.exp(log_prices_from_normals(spec, transform.a, z))
    crossed = ~clause_survival(prices, contract.barriers[0], spec)
    assert np.mean(crossed) > 0.999  # equality only breaks at the boundary


def test_stepwise_likelihood_one_when_unreachable(single_asset_market, rng):
    spec = single_asset_market
    contract = _contract(level=1e9)
    u = rng.random((256, 2))
    values, likelihood = stepwise_cs_values(u, spec, contract)
    assert np.allclose(likelihood, 1.0, atol=1e-12)


def test_stepwise_paths_never_cross(small_basket_market, rng):
    spec = small_basket_market
    contract = _contract(level=112.0)
    u = rng.random((4000, spec.dimension))
    values, likelihood = stepwise_cs_values(u, spec, contract)
    assert np.all(likelihood > 0)
    assert np.all(likelihood <= 1.0)
    # rebuild the paths to confirm the conditioned asset stays below
    # (reuse the sampler output itself: positive payoff needs survival)
    sample = stepwise_cs_sample(u[0], spec, contract)
    assert sample >= 0.0


def test_stepwise_double_barrier_supported(rng):
    spec = MarketSpec(s0=[100.0], sigma=[0.3], rho=np.eye(1), rate=0.0,
                      horizon=0.25, steps=4)
    contract = ContractSpec(
        family="binary_asian", strike=100.0,
        barriers=(BarrierClause(asset=0, level=98.0, direction="down",
                                kind="knock_out"),
                  BarrierClause(asset=0, level=102.0, direction="up",
                                kind="knock_out")))
    u = rng.random((2000, 4))
    values, likelihood = stepwise_cs_values(u, spec, contract)
    assert np.all((likelihood > 0) & (likelihood <= 1.0))
    assert values.mean() > 0.0


def test_stepwise_capability_errors(small_basket_market, rng):
    spec = small_basket_market
    with pytest.raises(CapabilityError, match="knock-out"):
        stepwise_cs_values(rng.random((4, spec.dimension)), spec,
                           _contract(kind="knock_in"))
    multi = _contract(level=120.0, extra=(
        BarrierClause(asset=1, level=70.0, direction="down",
                      kind="knock_out"),))
    with pytest.raises(CapabilityError, match="single asset"):
        stepwise_cs_values(rng.random((4, spec.dimension)), spec, multi)
    with pytest.raises(CapabilityError, match="barrier"):
        stepwise_cs_values(rng.random((4, spec.dimension)), spec,
                           ContractSpec(family="binary", strike=1.0))


def test_stepwise_agrees_with_plain_mc(single_asset_market, rng):
    spec = single_asset_market
    contract = _contract(level=115.0, strike=95.0)
    n = 60_000
    u = rng.random((n, 2))
    cs_vals, _ = stepwise_cs_values(u, spec, contract)
    transform = build_path_transform(spec, kind="cholesky_only")
    plain = plain_values(rng.random((n, 2)), transform, contract, spec)
    se = math.sqrt(cs_vals.var() / n + plain.var() / n)
    assert abs(cs_vals.mean() - plain.mean()) < 3 * se
    assert cs_vals.var() < plain.var()
