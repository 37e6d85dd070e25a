import math

import numpy as np
import pytest
from scipy.integrate import quad

from ltbarrier.contracts import BarrierClause, ContractSpec
from ltbarrier.errors import CapabilityError
from ltbarrier.lt import build_path_transform
from ltbarrier.market import MarketSpec
from ltbarrier.rootfind import (Z1Profile, ZBounds,
                                analytic_z1_expectation,
                                find_positivity_region, profile_derivatives,
                                rf_sample, rf_values, safeguarded_root)


def _profile(log_coeffs, slopes, strike, scale=1.0, orientation=1):
    return Z1Profile(log_coeffs=np.asarray(log_coeffs, float),
                     slopes=np.asarray(slopes, float), strike=strike,
                     scale=scale, orientation=orientation)


def _profile_fun(p):
    def fun(z):
        return tuple(profile_derivatives(p, z, k) for k in range(4))
    return fun


def _random_profile(rng, mn=6, mixed=True, orientation=1):
    slopes = rng.uniform(0.05, 0.6, size=mn)
    if mixed:
        signs = np.ones(mn)
        signs[rng.choice(mn, size=mn // 2, replace=False)] = -1.0
        slopes = slopes * signs
    return _profile(rng.uniform(-1.5, 1.5, size=mn), slopes,
                    strike=float(rng.uniform(0.5, 3.0)), scale=1.0 / mn,
                    orientation=orientation)


def test_single_row_derivatives_are_exponential():
    p = _profile([0.0], [1.0], strike=0.0)
    for order in range(4):
        assert np.isclose(profile_derivatives(p, 0.7, order), math.exp(0.7),
                          rtol=1e-14)


def test_second_derivative_positive_for_mixed_signs(rng):
    for _ in range(50):
        p = _random_profile(rng)
        for z in rng.uniform(-5, 5, size=20):
            assert profile_derivatives(p, float(z), 2) > 0.0


def test_derivatives_match_finite_differences(rng):
    for _ in range(20):
        p = _random_profile(rng)
        z = float(rng.uniform(-2, 2))
        errs = []
        for h in (1e-3, 1e-4):
            fd = (profile_derivatives(p, z + h, 0)
                  - profile_derivatives(p, z - h, 0)) / (2 * h)
            errs.append(abs(profile_derivatives(p, z, 1) - fd))
        # central differences converge at second order
        assert errs[1] < errs[0] * 1e-1 + 1e-12
        assert errs[0] < 1e-4 * (1.0 + abs(profile_derivatives(p, z, 1)))


def test_safeguarded_root_simple_exponential():
    def fun(z):
        return (math.exp(z) - 1.0, math.exp(z), math.exp(z), math.exp(z))
    root = safeguarded_root(fun, -1.0, 2.0)
    assert abs(root) < 1e-12


def test_safeguarded_root_cosh_case():
    def fun(z):
        return (math.exp(z) + math.exp(-z) - 3.0,
                math.exp(z) - math.exp(-z),
                math.exp(z) + math.exp(-z),
                math.exp(z) - math.exp(-z))
    target = math.log((3.0 + math.sqrt(5.0)) / 2.0)
    assert abs(safeguarded_root(fun, 0.1, 5.0) - target) < 1e-10
    assert abs(safeguarded_root(fun, -5.0, -0.1) + target) < 1e-10


def test_safeguarded_root_requires_sign_change():
    def fun(z):
        return (z * z + 1.0, 2 * z, 2.0, 0.0)
    with pytest.raises(ValueError, match="opposite signs"):
        safeguarded_root(fun, -1.0, 1.0)


def test_safeguarded_root_converges_within_high_order_budget(rng):
    for _ in range(100):
        p = _random_profile(rng, mixed=False)
        fun = _profile_fun(p)
        lo, hi = -40.0, 40.0
        calls = {"n": 0}

        def counted(z):
            calls["n"] += 1
            return fun(z)

        root = safeguarded_root(counted, lo, hi,
                                ftol=1e-10 * (1.0 + p.strike))
        assert abs(profile_derivatives(p, root, 0)) <= 1e-10 * (1 + p.strike)
        assert calls["n"] <= 2 + 10 + 5  # bracket + high-order + slack


def test_positivity_region_single_row():
    p = _profile([0.0], [1.0], strike=1.0)
    region = find_positivity_region(p)
    assert len(region.roots) == 1
    assert abs(region.roots[0]) < 1e-10
    ((lo, hi),) = region.intervals
    assert lo == region.roots[0] and hi == math.inf


def test_positivity_region_no_slopes():
    everywhere = find_positivity_region(_profile([0.0, 0.0], [0.0, 0.0],
                                                 strike=1.0))
    assert everywhere.intervals == ((-math.inf, math.inf),)
    nowhere = find_positivity_region(_profile([0.0, 0.0], [0.0, 0.0],
                                              strike=3.0))
    assert nowhere.intervals == ()


def test_put_orientation_flips_region():
    p = _profile([0.0], [1.0], strike=1.0, orientation=-1)
    region = find_positivity_region(p)
    ((lo, hi),) = region.intervals
    assert lo == -math.inf and abs(hi) < 1e-10


def _grid_scan_roots(p, n=2_000_001, lim=12.0):
    z = np.linspace(-lim, lim, n)
    ell = p.log_coeffs[None, :] + np.outer(z, p.slopes)
    vals = p.orientation * (p.scale * np.exp(ell).sum(axis=1) - p.strike)
    sign = np.sign(vals)
    flips = np.where(np.diff(sign) != 0)[0]
    return z[flips], vals


def test_root_count_and_location_match_grid_scan(rng):
    for _ in range(40):
        p = _random_profile(rng, mn=int(rng.integers(2, 7)))
        region = find_positivity_region(p)
        scan_roots, _ = _grid_scan_roots(p)
        finite_roots = [r for r in region.roots if abs(r) < 12.0]
        assert len(finite_roots) == len(scan_roots)
        step = 24.0 / 2_000_000  # scan resolution bounds the comparison
        for ours, scanned in zip(sorted(finite_roots), scan_roots):
            assert abs(ours - scanned) < 1.5 * step
        for r in finite_roots:
            assert abs(profile_derivatives(p, r, 0)) <= 1e-10 * (1 + p.strike)


def test_positivity_sign_on_sampled_points(rng):
    for _ in range(40):
        p = _random_profile(rng, orientation=int(rng.choice([-1, 1])))
        region = find_positivity_region(p)
        for z in rng.uniform(-8, 8, size=50):
            val = profile_derivatives(p, float(z), 0)
            inside = any(lo < z < hi for lo, hi in region.intervals)
            near_root = any(abs(z - r) < 1e-6 for r in region.roots)
            if not near_root:
                assert inside == (val > 0.0)


def test_analytic_expectation_trivial_cases():
    p = _profile([0.0], [1.0], strike=0.0)
    assert analytic_z1_expectation(p, ZBounds(0.3, 0.3)) == 0.0
    assert analytic_z1_expectation(p, ZBounds(0.5, 0.2)) == 0.0
    full = analytic_z1_expectation(p, ZBounds(-math.inf, math.inf))
    assert np.isclose(full, math.exp(0.5), rtol=1e-14)


def test_analytic_expectation_matches_quadrature(rng):
    for _ in range(60):
        p = _random_profile(rng, mixed=bool(rng.integers(0, 2)),
                            orientation=int(rng.choice([-1, 1])))
        lo = float(rng.uniform(-4, 1))
        hi = lo + float(rng.uniform(0.1, 4))

        def integrand(x):
            return (profile_derivatives(p, x, 0)
                    * math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi))

        expected, abserr = quad(integrand, lo, hi, limit=200)
        got = analytic_z1_expectation(p, ZBounds(lo, hi))
        assert abs(got - expected) < 1e-8 * max(1.0, abs(expected)) + abserr


def test_rf_profile_rejects_binary_families(single_asset_market, rng):
    contract = ContractSpec(family="binary", strike=1.0, barriers=(
        BarrierClause(asset=0, level=105.0, direction="up",
                      kind="knock_out"),))
    transform = build_path_transform(single_asset_market)
    with pytest.raises(CapabilityError, match="binary"):
        rf_values(rng.random((4, 2)), transform, contract,
                  single_asset_market)


def test_rf_matches_plain_mean_without_barrier(small_basket_market, rng):
    spec = small_basket_market
    contract = ContractSpec(family="asian_basket_call", strike=60.0)
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec))
    n = 20_000
    u = rng.random((n, spec.dimension))
    rf, w = rf_values(u, transform, contract, spec)
    assert np.all(w > 0.99)  # deep in the money: positivity nearly sure
    from ltbarrier.conditional import plain_values
    plain = plain_values(rng.random((n, spec.dimension)), transform,
                         contract, spec)
    se = math.sqrt(rf.var() / n + plain.var() / n)
    assert abs(rf.mean() - plain.mean()) < 3 * se
    assert rf.var() < plain.var()


def test_rf_single_asset_put_knockin_matches_quadrature(rng):
    # one date: the sample is fully analytic, u is not consumed at all
    spec = MarketSpec(s0=[100.0], sigma=[0.25], rho=np.eye(1), rate=0.03,
                      horizon=1.0, steps=1)
    contract = ContractSpec(
        family="vanilla_put", strike=105.0,
        barriers=(BarrierClause(asset=0, level=95.0, direction="down",
                                kind="knock_in"),))
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    a = float(transform.a[0, 0])
    drift = (spec.rate - 0.5 * 0.25**2) * 1.0

    def integrand(z):
        s_t = 100.0 * math.exp(drift + a * z)
        payoff = max(105.0 - s_t, 0.0) if s_t <= 95.0 else 0.0
        return payoff * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    lim = 40.0 * max(1.0, abs(a))
    expected, abserr = quad(integrand, -lim, lim, limit=500,
                            points=[0.0])
    expected *= math.exp(-spec.rate * spec.horizon)
    got = rf_sample(rng.random(1), transform, contract, spec)
    assert abs(got - expected) < 1e-6 * max(1.0, abs(expected)) + abserr


def test_rf_values_deterministic_in_u1(small_basket_market, rng):
    spec = small_basket_market
    contract = ContractSpec(
        family="asian_basket_call", strike=95.0,
        barriers=(BarrierClause(asset=0, level=120.0, direction="up",
                                kind="knock_out"),))
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    u = rng.random((16, spec.dimension))
    altered = u.copy()
    altered[:, 0] = rng.random(16)
    a_vals, _ = rf_values(u, transform, contract, spec)
    b_vals, _ = rf_values(altered, transform, contract, spec)
    assert np.array_equal(a_vals, b_vals)


def test_negative_correlation_can_still_give_one_root(rng):
    # two assets, meaningfully negative correlation, long grid: the first
    # transform column stays single-signed and every profile has one root
    spec = MarketSpec(s0=[100.0, 100.0], sigma=[0.3, 0.4],
                      rho=np.array([[1.0, -0.3], [-0.3, 1.0]]), rate=0.05,
                      horizon=1.0, steps=260)
    contract = ContractSpec(
        family="asian_basket_call", strike=100.0,
        barriers=(BarrierClause(asset=0, level=110.0, direction="up",
                                kind="knock_out"),))
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    first = transform.a[:, 0]
    assert np.all(first >= 0.0) or np.all(first <= 0.0)

    from ltbarrier._normal import norm_ppf
    from ltbarrier.rootfind import _positivity_pieces, profile_from_contract
    u = rng.random((32, spec.dimension))
    logc, slopes, strike, orientation = profile_from_contract(
        contract, spec, transform.a, norm_ppf(u[:, 1:]))
    lo1, hi1, lo2, hi2 = _positivity_pieces(logc, slopes, strike,
                                            orientation)
    finite = (np.isfinite(lo1).astype(int) + np.isfinite(hi1).astype(int)
              + np.isfinite(lo2).astype(int) + np.isfinite(hi2).astype(int))
    assert np.all(finite == 1)


def test_root_residuals_on_studied_market_profiles(rng):
    # profiles drawn from the four-asset market with negative correlations
    # (mixed-sign slopes at sigma1 = 55%): every located root satisfies the
    # payoff residual budget
    from ltbarrier import presets
    from ltbarrier._normal import norm_ppf
    from ltbarrier.harness import path_transform_for
    from ltbarrier.rootfind import _positivity_pieces, profile_from_contract

    config = presets.basket_barrier_config("mixed", 0.55, 125.0, 110.0)
    spec, contract = config.market, config.contract
    transform = path_transform_for(spec, contract)
    u = rng.random((1000, spec.dimension))
    logc, slopes, strike, orientation = profile_from_contract(
        contract, spec, transform.a, norm_ppf(u[:, 1:]))
    lo1, hi1, lo2, hi2 = _positivity_pieces(logc, slopes, strike,
                                            orientation)
    budget = 1e-10 * (1.0 + strike)
    checked = 0
    for i in range(len(u)):
        profile = Z1Profile(log_coeffs=logc[i], slopes=slopes,
                            strike=strike, scale=1.0,
                            orientation=orientation)
        for endpoint in (lo1[i], hi1[i], lo2[i], hi2[i]):
            if np.isfinite(endpoint) and abs(endpoint) < 39.0:
                checked += 1
                assert abs(profile_derivatives(profile, float(endpoint), 0)
                           ) <= budget
    assert checked >= 1000  # the strike is high enough to force roots


def test_rf_knockin_overlapping_pieces_count_once(rng):
    # mixed-sign rows on the barrier asset: for about half the draws the
    # crossing is guaranteed and the two admissible half-lines overlap;
    # with a deep in-the-money payoff the region weight must then be
    # exactly 1, not the double-counted sum
    spec = MarketSpec(s0=[1.0, 1.0], sigma=[0.4, 0.6],
                      rho=np.array([[1.0, -0.72], [-0.72, 1.0]]), rate=0.08,
                      horizon=1.0, steps=2)
    contract = ContractSpec(
        family="asian_basket_call", strike=0.05,
        barriers=(BarrierClause(asset=0, level=1.1, direction="up",
                                kind="knock_in"),))
    transform = build_path_transform(
        spec, weights=contract.row_weights(spec),
        barrier_rows=contract.conditioned_rows(spec))
    first = transform.a[:2, 0]
    assert first[0] * first[1] < 0
    u = rng.random((4000, 4))
    values, weights = rf_values(u, transform, contract, spec)
    assert weights.max() <= 1.0 + 1e-12
    assert np.mean(weights >= 1.0 - 1e-12) > 0.25  # certain-crossing draws

    # the conditionally sampled estimator prices the same contract; the
    # analytic first coordinate must agree closely
    from ltbarrier.conditional import cs_values
    cs, _ = cs_values(rng.random((60_000, 4)), transform, contract, spec)
    se = math.sqrt(values.var() / len(values) + cs.var() / len(cs))
    assert abs(values.mean() - cs.mean()) < 4 * se
