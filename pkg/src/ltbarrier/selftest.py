"""Fast invariant suite behind the ``selftest`` CLI command.

Each check is a cheap, deterministic version of an invariant the test
suite verifies at full scale; the command prints one line per check and
exits nonzero when any fails.
"""

from __future__ import annotations

import numpy as np

from . import presets
from .conditional import (BoundPair, knockin_region, knockout_bounds,
                          rescale_u1)
from .harness import path_transform_for, run_methods
from .market import build_covariance
from .qmc import PointSetConfig, Randomization, generate_points, randomize
from .rootfind import Z1Profile, ZBounds, analytic_z1_expectation


def _check_transform_identities() -> None:
    config = presets.mixed_sign_config()
    cov = build_covariance(config.market)
    transform = path_transform_for(config.market, config.contract)
    assert (np.abs(transform.a @ transform.a.T - cov).max()
            < 1e-9 * np.abs(cov).max())
    assert np.abs(transform.q.T @ transform.q - np.eye(4)).max() < 1e-9


def _check_point_sets() -> None:
    pts = generate_points(PointSetConfig("sobol", 2, 3))
    assert np.allclose(pts, [[0.5, 0.5], [0.75, 0.25], [0.25, 0.75]])
    lat = generate_points(PointSetConfig("lattice", 2, 4))
    assert lat.shape == (4, 2) and lat.min() >= 0 and lat.max() < 1
    shift = np.full(2, 0.375)
    r = Randomization("digital_shift", shift)
    assert np.array_equal(randomize(randomize(pts, r), r), pts)


def _check_regions() -> None:
    from dataclasses import replace

    from .contracts import ContractSpec

    pair = BoundPair(0.2, 0.7)
    u_hat, w = rescale_u1(0.5, pair)
    assert abs(u_hat - 0.45) < 1e-15 and abs(w - 0.5) < 1e-15
    config = presets.mixed_sign_config()
    transform = path_transform_for(config.market, config.contract)
    in_contract = ContractSpec(
        family=config.contract.family, strike=config.contract.strike,
        barriers=(replace(config.contract.barriers[0], kind="knock_in"),))
    rng = np.random.default_rng(1)
    for _ in range(50):
        u_rest = rng.random(3)
        out = knockout_bounds(transform, config.contract, config.market,
                              u_rest)
        union = knockin_region(transform, in_contract, config.market, u_rest)
        assert abs(out.weight + union.weight - 1.0) < 1e-12


def _check_degenerate_barrier() -> None:
    from dataclasses import replace
    config = replace(presets.basket_barrier_config("equi", 0.25, 10000.0,
                                                   70.0),
                     n_points=256, n_shifts=4)
    res = run_methods(config, ("QMC_LT", "QMC_LT_CS"))
    assert res["QMC_LT"].mean == res["QMC_LT_CS"].mean


def _check_analytic_integration() -> None:
    profile = Z1Profile(log_coeffs=[0.0], slopes=[1.0], strike=0.0, scale=1.0)
    value = analytic_z1_expectation(profile,
                                    ZBounds(-np.inf, np.inf))
    assert abs(value - np.exp(0.5)) < 1e-12


CHECKS = [
    ("point sets and digital shift", _check_point_sets),
    ("transform factorization and orthogonality", _check_transform_identities),
    ("conditional regions and complement", _check_regions),
    ("degenerate barrier identity", _check_degenerate_barrier),
    ("analytic first-coordinate integration", _check_analytic_integration),
]


def run() -> int:
    failures = 0
    for name, check in CHECKS:
        try:
            check()
        except Exception as exc:  # report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    return 1 if failures else 0
