"""Estimation engine, variance-ratio tables and convergence regressions.

Every estimate follows the same replication pattern: M independent
randomizations of an N-point set, per-replication means, and the standard
error computed across replication means,

    sigma_hat = sqrt( sum_k (ybar_k - mu_hat)^2 / (M (M - 1)) ).

Pseudo-random (MC-family) methods run each drawn sample as its own
replication (N = 1, M = total sample count), which reduces the formula to
the classical i.i.d. standard error.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._normal import norm_cdf
from .conditional import cs_values, plain_values, stepwise_cs_values
from .contracts import ContractSpec
from .errors import CapabilityError, ConfigError
from .lt import PathTransform, build_path_transform
from .market import MarketSpec
from .qmc import (PointSetConfig, generate_points, randomization_for,
                  randomize, replication_shifts)
from .rootfind import rf_values

METHODS = ("MC", "MC_CS", "QMC_LT", "QMC_LT_CS", "QMC_LT_CS_RF")
QMC_METHODS = ("QMC_LT", "QMC_LT_CS", "QMC_LT_CS_RF")
DEFAULT_N = 4096
DEFAULT_SHIFTS = 40
DEFAULT_N_MC = 163840
_MC_CHUNK = 16384


@dataclass(frozen=True)
class ExperimentConfig:
    """One pricing experiment: market, contract and sampling budgets.

    QMC methods use ``n_points`` points with ``n_shifts`` randomizations;
    MC-family methods use ``n_mc`` samples in total (the defaults mirror
    163840 = 4096 x 40).
    """

    name: str
    market: MarketSpec
    contract: ContractSpec
    methods: tuple[str, ...] = ("QMC_LT", "QMC_LT_CS")
    point_kind: str = "sobol"
    n_points: int = DEFAULT_N
    n_shifts: int = DEFAULT_SHIFTS
    n_mc: int = DEFAULT_N_MC
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(
                    f"unknown method {m!r}; choose from {METHODS}")
        if self.point_kind not in ("sobol", "lattice"):
            raise ConfigError("point_kind must be 'sobol' or 'lattice'")
        if min(self.n_points, self.n_shifts, self.n_mc) < 1:
            raise ConfigError("sampling budgets must be positive")


@dataclass(frozen=True)
class EstimateSummary:
    """Estimate with replication-level error information.

    ``rep_means`` holds the per-replication means (per-sample values for
    MC-family methods, where n_points == 1).  ``stderr`` is None when only
    one replication was run.  ``wasted_fraction`` is populated for the
    conditional and root-finding estimators only.
    """

    method: str
    mean: float
    stderr: float | None
    n_points: int
    n_reps: int
    wasted_fraction: float | None
    rep_means: np.ndarray = field(repr=False)


def _summary_from_reps(method: str, rep_means: np.ndarray, n_points: int,
                       wasted: float | None) -> EstimateSummary:
    m = rep_means.size
    mean = float(rep_means.mean())
    stderr = None
    if m >= 2:
        stderr = float(np.sqrt(np.sum((rep_means - mean) ** 2)
                                / (m * (m - 1))))
    return EstimateSummary(method=method, mean=mean, stderr=stderr,
                           n_points=n_points, n_reps=m,
                           wasted_fraction=wasted, rep_means=rep_means)


# transform cache: the orthogonal construction is the dominant startup
# cost and is shared by every barrier level on the same market/weights
_transform_cache: dict[bytes, PathTransform] = {}


def path_transform_for(market: MarketSpec, contract: ContractSpec,
                       kind: str = "cholesky_lt") -> PathTransform:
    rows = contract.conditioned_rows(market)
    weights = contract.row_weights(market)
    key = b"|".join([market.key(), kind.encode(), weights.tobytes(),
                     rows.astype(np.int64).tobytes()])
    hit = _transform_cache.get(key)
    if hit is None:
        hit = build_path_transform(market, weights=weights,
                                   barrier_rows=rows, kind=kind)
        _transform_cache[key] = hit
    return hit


def save_transform(transform: PathTransform, path: str) -> None:
    """Persist a transform (npz with the matrix, kind and Q)."""
    np.savez(path, a=transform.a, kind=np.array(transform.kind),
             q=transform.q if transform.q is not None else np.zeros(0))


def load_transform(path: str) -> PathTransform:
    data = np.load(path, allow_pickle=False)
    q = data["q"]
    return PathTransform(a=data["a"], kind=str(data["kind"]),
                         q=q if q.size else None)


def _qmc_sampler(method: str, transform: PathTransform,
                 contract: ContractSpec, market: MarketSpec):
    if method == "QMC_LT":
        def run(v):
            return plain_values(v, transform, contract, market), None
    elif method == "QMC_LT_CS":
        def run(v):
            return cs_values(v, transform, contract, market)
    elif method == "QMC_LT_CS_RF":
        def run(v):
            return rf_values(v, transform, contract, market)
    else:
        raise CapabilityError(f"{method} is not a QMC method")
    return run


def _run_qmc(config: ExperimentConfig, methods: list[str],
             threads: int) -> dict[str, EstimateSummary]:
    market, contract = config.market, config.contract
    transform = path_transform_for(market, contract)
    ps_config = PointSetConfig(kind=config.point_kind,
                               dimension=market.dimension,
                               count=config.n_points, seed=config.seed)
    base = generate_points(ps_config, first_index=0 if
                           config.point_kind == "sobol" else None)
    shifts = replication_shifts(config.n_shifts, market.dimension,
                                seed=config.seed)
    samplers = {m: _qmc_sampler(m, transform, contract, market)
                for m in methods}

    def one_shift(k: int):
        v = randomize(base, randomization_for(ps_config, shifts[k]))
        out = {}
        for m, sampler in samplers.items():
            values, weights = sampler(v)
            wasted = (float(np.mean(weights <= 0.0))
                      if weights is not None else None)
            out[m] = (float(values.mean()), wasted)
        return out

    per_shift: list[dict] = [None] * config.n_shifts
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for k, res in enumerate(pool.map(one_shift,
                                             range(config.n_shifts))):
                per_shift[k] = res
    else:
        for k in range(config.n_shifts):
            per_shift[k] = one_shift(k)

    results = {}
    for m in methods:
        rep_means = np.array([per_shift[k][m][0]
                              for k in range(config.n_shifts)])
        wasted_vals = [per_shift[k][m][1] for k in range(config.n_shifts)]
        wasted = (float(np.mean(wasted_vals))
                  if wasted_vals[0] is not None else None)
        results[m] = _summary_from_reps(m, rep_means, config.n_points, wasted)
    return results


def _run_mc(config: ExperimentConfig, method: str) -> EstimateSummary:
    market, contract = config.market, config.contract
    seed_seq = np.random.SeedSequence([config.seed,
                                       1 if method == "MC" else 2])
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    if method == "MC":
        transform = path_transform_for(market, contract, kind="cholesky_only")
    values = np.empty(config.n_mc)
    wasted_count = 0
    done = 0
    while done < config.n_mc:
        count = min(_MC_CHUNK, config.n_mc - done)
        ints = rng.integers(0, 1 << 53, size=(count, market.dimension),
                            dtype=np.int64)
        u = ints.astype(np.float64) / float(1 << 53)
        if method == "MC":
            values[done:done + count] = plain_values(u, transform, contract,
                                                     market)
        else:
            vals, likelihood = stepwise_cs_values(u, market, contract)
            values[done:done + count] = vals
            wasted_count += int(np.sum(likelihood <= 0.0))
        done += count
    wasted = wasted_count / config.n_mc if method == "MC_CS" else None
    return _summary_from_reps(method, values, 1, wasted)


def run_methods(config: ExperimentConfig,
                methods: tuple[str, ...] | None = None,
                threads: int = 1) -> dict[str, EstimateSummary]:
    """Estimate with several methods on shared randomized points.

    QMC methods evaluate the same shifted point sets (so a degenerate
    barrier yields bit-identical means across them); MC-family methods
    use their own deterministic substreams of the seed.
    """
    methods = tuple(methods if methods is not None else config.methods)
    for m in methods:
        if m not in METHODS:
            raise CapabilityError(f"unknown method {m!r}")
    results: dict[str, EstimateSummary] = {}
    qmc = [m for m in methods if m in QMC_METHODS]
    if qmc:
        results.update(_run_qmc(config, qmc, threads=threads))
    for m in methods:
        if m in ("MC", "MC_CS"):
            results[m] = _run_mc(config, m)
    return {m: results[m] for m in methods}


def run_estimate(config: ExperimentConfig, method: str,
                 threads: int = 1) -> EstimateSummary:
    """Estimate the contract value with one method."""
    return run_methods(config, (method,), threads=threads)[method]


def variance_ratio_table(configs, baseline_method: str,
                         comparison_methods: tuple[str, ...],
                         threads: int = 1):
    """Standard-deviation ratio rows across configs.

    Each row reports sigma of the comparison method and the percentage
    ratio sigma_baseline / sigma_method.  Returns (rows, summaries) where
    summaries maps config name -> method -> EstimateSummary.
    """
    rows = []
    all_summaries: dict[str, dict[str, EstimateSummary]] = {}
    for config in configs:
        wanted = tuple(dict.fromkeys((baseline_method, *comparison_methods)))
        res = run_methods(config, wanted, threads=threads)
        all_summaries[config.name] = res
        base_sigma = res[baseline_method].stderr
        if base_sigma is None:
            raise ConfigError("ratio table needs at least two replications")
        for m in comparison_methods:
            sigma = res[m].stderr
            if sigma is None:
                raise ConfigError("ratio table needs at least two "
                                  f"replications for {m}")
            ratio = math.inf if sigma == 0 else 100.0 * base_sigma / sigma
            rows.append({"config": config.name, "method": m,
                         "sigma": sigma, "ratio_pct": ratio})
    return rows, all_summaries


@dataclass(frozen=True)
class ConvergenceResult:
    alpha: float
    beta: float
    rows: tuple[dict, ...]  # per-budget n, mean, sigma


def convergence_alpha(config: ExperimentConfig, method: str,
                      n_grid=None, threads: int = 1) -> ConvergenceResult:
    """Slope of the log(sigma) ~ -alpha log(N) regression over budgets."""
    if n_grid is None:
        n_grid = [2**k for k in range(6, 14)]
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 4:
        raise ConfigError("convergence regression needs at least 4 budgets")
    rows = []
    for n in n_grid:
        summary = run_estimate(replace(config, n_points=n), method,
                               threads=threads)
        rows.append({"n": n, "mean": summary.mean, "sigma": summary.stderr})
    usable = [r for r in rows if r["sigma"] and r["sigma"] > 0.0]
    if len(usable) < len(rows):
        warnings.warn("excluded budgets with zero estimated sigma from the "
                      "convergence regression")
    alpha, beta = fit_loglog([r["n"] for r in usable],
                             [r["sigma"] for r in usable])
    return ConvergenceResult(alpha=alpha, beta=beta, rows=tuple(rows))


def fit_loglog(ns, sigmas) -> tuple[float, float]:
    """Least-squares fit of log(sigma) = beta - alpha log(N)."""
    slope, intercept = np.polyfit(np.log(np.asarray(ns, float)),
                                  np.log(np.asarray(sigmas, float)), 1)
    return float(-slope), float(intercept)


def _phi_diff(lo: float, hi: float) -> float:
    """Phi(hi) - Phi(lo), stable when both arguments are far positive."""
    if lo > 0.0 and hi > 0.0:
        return float(norm_cdf(-lo) - norm_cdf(-hi))
    return float(norm_cdf(hi) - norm_cdf(lo))


def analytic_down_in_put(s0: float, strike: float, barrier: float,
                         sigma: float, rate: float, horizon: float) -> float:
    """Closed-form continuously monitored down-and-in put value.

    Derived from the reflection principle for Brownian motion with drift:
    the terminal-below-barrier part integrates the plain lognormal
    density, the rest integrates the reflected density.  Requires
    barrier <= min(s0, strike).
    """
    if min(s0, strike, barrier, sigma, horizon) <= 0:
        raise ValueError("all parameters must be positive")
    if barrier > s0 or barrier > strike:
        raise ValueError("the formula needs barrier <= s0 and "
                         "barrier <= strike")
    b = math.log(barrier / s0)
    k = math.log(strike / s0)
    nu = rate - 0.5 * sigma * sigma
    s = sigma * math.sqrt(horizon)
    grow = math.exp(rate * horizon)  # e^{nu T + s^2/2}

    # terminal price below the barrier
    part1 = (strike * _phi_diff(-math.inf, (b - nu * horizon) / s)
             - s0 * grow * _phi_diff(-math.inf, (b - nu * horizon) / s - s))

    # barrier hit before maturity, terminal price in (barrier, strike)
    lo = (-b - nu * horizon) / s
    hi = (k - 2.0 * b - nu * horizon) / s
    d_k = _phi_diff(lo, hi)
    d_s = _phi_diff(lo - s, hi - s)
    log_w = 2.0 * nu * b / (sigma * sigma)
    term_k = math.exp(log_w + math.log(d_k)) if d_k > 0 else 0.0
    term_s = math.exp(log_w + math.log(d_s)) if d_s > 0 else 0.0
    part2 = strike * term_k - (barrier**2 / s0) * grow * term_s

    return math.exp(-rate * horizon) * (part1 + part2)


# ---------------------------------------------------------------------------
# CSV helpers (full-precision decimal serialization; repr round-trips)


def write_csv(path: str, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        out = []
        for raw in reader:
            row = {}
            for key, cell in zip(header, raw):
                if cell == "":
                    row[key] = None
                else:
                    try:
                        row[key] = float(cell) if ("." in cell or "e" in cell
                                                   or "inf" in cell
                                                   or "nan" in cell) else cell
                    except ValueError:
                        row[key] = cell
            out.append(row)
        return out
