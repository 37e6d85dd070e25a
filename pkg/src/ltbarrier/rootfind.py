"""Roots of the smooth payoff in the first normal coordinate.

With all other coordinates fixed, the smooth payoff is an exponential sum

    f(z1) = orientation * (scale * sum_i c_i exp(a_i z1) - K),

which is strictly convex before orientation and has at most two zeros.
The positivity region is intersected with the barrier region for z1 and
the first coordinate is integrated out in closed form, removing its
sampling noise entirely.

Root iterations run on the logarithm of the exponential sum: same roots,
derivatives given by softmax-weighted moments of the slopes, and no
overflow for any parameter range.  The high-order step is a Householder
iteration of order four (uses derivatives up to order three, which cost
only extra powers of the slopes) wrapped in a bisection safeguard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._normal import norm_cdf, norm_ppf
from .conditional import knockin_z_pieces, knockout_z_interval
from .contracts import ContractSpec
from .errors import CapabilityError
from .market import MarketSpec

Z_LIMIT = 40.0  # Phi underflows past +/-40; no probability mass beyond
HIGH_ORDER_STEPS = 10
ROOT_XTOL = 1e-12

RF_FAMILIES = ("asian_basket_call", "vanilla_put")


@dataclass(frozen=True)
class Z1Profile:
    """Exponential-sum payoff profile in the first normal coordinate.

    ``log_coeffs`` holds log(c_i) (basket weights folded in; -inf rows
    drop out), ``slopes`` the first-column coefficients a_i.  The payoff
    is orientation * (scale * sum c_i e^{a_i z} - strike); orientation -1
    encodes strike-minus-price payoffs.
    """

    log_coeffs: np.ndarray
    slopes: np.ndarray
    strike: float
    scale: float = 1.0
    orientation: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "log_coeffs",
                           np.asarray(self.log_coeffs, dtype=float))
        object.__setattr__(self, "slopes",
                           np.asarray(self.slopes, dtype=float))
        if self.log_coeffs.shape != self.slopes.shape:
            raise ValueError("log_coeffs and slopes must have equal shape")
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be +1 or -1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class ZBounds:
    """Integration bounds for z1 (may be +/-inf); empty if crossed."""

    xi_lower: float
    xi_upper: float

    @property
    def is_empty(self) -> bool:
        return not self.xi_lower <= self.xi_upper


def _power_sums(p: Z1Profile, z1: float, max_order: int):
    """Common-shifted sums S_tau = sum c_i a_i^tau e^{a_i z1}.

    Returns (shift, [s_0..s_max]) with S_tau = e^shift * s_tau.
    """
    ell = p.log_coeffs + p.slopes * z1
    shift = np.max(ell)
    if not np.isfinite(shift):
        raise ValueError("profile has no active rows")
    e = np.exp(ell - shift)
    return shift, [float(np.sum(e * p.slopes**tau))
                   for tau in range(max_order + 1)]


def profile_derivatives(p: Z1Profile, z1: float, order: int) -> float:
    """Derivative of the profile payoff of the given order (0..3).

    Evaluated with a max-exponent shift; genuinely unrepresentable values
    come out as +/-inf rather than raising.
    """
    if not 0 <= order <= 3:
        raise ValueError("order must be in 0..3")
    if not np.isfinite(z1):
        raise ValueError("z1 must be finite")
    shift, sums = _power_sums(p, z1, order)
    s = sums[order]
    if s == 0.0:
        raw = 0.0
    else:
        raw = math.copysign(math.exp(min(shift + math.log(abs(s)), 745.0)), s)
        if shift + math.log(abs(s)) > 709.0:
            raw = math.copysign(math.inf, s)
    value = p.scale * raw
    if order == 0:
        value -= p.strike
    return p.orientation * value


def _log_moments(p: Z1Profile, z1: float):
    """log(scale * sum c e^{az}) - log(strike) and its first 3 derivatives."""
    shift, sums = _power_sums(p, z1, 3)
    s0, s1, s2, s3 = sums
    g = shift + math.log(s0) + math.log(p.scale) - math.log(p.strike)
    m1 = s1 / s0
    m2c = s2 / s0 - m1 * m1
    m3c = s3 / s0 - 3.0 * m1 * (s2 / s0) + 2.0 * m1**3
    return g, m1, m2c, m3c


def householder_step(f: float, f1: float, f2: float, f3: float) -> float:
    """Order-4 Householder update; returns the step (NaN on breakdown)."""
    num = 3.0 * f * (2.0 * f1 * f1 - f * f2)
    den = -6.0 * f1**3 + 6.0 * f * f1 * f2 - f * f * f3
    if den == 0.0 or not math.isfinite(den) or not math.isfinite(num):
        return float("nan")
    return num / den


def safeguarded_root(fun, lo: float, hi: float, *, ftol: float = 0.0,
                     xtol: float = ROOT_XTOL,
                     high_order_steps: int = HIGH_ORDER_STEPS) -> float:
    """Root of f inside [lo, hi] where fun(z) -> (f, f', f'', f''').

    The bracket endpoints must have opposite signs.  Runs at most
    ``high_order_steps`` Householder iterations, falling back to bisection
    whenever a step leaves the bracket, then polishes with bisection until
    the width or residual tolerance is met.
    """
    f_lo = fun(lo)[0]
    f_hi = fun(hi)[0]
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise ValueError("bracket endpoints must have opposite signs")
    x = 0.5 * (lo + hi)
    for _ in range(high_order_steps):
        f, f1, f2, f3 = fun(x)
        if f == 0.0 or abs(f) <= ftol:
            return x
        if math.copysign(1.0, f) == math.copysign(1.0, f_lo):
            lo = x
        else:
            hi = x
        step = householder_step(f, f1, f2, f3)
        cand = x + step
        if not math.isfinite(cand) or not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        x = cand
        if hi - lo <= xtol * max(1.0, abs(x)):
            return x
    while hi - lo > xtol * max(1.0, abs(x)):
        f = fun(x)[0]
        if f == 0.0 or abs(f) <= ftol:
            return x
        if math.copysign(1.0, f) == math.copysign(1.0, f_lo):
            lo = x
        else:
            hi = x
        x = 0.5 * (lo + hi)
    return x


@dataclass(frozen=True)
class PositivityRegion:
    """Zeros of the profile payoff and the interval(s) where it is > 0."""

    roots: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]


def _active(p: Z1Profile) -> np.ndarray:
    return np.isfinite(p.log_coeffs)


def _everywhere(p: Z1Profile) -> tuple[tuple[float, float], ...]:
    return ((-math.inf, math.inf),)


def find_positivity_region(p: Z1Profile) -> PositivityRegion:
    """Locate payoff zeros in z1 and the region where the payoff is positive.

    Single-signed slopes give at most one zero; mixed signs are handled by
    first finding the unique zero of the derivative (the exponential sum
    is strictly convex) and bracketing outward from it.  Sign changes that
    do not occur inside |z1| <= 40 are decided by the sign at the limit:
    there is no probability mass beyond.
    """
    active = _active(p)
    slopes = p.slopes[active]
    sign = p.orientation

    def region_if(positive: bool):
        ivs = _everywhere(p) if positive else ()
        return PositivityRegion((), ivs)

    if not active.any() or p.strike <= 0 or not np.any(slopes != 0.0):
        # constant-in-z1 or root-free profile: decide by the value at 0
        return region_if(profile_derivatives(p, 0.0, 0) > 0)

    def log_gap(z):
        return _log_moments(p, z)[0]

    def g_fun(z):
        return _log_moments(p, z)

    if np.all(slopes >= 0.0) or np.all(slopes <= 0.0):
        increasing = bool(np.all(slopes >= 0.0))
        g_left, g_right = log_gap(-Z_LIMIT), log_gap(Z_LIMIT)
        if not increasing:
            g_left, g_right = g_right, g_left
        if g_left >= 0.0:  # inner sum above the strike on the whole range
            return region_if(sign > 0)
        if g_right <= 0.0:
            return region_if(sign < 0)
        lo, hi = (-Z_LIMIT, Z_LIMIT)
        root = safeguarded_root(g_fun, lo, hi)
        if increasing:
            inner_pos = (root, math.inf)
            inner_neg = (-math.inf, root)
        else:
            inner_pos = (-math.inf, root)
            inner_neg = (root, math.inf)
        return PositivityRegion(
            (root,), (inner_pos,) if sign > 0 else (inner_neg,))

    # mixed signs: locate the unique minimum of the inner sum first
    def d_fun(z):
        _, m1, m2, m3 = _log_moments(p, z)
        return m1, m2, m3, 0.0

    d_left = _log_moments(p, -Z_LIMIT)[1]
    d_right = _log_moments(p, Z_LIMIT)[1]
    if d_left >= 0.0:  # effectively increasing on the whole range
        if log_gap(-Z_LIMIT) >= 0.0:
            return region_if(sign > 0)
        if log_gap(Z_LIMIT) <= 0.0:
            return region_if(sign < 0)
        root = safeguarded_root(g_fun, -Z_LIMIT, Z_LIMIT)
        return PositivityRegion((root,), ((root, math.inf),) if sign > 0
                                else ((-math.inf, root),))
    if d_right <= 0.0:  # effectively decreasing
        if log_gap(Z_LIMIT) >= 0.0:
            return region_if(sign > 0)
        if log_gap(-Z_LIMIT) <= 0.0:
            return region_if(sign < 0)
        root = safeguarded_root(g_fun, -Z_LIMIT, Z_LIMIT)
        return PositivityRegion((root,), ((-math.inf, root),) if sign > 0
                                else ((root, math.inf),))
    z_star = safeguarded_root(d_fun, -Z_LIMIT, Z_LIMIT)
    g_min = log_gap(z_star)
    if g_min > 0.0:
        return region_if(sign > 0)
    if g_min == 0.0:
        ivs = _everywhere(p) if sign > 0 else ()
        return PositivityRegion((z_star,), ivs)
    g_l = log_gap(-Z_LIMIT)
    g_r = log_gap(Z_LIMIT)
    root_lo = (safeguarded_root(g_fun, -Z_LIMIT, z_star) if g_l > 0.0
               else -Z_LIMIT)
    root_hi = (safeguarded_root(g_fun, z_star, Z_LIMIT) if g_r > 0.0
               else Z_LIMIT)
    if sign > 0:
        ivs = ((-math.inf, root_lo), (root_hi, math.inf))
    else:
        ivs = ((root_lo, root_hi),)
    return PositivityRegion((root_lo, root_hi), ivs)


def analytic_z1_expectation(p: Z1Profile, zb: ZBounds) -> float:
    """Mean of the profile payoff over z1 ~ N(0,1) restricted to bounds.

    Exact for the exponential-sum family: each row contributes
    c_i e^{a_i^2/2} (Phi(hi - a_i) - Phi(lo - a_i)); infinite endpoints
    resolve through Phi(+/-inf).
    """
    if zb.is_empty or zb.xi_lower == zb.xi_upper:
        return 0.0
    lo, hi = zb.xi_lower, zb.xi_upper
    delta0 = float(norm_cdf(hi) - norm_cdf(lo))
    with np.errstate(over="ignore"):
        terms = np.exp(p.log_coeffs + 0.5 * p.slopes**2) * (
            norm_cdf(hi - p.slopes) - norm_cdf(lo - p.slopes))
    total = p.scale * float(np.sum(terms)) - p.strike * delta0
    return p.orientation * total


# ---------------------------------------------------------------------------
# batch machinery


def _batch_moments(logc: np.ndarray, slopes: np.ndarray, z: np.ndarray,
                   log_target: float):
    """Log-gap and softmax slope moments for a batch of z values."""
    ell = logc + z[:, None] * slopes[None, :]
    shift = np.max(ell, axis=1)
    e = np.exp(ell - shift[:, None])
    s0 = e.sum(axis=1)
    prob = e / s0[:, None]
    m1 = prob @ slopes
    m2 = prob @ slopes**2
    m3 = prob @ slopes**3
    g = shift + np.log(s0) - log_target
    m2c = m2 - m1 * m1
    m3c = m3 - 3.0 * m1 * m2 + 2.0 * m1**3
    return g, m1, m2c, m3c


_G_TOL = 1e-12  # |log(inner/strike)| at the root; tighter than the payoff tol


def _batch_root(logc: np.ndarray, slopes: np.ndarray, log_target: float,
                lo: np.ndarray, hi: np.ndarray, mask: np.ndarray,
                derivative: bool = False) -> np.ndarray:
    """Vectorised safeguarded Householder solve per sample.

    Solves g(z) = 0 (log-gap) or g'(z) = 0 (``derivative=True``, used for
    the convex minimum) inside per-sample brackets where ``mask`` is set.
    Assumes a sign change inside every active bracket.  Converged samples
    drop out of the evaluation set, so the high-order phase costs only a
    few full batch passes.
    """
    roots = np.full(lo.shape, np.nan)
    if not mask.any():
        return roots
    idx = np.where(mask)[0]
    a, b = lo[idx].copy(), hi[idx].copy()
    lc = logc[idx]

    def evaluate(sub, z):
        g, m1, m2c, m3c = _batch_moments(lc[sub], slopes, z, log_target)
        if derivative:
            return m1, m2c, m3c, np.zeros_like(z)
        return g, m1, m2c, m3c

    all_idx = np.arange(idx.size)
    sign_lo = np.sign(evaluate(all_idx, a)[0])
    x = 0.5 * (a + b)
    active = all_idx
    for it in range(HIGH_ORDER_STEPS + 60):
        if not active.size:
            break
        f, f1, f2, f3 = evaluate(active, x[active])
        # residual-converged samples keep their current x as the root
        keep = np.abs(f) > _G_TOL
        active = active[keep]
        if not active.size:
            break
        f, f1, f2, f3 = f[keep], f1[keep], f2[keep], f3[keep]
        on_lo_side = np.sign(f) == sign_lo[active]
        a[active] = np.where(on_lo_side, x[active], a[active])
        b[active] = np.where(on_lo_side, b[active], x[active])
        mid = 0.5 * (a[active] + b[active])
        if it < HIGH_ORDER_STEPS:
            num = 3.0 * f * (2.0 * f1 * f1 - f * f2)
            den = -6.0 * f1**3 + 6.0 * f * f1 * f2 - f * f * f3
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = x[active] + num / den
            bad = (~np.isfinite(cand) | (cand <= a[active])
                   | (cand >= b[active]))
            x[active] = np.where(bad, mid, cand)
        else:
            x[active] = mid
        done = (b[active] - a[active]
                <= ROOT_XTOL * np.maximum(1.0, np.abs(x[active])))
        active = active[~done]
    roots[idx] = x
    return roots


def profile_from_contract(contract: ContractSpec, spec: MarketSpec,
                          a: np.ndarray,
                          z_rest: np.ndarray) -> tuple[np.ndarray, np.ndarray,
                                                       float, int]:
    """Batch profile pieces (log-coeffs, slopes, strike, orientation).

    Basket weights are folded into the log-coefficients, so the scale
    factor is 1.  Rows with zero weight come out as -inf and never
    contribute.
    """
    if contract.family not in RF_FAMILIES:
        raise CapabilityError(
            f"root-finding supports {RF_FAMILIES}, not {contract.family!r} "
            "(binary payoffs have no payoff roots in the first coordinate)")
    weights = contract.row_weights(spec)
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    eta = np.log(np.repeat(spec.s0, spec.steps)) + spec.log_drift_rows()
    logc = log_w + eta + z_rest @ a[:, 1:].T
    orientation = -1 if contract.family == "vanilla_put" else 1
    return logc, a[:, 0].copy(), float(contract.strike), orientation


def _positivity_pieces(logc: np.ndarray, slopes: np.ndarray, strike: float,
                       orientation: int):
    """Per-sample positivity intervals, padded to two (lo1,hi1,lo2,hi2)."""
    n = logc.shape[0]
    active = np.isfinite(logc).any(axis=0)
    act_slopes = slopes[active]
    lo1 = np.full(n, np.nan)
    hi1 = np.full(n, np.nan)
    lo2 = np.full(n, np.nan)
    hi2 = np.full(n, np.nan)

    def set_everywhere(idx):
        lo1[idx], hi1[idx] = -np.inf, np.inf

    log_target = math.log(strike) if strike > 0 else None
    if strike <= 0 or not np.any(act_slopes != 0.0):
        # no roots: decide by the payoff value at z1 = 0
        ell = logc[:, active] + 0.0
        shift = np.max(ell, axis=1)
        inner = (np.exp(shift) * np.exp(ell - shift[:, None]).sum(axis=1)
                 - strike)
        positive = (orientation * inner) > 0
        set_everywhere(np.where(positive)[0])
        return lo1, hi1, lo2, hi2

    lc = np.where(np.isfinite(logc), logc, -np.inf)
    limit_lo = np.full(n, -Z_LIMIT)
    limit_hi = np.full(n, Z_LIMIT)
    single_sign = bool(np.all(act_slopes >= 0.0) or np.all(act_slopes <= 0.0))
    if single_sign:
        increasing = bool(np.all(act_slopes >= 0.0))
        g_l = _batch_moments(lc, slopes, limit_lo, log_target)[0]
        g_r = _batch_moments(lc, slopes, limit_hi, log_target)[0]
        g_left, g_right = (g_l, g_r) if increasing else (g_r, g_l)
        above = g_left >= 0.0     # inner > strike on the whole range
        below = g_right <= 0.0    # inner < strike on the whole range
        solve = ~(above | below)
        root = _batch_root(lc, slopes, log_target, limit_lo, limit_hi, solve)
        inner_pos = orientation > 0
        always = above if inner_pos else below
        set_everywhere(np.where(always)[0])
        sidx = np.where(solve)[0]
        if increasing == inner_pos:
            lo1[sidx], hi1[sidx] = root[sidx], np.inf
        else:
            lo1[sidx], hi1[sidx] = -np.inf, root[sidx]
        return lo1, hi1, lo2, hi2

    # mixed signs: minimum of the inner sum, then up to two roots
    d_l = _batch_moments(lc, slopes, limit_lo, log_target)[1]
    d_r = _batch_moments(lc, slopes, limit_hi, log_target)[1]
    genuine = (d_l < 0.0) & (d_r > 0.0)
    # degenerate tails behave monotonically inside the z limit
    mono_inc = d_l >= 0.0
    mono_dec = (d_r <= 0.0) & ~mono_inc
    z_star = _batch_root(lc, slopes, log_target, limit_lo, limit_hi, genuine,
                         derivative=True)
    g_min = np.full(n, np.inf)
    gidx = np.where(genuine)[0]
    if gidx.size:
        g_min[gidx] = _batch_moments(lc[gidx], slopes, z_star[gidx],
                                     log_target)[0]
    g_l0 = _batch_moments(lc, slopes, limit_lo, log_target)[0]
    g_r0 = _batch_moments(lc, slopes, limit_hi, log_target)[0]

    always = np.zeros(n, dtype=bool)
    two_roots = np.zeros(n, dtype=bool)
    always |= genuine & (g_min >= 0.0) & (orientation > 0)
    two_roots |= genuine & (g_min < 0.0)
    # monotone-inside-range samples behave like the single-sign case
    for mono, increasing in ((mono_inc, True), (mono_dec, False)):
        if not mono.any():
            continue
        g_left = np.where(increasing, g_l0, g_r0)
        g_right = np.where(increasing, g_r0, g_l0)
        above = mono & (g_left >= 0.0)
        below = mono & (g_right <= 0.0)
        solve = mono & ~(above | below)
        root = _batch_root(lc, slopes, log_target, limit_lo, limit_hi, solve)
        inner_pos = orientation > 0
        set_everywhere(np.where(above if inner_pos else below)[0])
        sidx = np.where(solve)[0]
        if sidx.size:
            if increasing == inner_pos:
                lo1[sidx], hi1[sidx] = root[sidx], np.inf
            else:
                lo1[sidx], hi1[sidx] = -np.inf, root[sidx]

    set_everywhere(np.where(always)[0])
    tidx = np.where(two_roots)[0]
    if tidx.size:
        has_left = g_l0[tidx] > 0.0
        has_right = g_r0[tidx] > 0.0
        root_lo = np.full(n, -Z_LIMIT)
        root_hi = np.full(n, Z_LIMIT)
        mask_l = np.zeros(n, dtype=bool)
        mask_l[tidx[has_left]] = True
        mask_r = np.zeros(n, dtype=bool)
        mask_r[tidx[has_right]] = True
        rl = _batch_root(lc, slopes, log_target, limit_lo, z_star, mask_l)
        rr = _batch_root(lc, slopes, log_target, z_star, limit_hi, mask_r)
        root_lo[mask_l] = rl[mask_l]
        root_hi[mask_r] = rr[mask_r]
        if orientation > 0:
            lo1[tidx], hi1[tidx] = -np.inf, root_lo[tidx]
            lo2[tidx], hi2[tidx] = root_hi[tidx], np.inf
        else:
            lo1[tidx], hi1[tidx] = root_lo[tidx], root_hi[tidx]
    return lo1, hi1, lo2, hi2


def rf_values(u: np.ndarray, a, contract: ContractSpec,
              spec: MarketSpec) -> tuple[np.ndarray, np.ndarray]:
    """Batch samples with the first coordinate integrated out analytically.

    Consumes u_2..u_mn only.  Returns (discounted values, region weights);
    a zero weight marks a sample whose admissible region is empty.
    """
    u = np.asarray(u, dtype=float)
    mat = a.a if hasattr(a, "a") else np.asarray(a, dtype=float)
    z_rest = norm_ppf(u[:, 1:])
    n = u.shape[0]

    # barrier region for z1: one interval or the complement of one
    if contract.barriers and contract.barriers[0].kind == "knock_in":
        lo_cap, hi_floor = knockin_z_pieces(mat, spec, contract, z_rest)
        # overlapping half-lines mean the crossing is certain: merge them
        # into a single full-line piece so nothing is counted twice
        overlap = lo_cap >= hi_floor
        barrier_pieces = [
            (np.full(n, -np.inf), np.where(overlap, np.inf, lo_cap)),
            (np.where(overlap, np.inf, hi_floor), np.full(n, np.inf)),
        ]
    elif contract.barriers:
        z_lo, z_hi = knockout_z_interval(mat, spec, contract, z_rest)
        barrier_pieces = [(z_lo, z_hi)]
    else:
        barrier_pieces = [(np.full(n, -np.inf), np.full(n, np.inf))]

    logc, slopes, strike, orientation = profile_from_contract(
        contract, spec, mat, z_rest)
    pos_pieces = _positivity_pieces(logc, slopes, strike, orientation)
    pos_list = [(pos_pieces[0], pos_pieces[1]), (pos_pieces[2], pos_pieces[3])]

    lc = np.where(np.isfinite(logc), logc, -np.inf)
    shifted = lc + 0.5 * slopes[None, :]**2
    values = np.zeros(n)
    weight = np.zeros(n)
    discount = math.exp(-spec.rate * spec.horizon)
    for b_lo, b_hi in barrier_pieces:
        for p_lo, p_hi in pos_list:
            lo = np.maximum(b_lo, np.where(np.isnan(p_lo), np.inf, p_lo))
            hi = np.minimum(b_hi, np.where(np.isnan(p_hi), -np.inf, p_hi))
            idx = np.where(lo < hi)[0]
            if not idx.size:
                continue
            lo_i, hi_i = lo[idx], hi[idx]
            dphi = norm_cdf(hi_i) - norm_cdf(lo_i)
            terms = np.exp(shifted[idx]) * (
                norm_cdf(hi_i[:, None] - slopes[None, :])
                - norm_cdf(lo_i[:, None] - slopes[None, :]))
            piece = terms.sum(axis=1) - strike * dphi
            values[idx] += orientation * piece
            weight[idx] += dphi
    return discount * values, weight


def rf_sample(u: np.ndarray, a, contract: ContractSpec,
              spec: MarketSpec) -> float:
    """One analytically integrated sample from one uniform vector."""
    u = np.asarray(u, dtype=float)
    if u.shape != (spec.dimension,):
        raise ValueError(f"point must have shape ({spec.dimension},)")
    values, _ = rf_values(u[None, :], a, contract, spec)
    return float(values[0])
