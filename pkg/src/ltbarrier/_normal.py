"""Standard-normal CDF helpers shared by the sampling engines.

Inverse-CDF inputs are clamped to (1e-15, 1 - 1e-15): digitally shifted
points can come arbitrarily close to 0 or 1, and the engines must never
produce infinite normal variates.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr, ndtri

U_LO = 1e-15
U_HI = 1.0 - 1e-15


def norm_cdf(x):
    """Phi(x), vectorised; handles +/-inf endpoints exactly."""
    return ndtr(x)


def norm_ppf(u):
    """Phi^{-1}(u) with inputs clamped to (1e-15, 1 - 1e-15)."""
    return ndtri(np.clip(u, U_LO, U_HI))
