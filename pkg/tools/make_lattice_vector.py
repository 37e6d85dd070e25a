#!/usr/bin/env python3
"""Construct the rank-1 lattice generating vector shipped in ltbarrier/data.

Component-by-component search over random odd candidates, minimising the
shift-averaged P_2 worst-case error summed over the embedded point counts
N = 2^8 .. 2^13, with product weights gamma_j = 1/j^2.  The kernel is the
standard omega(x) = 2*pi^2*(x^2 - x + 1/6).  The search is deterministic
(fixed seed), so rerunning this script reproduces the shipped file.

Output format: one integer per line, dimension 1100, valid for point
counts up to 2^13.
"""

import os

import numpy as np

DIMS = 1100
M_LEVELS = range(8, 14)  # N = 2^8 .. 2^13
CANDIDATES = 128
SEED = 20120611
OUT = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    "src", "ltbarrier", "data", "lattice_vector_b2_m13.txt",
)


def omega(x: np.ndarray) -> np.ndarray:
    return 2.0 * np.pi**2 * (x * x - x + 1.0 / 6.0)


def main() -> None:
    rng = np.random.default_rng(SEED)
    levels = [1 << m for m in M_LEVELS]
    # kernel lookup per level: kernel[m][k] = omega(k / N_m)
    kernel = {n: omega(np.arange(n) / n) for n in levels}
    # running CBC weight products per level
    weights = {n: np.ones(n) for n in levels}
    idx = {n: np.arange(n, dtype=np.int64) for n in levels}

    z = [1]
    for d in range(2, DIMS + 1):
        gamma = 1.0 / d**2
        cands = rng.integers(1, levels[-1], size=CANDIDATES, dtype=np.int64)
        cands |= 1  # odd
        cands = np.unique(cands)
        score = np.zeros(len(cands))
        for n in levels:
            pos = (idx[n][:, None] * cands[None, :]) % n
            score += (weights[n][:, None] * kernel[n][pos]).mean(axis=0) / n
        best = int(cands[np.argmin(score)])
        z.append(best)
        for n in levels:
            weights[n] *= 1.0 + gamma * kernel[n][(idx[n] * best) % n]

    with open(OUT, "w") as fh:
        fh.write(
            "# Rank-1 lattice generating vector, base-2 extensible up to 2^13 points.\n"
            "# Built by tools/make_lattice_vector.py (seeded random CBC search,\n"
            "# P_2 criterion, product weights 1/j^2).  One integer per line.\n"
        )
        fh.write("\n".join(str(v) for v in z) + "\n")
    print(f"wrote {OUT}: {len(z)} components")


if __name__ == "__main__":
    main()
