"""Low-discrepancy point sets and their randomizations.

Two deterministic generators are provided: the Sobol' digital sequence in
Gray-code order (direction numbers from the shipped Joe-Kuo table,
``data/sobol_direction_numbers.txt``) and a rank-1 lattice rule with the
shipped base-2 generating vector (``data/lattice_vector_b2_m13.txt``).
A seeded pseudo-random generator (PCG64) serves as the Monte Carlo
fallback.

All points are emitted on the 2^-53 grid so that digital shifting (bitwise
xor of the 53 fractional bits) is an exact involution.  Generators are
pure functions of their configuration; there is no shared mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import CapabilityError

FRACTION_BITS = 53
_SCALE = float(1 << FRACTION_BITS)

POINT_KINDS = ("sobol", "lattice", "pseudo_random")
SHIFT_KINDS = ("digital_shift", "mod1_shift", "none")

# randomization kind required for each point-set kind
PAIRED_SHIFT = {
    "sobol": "digital_shift",
    "lattice": "mod1_shift",
    "pseudo_random": "none",
}


@dataclass(frozen=True)
class PointSetConfig:
    """Choice of point set: kind, dimension, count and seed.

    The seed only matters for ``pseudo_random``; the low-discrepancy
    generators are fully deterministic.
    """

    kind: str
    dimension: int
    count: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in POINT_KINDS:
            raise ValueError(f"unknown point-set kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        limit = max_dimension(self.kind)
        if limit is not None and self.dimension > limit:
            raise CapabilityError(
                f"{self.kind} supports at most {limit} dimensions from the "
                f"shipped parameter table, got {self.dimension}"
            )


@dataclass(frozen=True)
class Randomization:
    """A single randomization: shift kind plus the shift vector."""

    kind: str
    shift_vector: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        if self.kind not in SHIFT_KINDS:
            raise ValueError(f"unknown randomization kind {self.kind!r}")


@lru_cache(maxsize=1)
def _sobol_table() -> list[tuple[int, int, list[int]]]:
    """Parsed (s, a, m-list) per dimension d >= 2 from the data file."""
    text = resources.files("ltbarrier").joinpath(
        "data/sobol_direction_numbers.txt").read_text()
    table = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [int(p) for p in line.split()]
        d, s, a, m = parts[0], parts[1], parts[2], parts[3:]
        if d != len(table) + 2 or len(m) != s:
            raise ValueError("corrupt Sobol' direction-number table")
        table.append((s, a, m))
    return table


@lru_cache(maxsize=1)
def _lattice_vector() -> np.ndarray:
    text = resources.files("ltbarrier").joinpath(
        "data/lattice_vector_b2_m13.txt").read_text()
    vals = [int(line) for line in text.splitlines()
            if line.strip() and not line.startswith("#")]
    return np.asarray(vals, dtype=np.int64)


def max_dimension(kind: str) -> int | None:
    """Largest dimension supported by the stored parameter data."""
    if kind == "sobol":
        return len(_sobol_table()) + 1
    if kind == "lattice":
        return len(_lattice_vector())
    return None


@lru_cache(maxsize=8)
def _direction_integers(dimension: int) -> np.ndarray:
    """Direction integers V[d, k], k = 0..52, scaled to 53 bits."""
    table = _sobol_table()
    v = np.zeros((dimension, FRACTION_BITS), dtype=np.uint64)
    # dimension 1: van der Corput in base 2 (all m_k = 1)
    for k in range(FRACTION_BITS):
        v[0, k] = np.uint64(1) << np.uint64(FRACTION_BITS - 1 - k)
    for d in range(1, dimension):
        s, a, m_init = table[d - 1]
        m = list(m_init)
        for k in range(s, FRACTION_BITS):
            new = m[k - s] ^ (m[k - s] << s)
            for j in range(1, s):
                if (a >> (s - 1 - j)) & 1:
                    new ^= m[k - j] << j
            m.append(new)
        for k in range(FRACTION_BITS):
            v[d, k] = np.uint64(m[k]) << np.uint64(FRACTION_BITS - 1 - k)
    return v


def _sobol_points(dimension: int, count: int, first_index: int) -> np.ndarray:
    v = _direction_integers(dimension)
    x = np.zeros(dimension, dtype=np.uint64)
    # state at first_index: xor of direction columns selected by the Gray code
    gray = first_index ^ (first_index >> 1)
    for k in range(FRACTION_BITS):
        if (gray >> k) & 1:
            x ^= v[:, k]
    out = np.empty((count, dimension), dtype=np.uint64)
    out[0] = x
    for i in range(1, count):
        idx = first_index + i
        # bit flipped between consecutive Gray codes: lowest zero bit of idx-1
        c = (~(idx - 1) & idx).bit_length() - 1
        out[i] = out[i - 1] ^ v[:, c]
    return out.astype(np.float64) / _SCALE


def _lattice_points(dimension: int, count: int) -> np.ndarray:
    z = _lattice_vector()[:dimension]
    i = np.arange(count, dtype=np.int64)
    return ((i[:, None] * z[None, :]) % count) / float(count)


def _pseudo_points(dimension: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    ints = rng.integers(0, 1 << FRACTION_BITS, size=(count, dimension),
                        dtype=np.int64)
    return ints.astype(np.float64) / _SCALE


def generate_points(config: PointSetConfig,
                    first_index: int | None = None) -> np.ndarray:
    """Generate the configured point set, shape (count, dimension) in [0,1).

    ``first_index`` applies to the Sobol' sequence only.  Its default is 1:
    index 0 of the unrandomized sequence is the all-zeros point, which maps
    to -inf under the inverse normal CDF.  Randomized runs pass 0 and rely
    on the shift to make the first point interior.
    """
    if config.kind == "sobol":
        start = 1 if first_index is None else first_index
        return _sobol_points(config.dimension, config.count, start)
    if first_index not in (None, 0):
        raise ValueError(f"first_index is only supported for sobol, got "
                         f"{first_index} with {config.kind}")
    if config.kind == "lattice":
        return _lattice_points(config.dimension, config.count)
    return _pseudo_points(config.dimension, config.count, config.seed)


def randomize(points: np.ndarray, r: Randomization) -> np.ndarray:
    """Apply a randomization to a point matrix; output stays in [0,1)."""
    if r.kind == "none":
        return np.array(points, copy=True)
    shift = np.asarray(r.shift_vector, dtype=np.float64)
    if shift.shape != (points.shape[-1],):
        raise ValueError(
            f"shift vector has dimension {shift.shape}, points have "
            f"dimension {points.shape[-1]}")
    if r.kind == "mod1_shift":
        s = points + shift
        return s - np.floor(s)
    # digital shift: xor of the 53 fractional bits
    p_int = (points * _SCALE).astype(np.uint64)
    s_int = (shift * _SCALE).astype(np.uint64)
    return (p_int ^ s_int).astype(np.float64) / _SCALE


def replication_shifts(m: int, dimension: int, seed: int = 0) -> np.ndarray:
    """M independent uniform shift vectors, shape (m, dimension).

    Deterministic given the seed (PCG64 streams spawned per replication);
    values lie on the 2^-53 grid so they are usable as digital shifts.
    """
    if m < 1:
        raise ValueError("need at least one replication")
    children = np.random.SeedSequence(seed).spawn(m)
    out = np.empty((m, dimension))
    for k, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        ints = rng.integers(0, 1 << FRACTION_BITS, size=dimension,
                            dtype=np.int64)
        out[k] = ints.astype(np.float64) / _SCALE
    return out


def randomization_for(config: PointSetConfig,
                      shift_vector: np.ndarray) -> Randomization:
    """The randomization kind matching a point-set kind, with checks."""
    return Randomization(PAIRED_SHIFT[config.kind], np.asarray(shift_vector))
