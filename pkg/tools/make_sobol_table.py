#!/usr/bin/env python3
"""Write the Sobol' direction-number table shipped in ltbarrier/data.

The parameters are the Joe-Kuo D(6) primitive polynomials and initial
direction numbers, taken from the copy bundled with SciPy
(scipy/stats/_sobol_direction_numbers.npz, same data as the published
new-joe-kuo-6.21201 file).  We keep the first 1100 dimensions, which is
more than the largest dimension any shipped experiment uses (4 x 260).

Output format, one line per dimension d >= 2:

    d s a m_1 ... m_s

where s is the degree of the primitive polynomial, a encodes its interior
coefficients and m_i are the initial direction numbers.  Dimension 1 is
the van der Corput sequence (all m_i = 1) and is not listed.
"""

import inspect
import os

import numpy as np

MAX_DIM = 1100
OUT = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    "src", "ltbarrier", "data", "sobol_direction_numbers.txt",
)


def main() -> None:
    import scipy.stats._sobol as _sobol_mod

    data_dir = os.path.dirname(inspect.getfile(_sobol_mod))
    npz = np.load(os.path.join(data_dir, "_sobol_direction_numbers.npz"))
    poly = npz["poly"]
    vinit = npz["vinit"]

    lines = [
        "# Sobol' direction numbers, Joe-Kuo D(6) parameters "
        "(new-joe-kuo-6.21201 as bundled with SciPy).",
        "# One line per dimension d >= 2: d s a m_1 ... m_s",
        "# Dimension 1 is the van der Corput sequence (m_i = 1, implicit).",
    ]
    for d in range(2, MAX_DIM + 1):
        p = int(poly[d - 1])
        s = p.bit_length() - 1
        a = (p - (1 << s) - 1) >> 1
        m = [str(int(x)) for x in vinit[d - 1, :s]]
        lines.append(f"{d} {s} {a} " + " ".join(m))
    with open(OUT, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {OUT}: dims 2..{MAX_DIM}")


if __name__ == "__main__":
    main()
