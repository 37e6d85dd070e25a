#!/usr/bin/env python3
"""Emit the bundled experiment files in configs/ from the preset builders."""

import os

import numpy as np

from ltbarrier import presets
from ltbarrier.harness import ExperimentConfig

OUT_DIR = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "configs")


def _fmt_floats(values) -> str:
    return " ".join(f"{v:g}" for v in np.atleast_1d(values))


def _fmt_matrix(m) -> str:
    return " ; ".join(" ".join(f"{v:g}" for v in row) for row in np.asarray(m))


def _fmt_barriers(contract) -> str:
    chunks = []
    for b in contract.barriers:
        kind = "out" if b.kind == "knock_out" else "in"
        chunks.append(f"{b.direction} {kind} {b.level:g} @{b.asset + 1}")
    return " | ".join(chunks)


def section(config: ExperimentConfig, include_methods=True) -> str:
    m = config.market
    c = config.contract
    lines = [f"[{config.name}]"]
    lines.append(f"s0 = {_fmt_floats(m.s0)}")
    lines.append(f"sigma = {_fmt_floats(m.sigma)}")
    if m.n_assets > 1:
        lines.append(f"corr = {_fmt_matrix(m.rho)}")
    lines.append(f"rate = {m.rate:g}")
    lines.append(f"horizon = {m.horizon:g}")
    lines.append(f"steps = {m.steps}")
    lines.append(f"family = {c.family}")
    lines.append(f"strike = {c.strike:g}")
    if c.barriers:
        lines.append(f"barriers = {_fmt_barriers(c)}")
    if include_methods:
        lines.append(f"methods = {' '.join(config.methods)}")
    return "\n".join(lines) + "\n"


def write(name: str, configs, defaults: str) -> None:
    path = os.path.join(OUT_DIR, name)
    body = defaults + "\n" + "\n".join(section(c, include_methods=False)
                                       for c in configs)
    with open(path, "w") as fh:
        fh.write(body)
    print(f"wrote {path} ({len(configs)} sections)")


def main() -> None:
    os.makedirs(OUT_DIR, exist_ok=True)
    write("asian_basket_knockout.cfg", presets.knockout_table_configs(),
          "# Asian basket with a single monitored knock-out barrier.\n"
          "# Ratios of MC_CS sigma to each comparison method's sigma.\n"
          "[defaults]\n"
          "methods = MC_CS QMC_LT QMC_LT_CS\n"
          "baseline = MC_CS\ncompare = QMC_LT QMC_LT_CS\n"
          "points = sobol\nn = 4096\nshifts = 40\nn_mc = 163840\nseed = 0\n")
    write("asian_basket_knockout_lattice.cfg",
          presets.knockout_table_configs(point_kind="lattice"),
          "# Same study with the rank-1 lattice sequence.\n[defaults]\n"
          "methods = MC_CS QMC_LT QMC_LT_CS\n"
          "baseline = MC_CS\ncompare = QMC_LT QMC_LT_CS\n"
          "points = lattice\nn = 4096\nshifts = 40\nn_mc = 163840\nseed = 0\n")
    write("double_barrier_binary.cfg", presets.double_barrier_table_configs(),
          "# Binary Asian with two knock-out levels on one asset.\n"
          "[defaults]\nmethods = MC_CS QMC_LT QMC_LT_CS\n"
          "baseline = MC_CS\ncompare = QMC_LT QMC_LT_CS\n"
          "n = 4096\nshifts = 40\nn_mc = 163840\nseed = 0\n")
    write("mixed_sign_two_asset.cfg", [presets.mixed_sign_config()],
          "# Two-asset binary average with a mixed-sign transform column.\n"
          "[defaults]\nmethods = MC_CS QMC_LT QMC_LT_CS\n"
          "baseline = MC_CS\ncompare = QMC_LT QMC_LT_CS\n"
          "n = 4096\nshifts = 40\nn_mc = 163840\nseed = 0\n")
    write("binary_barrier_convergence.cfg",
          [presets.binary_barrier_config(m) for m in (2, 3, 4, 5, 6, 60)],
          "# Pure binary knock-out used for convergence regressions.\n"
          "[defaults]\nmethods = QMC_LT QMC_LT_CS\n"
          "baseline = QMC_LT\ncompare = QMC_LT_CS\n"
          "n = 4096\nshifts = 40\nseed = 0\n")
    write("asian_basket_knockin.cfg", presets.knockin_table_configs(),
          "# Asian basket with a knock-in barrier (no incremental baseline).\n"
          "[defaults]\nmethods = QMC_LT QMC_LT_CS\n"
          "baseline = QMC_LT\ncompare = QMC_LT_CS\n"
          "n = 4096\nshifts = 40\nseed = 0\n")
    write("asian_basket_rootfinding.cfg", presets.rootfinding_table_configs(),
          "# Asian basket knock-out priced with the analytic first "
          "coordinate.\n[defaults]\n"
          "methods = MC_CS QMC_LT_CS QMC_LT_CS_RF\n"
          "baseline = MC_CS\ncompare = QMC_LT_CS QMC_LT_CS_RF\n"
          "n = 4096\nshifts = 40\nn_mc = 163840\nseed = 0\n")
    write("down_in_put.cfg", presets.down_in_put_table_configs(),
          "# Down-and-in puts priced by forcing the crossing.\n[defaults]\n"
          "methods = QMC_LT QMC_LT_CS QMC_LT_CS_RF\n"
          "baseline = QMC_LT\ncompare = QMC_LT_CS QMC_LT_CS_RF\n"
          "n = 4096\nshifts = 40\nseed = 0\n")
    write("continuous_benchmark.cfg",
          [presets.continuous_benchmark_config(float(s0), t)
           for t in (1.0, 0.5, 1.0 / 12.0) for s0 in range(85, 131, 5)],
          "# 500-date down-and-in puts against the continuous-barrier "
          "formula.\n[defaults]\nmethods = QMC_LT_CS\n"
          "baseline = QMC_LT_CS\ncompare = QMC_LT_CS\n"
          "n = 4096\nshifts = 40\nseed = 0\n")


if __name__ == "__main__":
    main()
