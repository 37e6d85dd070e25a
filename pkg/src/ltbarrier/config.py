"""Experiment-file parsing: sectioned key = value text.

One experiment per section; a ``[defaults]`` section supplies values
inherited by every other section.  Errors name the offending field and
line.  The full grammar is documented in the README.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contracts import BarrierClause, ContractSpec
from .errors import ConfigError
from .harness import ExperimentConfig
from .market import MarketSpec

_MARKET_KEYS = ("s0", "sigma", "corr", "rate", "horizon", "steps", "times")
_CONTRACT_KEYS = ("family", "strike", "barriers", "weights")
_RUN_KEYS = ("methods", "points", "n", "shifts", "n_mc", "seed",
             "baseline", "compare")
_ALL_KEYS = _MARKET_KEYS + _CONTRACT_KEYS + _RUN_KEYS


@dataclass(frozen=True)
class _Entry:
    value: str
    line: int


def _parse_sections(text: str, path: str) -> dict[str, dict[str, _Entry]]:
    sections: dict[str, dict[str, _Entry]] = {}
    current: dict[str, _Entry] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.lstrip().startswith("["):
            name = line.strip()
            if not name.endswith("]"):
                raise ConfigError(f"{path}:{lineno}: malformed section header")
            name = name[1:-1].strip()
            if name in sections:
                raise ConfigError(f"{path}:{lineno}: duplicate section "
                                  f"{name!r}")
            current = {}
            sections[name] = current
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"{path}:{lineno}: key outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")
        if key in current:
            raise ConfigError(f"{path}:{lineno}: duplicate field {key!r}")
        current[key] = _Entry(value, lineno)
    return sections


def _fail(path: str, entry: _Entry, key: str, reason: str):
    raise ConfigError(f"{path}:{entry.line}: field {key!r} {reason}")


def _floats(path: str, entry: _Entry, key: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in entry.value.split()])
    except ValueError:
        _fail(path, entry, key, f"is not a list of numbers: {entry.value!r}")


def _float(path: str, entry: _Entry, key: str) -> float:
    try:
        return float(entry.value)
    except ValueError:
        _fail(path, entry, key, f"is not a number: {entry.value!r}")


def _int(path: str, entry: _Entry, key: str) -> int:
    try:
        return int(entry.value)
    except ValueError:
        _fail(path, entry, key, f"is not an integer: {entry.value!r}")


def _matrix(path: str, entry: _Entry, key: str) -> np.ndarray:
    try:
        rows = [[float(tok) for tok in row.split()]
                for row in entry.value.split(";")]
        return np.array(rows)
    except ValueError:
        _fail(path, entry, key, "is not a ';'-separated matrix")


def _barriers(path: str, entry: _Entry) -> tuple[BarrierClause, ...]:
    clauses = []
    for chunk in entry.value.split("|"):
        toks = chunk.split()
        if not toks:
            continue
        if len(toks) not in (3, 4):
            _fail(path, entry, "barriers",
                  "clauses need 'direction kind level [@asset]'")
        direction, kind, level = toks[0], toks[1], toks[2]
        asset = 1
        if len(toks) == 4:
            if not toks[3].startswith("@"):
                _fail(path, entry, "barriers",
                      f"asset reference must look like '@1', got {toks[3]!r}")
            asset = int(toks[3][1:])
        kind_full = {"out": "knock_out", "in": "knock_in"}.get(kind, kind)
        try:
            clauses.append(BarrierClause(asset=asset - 1, level=float(level),
                                         direction=direction,
                                         kind=kind_full))
        except ValueError as exc:
            _fail(path, entry, "barriers", f"is invalid: {exc}")
    return tuple(clauses)


def _experiment_from(path: str, name: str,
                     entries: dict[str, _Entry]) -> ExperimentConfig:
    def need(key: str) -> _Entry:
        if key not in entries:
            raise ConfigError(f"{path}: section [{name}] is missing the "
                              f"required field {key!r}")
        return entries[key]

    s0 = _floats(path, need("s0"), "s0")
    sigma = _floats(path, need("sigma"), "sigma")
    corr = (_matrix(path, entries["corr"], "corr")
            if "corr" in entries else np.eye(s0.size))
    times = (_floats(path, entries["times"], "times")
             if "times" in entries else None)
    try:
        market = MarketSpec(s0=s0, sigma=sigma, rho=corr,
                            rate=_float(path, need("rate"), "rate"),
                            horizon=_float(path, need("horizon"), "horizon"),
                            steps=_int(path, need("steps"), "steps"),
                            times=times)
    except ValueError as exc:
        raise ConfigError(f"{path}: section [{name}] market is invalid: "
                          f"{exc}") from exc

    weights = (_floats(path, entries["weights"], "weights")
               if "weights" in entries else None)
    try:
        contract = ContractSpec(
            family=need("family").value,
            strike=_float(path, need("strike"), "strike"),
            barriers=(_barriers(path, entries["barriers"])
                      if "barriers" in entries else ()),
            weights=weights)
    except ValueError as exc:
        raise ConfigError(f"{path}: section [{name}] contract is invalid: "
                          f"{exc}") from exc

    kwargs = {}
    if "methods" in entries:
        kwargs["methods"] = tuple(entries["methods"].value.split())
    if "points" in entries:
        kwargs["point_kind"] = entries["points"].value
    if "n" in entries:
        kwargs["n_points"] = _int(path, entries["n"], "n")
    if "shifts" in entries:
        kwargs["n_shifts"] = _int(path, entries["shifts"], "shifts")
    if "n_mc" in entries:
        kwargs["n_mc"] = _int(path, entries["n_mc"], "n_mc")
    if "seed" in entries:
        kwargs["seed"] = _int(path, entries["seed"], "seed")
    return ExperimentConfig(name=name, market=market, contract=contract,
                            **kwargs)


def load_experiments(path: str):
    """Parse a config file into experiment configs plus table options.

    Returns (configs, options) where options carries the [defaults]
    section's ``baseline``/``compare`` settings when present.
    """
    with open(path) as fh:
        text = fh.read()
    sections = _parse_sections(text, path)
    defaults = sections.pop("defaults", {})
    options = {
        "baseline": defaults.get("baseline",
                                 _Entry("MC_CS", 0)).value,
        "compare": tuple(defaults.get(
            "compare", _Entry("QMC_LT QMC_LT_CS", 0)).value.split()),
    }
    if not sections:
        raise ConfigError(f"{path}: no experiment sections found")
    configs = []
    for name, entries in sections.items():
        merged = {**defaults, **entries}
        merged.pop("baseline", None)
        merged.pop("compare", None)
        configs.append(_experiment_from(path, name, merged))
    return configs, options
