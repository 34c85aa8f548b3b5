"""Experiment configuration: INI files with one section per experiment.

A `[run]` section may set `seed`, `out` and `jobs`; every other section is
an experiment whose name (before an optional `:label`) selects the runner.
See docs/config.md for the per-experiment keys.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] | None = None
    rule: str = ""


def _in(lo, hi, lo_open=False, hi_open=False):
    def f(v):
        vals = v if isinstance(v, list) else [v]
        return all((lo is None or (x > lo if lo_open else x >= lo)) and
                   (hi is None or (x < hi if hi_open else x <= hi)) for x in vals) and len(vals) > 0
    return f


SCHEMA: dict[str, dict[str, Key]] = {
    "telescope-check": {
        "dims": Key(_int_list, [1, 2], _in(1, 2), "entries must be 1 or 2"),
        "instances": Key(int, 200, _in(1, 100000), "must be in [1, 100000]"),
        "max_range": Key(int, 2, _in(0, 2), "must be in [0, 2]"),
        "max_sites": Key(int, 9, _in(1, 9), "must be in [1, 9]"),
        "coef": Key(float, 2.0, _in(0, None), "must be >= 0"),
    },
    "consistency-check": {
        "potentials": Key(lambda s: s.replace(",", " ").split(), ["ising", "rfim"],
                          lambda v: all(p in ("ising", "rfim") for p in v) and v, "entries must be ising or rfim"),
        "d": Key(int, 1, _in(1, 2), "must be 1 or 2"),
        "beta": Key(float, 1.0, _in(0, None), "must be >= 0"),
        "h": Key(float, 0.5, None),
        "boundaries": Key(int, 50, _in(1, 10000), "must be in [1, 10000]"),
        "outer_sites": Key(int, 4, _in(1, 4), "must be in [1, 4]"),
    },
    "vp-1d": {
        "beta_mu": Key(float, 0.3, _in(0, None), "must be >= 0"),
        "beta_nu": Key(float, 0.7, _in(0, None), "must be >= 0"),
        "h": Key(float, 0.0, None),
        "n": Key(_int_list, [1, 2, 4, 8, 12], _in(0, 200), "entries must be in [0, 200]"),
    },
    "grising": {
        "p": Key(_float_list, [0.1, 0.3, 0.5], _in(0, 1, lo_open=True, hi_open=True), "entries must lie in (0, 1)"),
        "beta": Key(float, 1.0, _in(0, None), "must be >= 0"),
        "d": Key(int, 1, _in(1, 3), "must be in [1, 3]"),
        "n": Key(int, 2, _in(0, 10), "must be in [0, 10]"),
        "samples": Key(int, 10000, _in(1, 10 ** 7), "must be in [1, 10^7]"),
    },
    "decimate-dominate": {
        "beta": Key(_float_list, [1.0], _in(0, None), "entries must be >= 0"),
        "b": Key(int, 2, _in(1, 5), "must be in [1, 5]"),
        "n": Key(int, 5, _in(1, 20), "must be in [1, 20]"),
        "window": Key(int, 1, _in(0, 1), "must be 0 or 1"),
    },
    "rfim-joint": {
        "beta": Key(float, 1.0, _in(0, None), "must be >= 0"),
        "h": Key(float, 0.5, None),
        "n": Key(_int_list, [1, 2, 3, 4, 5], _in(1, 5), "entries must be in [1, 5]"),
        "radius": Key(_int_list, [1, 2, 3, 4, 5], _in(1, 5), "entries must be in [1, 5]"),
        "oracle_radius": Key(int, 5, _in(1, 5), "must be in [1, 5]"),
        "decomposition_n": Key(_int_list, [2, 4, 6, 8], _in(1, 8), "entries must be in [1, 8]"),
        "rpm_beta": Key(float, 1.5, _in(0, None), "must be >= 0"),
        "rpm_h": Key(float, 0.3, None),
        "rpm_d": Key(int, 2, _in(1, 2), "must be 1 or 2"),
        "rpm_samples": Key(int, 100, _in(1, 100000), "must be in [1, 100000]"),
    },
    "ad-check": {
        "beta": Key(float, 1.0, _in(0, None), "must be >= 0"),
        "h": Key(float, 0.5, None),
        "n": Key(int, 1, _in(0, 2), "must be in [0, 2]"),
        "g": Key(int, 1, _in(0, 2), "must be in [0, 2]"),
        "table_radius": Key(int, 4, _in(1, 4), "must be in [1, 4]"),
    },
    "vacuum-check": {
        "instances": Key(int, 50, _in(1, 10000), "must be in [1, 10000]"),
        "d": Key(int, 1, _in(1, 2), "must be 1 or 2"),
        "max_range": Key(int, 2, _in(0, 2), "must be in [0, 2]"),
        "max_sites": Key(int, 4, _in(1, 4), "must be in [1, 4]"),
        "coef": Key(float, 2.0, _in(0, None), "must be >= 0"),
    },
}

# common to every experiment
COMMON = {
    "seed": Key(int, None, _in(0, 2 ** 63 - 1), "must be a nonnegative integer"),
}

STOCHASTIC = {"telescope-check", "consistency-check", "grising", "rfim-joint", "vacuum-check"}

DESCRIPTIONS = {
    "telescope-check": "telescoping identity for relative energies on random finite-range potentials",
    "consistency-check": "nested-kernel consistency of Ising and quenched RFIM specifications",
    "vp-1d": "d=1 relative entropy formula against direct relative entropy (transfer chains)",
    "grising": "GriSing zero rate log(1-p) and single-site law, exact and sampled",
    "decimate-dominate": "decimated minus/plus boundary tables and stochastic domination",
    "rfim-joint": "RFIM joint measures: entropy bound, joint conditional, decomposition, r+/r-",
    "ad-check": "asymptotic decoupling ratios of joint tables and the product law",
    "vacuum-check": "vacuum transform: vacuum property, kernel equality, H(+)=0",
}


@dataclass
class ExperimentConfig:
    name: str
    label: str
    params: dict
    seed: int | None
    digest: str = ""

    @property
    def stochastic(self) -> bool:
        return self.name in STOCHASTIC

    @property
    def stem(self) -> str:
        return self.label.replace(":", "-")


@dataclass
class RunConfig:
    experiments: list[ExperimentConfig]
    out: str = "results"
    jobs: int = 1
    raw: dict = field(default_factory=dict)


def _digest(name: str, params: dict, seed) -> str:
    text = name + "\n" + "\n".join(f"{k}={params[k]!r}" for k in sorted(params)) + f"\nseed={seed!r}"
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse(text: str, seed_override: int | None = None) -> tuple[RunConfig | None, list[str]]:
    """Parse and validate; returns (config or None, list of field errors)."""
    cp = configparser.ConfigParser(interpolation=None)
    errors: list[str] = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        return None, [f"syntax: {exc}"]
    run = dict(cp["run"]) if cp.has_section("run") else {}
    out = run.pop("out", "results")
    jobs, run_seed = 1, None
    if "jobs" in run:
        try:
            jobs = int(run.pop("jobs"))
            if jobs < 1:
                errors.append("run.jobs: must be >= 1")
        except ValueError:
            errors.append("run.jobs: must be an integer")
    if "seed" in run:
        try:
            run_seed = int(run.pop("seed"))
            if run_seed < 0:
                errors.append("run.seed: must be a nonnegative integer")
        except ValueError:
            errors.append("run.seed: must be an integer")
    for k in run:
        errors.append(f"run.{k}: unknown key")
    exps = []
    sections = [s for s in cp.sections() if s != "run"]
    if not sections:
        errors.append("config: no experiment sections")
    for sec in sections:
        name = sec.split(":", 1)[0].strip()
        if name not in SCHEMA:
            errors.append(f"{sec}: unknown experiment '{name}' (see list-experiments)")
            continue
        schema = {**SCHEMA[name], **COMMON}
        params = {}
        for k, v in cp[sec].items():
            if k not in schema:
                errors.append(f"{sec}.{k}: unknown key")
                continue
            key = schema[k]
            try:
                val = key.parse(v)
            except (ValueError, TypeError):
                errors.append(f"{sec}.{k}: cannot parse {v!r}")
                continue
            if key.check is not None and not key.check(val):
                errors.append(f"{sec}.{k}: {key.rule} (got {v!r})")
                continue
            params[k] = val
        for k, key in SCHEMA[name].items():
            params.setdefault(k, key.default)
        seed = params.pop("seed", None)
        if seed_override is not None:
            seed = seed_override
        elif seed is None:
            seed = run_seed
        if name in STOCHASTIC and seed is None:
            errors.append(f"{sec}.seed: required for the stochastic experiment '{name}'")
        exps.append(ExperimentConfig(name, sec, params, seed, _digest(name, params, seed)))
    if errors:
        return None, errors
    return RunConfig(exps, out, jobs), []


def load(path: str, seed_override: int | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    cfg, errors = parse(text, seed_override)
    if errors:
        raise ConfigError(errors)
    return cfg
