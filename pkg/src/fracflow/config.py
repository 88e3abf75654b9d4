"""Run configuration: a TOML document with ``[grid]``, ``[operator]``,
``[heat]``, ``[ns]`` and ``[output]`` sections.

Every key is optional; missing keys take the defaults in :data:`DEFAULTS`.
Unknown sections or keys, wrong types and out-of-range values are all
collected and reported together, each with the line it came from.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from fracflow.analytic import AnalyticField
from fracflow.errors import ConfigError
from fracflow.fields import Boundary, GridSpec, OperatorVariant
from fracflow.heat_solver import HeatConfig, Integrator
from fracflow.kernel_core import NormalizationMode
from fracflow.ns_solver import RANDOM_DIV_FREE, TAYLOR_GREEN, NSConfig

DEFAULTS: dict[str, dict] = {
    "grid": {"ndim": 1, "n": 64, "length": 2.0 * math.pi, "boundary": "periodic"},
    "operator": {"beta": 0.5, "mode": "unit-mass", "variant": "inside", "backend": "auto"},
    "heat": {
        "kappa": 1.0,
        "rho": 1.0,
        "c_heat": 1.0,
        "source": "0",
        "initial": "cos(2*x)",
        "dt": 0.01,
        "steps": 100,
        "integrator": "exponential",
        "steady": False,
    },
    "ns": {
        "mu": 0.01,
        "rho": 1.0,
        "lambda_bulk": 0.0,
        "force": [],
        "initial": TAYLOR_GREEN,
        "amplitude": 1.0,
        "seed": 0,
        "slope": -5.0 / 3.0,
        "dt": 0.0,
        "steps": 1000,
        "dealias": True,
        "viscous": "single",
    },
    "output": {"every": 10, "format": "csv", "dir": "out"},
}

_REAL = (int, float)


def _kind(value) -> tuple:
    if isinstance(value, bool):
        return (bool,)
    if isinstance(value, int):
        return (int,)
    if isinstance(value, float):
        return _REAL
    if isinstance(value, str):
        return (str,)
    return (list,)


def _locate(text: str) -> dict[tuple[str, str], int]:
    """Line numbers of ``key = ...`` entries, keyed by ``(section, key)``."""
    where: dict[tuple[str, str], int] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", stripped)
        if m:
            section = m.group(1)
            where.setdefault((section, ""), lineno)
            continue
        m = re.match(r"^([A-Za-z0-9_\-]+)\s*=", stripped)
        if m:
            where.setdefault((section, m.group(1)), lineno)
    return where


@dataclass
class RunConfig:
    """Validated configuration; ``sections`` holds every key with defaults filled."""

    sections: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def echo(self) -> dict:
        return copy.deepcopy(self.sections)

    @property
    def backend(self) -> str | None:
        b = self["operator"]["backend"]
        return None if b == "auto" else b

    def grid(self) -> GridSpec:
        g = self["grid"]
        return GridSpec(g["ndim"], g["n"], g["length"], Boundary(g["boundary"]))

    def heat(self) -> HeatConfig:
        h, op = self["heat"], self["operator"]
        return HeatConfig(
            grid=self.grid(),
            beta=op["beta"],
            mode=op["mode"],
            kappa=h["kappa"],
            rho=h["rho"],
            c_heat=h["c_heat"],
            source=AnalyticField(h["source"]),
            initial=AnalyticField(h["initial"]),
            dt=h["dt"],
            steps=h["steps"],
            integrator=h["integrator"],
            every=self["output"]["every"],
            backend=self.backend,
        )

    def ns(self) -> NSConfig:
        s, op = self["ns"], self["operator"]
        init = s["initial"]
        return NSConfig(
            grid=self.grid(),
            beta=op["beta"],
            mode=op["mode"],
            mu=s["mu"],
            rho=s["rho"],
            lambda_bulk=s["lambda_bulk"],
            force=[AnalyticField(e) for e in s["force"]] or None,
            initial=init if isinstance(init, str) else [AnalyticField(e) for e in init],
            amplitude=s["amplitude"],
            seed=s["seed"],
            slope=s["slope"],
            dt=s["dt"] or None,
            steps=s["steps"],
            every=self["output"]["every"],
            dealias=s["dealias"],
            variant=op["variant"],
            viscous=s["viscous"],
        )


def _check_values(sections: dict, line_of) -> list[str]:
    problems = []

    def bad(section: str, key: str, msg: str) -> None:
        problems.append(f"{line_of(section, key)}: [{section}] {key}: {msg}")

    for section, entries in sections.items():
        for key, value in entries.items():
            if isinstance(value, float) and not math.isfinite(value):
                bad(section, key, "must be a finite real")
    g, op, heat, ns, out = (sections[s] for s in ("grid", "operator", "heat", "ns", "output"))
    if not 0.0 < op["beta"] < 1.0:
        bad("operator", "beta", "beta must lie in (0,1)")
    choices = {
        ("grid", "boundary"): [b.value for b in Boundary],
        ("operator", "mode"): [m.value for m in NormalizationMode],
        ("operator", "variant"): [v.value for v in OperatorVariant] + ["cf", "ysm"],
        ("operator", "backend"): ["auto", "spectral", "direct"],
        ("heat", "integrator"): [i.value for i in Integrator],
        ("ns", "viscous"): ["single", "double"],
        ("output", "format"): ["csv", "bin"],
    }
    for (section, key), allowed in choices.items():
        if sections[section][key] not in allowed:
            bad(section, key, f"must be one of {', '.join(allowed)}")
    if g["ndim"] not in (1, 2, 3):
        bad("grid", "ndim", "must be 1, 2 or 3")
    if g["n"] < 8:
        bad("grid", "n", "need at least 8 points per axis")
    if g["length"] <= 0:
        bad("grid", "length", "must be positive")
    for key in ("kappa", "rho", "c_heat", "dt"):
        if heat[key] <= 0:
            bad("heat", key, "must be positive")
    for key in ("steps",):
        if heat[key] < 0:
            bad("heat", key, "must be non-negative")
        if ns[key] < 0:
            bad("ns", key, "must be non-negative")
    if ns["mu"] < 0:
        bad("ns", "mu", "must be non-negative")
    if ns["rho"] <= 0:
        bad("ns", "rho", "must be positive")
    if ns["dt"] < 0:
        bad("ns", "dt", "must be positive (0 selects the automatic step)")
    if out["every"] < 1:
        bad("output", "every", "must be at least 1")
    for section, key in (("heat", "source"), ("heat", "initial")):
        try:
            AnalyticField(sections[section][key])
        except ConfigError as exc:
            bad(section, key, str(exc))
    init = ns["initial"]
    if isinstance(init, str):
        if init not in (TAYLOR_GREEN, RANDOM_DIV_FREE, "zero"):
            bad("ns", "initial", f"must be {TAYLOR_GREEN}, {RANDOM_DIV_FREE}, zero or a list of expressions")
    for key in ("force", "initial"):
        value = ns[key]
        if isinstance(value, list):
            for expr in value:
                try:
                    AnalyticField(str(expr))
                except ConfigError as exc:
                    bad("ns", key, str(exc))
    return problems


def parse_config(text: str = "", overrides: dict | None = None) -> RunConfig:
    """Parse and validate a configuration document.

    ``overrides`` maps ``"section.key"`` to a value and takes precedence over
    the document (used for command-line flags).
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    where = _locate(text)

    def line_of(section: str, key: str) -> str:
        if f"{section}.{key}" in (overrides or {}):
            return "command line"
        lineno = where.get((section, key), where.get((section, "")))
        return "command line" if lineno is None else f"line {lineno}"

    problems = []
    sections = copy.deepcopy(DEFAULTS)
    merged = {s: dict(v) if isinstance(v, dict) else v for s, v in raw.items()}
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        merged.setdefault(section, {})
        if isinstance(merged[section], dict):
            merged[section][key] = value
    for section, entries in merged.items():
        if section not in DEFAULTS:
            problems.append(f"{line_of(section, '')}: unknown section [{section}]")
            continue
        if not isinstance(entries, dict):
            problems.append(f"{line_of('', section)}: {section} must be a section")
            continue
        for key, value in entries.items():
            if key not in DEFAULTS[section]:
                problems.append(f"{line_of(section, key)}: unknown key {key!r} in [{section}]")
                continue
            expected = _kind(DEFAULTS[section][key])
            if section == "ns" and key == "initial" and isinstance(value, list):
                expected = (list,)
            if not isinstance(value, expected) or (expected != (bool,) and isinstance(value, bool)):
                problems.append(
                    f"{line_of(section, key)}: [{section}] {key}: expected {expected[-1].__name__}, "
                    f"got {type(value).__name__}"
                )
                continue
            sections[section][key] = float(value) if expected is _REAL else value
    if not problems:
        problems = _check_values(sections, line_of)
    if problems:
        raise ConfigError(problems[0], problems)
    return RunConfig(sections)
