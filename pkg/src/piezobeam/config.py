"""Flat key=value config files with [section] headers.

Grammar per line: blank, comment (starting with '#' or ';'), a '[section]'
header, or 'key = value'; whitespace followed by '#' or ';' starts an
inline comment.  Unknown sections or keys fail parsing with the offending
line number; values that parse but violate domain constraints (for example
m = 1.5) fail validation instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, PiezobeamError, ValidationError
from .evolution import SeededRandom, SimConfig, SineMode, SmoothBump
from .params import (MemoryKernel, PhysicalParams, exponential_kernel,
                     make_params, poincare_constant, tabulated_kernel)

__all__ = ["RunConfig", "parse_config"]

_SCHEMA = {
    "params": {"rho", "alpha1", "gamma", "beta", "mu", "delta", "c", "m",
               "length", "poincare_cp"},
    "kernel": {"kind", "k", "s", "sigma", "d_sigma"},
    "grid": {"n_x", "n_s"},
    "sim": {"dt", "t_final", "record_every", "initial", "seed",
            "u_mode", "y_mode", "w_mode",
            "u_amp", "v_amp", "y_amp", "z_amp", "w_amp",
            "center", "width", "history"},
    "scan": {"lambda_min", "lambda_max", "points"},
    "output": {"directory"},
}

_DEFAULTS = {
    ("params", "rho"): "1.0", ("params", "alpha1"): "1.0",
    ("params", "gamma"): "1.0", ("params", "beta"): "1.0",
    ("params", "mu"): "1.0", ("params", "delta"): "1.0",
    ("params", "c"): "1.0", ("params", "m"): "0.5",
    ("params", "length"): repr(math.pi),
    ("kernel", "kind"): "exponential", ("kernel", "k"): "1.0",
    ("grid", "n_x"): "32", ("grid", "n_s"): "8",
    ("sim", "t_final"): "20.0", ("sim", "record_every"): "4",
    ("sim", "initial"): "sine", ("sim", "seed"): "0",
    ("sim", "u_mode"): "1", ("sim", "y_mode"): "1", ("sim", "w_mode"): "1",
    ("sim", "u_amp"): "1.0", ("sim", "v_amp"): "0.0",
    ("sim", "y_amp"): "1.0", ("sim", "z_amp"): "0.0",
    ("sim", "w_amp"): "1.0",
    ("sim", "center"): "", ("sim", "width"): "0.15",
    ("sim", "history"): "steady",
    ("scan", "lambda_min"): "1.0", ("scan", "lambda_max"): "200.0",
    ("scan", "points"): "33",
    ("output", "directory"): "out",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs, already validated into domain types."""

    params: PhysicalParams
    kernel: MemoryKernel
    n_x: int
    n_s: int
    sim: SimConfig
    lambda_min: float
    lambda_max: float
    scan_points: int
    output_dir: str
    poincare_cp: float

    @property
    def lambda_grid(self) -> np.ndarray:
        return np.geomspace(self.lambda_min, self.lambda_max, self.scan_points)


def _read_pairs(path: str) -> dict:
    pairs = {}
    section = None
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read config: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        # inline comments: whitespace followed by '#' or ';'
        for marker in (" #", "\t#", " ;", "\t;"):
            cut = line.find(marker)
            if cut != -1:
                line = line[:cut].rstrip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ParseError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ParseError(f"{path}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _SCHEMA[section]:
            raise ParseError(f"{path}:{lineno}: unknown key {key!r} in [{section}]")
        pairs[(section, key)] = (value.strip(), lineno)
    return pairs


class _Getter:
    def __init__(self, path, pairs):
        self.path = path
        self.pairs = pairs

    def raw(self, section, key):
        if (section, key) in self.pairs:
            return self.pairs[(section, key)]
        return _DEFAULTS.get((section, key), ""), 0

    def text(self, section, key) -> str:
        return self.raw(section, key)[0]

    def number(self, section, key) -> float:
        value, lineno = self.raw(section, key)
        try:
            return float(value)
        except ValueError:
            raise ParseError(
                f"{self.path}:{lineno}: {section}.{key} must be a number, got {value!r}")

    def integer(self, section, key) -> int:
        value, lineno = self.raw(section, key)
        try:
            return int(value)
        except ValueError:
            raise ParseError(
                f"{self.path}:{lineno}: {section}.{key} must be an integer, got {value!r}")

    def listing(self, section, key) -> list:
        value, lineno = self.raw(section, key)
        try:
            return [float(tok) for tok in value.replace(",", " ").split()]
        except ValueError:
            raise ParseError(
                f"{self.path}:{lineno}: {section}.{key} must be a list of numbers")


def parse_config(path: str) -> RunConfig:
    """Parse and validate a config file into domain objects.

    Raises ParseError (with file:line) for malformed input and
    ValidationError for values the domain types reject.
    """
    get = _Getter(path, _read_pairs(path))
    try:
        params = make_params(
            rho=get.number("params", "rho"), alpha1=get.number("params", "alpha1"),
            gamma=get.number("params", "gamma"), beta=get.number("params", "beta"),
            mu=get.number("params", "mu"), delta=get.number("params", "delta"),
            c=get.number("params", "c"), m=get.number("params", "m"),
            length=get.number("params", "length"))

        kind = get.text("kernel", "kind").lower()
        if kind == "exponential":
            kernel = exponential_kernel(get.number("kernel", "k"))
        elif kind == "tabulated":
            kernel = tabulated_kernel(get.listing("kernel", "s"),
                                      get.listing("kernel", "sigma"),
                                      get.number("kernel", "d_sigma"))
        else:
            raise ValidationError(f"unknown kernel kind {kind!r}")

        n_x = get.integer("grid", "n_x")
        n_s = get.integer("grid", "n_s")

        initial_kind = get.text("sim", "initial").lower()
        if initial_kind == "sine":
            initial = SineMode(
                u_mode=get.integer("sim", "u_mode"),
                y_mode=get.integer("sim", "y_mode"),
                w_mode=get.integer("sim", "w_mode"),
                u_amp=get.number("sim", "u_amp"), v_amp=get.number("sim", "v_amp"),
                y_amp=get.number("sim", "y_amp"), z_amp=get.number("sim", "z_amp"),
                w_amp=get.number("sim", "w_amp"),
                history=get.text("sim", "history"))
        elif initial_kind == "bump":
            center_text = get.text("sim", "center")
            center = float(center_text) if center_text else 0.5 * params.length
            initial = SmoothBump(
                center=center, width=get.number("sim", "width"),
                u_amp=get.number("sim", "u_amp"), v_amp=get.number("sim", "v_amp"),
                y_amp=get.number("sim", "y_amp"), z_amp=get.number("sim", "z_amp"),
                w_amp=get.number("sim", "w_amp"),
                history=get.text("sim", "history"))
        elif initial_kind == "random":
            initial = SeededRandom(seed=get.integer("sim", "seed"))
        else:
            raise ValidationError(f"unknown initial kind {initial_kind!r}")

        dt_text = get.text("sim", "dt")
        dt = None if dt_text in ("", "auto") else float(dt_text)
        sim = SimConfig(dt=dt, t_final=get.number("sim", "t_final"),
                        record_every=get.integer("sim", "record_every"),
                        initial=initial)
        sim.resolve_dt(params.length / max(n_x, 1))

        lambda_min = get.number("scan", "lambda_min")
        lambda_max = get.number("scan", "lambda_max")
        points = get.integer("scan", "points")
        if not (0.0 < lambda_min < lambda_max):
            raise ValidationError("scan range must satisfy 0 < lambda_min < lambda_max")
        if points < 2:
            raise ValidationError("scan.points must be >= 2")

        cp_text = get.text("params", "poincare_cp")
        poincare_cp = float(cp_text) if cp_text else poincare_constant(params.length)
        if poincare_cp <= 0.0:
            raise ValidationError("poincare_cp must be > 0")
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except PiezobeamError as exc:
        raise ValidationError(str(exc)) from exc

    return RunConfig(params=params, kernel=kernel, n_x=n_x, n_s=n_s, sim=sim,
                     lambda_min=lambda_min, lambda_max=lambda_max,
                     scan_points=points,
                     output_dir=get.text("output", "directory"),
                     poincare_cp=poincare_cp)
