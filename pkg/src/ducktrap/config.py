"""Scenario configuration in INI form (``key = value`` under sections).

Example::

    [system]
    family = canard
    piecewise = true
    preset = paper-fig

    [params]
    eps = 0.01
    lambda = -0.00675

    [run]
    starts = -0.2,0.09; -0.15,0.09
    lambda_grid = 1.5*lH, 0.5*lH, 0.2*lc, 1*lc
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, fields, replace
from typing import Optional

from .blowup import USetConfig
from .core import Params, SystemSpec, canard_spec, fold_spec, linear_family, paper_fig_family

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "serialize_config", "parse_point",
           "parse_lambda_grid", "H_PRESETS", "G_PRESETS"]


class ConfigError(ValueError):
    pass


G_PRESETS = ("paper-fig", "linear")
H_PRESETS = {
    "zero": None,
    "parabola": lambda x, y: x * x - y,
    "sine": lambda x, y: 0.3 * math.sin(7.0 * x) + y,
}


@dataclass(frozen=True)
class ScenarioConfig:
    family: str = "canard"
    piecewise: bool = True
    preset: str = "paper-fig"
    h: str = "zero"
    eps: float = 0.01
    lam: float = 0.0
    a1: float = 1.0
    a2: float = 0.9
    rho: float = 0.3
    mu: float = 0.3
    x10: float = 3.0
    lambda0: float = 0.05
    r_disc: float = 4.0
    starts: tuple[tuple[float, float], ...] = ()
    lambda_grid: tuple[str, ...] = ()
    eps_list: tuple[float, ...] = ()
    x_in: Optional[float] = None
    t_max: float = 1e6
    rtol: float = 1e-10
    atol: float = 1e-10
    seed: int = 0
    csv: str = ""
    json: str = ""
    C1: float = 1.0
    C2: float = 1.0
    C3: float = 1.0
    C4: float = 1.0
    C5: float = 2.0
    C6: float = 1.0
    C7: float = 3.0
    lambda_star: Optional[float] = None

    def validate(self) -> "ScenarioConfig":
        if self.family not in ("canard", "fold"):
            raise ConfigError(f"family must be canard or fold, got {self.family!r}")
        if self.preset not in G_PRESETS:
            raise ConfigError(f"unknown g preset {self.preset!r}")
        if self.h not in H_PRESETS:
            raise ConfigError(f"unknown h preset {self.h!r}")
        for tok in self.lambda_grid:
            parse_lambda_token(tok, 1.0, 1.0)
        try:
            self.params()
            self.uset()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not (self.rtol > 0 and self.atol > 0 and self.t_max > 0):
            raise ConfigError("tolerances and t_max must be positive")
        return self

    def params(self, lam: Optional[float] = None) -> Params:
        return Params(eps=self.eps, lam=self.lam if lam is None else lam, a1=self.a1, a2=self.a2,
                      rho=self.rho, mu=self.mu, x10=self.x10, lambda0=self.lambda0,
                      r_disc=self.r_disc)

    def uset(self) -> USetConfig:
        return USetConfig(self.C1, self.C2, self.C3, self.C4, self.C5, self.C6, self.C7,
                          self.lambda_star)

    def spec(self, lam: Optional[float] = None) -> SystemSpec:
        box = dict(rho=self.rho, mu=self.mu, x10=self.x10, lambda0=self.lambda0, r_disc=self.r_disc)
        if self.family == "fold":
            return fold_spec(self.eps, h=H_PRESETS[self.h], h_name=self.h,
                             piecewise=self.piecewise, a1=self.a1, a2=self.a2, **box)
        fam = paper_fig_family(self.a1, self.a2) if self.preset == "paper-fig" else linear_family(self.a1, self.a2)
        return canard_spec(self.eps, self.lam if lam is None else lam, a1=self.a1, a2=self.a2,
                           piecewise=self.piecewise, family=fam, **box)


_SECTIONS = {
    "system": ("family", "piecewise", "preset", "h"),
    "params": ("eps", "lam", "a1", "a2", "rho", "mu", "x10", "lambda0", "r_disc"),
    "run": ("starts", "lambda_grid", "eps_list", "x_in", "t_max", "rtol", "atol", "seed"),
    "output": ("csv", "json"),
    "uset": ("C1", "C2", "C3", "C4", "C5", "C6", "C7", "lambda_star"),
}
_KEY_ALIASES = {"lambda": "lam"}
_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def parse_point(text: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"a point needs two comma-separated numbers, got {text!r}")
    try:
        x, y = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"malformed point {text!r}") from exc
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ConfigError(f"non-finite point {text!r}")
    return x, y


_TOKEN = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s*(?:\*\s*(lH|lc))?\s*$")


def parse_lambda_token(tok: str, lH: float, lc: float) -> float:
    """'-6.75e-3', '1.5*lH' or '0.2*lc' (multiples of the leading-order values)."""
    m = _TOKEN.match(tok)
    if not m:
        raise ConfigError(f"malformed lambda grid entry {tok!r}")
    v = float(m.group(1))
    unit = m.group(2)
    if unit == "lH":
        v *= lH
    elif unit == "lc":
        v *= lc
    return v


def parse_lambda_grid(cfg: ScenarioConfig) -> list[float]:
    from .analysis import lambda_c_leading, lambda_H_leading
    P = cfg.params(0.0)
    return [parse_lambda_token(t, lambda_H_leading(P), lambda_c_leading(P)) for t in cfg.lambda_grid]


def _fmt(name: str, v) -> str:
    if name == "starts":
        return "; ".join(f"{x!r},{y!r}" for x, y in v)
    if name == "lambda_grid":
        return ", ".join(v)
    if name == "eps_list":
        return ", ".join(repr(float(e)) for e in v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _conv(name: str, text: str):
    text = text.strip()
    if name == "starts":
        return tuple(parse_point(p) for p in text.split(";") if p.strip())
    if name == "lambda_grid":
        return tuple(t.strip() for t in text.split(",") if t.strip())
    if name == "eps_list":
        try:
            return tuple(float(t) for t in text.split(",") if t.strip())
        except ValueError as exc:
            raise ConfigError(f"malformed eps_list {text!r}") from exc
    typ = str(_FIELD_TYPES[name])
    try:
        if "Optional" in typ:
            return None if text == "" else float(text)
        if typ == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{name} must be boolean, got {text!r}")
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(text)
        if typ == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def serialize_config(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec, names in _SECTIONS.items():
        cp[sec] = {("lambda" if n == "lam" else n): _fmt(n, getattr(cfg, n)) for n in names}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_config(text: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    upd = {}
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        for key, val in cp[sec].items():
            name = _KEY_ALIASES.get(key, key)
            if name not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            upd[name] = _conv(name, val)
    cfg = replace(base or ScenarioConfig(), **upd)
    return cfg.validate()
