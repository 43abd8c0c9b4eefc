"""Strict INI configuration.

Every section and key is optional and defaults to the numerical setup used
for the figure reproductions; anything not listed in ``SCHEMA`` is an
error. Grids accept either a comma-separated list (``1, 2, 5``) or
``start:stop:count`` for evenly spaced points.

Example::

    [population]
    d_max = 20
    exponent = 2

    [threat]
    tau_a = 0.7
    beta_ia = 1
    loss = 10
    i_min = 0.001
    i_max = 1000

    [curve]
    family = power
    epsilon = 0.1
    gamma = 1
    power_form = exact     # or omit_gamma

    [theta]
    family = linear
    k_davg = 1000

    [sweep]
    rho_grid = -0.3:0.3:13
    gamma_grid = 1:9:9
    eta_grid = 0.5, 1, 1.5, 2
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .equilibrium import GameInstance
from .errors import ConfigError, ModelError
from .model import (
    ExposureResponse,
    InfectionCurve,
    PopulationProfile,
    ThreatModel,
    make_power_law_population,
    make_rho_mixing,
)


def parse_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        raise ConfigError("empty grid")
    try:
        if ":" in text:
            start, stop, count = (part.strip() for part in text.split(":"))
            n = int(count)
            if n < 1:
                raise ConfigError(f"grid count must be positive in {text!r}")
            values = np.linspace(float(start), float(stop), n)
        else:
            values = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"grid {text!r} has non-finite values")
    # 12 decimals keeps linspace endpoints like 0.30000000000000004 exact
    return tuple(float(v) for v in np.round(values, 12))


def _band(text: str) -> tuple[float, float]:
    lo, hi = parse_grid(text)
    if not lo < hi:
        raise ConfigError(f"band {text!r} must be increasing")
    return lo, hi


def _family(*allowed):
    def conv(text: str) -> str:
        text = text.strip().lower()
        if text not in allowed:
            raise ConfigError(f"{text!r} is not one of {', '.join(allowed)}")
        return text
    return conv


SCHEMA = {
    "population": {"d_max": ("d_max", int), "exponent": ("degree_exponent", float)},
    "threat": {
        "tau_a": ("tau_a", float),
        "beta_ia": ("beta_ia", float),
        "loss": ("loss", float),
        "i_min": ("i_min", float),
        "i_max": ("i_max", float),
    },
    "curve": {
        "family": ("curve_family", _family("power", "exponential")),
        "epsilon": ("epsilon", float),
        "gamma": ("gamma", float),
        "xi": ("xi", float),
        "power_form": ("power_form", _family("exact", "omit_gamma")),
    },
    "theta": {
        "family": ("theta_family", _family("linear", "power")),
        "k_davg": ("k_davg", float),
        "k_prime": ("k_prime", float),
        "eta": ("eta", float),
    },
    "mixing": {"rho": ("rho", float)},
    "sweep": {
        "rho_grid": ("rho_grid", parse_grid),
        "gamma_grid": ("gamma_grid", parse_grid),
        "eta_grid": ("eta_grid", parse_grid),
        "rho_band": ("rho_band", _band),
        "calibration_gamma": ("calibration_gamma", float),
    },
    "simulation": {"n_agents": ("n_agents", int), "reps": ("reps", int)},
}


@dataclass(frozen=True)
class RunConfig:
    d_max: int = 20
    degree_exponent: float = 2.0
    tau_a: float = 0.7
    beta_ia: float = 1.0
    loss: float = 10.0
    i_min: float = 1e-3
    i_max: float = 1e3
    curve_family: str = "power"
    epsilon: float = 0.1
    gamma: float = 1.0
    xi: float = 1.0
    power_form: str = "exact"
    theta_family: str = "linear"
    k_davg: float = 1000.0
    k_prime: float | None = None
    eta: float = 1.0
    rho: float = 0.0
    rho_grid: tuple = parse_grid("-0.3:0.3:13")
    gamma_grid: tuple = parse_grid("1:9:9")
    eta_grid: tuple = (0.5, 1.0, 1.5, 2.0)
    rho_band: tuple = (-0.35, 0.35)
    calibration_gamma: float = 5.0
    n_agents: int = 10_000
    reps: int = 200

    def population(self) -> PopulationProfile:
        return make_power_law_population(self.d_max, self.degree_exponent)

    def threat(self) -> ThreatModel:
        return ThreatModel(self.tau_a, self.beta_ia, self.loss, self.i_min, self.i_max)

    def curve(self, gamma: float | None = None) -> InfectionCurve:
        if self.curve_family == "exponential":
            return InfectionCurve.exponential(self.xi)
        return InfectionCurve.power(self.epsilon, self.gamma if gamma is None else gamma)

    def theta(self, pop: PopulationProfile | None = None) -> ExposureResponse:
        if self.theta_family == "power":
            if self.k_prime is None:
                raise ConfigError("theta family 'power' needs k_prime")
            return ExposureResponse.power(self.k_prime, self.eta)
        pop = pop or self.population()
        return ExposureResponse.linear(self.k_davg / pop.avg_degree)

    def game(self, gamma: float | None = None, rho: float | None = None,
             theta: ExposureResponse | None = None) -> GameInstance:
        pop = self.population()
        mixing = make_rho_mixing(pop, self.rho if rho is None else rho)
        return GameInstance(pop, self.threat(), self.curve(gamma),
                            theta or self.theta(pop), mixing, self.power_form)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v
                for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(default_section="__no_defaults__",
                                       interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        keys = SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            name, conv = keys[key]
            try:
                values[name] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
    cfg = RunConfig(**values)
    try:
        cfg.threat()
        cfg.population()
        cfg.curve()
    except ModelError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
