"""Strict JSON run configuration.

Unknown keys are fatal: a typo in a rate name must never silently fall back
to a default.  Each section maps onto the corresponding model dataclasses;
commands pull only the sections they need and complain about missing ones
by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dynamics import DecayRates, DephasingModel, PulseDrive, omega0_for_area


class ConfigError(ValueError):
    """Invalid or unknown configuration content; message names the key."""


def _check_keys(section: str, data: dict, allowed: set[str],
                required: set[str] = frozenset()) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be an object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")
    missing = sorted(required - set(data))
    if missing:
        raise ConfigError(f"missing key(s) in '{section}': {', '.join(missing)}")


def _number(section: str, data: dict, key: str, default=None,
            minimum=None, allow_none=False):
    if key not in data or data[key] is None:
        if default is None and not allow_none:
            raise ConfigError(f"'{section}.{key}' is required")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{section}.{key}' must be a number, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"'{section}.{key}' must be >= {minimum}, got {v}")
    return float(v)


def _grid(section: str, spec: Any) -> np.ndarray:
    """Either an explicit list or {start, stop, num}."""
    if isinstance(spec, list):
        if len(spec) < 1:
            raise ConfigError(f"'{section}' must not be empty")
        return np.asarray(spec, dtype=float)
    if isinstance(spec, dict):
        _check_keys(section, spec, {"start", "stop", "num"},
                    {"start", "stop", "num"})
        num = spec["num"]
        if not isinstance(num, int) or num < 2:
            raise ConfigError(f"'{section}.num' must be an integer >= 2")
        return np.linspace(float(spec["start"]), float(spec["stop"]), num)
    raise ConfigError(f"'{section}' must be a list or a start/stop/num object")


@dataclass
class DotConfig:
    gamma_x: float = 0.002
    gamma_b: float = 0.004
    delta_x: float = 0.5
    delta_b: float = 0.0

    @classmethod
    def parse(cls, data: dict) -> "DotConfig":
        _check_keys("dot", data, {"gamma_x", "gamma_b", "delta_x", "delta_b"})
        return cls(
            gamma_x=_number("dot", data, "gamma_x", cls.gamma_x, minimum=0.0),
            gamma_b=_number("dot", data, "gamma_b", cls.gamma_b, minimum=0.0),
            delta_x=_number("dot", data, "delta_x", cls.delta_x),
            delta_b=_number("dot", data, "delta_b", cls.delta_b))

    def decay(self) -> DecayRates:
        return DecayRates(gamma_b=self.gamma_b, gamma_x=self.gamma_x)


@dataclass
class PulseConfig:
    sigma: float
    t0: float = 0.0
    area: float | None = None
    omega0: float | None = None

    @classmethod
    def parse(cls, data: dict) -> "PulseConfig":
        _check_keys("pulse", data, {"sigma", "t0", "area", "omega0"}, {"sigma"})
        cfg = cls(
            sigma=_number("pulse", data, "sigma", minimum=1e-12),
            t0=_number("pulse", data, "t0", 0.0),
            area=_number("pulse", data, "area", allow_none=True),
            omega0=_number("pulse", data, "omega0", allow_none=True))
        if cfg.area is not None and cfg.omega0 is not None:
            raise ConfigError("'pulse' must set either 'area' or 'omega0', not both")
        return cfg

    def drive(self, dot: DotConfig) -> PulseDrive:
        if self.omega0 is not None:
            omega0 = self.omega0
        elif self.area is not None:
            omega0 = omega0_for_area(self.area, self.sigma)
        else:
            raise ConfigError("'pulse' needs 'area' or 'omega0' for this command")
        return PulseDrive(omega0=omega0, sigma=self.sigma, t0=self.t0,
                          delta_x=dot.delta_x, delta_b=dot.delta_b)


def parse_dephasing(data: dict, section: str = "dephasing") -> DephasingModel:
    _check_keys(section, data, {"gamma_bg", "gamma_i0", "n_p"})
    n_p = data.get("n_p", 2)
    if not isinstance(n_p, int) or n_p < 0:
        raise ConfigError(f"'{section}.n_p' must be a non-negative integer")
    return DephasingModel(
        gamma_bg=_number(section, data, "gamma_bg", 0.0, minimum=0.0),
        gamma_i0=_number(section, data, "gamma_i0", 0.0, minimum=0.0),
        n_p=n_p)


@dataclass
class TimebinConfig:
    phi_p: float = 0.0
    epsilon: float = 0.0
    pairing_weight: float = 4.0
    v_coh: float | None = None  # None: calibrate from the pulse dynamics

    @classmethod
    def parse(cls, data: dict) -> "TimebinConfig":
        _check_keys("timebin", data,
                    {"phi_p", "epsilon", "pairing_weight", "v_coh"})
        return cls(
            phi_p=_number("timebin", data, "phi_p", 0.0),
            epsilon=_number("timebin", data, "epsilon", 0.0, minimum=0.0),
            pairing_weight=_number("timebin", data, "pairing_weight", 4.0,
                                   minimum=1e-12),
            v_coh=_number("timebin", data, "v_coh", allow_none=True))


@dataclass
class TomographyConfig:
    n_mean: float = 1e5
    seed: int = 1
    n_seeds: int = 1

    @classmethod
    def parse(cls, data: dict) -> "TomographyConfig":
        _check_keys("tomography", data, {"n_mean", "seed", "n_seeds"})
        seed = data.get("seed", 1)
        n_seeds = data.get("n_seeds", 1)
        if not isinstance(seed, int):
            raise ConfigError("'tomography.seed' must be an integer")
        if not isinstance(n_seeds, int) or n_seeds < 1:
            raise ConfigError("'tomography.n_seeds' must be a positive integer")
        return cls(n_mean=_number("tomography", data, "n_mean", 1e5,
                                  minimum=1e-9),
                   seed=seed, n_seeds=n_seeds)


@dataclass
class SweepConfig:
    areas: np.ndarray | None = None
    energies: np.ndarray | None = None
    sigmas: list[float] = field(default_factory=list)
    models: list[DephasingModel] = field(default_factory=list)
    fit_n_p: int | None = None
    fit_target_ratio: float | None = None

    @classmethod
    def parse(cls, data: dict) -> "SweepConfig":
        _check_keys("sweep", data,
                    {"areas", "energies", "sigmas", "models", "fit"})
        cfg = cls()
        if "areas" in data:
            cfg.areas = _grid("sweep.areas", data["areas"])
        if "energies" in data:
            cfg.energies = _grid("sweep.energies", data["energies"])
        if "sigmas" in data:
            if not isinstance(data["sigmas"], list) or not data["sigmas"]:
                raise ConfigError("'sweep.sigmas' must be a non-empty list")
            cfg.sigmas = [float(s) for s in data["sigmas"]]
        if "models" in data:
            if not isinstance(data["models"], list) or not data["models"]:
                raise ConfigError("'sweep.models' must be a non-empty list")
            cfg.models = [parse_dephasing(m, f"sweep.models[{i}]")
                          for i, m in enumerate(data["models"])]
        if "fit" in data:
            _check_keys("sweep.fit", data["fit"], {"n_p", "target_ratio"},
                        {"n_p", "target_ratio"})
            n_p = data["fit"]["n_p"]
            if not isinstance(n_p, int):
                raise ConfigError("'sweep.fit.n_p' must be an integer")
            cfg.fit_n_p = n_p
            cfg.fit_target_ratio = _number("sweep.fit", data["fit"],
                                           "target_ratio")
        return cfg


@dataclass
class NumericsConfig:
    tol: float = 1e-8
    t_span: tuple[float, float] | None = None
    max_step: float | None = None

    @classmethod
    def parse(cls, data: dict) -> "NumericsConfig":
        _check_keys("numerics", data, {"tol", "t_span", "max_step"})
        span = data.get("t_span")
        if span is not None:
            if (not isinstance(span, list) or len(span) != 2
                    or span[1] <= span[0]):
                raise ConfigError("'numerics.t_span' must be [t0, t1] with t1 > t0")
            span = (float(span[0]), float(span[1]))
        return cls(tol=_number("numerics", data, "tol", 1e-8, minimum=1e-14),
                   t_span=span,
                   max_step=_number("numerics", data, "max_step",
                                    allow_none=True))


_SECTIONS = {"dot", "pulse", "dephasing", "timebin", "tomography", "sweep",
             "numerics"}


@dataclass
class RunConfig:
    raw: dict
    dot: DotConfig
    pulse: PulseConfig | None
    dephasing: DephasingModel | None
    timebin: TimebinConfig
    tomography: TomographyConfig
    sweep: SweepConfig
    numerics: NumericsConfig

    @classmethod
    def parse(cls, data: dict) -> "RunConfig":
        _check_keys("<root>", data, _SECTIONS)
        return cls(
            raw=data,
            dot=DotConfig.parse(data.get("dot", {})),
            pulse=PulseConfig.parse(data["pulse"]) if "pulse" in data else None,
            dephasing=(parse_dephasing(data["dephasing"])
                       if "dephasing" in data else None),
            timebin=TimebinConfig.parse(data.get("timebin", {})),
            tomography=TomographyConfig.parse(data.get("tomography", {})),
            sweep=SweepConfig.parse(data.get("sweep", {})),
            numerics=NumericsConfig.parse(data.get("numerics", {})))

    def require(self, *sections: str) -> None:
        for s in sections:
            if s not in self.raw:
                raise ConfigError(f"command requires config section '{s}'")

    def resolved(self) -> dict:
        """Canonical JSON-ready form embedded in every output header."""
        return json.loads(json.dumps(self.raw, sort_keys=True))


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a JSON object")
    return RunConfig.parse(data)
