"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment.  Complex 2x2 matrices are
eight reals, row-major, real part then imaginary part of each entry::

    plant.h0 = 0.5 0  0 0  0 0  -0.5 0
    rcac.beta = 2000
    sweep.betas = 0 1 2 5 100 2000
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .lindblad import PlantConfig
from .quantum_core import as_density
from .rcac import RcacConfig
from .sim import SimConfig

RHO_D_LOW_ENTROPY = np.array([[0.8571, 0.2857 + 0.1429j], [0.2857 - 0.1429j, 0.1429]], dtype=np.complex128)
RHO_D_HIGH_ENTROPY = np.array([[0.5168, 0.0971 + 0.0460j], [0.0971 - 0.0460j, 0.4832]], dtype=np.complex128)

DEFAULT_P0_SCALARS = tuple(10.0**k for k in range(-5, 11))
DEFAULT_BETAS = (0.0, 1.0, 2.0, 5.0, 100.0, 2000.0)
DEFAULT_JH_WINDOW = (190.0, 200.0)

_JUMP_KEY = re.compile(r"plant\.l([1-9][0-9]*)$")
KNOWN_KEYS = {
    "plant.h0",
    "plant.h1",
    "plant.rho0",
    "sim.dt",
    "sim.t_final",
    "sim.record_every",
    "sim.tau_d",
    "target.rho_d",
    "rcac.rz",
    "rcac.ru",
    "rcac.lambda",
    "rcac.p0_scalar",
    "rcac.beta",
    "sweep.p0_scalars",
    "sweep.betas",
    "sweep.jh_window",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    rho_d: np.ndarray
    equilibrium_u: float


SCENARIOS = {
    "low_entropy": ScenarioPreset("low_entropy", RHO_D_LOW_ENTROPY, 1.0),
    "high_entropy": ScenarioPreset("high_entropy", RHO_D_HIGH_ENTROPY, 10.0),
}


def scenario(name: str) -> ScenarioPreset:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


@dataclass(frozen=True)
class SweepConfig:
    p0_scalars: tuple[float, ...] = DEFAULT_P0_SCALARS
    betas: tuple[float, ...] = DEFAULT_BETAS
    jh_window: tuple[float, float] = DEFAULT_JH_WINDOW

    def __post_init__(self):
        if not self.p0_scalars or not self.betas:
            raise ConfigError("sweep grid axes must be non-empty")
        if any(p <= 0 for p in self.p0_scalars):
            raise ConfigError("p0 scalars must be positive")
        if any(b < 0 for b in self.betas):
            raise ConfigError("betas must be nonnegative")
        lo, hi = self.jh_window
        if not 0.0 <= lo < hi:
            raise ConfigError(f"bad J_h window {self.jh_window}")


@dataclass
class RunConfig:
    """Everything a run or sweep needs, with the reference instance as defaults."""

    plant: PlantConfig = field(default_factory=PlantConfig)
    rcac: RcacConfig = field(default_factory=RcacConfig)
    sim: Optional[SimConfig] = None
    sweep: SweepConfig = field(default_factory=SweepConfig)


def _reals(key: str, text: str, count: Optional[int] = None) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split()]
    except ValueError:
        raise ConfigError(f"{key}: expected real numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"{key}: expected {count} values, got {len(vals)}")
    if not vals:
        raise ConfigError(f"{key}: empty value")
    return vals


def parse_matrix(key: str, text: str) -> np.ndarray:
    v = _reals(key, text, 8)
    return np.array([complex(v[0], v[1]), complex(v[2], v[3]), complex(v[4], v[5]), complex(v[6], v[7])]).reshape(2, 2)


def format_matrix(m: np.ndarray) -> str:
    return " ".join(f"{float(x.real)!r} {float(x.imag)!r}" for x in np.asarray(m, dtype=complex).reshape(4))


def read_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS and not _JUMP_KEY.match(key):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def build_config(pairs: dict[str, str], preset: Optional[ScenarioPreset] = None) -> RunConfig:
    """Turn parsed pairs into validated configs; ``preset`` supplies the target."""
    try:
        plant_kw = {}
        for key in ("h0", "h1", "rho0"):
            if f"plant.{key}" in pairs:
                plant_kw[key] = parse_matrix(f"plant.{key}", pairs[f"plant.{key}"])
        jump_keys = sorted((k for k in pairs if _JUMP_KEY.match(k)), key=lambda k: int(_JUMP_KEY.match(k).group(1)))
        if jump_keys:
            plant_kw["jumps"] = tuple(parse_matrix(k, pairs[k]) for k in jump_keys)
        plant = PlantConfig(**plant_kw)

        base = RcacConfig()
        p0_scalar = _reals("rcac.p0_scalar", pairs["rcac.p0_scalar"], 1)[0] if "rcac.p0_scalar" in pairs else None
        rcac = RcacConfig(
            rz=_reals("rcac.rz", pairs["rcac.rz"], 1)[0] if "rcac.rz" in pairs else base.rz,
            ru=_reals("rcac.ru", pairs["rcac.ru"], 1)[0] if "rcac.ru" in pairs else base.ru,
            lam=_reals("rcac.lambda", pairs["rcac.lambda"], 1)[0] if "rcac.lambda" in pairs else base.lam,
            beta=_reals("rcac.beta", pairs["rcac.beta"], 1)[0] if "rcac.beta" in pairs else base.beta,
            p0=p0_scalar * np.eye(3) if p0_scalar is not None else base.p0,
        )

        if "target.rho_d" in pairs:
            rho_d = as_density(parse_matrix("target.rho_d", pairs["target.rho_d"]))
        elif preset is not None:
            rho_d = preset.rho_d
        else:
            rho_d = None

        sim = None
        if rho_d is not None:
            sim_kw = {}
            if "sim.dt" in pairs:
                sim_kw["dt"] = _reals("sim.dt", pairs["sim.dt"], 1)[0]
            if "sim.t_final" in pairs:
                sim_kw["t_final"] = _reals("sim.t_final", pairs["sim.t_final"], 1)[0]
            if "sim.tau_d" in pairs:
                sim_kw["tau_d"] = _reals("sim.tau_d", pairs["sim.tau_d"], 1)[0]
            if "sim.record_every" in pairs:
                n = _reals("sim.record_every", pairs["sim.record_every"], 1)[0]
                if n != int(n):
                    raise ConfigError("sim.record_every must be an integer")
                sim_kw["record_every"] = int(n)
            sim = SimConfig(rho_d=rho_d, **sim_kw)

        sweep_kw = {}
        if "sweep.p0_scalars" in pairs:
            sweep_kw["p0_scalars"] = tuple(_reals("sweep.p0_scalars", pairs["sweep.p0_scalars"]))
        if "sweep.betas" in pairs:
            sweep_kw["betas"] = tuple(_reals("sweep.betas", pairs["sweep.betas"]))
        if "sweep.jh_window" in pairs:
            sweep_kw["jh_window"] = tuple(_reals("sweep.jh_window", pairs["sweep.jh_window"], 2))
        sweep = SweepConfig(**sweep_kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if sim is not None and sweep.jh_window[1] > sim.t_final + 1e-9 and "sweep.jh_window" in pairs:
        raise ConfigError(f"J_h window {sweep.jh_window} extends past t_final = {sim.t_final}")
    return RunConfig(plant=plant, rcac=rcac, sim=sim, sweep=sweep)


def load_config(path, preset: Optional[ScenarioPreset] = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return build_config(read_pairs(text), preset)


def preset_config(name: str, **sim_overrides) -> RunConfig:
    """Reference plant and tuning with the named target density."""
    p = scenario(name)
    sim = SimConfig(rho_d=p.rho_d, **sim_overrides)
    return RunConfig(sim=sim)


def with_sim(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, sim=replace(cfg.sim, **changes))
