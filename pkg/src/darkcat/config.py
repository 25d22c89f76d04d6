"""Experiment configs: YAML files mapped onto dataclasses, unknown keys rejected.

Every file declares its units once::

    experiment: noise-bench
    units: omega          # or 2pi_MHz
    params: {...}

With ``units: omega`` all rates are in units of the reference drive (|Omega|
for single-atom runs, Omega_r for the CX gate) and times in its inverse.
With ``units: 2pi_MHz`` rates are frequencies nu (the rate is 2 pi nu), times
are in microseconds, and the reference drive itself must be given.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import yaml

UNITS = ("omega", "2pi_MHz")


class ConfigError(ValueError):
    pass


def _check_spins(values, name="Fg"):
    for F in values:
        if not isinstance(F, (int, float)) or F < 1 or abs(2 * F - round(2 * F)) > 1e-12:
            raise ConfigError(f"{name} entries must be integers or half-integers >= 1, got {F!r}")


def _check_positive(**kw):
    for k, v in kw.items():
        vals = v if isinstance(v, (list, tuple)) else [v]
        if any((not isinstance(x, (int, float))) or x <= 0 for x in vals):
            raise ConfigError(f"{k} must be positive, got {v!r}")


@dataclass(frozen=True)
class DarkStatesParams:
    Fg: List[float] = field(default_factory=lambda: [2.0])
    drives: List[dict] = field(default_factory=list)     # {alpha, beta, omega} or {plus, zero, minus}
    n_random: int = 0
    seed: int = 0

    def __post_init__(self):
        _check_spins(self.Fg)
        if self.n_random < 0:
            raise ConfigError("n_random must be >= 0")


@dataclass(frozen=True)
class NoiseBenchParams:
    Fg: List[float] = field(default_factory=lambda: [2.0, 3.0, 4.0])
    lam: List[float] = field(default_factory=lambda: [1e-3, 1e-1, 10.0])
    kappa: float = 1e-4
    gamma: float = 1 / (2 * math.pi)
    omega: float = 1.0
    white: bool = True

    def __post_init__(self):
        _check_spins(self.Fg)
        _check_positive(lam=self.lam, gamma=self.gamma, omega=self.omega)
        if self.kappa < 0:
            raise ConfigError("kappa must be >= 0")


@dataclass(frozen=True)
class StabGapParams:
    Fg: List[float] = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    gamma: List[float] = field(default_factory=lambda: [0.02])
    omega: float = 1.0
    polarization_mode: str = "all_three"

    def __post_init__(self):
        _check_spins(self.Fg)
        _check_positive(gamma=self.gamma, omega=self.omega)
        if self.polarization_mode not in ("all_three", "sigma_pm_only"):
            raise ConfigError("polarization_mode must be all_three or sigma_pm_only")


@dataclass(frozen=True)
class GateBenchParams:
    kind: List[str] = field(default_factory=lambda: ["uz"])
    Fg: List[float] = field(default_factory=lambda: [4.0])
    T: List[float] = field(default_factory=lambda: [200.0, 400.0, 800.0, 1600.0])
    omega: float = 1.0
    gamma: float = 0.0
    counter_diabatic: List[bool] = field(default_factory=lambda: [False])
    cd_form: str = "generic"
    kappa: float = 0.0
    lam: float = 1e-3
    alpha_x: float = 0.0
    stabilize_after: bool = True

    def __post_init__(self):
        _check_spins(self.Fg)
        _check_positive(T=self.T, omega=self.omega, lam=self.lam)
        bad = set(self.kind) - {"uz", "ux", "ux_virtual", "prep_plus", "ux_holonomic"}
        if bad:
            raise ConfigError(f"unknown gate kinds {sorted(bad)}")
        if self.cd_form not in ("generic", "printed"):
            raise ConfigError("cd_form must be generic or printed")
        if self.gamma < 0 or self.kappa < 0:
            raise ConfigError("gamma and kappa must be >= 0")


@dataclass(frozen=True)
class CXBenchParams:
    mode: str = "ptm"                    # ptm | traces | monitor
    Fg: List[float] = field(default_factory=lambda: [4.0])
    T_factor: List[float] = field(default_factory=list)   # T in units of pi/mu; empty -> T_opt scan
    V: List[float] = field(default_factory=lambda: [100.0])
    n_re: List[int] = field(default_factory=lambda: [0])
    omega_r: float = 1.0
    delta_r: float = 2.0
    gamma_r: float = 1 / (2 * math.pi * 120)
    ramp: str = "tanh"
    n_times: int = 101

    def __post_init__(self):
        _check_spins(self.Fg)
        _check_positive(omega_r=self.omega_r, delta_r=self.delta_r)
        if self.mode not in ("ptm", "traces", "monitor"):
            raise ConfigError("mode must be ptm, traces or monitor")
        if self.ramp not in ("tanh", "none"):
            raise ConfigError("ramp must be tanh or none")
        if any(v < 0 for v in self.V) or self.gamma_r < 0 or any(n < 0 for n in self.n_re):
            raise ConfigError("V, gamma_r and n_re must be non-negative")
        if self.T_factor:
            _check_positive(T_factor=self.T_factor)
        if self.n_times < 2:
            raise ConfigError("n_times must be >= 2")


PARAMS = {
    "dark-states": DarkStatesParams,
    "noise-bench": NoiseBenchParams,
    "stab-gap": StabGapParams,
    "gate-bench": GateBenchParams,
    "cx-bench": CXBenchParams,
}

# fields holding rates or times, converted when units are 2pi_MHz
_RATES = {"kappa", "lam", "gamma", "gamma_r", "delta_r", "V"}
_TIMES = {"T"}
_REFERENCE = {"noise-bench": "omega", "stab-gap": "omega", "gate-bench": "omega", "cx-bench": "omega_r"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: object
    units: str = "omega"
    tolerance: float = 1e-10
    threads: int = 1
    seed: int = 0
    raw: dict = field(default_factory=dict, compare=False)


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _to_reference_units(exp: str, params: dict) -> dict:
    """Convert a 2pi_MHz parameter block to units of the reference drive."""
    ref_key = _REFERENCE.get(exp)
    if ref_key is None:
        return params
    if ref_key not in params:
        raise ConfigError(f"units 2pi_MHz need the reference drive '{ref_key}'")
    ref = float(params[ref_key])
    if ref <= 0:
        raise ConfigError("reference drive must be positive")
    out = dict(params)
    out[ref_key] = 1.0
    for k, v in params.items():
        if k in _RATES:
            out[k] = [x / ref for x in v] if isinstance(v, list) else v / ref
        elif k in _TIMES:
            # mu s times 2 pi ref [MHz] -> dimensionless
            out[k] = [x * 2 * math.pi * ref for x in v] if isinstance(v, list) else v * 2 * math.pi * ref
    return out


def parse_config(data: dict, experiment: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    allowed = {"experiment", "units", "params", "tolerance", "threads", "seed"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    exp = data.get("experiment", experiment)
    if exp not in PARAMS:
        raise ConfigError(f"experiment must be one of {sorted(PARAMS)}, got {exp!r}")
    if experiment is not None and exp != experiment:
        raise ConfigError(f"config is for {exp!r}, not {experiment!r}")
    units = data.get("units", "omega")
    if units not in UNITS:
        raise ConfigError(f"units must be one of {UNITS}")
    params = dict(data.get("params") or {})
    if units == "2pi_MHz":
        params = _to_reference_units(exp, params)
    try:
        p = _build(PARAMS[exp], params, "params")
        cfg = ExperimentConfig(exp, p, units, float(data.get("tolerance", 1e-10)),
                               int(data.get("threads", 1)), int(data.get("seed", 0)), data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if cfg.tolerance <= 0 or cfg.threads < 1:
        raise ConfigError("tolerance must be positive and threads >= 1")
    return cfg


def load_config(path, experiment: Optional[str] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return parse_config(data or {}, experiment)
