"""Scenario configuration: nested dataclasses addressed by dotted keys.

File format is one ``section.key = value`` per line; ``#`` starts a comment.
Every default is the reference scenario, so an empty file reproduces it.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .filters import FILTER_INIT_MODES
from .ii import IiGains
from .lsdrem import NORMS, LsDremGains
from .plant import PhysicalParams, TabulatedSignal


@dataclass(frozen=True)
class InitialConditions:
    C_A: float = 0.5
    T: float = 120.0
    mu0: tuple = (0.1,) * 5
    eta0: tuple = (-1.0,) * 4
    rhoI: float = 7800.0


@dataclass(frozen=True)
class Gains:
    lam: float = 1.0
    f0: float = 0.1
    alpha: float = 68.4
    beta0: float = 30.6
    M: float = 130.5
    gamma_a: float = 1800.0
    gamma_b: float = -400.0

    def lsdrem(self) -> LsDremGains:
        return LsDremGains(alpha=self.alpha, f0=self.f0, beta0=self.beta0, M=self.M,
                           gamma_a=self.gamma_a)


@dataclass(frozen=True)
class EstimatorOptions:
    k0_error: float = 0.0
    norm: str = "frobenius"
    eps_div: float = 1e-6
    ideal: bool = True
    ie_threshold: float = 1e-6


@dataclass(frozen=True)
class FilterOptions:
    init: str = "matched"


@dataclass(frozen=True)
class SignalOptions:
    tin: str = "reference"
    tw: str = "reference"


@dataclass(frozen=True)
class RunOptions:
    horizon: float = 40.0
    step: float = 2.5e-4
    output_interval: float = 0.01
    startup_levels: int = 40
    seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    plant: PhysicalParams = field(default_factory=PhysicalParams)
    init: InitialConditions = field(default_factory=InitialConditions)
    gains: Gains = field(default_factory=Gains)
    estimator: EstimatorOptions = field(default_factory=EstimatorOptions)
    filters: FilterOptions = field(default_factory=FilterOptions)
    signals: SignalOptions = field(default_factory=SignalOptions)
    run: RunOptions = field(default_factory=RunOptions)

    def validate(self) -> "ScenarioConfig":
        r = self.run
        if not (r.step > 0 and math.isfinite(r.step)):
            raise ValueError("run.step must be positive")
        if not (r.horizon >= 0 and math.isfinite(r.horizon)):
            raise ValueError("run.horizon must be nonnegative")
        if r.output_interval < r.step or not _is_multiple(r.output_interval, r.step):
            raise ValueError("run.output_interval must be a positive multiple of run.step")
        if r.startup_levels < 0:
            raise ValueError("run.startup_levels must be nonnegative")
        g = self.gains
        if not g.lam > 0:
            raise ValueError("gains.lambda must be positive")
        g.lsdrem()
        IiGains(g.gamma_b, math.copysign(1.0, self.plant.dH))
        if len(self.init.mu0) != 5 or len(self.init.eta0) != 4:
            raise ValueError("init.mu0 needs 5 entries and init.eta0 needs 4")
        if not (self.init.T > 0 and self.init.C_A >= 0):
            raise ValueError("initial state needs T > 0 and C_A >= 0")
        if not self.estimator.k0_error > -1:
            raise ValueError("estimator.k0_error must exceed -1")
        if self.estimator.norm not in NORMS:
            raise ValueError(f"estimator.norm must be one of {NORMS}")
        if self.filters.init not in FILTER_INIT_MODES:
            raise ValueError(f"filters.init must be one of {FILTER_INIT_MODES}")
        if not self.estimator.ie_threshold > 0:
            raise ValueError("estimator.ie_threshold must be positive")
        return self

    def tin_signal(self):
        return _signal(self.signals.tin, "tin")

    def tw_signal(self):
        return _signal(self.signals.tw, "tw")

    def with_overrides(self, overrides: dict) -> "ScenarioConfig":
        cfg = self
        for key, value in overrides.items():
            cfg = set_key(cfg, key, value)
        return cfg

    def to_text(self) -> str:
        lines = []
        for sec in dataclasses.fields(self):
            obj = getattr(self, sec.name)
            for f in dataclasses.fields(obj):
                v = getattr(obj, f.name)
                if isinstance(v, tuple):
                    v = ", ".join(repr(float(e)) for e in v)
                elif isinstance(v, bool):
                    v = "true" if v else "false"
                elif isinstance(v, float):
                    v = repr(v)
                lines.append(f"{sec.name}.{_ALIAS_OUT.get(f.name, f.name)} = {v}")
        return "\n".join(lines) + "\n"


_ALIAS_IN = {"lambda": "lam"}
_ALIAS_OUT = {v: k for k, v in _ALIAS_IN.items()}


def _is_multiple(a: float, b: float) -> bool:
    n = round(a / b)
    return n >= 1 and abs(n * b - a) <= 1e-9 * a


def _signal(source: str, name: str):
    from .plant import ReferenceTin, ReferenceTw

    if source == "reference":
        return ReferenceTin() if name == "tin" else ReferenceTw()
    return TabulatedSignal.from_csv(source)


def _parse_value(default, text):
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        parts = [float(p) for p in text.replace(";", ",").split(",") if p.strip()]
        if len(parts) == 1:
            parts = parts * len(default)
        return tuple(parts)
    return text


def set_key(cfg: ScenarioConfig, key: str, value) -> ScenarioConfig:
    try:
        section, name = key.split(".", 1)
    except ValueError:
        raise KeyError(f"config key must look like section.name, got {key!r}") from None
    name = _ALIAS_IN.get(name, name)
    if section not in {f.name for f in dataclasses.fields(cfg)}:
        raise KeyError(f"unknown config section {section!r}")
    sub = getattr(cfg, section)
    if name not in {f.name for f in dataclasses.fields(sub)}:
        raise KeyError(f"unknown config key {key!r}")
    if isinstance(value, str):
        value = _parse_value(getattr(sub, name), value)
    elif isinstance(getattr(sub, name), tuple) and not isinstance(value, tuple):
        value = (float(value),) * len(getattr(sub, name))
    return dataclasses.replace(cfg, **{section: dataclasses.replace(sub, **{name: value})})


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    cfg = base or ScenarioConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            cfg = set_key(cfg, key, value)
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return cfg


def load_config(path, overrides: dict | None = None) -> ScenarioConfig:
    cfg = parse_config_text(Path(path).read_text()) if path else ScenarioConfig()
    return cfg.with_overrides(overrides or {})
