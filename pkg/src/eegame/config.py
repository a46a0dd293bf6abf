"""Scenario configuration (TOML).

Every key is optional; defaults reproduce the reference numerical
setting (T = 1 ms, R = 10 kbit/s, sigma2 = 1e-12 W, direct-gain mean
1e-10, cross-gain mean 1e-12, outage efficiency with a = 0.9).

Example::

    seed = 7
    [mc]
    samples = 100000
    game_samples = 10000
    [primary]
    model = { kind = "outage", a = 0.9 }
    E_budget = 5e-6
    [sweep]
    lam_min = 1e8
    lam_max = 1e14
    points = 30
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .channel import ExponentialGain, MonteCarloConfig
from .efficiency import EfficiencyModel, Outage, model_from_dict
from .single_user import LinkParams


class ConfigError(ValueError):
    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        where = []
        if field_name:
            where.append(f"field {field_name!r}")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field_name = field_name
        self.line = line


@dataclass(frozen=True)
class ScenarioConfig:
    model1: EfficiencyModel = field(default_factory=lambda: Outage(0.9))
    model2: EfficiencyModel = field(default_factory=lambda: Outage(0.9))
    T: float = 1e-3
    sigma2: float = 1e-12
    R1: float = 1e4
    R2: float = 1e4
    lam1: float = 1e10
    lam2: float = 1e10
    E_budget: float | None = None
    g11: float = 1e-10
    g12: float = 1e-12
    g21: float = 1e-12
    g22: float = 1e-10
    lam_min: float = 1e8
    lam_max: float = 1e14
    points: int = 30
    samples: int = 100_000
    game_samples: int = 10_000
    seed: int = 20100301
    profile_g11_min: float = 1e-12
    profile_g11_max: float = 1e-9
    profile_g22_min: float = 1e-12
    profile_g22_max: float = 1e-9
    profile_points: int = 50
    profile_lam: float = 1e10
    out: str | None = None

    def __post_init__(self):
        if not self.lam_min < self.lam_max:
            raise ConfigError("sweep lam_min must be below lam_max", "sweep.lam_min")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points", "sweep.points")
        if self.samples < 1000 or self.game_samples < 1000:
            raise ConfigError("Monte Carlo sample counts must be at least 1000", "mc.samples")
        if self.profile_points < 2:
            raise ConfigError("profile needs at least 2 points per axis", "profile.points")
        for name in ("T", "sigma2", "R1", "R2", "g11", "g12", "g21", "g22", "profile_g11_min",
                     "profile_g11_max", "profile_g22_min", "profile_g22_max"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be positive", name)

    # --- derived objects ---

    def params1(self, lam: float | None = None) -> LinkParams:
        return LinkParams(self.R1, self.T, self.sigma2, self.lam1 if lam is None else lam, self.E_budget)

    def params2(self, lam: float | None = None) -> LinkParams:
        return LinkParams(self.R2, self.T, self.sigma2, self.lam2 if lam is None else lam)

    def dists(self):
        return tuple(ExponentialGain(m) for m in (self.g11, self.g12, self.g21, self.g22))

    def mc(self, game: bool = False) -> MonteCarloConfig:
        return MonteCarloConfig(samples=self.game_samples if game else self.samples, seed=self.seed)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def echo(self) -> list[str]:
        """``key=value`` lines for the CSV provenance header (output path omitted)."""
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            if isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return lines


# (section, key) -> field name
_KEYS = {
    (None, "seed"): "seed",
    (None, "out"): "out",
    ("mc", "samples"): "samples",
    ("mc", "game_samples"): "game_samples",
    ("link", "T"): "T",
    ("link", "sigma2"): "sigma2",
    ("primary", "R"): "R1",
    ("primary", "lam"): "lam1",
    ("primary", "E_budget"): "E_budget",
    ("primary", "model"): "model1",
    ("secondary", "R"): "R2",
    ("secondary", "lam"): "lam2",
    ("secondary", "model"): "model2",
    ("gains", "g11"): "g11",
    ("gains", "g12"): "g12",
    ("gains", "g21"): "g21",
    ("gains", "g22"): "g22",
    ("sweep", "lam_min"): "lam_min",
    ("sweep", "lam_max"): "lam_max",
    ("sweep", "points"): "points",
    ("profile", "g11_min"): "profile_g11_min",
    ("profile", "g11_max"): "profile_g11_max",
    ("profile", "g22_min"): "profile_g22_min",
    ("profile", "g22_max"): "profile_g22_max",
    ("profile", "points"): "profile_points",
    ("profile", "lam"): "profile_lam",
}
_INT_FIELDS = {"seed", "samples", "game_samples", "points", "profile_points"}


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc

    sections = {s for s, _ in _KEYS if s}
    values = {}
    for key, val in data.items():
        if key in sections and isinstance(val, dict):
            for sub, v in val.items():
                _assign(values, key, sub, v, text)
        else:
            _assign(values, None, key, val, text)
    try:
        return ScenarioConfig(**values)
    except ConfigError as exc:
        if exc.line is None and exc.field_name:
            raise ConfigError(str(exc).rsplit(" (", 1)[0], exc.field_name,
                              _line_of(text, exc.field_name.split(".")[-1])) from None
        raise


def _assign(values: dict, section, key, val, text):
    name = _KEYS.get((section, key))
    dotted = f"{section}.{key}" if section else key
    if name is None:
        raise ConfigError("unknown key", dotted, _line_of(text, key))
    try:
        if name in ("model1", "model2"):
            if not isinstance(val, dict):
                raise ValueError("model must be a table like { kind = \"outage\", a = 0.9 }")
            values[name] = model_from_dict(val)
        elif name == "out":
            values[name] = str(val)
        elif name in _INT_FIELDS:
            if isinstance(val, bool) or int(val) != val:
                raise ValueError("expected an integer")
            values[name] = int(val)
        else:
            if isinstance(val, bool):
                raise ValueError("expected a number")
            values[name] = float(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), dotted, _line_of(text, key)) from None


def load_config(path: str | Path | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)
