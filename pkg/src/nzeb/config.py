"""Plain-text ``key = value`` configuration with one section per parameter group.

Sections are ``[tech]``, ``[finance]``, ``[ev]``, ``[grid]``, ``[hydrogen]``,
``[savings]`` and any number of ``[home.<name>]`` blocks. Keys are the
parameter names of the matching dataclass. Rates are fractions.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import MissingDataError
from .finance import FinancingTerms
from .projections import CurveSet, GridPriceModel
from .hydrogen import H2CostInputs
from .sizing import STANDARD_HOMES, EfficiencyPackage, EvParams, HomeProfile, TechParams


@dataclass(frozen=True)
class H2Settings:
    electrolyzer_efficiency: float = 55.0
    electrolyzer_life: float = 20.0
    tank_life: float = 30.0
    real_discount: float = 0.0195
    pv_capacity: float = 100.0
    mbtu_basis: str = "lhv"


@dataclass(frozen=True)
class GridSettings:
    base_price_2020: float = 11.3
    real_escalation: float = 0.0


@dataclass(frozen=True)
class SavingsSettings:
    itc_booking: str = "amortized"


@dataclass(frozen=True)
class ModelConfig:
    tech: TechParams = field(default_factory=TechParams)
    finance: FinancingTerms = field(default_factory=FinancingTerms)
    ev: EvParams = field(default_factory=EvParams)
    grid: GridSettings = field(default_factory=GridSettings)
    hydrogen: H2Settings = field(default_factory=H2Settings)
    savings: SavingsSettings = field(default_factory=SavingsSettings)
    homes: Mapping[str, HomeProfile] = field(default_factory=lambda: dict(STANDARD_HOMES))

    @property
    def grid_model(self) -> GridPriceModel:
        return GridPriceModel(self.grid.base_price_2020, self.grid.real_escalation, self.finance.inflation)

    def h2_inputs(self, curves: CurveSet | None = None) -> H2CostInputs:
        h = self.hydrogen
        return H2CostInputs.from_curves(
            curves,
            electrolyzer_efficiency=h.electrolyzer_efficiency,
            electrolyzer_life=h.electrolyzer_life,
            tank_life=h.tank_life,
            real_discount=h.real_discount,
        )

    def home(self, name: str) -> HomeProfile:
        try:
            return self.homes[name]
        except KeyError:
            raise KeyError(f"unknown home {name!r}; known: {sorted(self.homes)}") from None


SECTIONS = {
    "tech": TechParams,
    "finance": FinancingTerms,
    "ev": EvParams,
    "grid": GridSettings,
    "hydrogen": H2Settings,
    "savings": SavingsSettings,
}
_HOME_KEYS = {"annual_load", "construction", "savings_fraction", "upfront_cost", "efficiency_life"}


class ConfigError(ValueError):
    pass


def _coerce(raw: str, default, key: str):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw.strip()


def _build(cls, section: Mapping[str, str], name: str):
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in section.items():
        if key not in names:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        kwargs[key] = _coerce(raw, getattr(defaults, key), f"{name}.{key}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def _home(name: str, section: Mapping[str, str]) -> HomeProfile:
    unknown = set(section) - _HOME_KEYS
    if unknown:
        raise ConfigError(f"[home.{name}] unknown keys {sorted(unknown)}")
    if "annual_load" not in section:
        raise ConfigError(f"[home.{name}] needs annual_load")
    pkg = None
    if "savings_fraction" in section:
        pkg = EfficiencyPackage(
            float(section["savings_fraction"]),
            float(section.get("upfront_cost", EfficiencyPackage.upfront_cost)),
            float(section.get("efficiency_life", EfficiencyPackage.life)),
        )
    try:
        return HomeProfile(name, float(section["annual_load"]), section.get("construction", "existing").strip(), pkg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str) -> ModelConfig:
    """Parse configuration text. Missing sections and keys keep their defaults."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    parts = {}
    homes = dict(STANDARD_HOMES)
    for name in cp.sections():
        if name.startswith("home."):
            homes[name[5:]] = _home(name[5:], cp[name])
        elif name in SECTIONS:
            parts[name] = _build(SECTIONS[name], cp[name], name)
        else:
            raise ConfigError(f"unknown section [{name}]")
    return ModelConfig(homes=homes, **parts)


def load_config(path=None) -> ModelConfig:
    if path is None:
        return ModelConfig()
    path = Path(path)
    if not path.is_file():
        raise MissingDataError(path)
    return parse_config(path.read_text(encoding="utf-8"))


def dump_config(cfg: ModelConfig) -> str:
    """Render ``cfg`` in the configuration format."""
    lines = []
    for name in SECTIONS:
        obj = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
        lines.append("")
    for name, home in cfg.homes.items():
        lines.append(f"[home.{name}]")
        lines.append(f"annual_load = {home.annual_load}")
        lines.append(f"construction = {home.construction}")
        if home.efficiency_package is not None:
            p = home.efficiency_package
            lines += [f"savings_fraction = {p.savings_fraction}", f"upfront_cost = {p.upfront_cost}",
                      f"efficiency_life = {p.life}"]
        lines.append("")
    return "\n".join(lines)
