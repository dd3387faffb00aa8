"""Cost curves, grid price, and state-level energy accounting.

Every stored value is in real 2020 dollars. Curves are loaded from CSV files
listed in a manifest, so recalibration is a data change rather than a code
change.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import MissingDataError, OutOfRangeError

UNITS = (
    "usd_per_wdc",
    "usd_per_kwh_storage",
    "cents_per_kwh",
    "usd_per_kw_capex",
    "usd_per_kg_capex",
)
TECHNOLOGY_UNITS = frozenset({"usd_per_wdc", "usd_per_kwh_storage", "usd_per_kw_capex", "usd_per_kg_capex"})
EXTRAPOLATIONS = ("hold_last", "linear_last_segment_with_floor")

FIRST_YEAR = 2020
LAST_YEAR = 2050
NEW_CONSTRUCTION_SHIFT = 5  # years ahead on the existing-construction curve
CONSTRUCTIONS = ("existing", "new")


@dataclass(frozen=True)
class CostCurve:
    """Year-indexed anchor series with piecewise-linear interpolation.

    Parameters
    ----------
    label : str
        Curve name, as used in the manifest.
    unit : str
        One of ``UNITS``.
    years, values : tuple
        Anchor points. Years must be strictly increasing and values
        non-negative.
    extrapolation : str
        ``"hold_last"`` repeats the last anchor beyond the final year.
        ``"linear_last_segment_with_floor"`` continues the final segment's
        slope and never drops below ``floor``.
    floor : float, optional
        Lower bound used by the linear extrapolation policy.

    Notes
    -----
    Before the first anchor the first value is held. Technology cost curves
    must be non-increasing, which is checked on construction.
    """

    label: str
    unit: str
    years: tuple[float, ...]
    values: tuple[float, ...]
    extrapolation: str = "hold_last"
    floor: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "years", tuple(float(y) for y in self.years))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.unit not in UNITS:
            raise ValueError(f"{self.label}: unknown unit {self.unit!r}")
        if self.extrapolation not in EXTRAPOLATIONS:
            raise ValueError(f"{self.label}: unknown extrapolation {self.extrapolation!r}")
        if not self.years or len(self.years) != len(self.values):
            raise ValueError(f"{self.label}: need matching, non-empty years and values")
        if any(b <= a for a, b in zip(self.years, self.years[1:])):
            raise ValueError(f"{self.label}: anchor years must be strictly increasing")
        if any(v < 0 or not math.isfinite(v) for v in self.values):
            raise ValueError(f"{self.label}: anchor values must be finite and non-negative")
        if self.extrapolation == "linear_last_segment_with_floor":
            if self.floor is None or len(self.years) < 2:
                raise ValueError(f"{self.label}: linear extrapolation needs a floor and two anchors")
        if self.unit in TECHNOLOGY_UNITS and any(b > a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"{self.label}: technology cost curve must be non-increasing")

    @property
    def anchors(self) -> list[tuple[float, float]]:
        return list(zip(self.years, self.values))

    def value(self, year):
        """Evaluate the curve at one or more (possibly fractional) years."""
        x = np.asarray(year, dtype=float)
        xp = np.asarray(self.years)
        fp = np.asarray(self.values)
        out = np.interp(x, xp, fp)
        if self.extrapolation == "linear_last_segment_with_floor":
            slope = (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
            tail = np.maximum(fp[-1] + slope * (x - xp[-1]), self.floor)
            out = np.where(x > xp[-1], tail, out)
        return float(out) if out.ndim == 0 else out

    def scaled(self, factor: float) -> "CostCurve":
        """Return a copy with every anchor (and the floor) multiplied by ``factor``."""
        floor = None if self.floor is None else self.floor * factor
        return dataclasses.replace(self, values=tuple(v * factor for v in self.values), floor=floor)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["year", "value"])
            for y, v in self.anchors:
                writer.writerow([_fmt_year(y), repr(v)])


def _fmt_year(y: float) -> str:
    return str(int(y)) if float(y).is_integer() else repr(y)


def load_curve(path, label: str, unit: str, extrapolation: str = "hold_last", floor: float | None = None) -> CostCurve:
    """Read a ``year,value`` CSV file into a :class:`CostCurve`."""
    path = Path(path)
    if not path.is_file():
        raise MissingDataError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["year", "value"]:
            raise ValueError(f"{path}: expected header 'year,value'")
        rows = [(float(r["year"]), float(r["value"])) for r in reader]
    years, values = zip(*rows) if rows else ((), ())
    return CostCurve(label, unit, years, values, extrapolation, floor)


@dataclass(frozen=True)
class GridComponents:
    """Retail price split by year: generation, transmission, distribution, profit and taxes."""

    years: tuple[float, ...]
    generation: tuple[float, ...]
    transmission: tuple[float, ...]
    distribution: tuple[float, ...]
    profit_taxes: tuple[float, ...]

    NAMES = ("generation", "transmission", "distribution", "profit_taxes")

    def at(self, year: float) -> dict[str, float]:
        return {n: float(np.interp(year, self.years, getattr(self, n))) for n in self.NAMES}


def load_grid_components(path) -> GridComponents:
    path = Path(path)
    if not path.is_file():
        raise MissingDataError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = {k: tuple(float(r[k]) for r in rows) for k in ("year",) + GridComponents.NAMES}
    return GridComponents(cols["year"], *(cols[n] for n in GridComponents.NAMES))


@dataclass(frozen=True)
class CurveSet:
    """All curves the engine needs, keyed by manifest label."""

    curves: Mapping[str, CostCurve]
    grid_components: GridComponents | None = None
    source: str = ""

    def __getitem__(self, label: str) -> CostCurve:
        try:
            return self.curves[label]
        except KeyError:
            raise MissingDataError(f"curve {label!r} not in data bundle") from None

    def replace_curve(self, curve: CostCurve) -> "CurveSet":
        curves = dict(self.curves)
        curves[curve.label] = curve
        return dataclasses.replace(self, curves=curves)


def default_data_dir() -> Path:
    return Path(str(resources.files("nzeb") / "data"))


def load_manifest(data_dir) -> list[dict[str, str]]:
    path = Path(data_dir) / "manifest.csv"
    if not path.is_file():
        raise MissingDataError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_curves(data_dir=None) -> CurveSet:
    """Load every curve in ``data_dir/manifest.csv`` plus the grid price stack."""
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    curves = {}
    for row in load_manifest(data_dir):
        floor = float(row["floor"]) if row.get("floor") else None
        curves[row["label"]] = load_curve(
            data_dir / row["path"], row["label"], row["unit"], row["extrapolation"] or "hold_last", floor
        )
    stack = data_dir / "grid_stack.csv"
    components = load_grid_components(stack) if stack.is_file() else None
    return CurveSet(curves, components, str(data_dir))


@functools.lru_cache(maxsize=1)
def default_curves() -> CurveSet:
    return load_curves(None)


def _curves(curves: CurveSet | None) -> CurveSet:
    return default_curves() if curves is None else curves


def check_year(year: float, first: int = FIRST_YEAR, last: int = LAST_YEAR, what: str = "year") -> None:
    """Raise :class:`OutOfRangeError` unless ``first <= floor(year) <= last``."""
    if not math.isfinite(year) or not first <= math.floor(year) <= last:
        raise OutOfRangeError(f"{what} {year} outside [{first}, {last}]")


def _check_construction(construction: str) -> None:
    if construction not in CONSTRUCTIONS:
        raise ValueError(f"construction must be one of {CONSTRUCTIONS}, got {construction!r}")


def pv_cost_at(year: float, construction: str, curves: CurveSet | None = None) -> float:
    """PV $/Wdc without a domain check, for replacement-year pricing."""
    _check_construction(construction)
    curve = _curves(curves)["pv_existing"]
    if construction == "new":
        year = min(year + NEW_CONSTRUCTION_SHIFT, LAST_YEAR)
    return curve.value(year)


def battery_cost_at(year: float, construction: str, curves: CurveSet | None = None) -> float:
    """Battery $/kWh without a domain check, for replacement-year pricing."""
    _check_construction(construction)
    return _curves(curves)[f"battery_{construction}"].value(year)


def pv_installed_cost(year: float, construction: str = "existing", curves: CurveSet | None = None) -> float:
    """Installed residential PV cost in $/Wdc (2020$).

    New construction is priced at the existing-construction curve five years
    ahead, capped at the final year.
    """
    check_year(year)
    return pv_cost_at(year, construction, curves)


def battery_installed_cost(year: float, construction: str = "existing", curves: CurveSet | None = None) -> float:
    """Installed residential battery cost in $/kWh of storage (2020$)."""
    check_year(year)
    return battery_cost_at(year, construction, curves)


@dataclass(frozen=True)
class GridPriceModel:
    """Retail electricity price, real 2020$ with inflation for nominal values.

    Parameters
    ----------
    base_price_2020 : float
        Retail price in 2020, cents/kWh.
    real_escalation : float
        Real annual escalation as a fraction.
    inflation : float
        General inflation as a fraction. The nominal escalation is
        ``(1 + real_escalation) * (1 + inflation) - 1``.
    """

    base_price_2020: float = 11.3
    real_escalation: float = 0.0
    inflation: float = 0.025

    @property
    def nominal_escalation(self) -> float:
        return (1 + self.real_escalation) * (1 + self.inflation) - 1

    def real(self, year):
        return self.base_price_2020 * (1 + self.real_escalation) ** (np.asarray(year, dtype=float) - FIRST_YEAR)

    def nominal(self, year):
        return self.base_price_2020 * (1 + self.nominal_escalation) ** (np.asarray(year, dtype=float) - FIRST_YEAR)

    def price(self, year: float, basis: str = "real_2020") -> float:
        if year < FIRST_YEAR:
            raise OutOfRangeError(f"year {year} before {FIRST_YEAR}")
        if basis == "real_2020":
            return float(self.real(year))
        if basis == "nominal":
            return float(self.nominal(year))
        raise ValueError(f"basis must be 'real_2020' or 'nominal', got {basis!r}")


def grid_price(year: float, basis: str = "real_2020", model: GridPriceModel | None = None) -> float:
    """Retail grid price in cents/kWh."""
    return (model or GridPriceModel()).price(year, basis)


UTILITY_KINDS = {"pv": "utility_pv", "pv_plus_4h_battery": "utility_pv_battery"}


def utility_lcoe(year: float, kind: str = "pv", curves: CurveSet | None = None) -> float:
    """Utility-scale LCOE anchor series in cents/kWh (2020$), 2022 to 2050."""
    if kind not in UTILITY_KINDS:
        raise ValueError(f"kind must be one of {tuple(UTILITY_KINDS)}, got {kind!r}")
    check_year(year, 2022, LAST_YEAR)
    return _curves(curves)[UTILITY_KINDS[kind]].value(year)


def delivery_efficiency(retail_twh: float, losses_twh: float) -> float:
    """Share of primary electric-sector energy that reaches retail customers."""
    if retail_twh < 0 or losses_twh < 0:
        raise ValueError("energy quantities must be non-negative")
    if retail_twh + losses_twh == 0:
        raise ZeroDivisionError("retail and losses are both zero; ratio undefined")
    return retail_twh / (retail_twh + losses_twh)


def avg_consumption(class_sales_kwh: float, class_customers: float) -> float:
    """Average annual consumption per customer, kWh/yr."""
    if class_customers <= 0:
        raise ZeroDivisionError("customer count must be positive")
    return class_sales_kwh / class_customers


@dataclass(frozen=True)
class StateEnergyAccount:
    """State energy flows by sector (TWh) and retail customers by class.

    Unreported values are ``None``.
    """

    sectors: Mapping[str, Mapping[str, float | None]]
    customers: Mapping[str, int] = field(default_factory=dict)
    sales_kwh: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for sector, row in self.sectors.items():
            for k, v in row.items():
                if v is not None and v < 0:
                    raise ValueError(f"{sector}.{k} is negative")
        for k, v in list(self.customers.items()) + list(self.sales_kwh.items()):
            if v < 0:
                raise ValueError(f"{k} is negative")

    def delivery_efficiency(self, sector: str = "all") -> float:
        row = self.sectors[sector]
        return delivery_efficiency(row["retail_sales_twh"], row["system_losses_twh"])

    def avg_consumption(self, customer_class: str) -> float:
        return avg_consumption(self.sales_kwh[customer_class], self.customers[customer_class])


def load_state_account(data_dir=None) -> StateEnergyAccount:
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    energy, custs = data_dir / "state_energy_2020.csv", data_dir / "customers_2020.csv"
    for p in (energy, custs):
        if not p.is_file():
            raise MissingDataError(p)
    with open(energy, newline="", encoding="utf-8") as fh:
        sectors = {
            r["sector"]: {k: (float(v) if v else None) for k, v in r.items() if k != "sector"}
            for r in csv.DictReader(fh)
        }
    with open(custs, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    customers = {r["class"]: int(r["customers"]) for r in rows}
    sales = {r["class"]: float(r["sales_mwh"]) * 1000.0 for r in rows}
    return StateEnergyAccount(sectors, customers, sales)

