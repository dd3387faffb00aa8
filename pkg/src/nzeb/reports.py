"""Table builders behind the CLI subcommands.

Each builder returns :class:`Table` objects. Formatting is fixed-precision,
so identical inputs always give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

from .config import ModelConfig
from .finance import build_schedule, financial_summary
from .hydrogen import load_profile, optimize_sizing, per_mbtu, sensitivity
from .lcoe import gas_equivalent, grid_stack, lcoe_pv, lcoe_pv_battery
from .projections import CurveSet, utility_lcoe
from .savings import ScenarioConfig, crossover_month, monthly_savings

LCOE_YEARS = (2022, 2030, 2040, 2050)
SAVINGS_YEARS = (2020, 2025, 2030, 2035, 2040, 2045, 2050)
H2_YEARS = (2020, 2025, 2030, 2035, 2040, 2045, 2050)
FINANCE_TABLES = (("II", 2020, 0.0), ("III", 2020, 1.0), ("IV", 2035, 1.0))
HOME_CASES = ("existing", "code", "improved")
EV_MILES = 10000.0


@dataclass(frozen=True)
class Filters:
    """Optional CLI restrictions. ``None`` means no restriction."""

    case: str | None = None
    year: int | None = None
    itc: bool | None = None
    storage: float | None = None
    v2h: bool = False
    nominal: bool = False


@dataclass
class Table:
    name: str
    header: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    title: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(tuple(_cell(v) for v in r) for r in self.rows)
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [list(self.header)] + [[_cell(v) for v in r] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.header))]
        lines = [self.title or self.name, ""]
        for k, row in enumerate(cells):
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _r(x: float | None, nd: int) -> str | None:
    """Fixed-point text with ``nd`` decimals; negative zero prints as zero."""
    if x is None:
        return None
    text = f"{float(x):.{nd}f}"
    return text[1:] if text.startswith("-") and float(text) == 0 else text


def _money(cfg: ModelConfig, f: Filters, year: float, value: float) -> float:
    """2020$ value, or nominal dollars of ``year`` when requested."""
    if f.nominal:
        return value * (1 + cfg.finance.inflation) ** (year - 2020)
    return value


def _years(f: Filters, default) -> tuple:
    return (f.year,) if f.year is not None else tuple(default)


def _itcs(f: Filters) -> tuple:
    return (f.itc,) if f.itc is not None else (False, True)


def _case_ok(f: Filters, home: str) -> bool:
    return f.case is None or f.case == home or (f.case == "new" and home == "code")


def _scenario(cfg: ModelConfig, home: str, year: int, **kw) -> ScenarioConfig:
    return ScenarioConfig(cfg.home(home), year, ev=cfg.ev, **kw)


def _eval(cfg: ModelConfig, curves: CurveSet, scenario: ScenarioConfig):
    return monthly_savings(scenario, curves, cfg.finance, cfg.tech, cfg.grid_model, cfg.savings.itc_booking)


# -- LCOE and gasoline equivalence ------------------------------------------------


def _lcoe_cases(cfg: ModelConfig, curves: CurveSet, f: Filters, year: int):
    """(case, home, LcoeResult) for every residential case in ``year``."""
    out = []
    storage = 1.0 if f.storage is None else f.storage
    for itc in _itcs(f):
        sfx = "_itc" if itc else ""
        if _case_ok(f, "existing"):
            out.append((f"existing{sfx}", lcoe_pv(year, "existing", itc, cfg.tech, cfg.finance, curves)))
        if _case_ok(f, "code"):
            out.append((f"new{sfx}", lcoe_pv(year, "new", itc, cfg.tech, cfg.finance, curves)))
        for home in HOME_CASES:
            if _case_ok(f, home):
                res = lcoe_pv_battery(year, cfg.home(home), storage, itc, cfg.tech, cfg.finance, curves)
                out.append((f"{home}+battery{int(round(storage * 100))}{sfx}", res))
    return out


def lcoe_tables(cfg: ModelConfig, curves: CurveSet, f: Filters) -> list[Table]:
    t = Table("lcoe", ("year", "case", "component", "cents_per_kwh"),
              title="Levelized cost of electricity (cents/kWh)")
    for year in _years(f, LCOE_YEARS):
        for case, res in _lcoe_cases(cfg, curves, f, year):
            for comp, v in res.breakdown:
                t.rows.append((year, case, comp, _r(_money(cfg, f, year, v), 4)))
            t.rows.append((year, case, "total", _r(_money(cfg, f, year, res.cents_per_kwh), 4)))
        if f.case is None and year >= 2022:
            for kind, label in (("pv", "utility_pv"), ("pv_plus_4h_battery", "utility_pv+4h")):
                t.rows.append((year, label, "total", _r(_money(cfg, f, year, utility_lcoe(year, kind, curves)), 4)))
            for variant, label in (("grid", "grid"), ("utility_pv", "grid_utility_pv")):
                res = grid_stack(year, variant, curves, cfg.grid_model)
                for comp, v in res.breakdown:
                    t.rows.append((year, label, comp, _r(_money(cfg, f, year, v), 4)))
                t.rows.append((year, label, "total", _r(_money(cfg, f, year, res.cents_per_kwh), 4)))
    return [t]


def gas_tables(cfg: ModelConfig, curves: CurveSet, f: Filters) -> list[Table]:
    t = Table("gas_equiv", ("year", "case", "cents_per_kwh", "usd_per_gallon"),
              title=f"Gasoline-equivalent price ({cfg.ev.gasoline_mpg} mpg vs {cfg.ev.efficiency} mi/kWh)")
    for year in _years(f, LCOE_YEARS):
        cases = [(c, r.cents_per_kwh) for c, r in _lcoe_cases(cfg, curves, f, year)]
        if f.case is None:
            cases += [("utility_pv", utility_lcoe(year, "pv", curves)),
                      ("utility_pv+4h", utility_lcoe(year, "pv_plus_4h_battery", curves)),
                      ("grid", cfg.grid_model.price(year))]
        for case, cents in cases:
            cents = _money(cfg, f, year, cents)
            t.rows.append((year, case, _r(cents, 4), _r(gas_equivalent(cents, cfg.ev), 4)))
    return [t]


# -- Savings figures ----------------------------------------------------------------


def _fig_specs():
    """Figure name -> list of (home, timing, storage, medium, itc, ev_miles, extra_pv, fuel)."""
    entries: dict[str, list] = {}
    both = (False, True)
    entries["fig7"] = [("existing", "retrofit", 0.0, "wall_battery", i, None, False, False) for i in both]
    entries["fig8"] = [(h, tm, 0.0, "wall_battery", i, None, False, False)
                     for h in ("code", "improved") for tm in ("at_construction", "retrofit") for i in both]
    entries["fig12"] = [("existing", "retrofit", e, "wall_battery", i, None, False, False)
                      for i in both for e in (0.0, 0.5, 1.0)]
    for name, timing, itc in (("fig13", "at_construction", False), ("fig14", "at_construction", True),
                              ("fig23", "retrofit", False), ("fig24", "retrofit", True)):
        entries[name] = [(h, timing, e, "wall_battery", itc, None, False, False)
                       for h in ("code", "improved") for e in (0.0, 0.5, 1.0)]
    v2h_set = [
        (1.0, "wall_battery", None, False, False),
        (1.0, "v2h", None, False, False),
        (1.0, "v2h", EV_MILES, True, False),
    ]
    entries["fig15"] = [("existing", "retrofit", e, m, i, mi, x, fu) for i in both for (e, m, mi, x, fu) in v2h_set]
    entries["fig16"] = [(h, "at_construction", e, m, i, mi, x, fu)
                      for h in ("code", "improved") for i in both for (e, m, mi, x, fu) in v2h_set]
    entries["fig17"] = [(h, tm, 1.0, "v2h", i, EV_MILES, True, True)
                      for h, tm in (("existing", "retrofit"), ("code", "at_construction"),
                                    ("improved", "at_construction"))
                      for i in both]
    return entries


SAVINGS_FIGURES = tuple(_fig_specs())
SAVINGS_HEADER = ("scenario_id", "install_year", "home", "timing", "storage", "medium", "itc", "ev_miles",
                  "extra_pv_for_ev", "fuel_savings", "bill_avoided", "ownership_cost", "fuel_component",
                  "savings_usd_per_month")


def _entry_ok(f: Filters, entry) -> bool:
    home, _, storage, medium, itc, *_ = entry
    if not _case_ok(f, home):
        return False
    if f.itc is not None and itc != f.itc:
        return False
    if f.storage is not None and abs(storage - f.storage) > 1e-9:
        return False
    if f.v2h and medium != "v2h":
        return False
    return True


def savings_tables(cfg: ModelConfig, curves: CurveSet, f: Filters, figures=None) -> list[Table]:
    tables = []
    for name, entries in _fig_specs().items():
        if figures is not None and name not in figures:
            continue
        t = Table(name, SAVINGS_HEADER, title=f"Monthly savings, {name} ($/month)")
        for entry in entries:
            if not _entry_ok(f, entry):
                continue
            home, timing, storage, medium, itc, miles, extra, fuel = entry
            sid = "_".join([home, timing, f"s{int(round(storage * 100))}", medium, "itc" if itc else "noitc"]
                           + (["ev", "pv" if extra else "nopv", "fuel" if fuel else "nofuel"] if miles else []))
            for year in _years(f, SAVINGS_YEARS):
                sc = _scenario(cfg, home, year, install_timing=timing, storage_effectiveness=storage,
                               storage_medium=medium, itc_pv=itc, itc_battery=itc, ev_miles_per_year=miles,
                               extra_pv_for_ev=extra, fuel_savings=fuel)
                s = _eval(cfg, curves, sc)
                m = [_r(_money(cfg, f, year, v), 2) for v in
                     (s.bill_avoided, s.ownership_cost, s.fuel_savings, s.dollars_per_month)]
                t.rows.append((sid, year, home, timing, _r(storage, 2), medium, itc, _r(miles or 0, 0), extra, fuel, *m))
        tables.append(t)
    return tables


# -- Financial indexes and crossovers ------------------------------------------------


def _finance_cases(f: Filters):
    tables = [t for t in FINANCE_TABLES if f.year is None or t[1] == f.year]
    if f.year is not None and not tables:
        tables = [("custom", f.year, 0.0)]
    if f.storage is not None:
        tables = [(n, y, f.storage) for n, y, _ in tables]
    for name, year, storage in tables:
        for home in HOME_CASES:
            if not _case_ok(f, home):
                continue
            for itc in _itcs(f):
                yield name, year, storage, home, itc


def finance_tables(cfg: ModelConfig, curves: CurveSet, f: Filters):
    t = Table("finance", ("table", "year", "case", "storage", "medium", "itc", "npv_usd", "irr_pct", "sir",
                          "spb_years"), title="Financial indexes (NPV in 2020$ unless --nominal)")
    schedules = {}
    medium = "v2h" if f.v2h else "wall_battery"
    for name, year, storage, home, itc in _finance_cases(f):
        sc = _scenario(cfg, home, year, storage_effectiveness=storage, itc_pv=itc, itc_battery=itc,
                       storage_medium=medium)
        fs = financial_summary(sc, curves, cfg.finance, cfg.tech, cfg.grid_model)
        t.rows.append((name, year, home, _r(storage, 2), medium, itc, _r(_money(cfg, f, year, fs.npv), 2),
                       _r(None if fs.irr is None else fs.irr * 100, 4), _r(fs.sir, 4),
                       "no-payback" if fs.spb is None else _r(fs.spb, 4)))
        key = f"table{name}_{home}_s{int(round(storage * 100))}_{'itc' if itc else 'noitc'}"
        schedules[key] = build_schedule(sc, curves, cfg.finance, cfg.tech, cfg.grid_model).to_csv_text()
    return [t], schedules


def crossover_tables(cfg: ModelConfig, curves: CurveSet, f: Filters) -> list[Table]:
    storage = 1.0 if f.storage is None else f.storage
    medium = "v2h" if f.v2h else "wall_battery"
    t = Table("crossover", ("family", "storage", "medium", "itc", "crossover"),
              title="Earliest install month with non-negative monthly savings")
    for home in HOME_CASES:
        if not _case_ok(f, home):
            continue
        for itc in _itcs(f):
            sc = _scenario(cfg, home, 2020, storage_effectiveness=storage, storage_medium=medium,
                           itc_pv=itc, itc_battery=itc)
            c = crossover_month(sc, curves, cfg.finance, cfg.tech, cfg.grid_model)
            t.rows.append((home, _r(storage, 2), medium, itc, "no-crossover" if c is None else f"{c[0]:04d}-{c[1]:02d}"))
    return [t]


# -- Hydrogen ---------------------------------------------------------------------


def h2_tables(cfg: ModelConfig, curves: CurveSet, f: Filters, profile=None) -> list[Table]:
    inputs = cfg.h2_inputs(curves)
    profile = load_profile(Path(curves.source) / "solar_profile_12x24.csv") if profile is None else profile
    basis = cfg.hydrogen.mbtu_basis
    sens = Table("h2", ("year", "driver", "low", "nominal", "high", "usd_per_kg", "usd_per_mbtu"),
                 title="Hydrogen LCOH sensitivity, +/-30% per driver (low/nominal/high in $/kg)")
    design = Table("h2_design", ("year", "electrolyzer_ratio", "tank_hours", "tank_kg", "annual_h2_kg",
                                 "usd_per_kg", "usd_per_mbtu"), title="Optimal hydrogen plant per year")
    cap = cfg.hydrogen.pv_capacity
    for year in _years(f, H2_YEARS):
        d = optimize_sizing(profile, inputs, year, pv_capacity=cap)
        rated = d.electrolyzer_capacity * 1000.0 / inputs.electrolyzer_efficiency
        nominal = _money(cfg, f, year, d.lcoh)
        design.rows.append((year, _r(d.electrolyzer_ratio, 4), _r(d.tank_capacity / rated if rated else 0.0, 4),
                            _r(d.tank_capacity, 2), _r(d.annual_h2, 2), _r(nominal, 4),
                            _r(per_mbtu(nominal, basis), 4)))
        for driver, band in sensitivity("auto", inputs, year, profile=profile, pv_capacity=cap).items():
            lo, mid, hi = (_money(cfg, f, year, v) for v in (band.low, band.nominal, band.high))
            sens.rows.append((year, driver, _r(lo, 4), _r(mid, 4), _r(hi, 4), _r(mid, 4),
                              _r(per_mbtu(mid, basis), 4)))
    return [sens, design]


def atomic_write_text(path, text: str) -> None:
    """Write through a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
