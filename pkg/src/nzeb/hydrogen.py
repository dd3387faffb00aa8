"""Levelized cost of hydrogen from a PV + electrolyzer + tank plant.

The PV profile is a set of repeating cycles of hourly capacity factors. A
1-D profile is one cycle, scaled to a year if it is shorter. A 12 x 24
matrix is one representative day per month, weighted by days in the month.
The electrolyzer clips PV output at its rating. The tank holds
``tank_hours`` of rated production and lets the plant deliver a constant
flow within each cycle. Production the tank cannot absorb is curtailed at
the electrolyzer, so every kg produced is delivered.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MissingDataError, ZeroProductionError
from .projections import CostCurve, CurveSet, check_year, default_curves, default_data_dir

RATIO_GRID = np.round(np.arange(0.20, 1.0 + 1e-9, 0.05), 10)
TANK_HOURS_GRID = np.arange(0.0, 168.0 + 1e-9, 4.0)
DAYS_IN_MONTH = np.array([31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31])
HOURS_PER_YEAR = 8760.0
MBTU_PER_KG = {"lhv": 120.0 / 1055.06, "hhv": 141.88 / 1055.06}
DRIVERS = ("pv_lcoe", "electrolyzer_capex", "tank_capex")
_CURVE_FIELD = {"pv_lcoe": "pv_lcoe_curve", "electrolyzer_capex": "electrolyzer_capex_curve",
                "tank_capex": "tank_capex_curve"}
_BISECT_STEPS = 60
_WINDOW_LIMIT = 168  # cycles up to a week use the exact window bound
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class H2CostInputs:
    """Cost curves and plant parameters.

    ``pv_lcoe_curve`` is in cents/kWh, ``electrolyzer_capex_curve`` in $/kW
    and ``tank_capex_curve`` in $/kg of storage. Efficiency is kWh/kg.
    """

    pv_lcoe_curve: CostCurve
    electrolyzer_capex_curve: CostCurve
    tank_capex_curve: CostCurve
    electrolyzer_efficiency: float = 55.0
    electrolyzer_life: float = 20.0
    tank_life: float = 30.0
    real_discount: float = 0.0195

    def __post_init__(self):
        if self.electrolyzer_efficiency < 39.4:
            raise ValueError("electrolyzer_efficiency below the 39.4 kWh/kg thermodynamic floor")
        if self.electrolyzer_life <= 0 or self.tank_life <= 0:
            raise ValueError("lives must be positive")
        for name in _CURVE_FIELD.values():
            c = getattr(self, name)
            if any(b > a for a, b in zip(c.values, c.values[1:])):
                raise ValueError(f"{name} must be non-increasing")

    @classmethod
    def from_curves(cls, curves: CurveSet | None = None, **kw) -> "H2CostInputs":
        curves = curves if curves is not None else default_curves()
        return cls(curves["h2_pv_lcoe"], curves["electrolyzer_capex"], curves["tank_capex"], **kw)

    def scaled(self, driver: str, factor: float) -> "H2CostInputs":
        """Copy with one driver's curve multiplied by ``factor``."""
        name = _CURVE_FIELD[driver]
        return dataclasses.replace(self, **{name: getattr(self, name).scaled(factor)})

    def prices(self, year: float) -> tuple[float, float, float]:
        """($/kWh electricity, $/kW electrolyzer, $/kg tank) for ``year``."""
        return (self.pv_lcoe_curve.value(year) / 100.0,
                self.electrolyzer_capex_curve.value(year),
                self.tank_capex_curve.value(year))


@dataclass(frozen=True)
class H2PlantDesign:
    """Plant sizes and annual performance.

    Capacities are MW (PV in DC, electrolyzer input) and kg. ``annual_h2``
    is kg/yr. ``pv_generation`` and ``electrolysis_energy`` are MWh/yr.
    """

    pv_capacity: float
    electrolyzer_capacity: float
    tank_capacity: float
    annual_h2: float
    pv_generation: float
    electrolysis_energy: float
    lcoh: float = float("nan")

    def __post_init__(self):
        if self.electrolyzer_capacity > self.pv_capacity * (1 + 1e-12):
            raise ValueError("electrolyzer_capacity cannot exceed pv_capacity")

    @property
    def electrolyzer_ratio(self) -> float:
        return self.electrolyzer_capacity / self.pv_capacity


def crf(rate: float, years: float) -> float:
    """Capital recovery factor; ``1 / years`` at zero rate."""
    if years <= 0:
        raise ValueError("years must be positive")
    if rate == 0:
        return 1.0 / years
    g = (1 + rate) ** years
    return rate * g / (g - 1)


def profile_cycles(profile) -> tuple[np.ndarray, np.ndarray]:
    """Split a profile into ``(cycles, weights)``.

    ``cycles`` has one row per repeating cycle. ``weights`` holds the number
    of times each cycle repeats in a year.

    Raises
    ------
    ValueError
        If the profile is empty, outside [0, 1], or all zero.
    """
    arr = np.asarray(profile, dtype=float)
    if arr.size == 0:
        raise ValueError("empty profile")
    if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1:
        raise ValueError("profile must hold capacity factors in [0, 1]")
    if not arr.any():
        raise ValueError("profile is all zero")
    if arr.ndim == 1:
        return arr[None, :], np.array([HOURS_PER_YEAR / arr.size])
    if arr.shape == (12, 24):
        return arr, DAYS_IN_MONTH.astype(float)
    raise ValueError(f"profile must be 1-D or 12x24, got shape {arr.shape}")


def load_profile(path=None) -> np.ndarray:
    """Read a ``month,h00..h23`` CSV (12 rows) or a single ``cf`` column."""
    path = Path(path) if path is not None else default_data_dir() / "solar_profile_12x24.csv"
    if not path.is_file():
        raise MissingDataError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[0] == "month":
        return np.array([[float(v) for v in r[1:]] for r in body])
    return np.array([float(r[0]) for r in body])


def _required(p: np.ndarray, rate: np.ndarray) -> np.ndarray:
    """Batched storage requirement: ``p`` is (B, T), ``rate`` is (B, K), result (B, K)."""
    p2 = np.concatenate([p, p], axis=-1)
    cum = np.cumsum(rate[:, :, None] - p2[:, None, :], axis=-1)
    cum = np.concatenate([np.zeros(cum.shape[:-1] + (1,)), cum], axis=-1)
    return np.max(cum - np.minimum.accumulate(cum, axis=-1), axis=-1)


def _steady_rates_bisect(p: np.ndarray, tank: np.ndarray) -> np.ndarray:
    mean = p.mean(axis=-1, keepdims=True)
    lo = np.broadcast_to(p.min(axis=-1, keepdims=True), tank.shape).copy()
    hi = np.broadcast_to(mean, tank.shape).copy()
    ok = _required(p, hi) <= tank
    scale = np.maximum(mean, 1e-300)
    for _ in range(_BISECT_STEPS):
        todo = ~ok & (hi - lo > 1e-15 * scale)
        if not todo.any():
            break
        mid = 0.5 * (lo + hi)
        fits = _required(p, mid) <= tank
        lo = np.where(todo & fits, mid, lo)
        hi = np.where(todo & ~fits, mid, hi)
    return np.where(ok, hi, lo)


def _steady_rates_windows(p: np.ndarray, tank: np.ndarray) -> np.ndarray:
    # Every run of L hours caps the rate at (tank + production in the run) / L.
    n = p.shape[-1]
    c = np.concatenate([np.zeros((p.shape[0], 1)), np.cumsum(np.concatenate([p, p], axis=-1), axis=-1)], axis=-1)
    starts = np.arange(n)
    lengths = np.arange(1, n + 1)
    sums = c[:, starts[:, None] + lengths[None, :]] - c[:, starts[:, None]]  # (B, start, length)
    sums = sums.reshape(p.shape[0], -1)
    lens = np.tile(lengths, n).astype(float)
    bound = (tank[:, None, :] + sums[:, :, None]) / lens[None, :, None]
    return np.minimum(bound.min(axis=1), p.mean(axis=-1, keepdims=True))


def _steady_rates(p: np.ndarray, tank: np.ndarray) -> np.ndarray:
    """Batched :func:`steady_rate`: ``p`` is (B, T), ``tank`` is (B, K)."""
    if p.shape[-1] <= _WINDOW_LIMIT:
        return _steady_rates_windows(p, tank)
    return _steady_rates_bisect(p, tank)


def storage_required(production, rate) -> np.ndarray:
    """Smallest tank (kg) that sustains a constant ``rate`` from a cyclic ``production``.

    Surplus above a full tank is curtailed, so the requirement is the
    largest cumulative shortfall over any run of hours in the repeated
    cycle. ``rate`` may be scalar or 1-D.
    """
    p = np.asarray(production, dtype=float)[None, :]
    r = np.atleast_1d(np.asarray(rate, dtype=float))[None, :]
    out = _required(p, r)[0]
    return out if np.ndim(rate) else float(out[0])


def steady_rate(production, tank_kg):
    """Largest constant delivery rate (kg/h) a tank of ``tank_kg`` sustains from cyclic ``production``."""
    p = np.asarray(production, dtype=float)[None, :]
    t = np.atleast_1d(np.asarray(tank_kg, dtype=float))[None, :]
    out = _steady_rates(p, t)[0]
    return out if np.ndim(tank_kg) else float(out[0])


def _dispatch_many(profile, ratios, tank_hours, efficiency: float, pv_capacity: float):
    """Annual hydrogen (kg) for every (ratio, tank hours) pair, plus annual PV output (MWh)."""
    cycles, weights = profile_cycles(profile)
    ratios = np.atleast_1d(np.asarray(ratios, dtype=float))
    hours = np.atleast_1d(np.asarray(tank_hours, dtype=float))
    n_c, n_t = cycles.shape
    h2 = np.zeros((len(ratios), len(hours)))
    # Keep each batch to a few million elements.
    chunk = max(1, int(4e6 // max(1, n_c * len(hours) * 2 * n_t)))
    for s in range(0, len(ratios), chunk):
        r = ratios[s:s + chunk]
        elec_mw = r * pv_capacity
        prod = np.minimum(cycles[None, :, :] * pv_capacity, elec_mw[:, None, None]) * 1000.0 / efficiency
        tank = (hours[None, :] * (elec_mw * 1000.0 / efficiency)[:, None])
        tank = np.repeat(tank[:, None, :], n_c, axis=1)
        rates = _steady_rates(prod.reshape(-1, n_t), tank.reshape(-1, len(hours)))
        rates = rates.reshape(len(r), n_c, len(hours))
        h2[s:s + chunk] = np.einsum("rck,c->rk", rates, weights * n_t)
    pv_mwh = pv_capacity * float((cycles.sum(axis=1) * weights).sum())
    return h2, pv_mwh


def dispatch(profile, electrolyzer_ratio: float, tank_hours, efficiency: float, pv_capacity: float = 1.0):
    """Annual PV output (MWh), electrolysis energy (MWh) and hydrogen (kg) for a design.

    ``tank_hours`` may be an array, giving array results.
    """
    h2, pv_mwh = _dispatch_many(profile, [electrolyzer_ratio], tank_hours, efficiency, pv_capacity)
    h2 = h2[0] if np.ndim(tank_hours) else float(h2[0, 0])
    return pv_mwh, h2 * efficiency / 1000.0, h2


def lcoh(design: H2PlantDesign, inputs: H2CostInputs, year: float) -> float:
    """Levelized cost, $/kg: annualized capital plus PV electricity over annual output.

    All PV output is paid for at the PV LCOE, including what the
    electrolyzer clips or curtails.
    """
    check_year(year)
    if not design.annual_h2 > 0:
        raise ZeroProductionError("design produces no hydrogen")
    power, elec_capex, tank_capex = inputs.prices(year)
    cost = (crf(inputs.real_discount, inputs.electrolyzer_life) * elec_capex * design.electrolyzer_capacity * 1000.0
            + crf(inputs.real_discount, inputs.tank_life) * tank_capex * design.tank_capacity
            + power * design.pv_generation * 1000.0)
    return cost / design.annual_h2


def _lcoh_surface(profile, inputs, year, pv_capacity, ratios, tank_hours):
    power, elec_capex, tank_capex = inputs.prices(year)
    eff = inputs.electrolyzer_efficiency
    ratios = np.asarray(ratios, dtype=float)
    tank_hours = np.asarray(tank_hours, dtype=float)
    h2, pv_mwh = _dispatch_many(profile, ratios, tank_hours, eff, pv_capacity)
    tank_kg = tank_hours[None, :] * (ratios * pv_capacity * 1000.0 / eff)[:, None]
    cost = (crf(inputs.real_discount, inputs.electrolyzer_life) * elec_capex * (ratios * pv_capacity * 1000.0)[:, None]
            + crf(inputs.real_discount, inputs.tank_life) * tank_capex * tank_kg
            + power * pv_mwh * 1000.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        surface = np.where(h2 > 0, cost / np.where(h2 > 0, h2, 1.0), np.inf)
    return surface, h2, tank_kg, pv_mwh


def lcoh_grid(profile, inputs: H2CostInputs, year: float, pv_capacity: float = 100.0,
              ratios=RATIO_GRID, tank_hours=TANK_HOURS_GRID) -> np.ndarray:
    """LCOH ($/kg) at every grid point, shape ``(len(ratios), len(tank_hours))``.

    Points that deliver nothing are ``inf``.
    """
    check_year(year)
    return _lcoh_surface(profile, inputs, year, pv_capacity, ratios, tank_hours)[0]


def optimize_sizing(profile, inputs: H2CostInputs, year: float, pv_capacity: float = 100.0,
                    ratios=RATIO_GRID, tank_hours=TANK_HOURS_GRID) -> H2PlantDesign:
    """Grid-search the electrolyzer ratio and tank hours that minimize LCOH.

    Ties, within a relative 1e-12 of the minimum, go to the smaller
    electrolyzer, then the smaller tank. ``lcoh`` of the result is the
    chosen point's value, which may exceed the grid minimum by that margin.
    """
    check_year(year)
    ratios, tank_hours = np.asarray(ratios, dtype=float), np.asarray(tank_hours, dtype=float)
    surface, h2, tank_kg, pv_mwh = _lcoh_surface(profile, inputs, year, pv_capacity, ratios, tank_hours)
    if not np.isfinite(surface).any():
        raise ZeroProductionError("no grid point delivers hydrogen")
    # Values within rounding noise of the minimum count as ties; C order then
    # prefers the smaller electrolyzer, then the smaller tank.
    best = surface.min()
    i, j = np.unravel_index(int(np.argmax(surface <= best + _TIE_RTOL * abs(best))), surface.shape)
    return H2PlantDesign(
        pv_capacity=pv_capacity,
        electrolyzer_capacity=float(ratios[i]) * pv_capacity,
        tank_capacity=float(tank_kg[i, j]),
        annual_h2=float(h2[i, j]),
        pv_generation=pv_mwh,
        electrolysis_energy=float(h2[i, j]) * inputs.electrolyzer_efficiency / 1000.0,
        lcoh=float(surface[i, j]),
    )


@dataclass(frozen=True)
class SensitivityBand:
    low: float
    nominal: float
    high: float


def sensitivity(design_or_auto, inputs: H2CostInputs, year: float, spread: float = 0.30,
                profile=None, **grid) -> dict[str, SensitivityBand]:
    """LCOH with each driver scaled by ``1 - spread`` and ``1 + spread``.

    Parameters
    ----------
    design_or_auto : H2PlantDesign or "auto"
        A fixed design, or ``"auto"`` to re-optimize sizing for every case.
        Auto mode needs ``profile``.
    """
    if not 0 < spread < 1:
        raise ValueError("spread must lie in (0, 1)")
    auto = isinstance(design_or_auto, str)
    if auto:
        if design_or_auto != "auto" or profile is None:
            raise ValueError("pass a design, or 'auto' with a profile")

        def evaluate(inp):
            return optimize_sizing(profile, inp, year, **grid).lcoh
    else:
        def evaluate(inp):
            return lcoh(design_or_auto, inp, year)

    nominal = evaluate(inputs)
    return {
        d: SensitivityBand(evaluate(inputs.scaled(d, 1 - spread)), nominal, evaluate(inputs.scaled(d, 1 + spread)))
        for d in DRIVERS
    }


def per_mbtu(dollars_per_kg: float, basis: str = "lhv") -> float:
    """Convert $/kg of hydrogen to $/MBtu on a lower or higher heating value basis."""
    if basis not in MBTU_PER_KG:
        raise ValueError("basis must be 'lhv' or 'hhv'")
    if dollars_per_kg < 0:
        raise ValueError("price must be non-negative")
    return dollars_per_kg / MBTU_PER_KG[basis]
