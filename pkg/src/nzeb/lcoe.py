"""Levelized cost of electricity for residential PV and PV plus storage.

Costs are discounted at the real discount rate. Energy is the degraded
lifetime production over the analysis period, left undiscounted. The result
is a cost per delivered kWh in 2020 cents.
"""

from __future__ import annotations

from dataclasses import dataclass

from .finance import FinancingTerms
from .projections import (
    CurveSet,
    GridPriceModel,
    battery_cost_at,
    battery_installed_cost,
    check_year,
    default_curves,
    pv_installed_cost,
    utility_lcoe,
)
from .errors import MissingDataError
from .sizing import EvParams, HomeProfile, TechParams, battery_size_grid_independent, pv_size_for_net_zero


@dataclass(frozen=True)
class LcoeResult:
    """Total and per-component cost in cents/kWh (2020$)."""

    cents_per_kwh: float
    breakdown: tuple[tuple[str, float], ...]
    assumptions: tuple = ()

    def __post_init__(self):
        if abs(sum(v for _, v in self.breakdown) - self.cents_per_kwh) > 0.01:
            raise ValueError("breakdown does not sum to total")

    def component(self, name: str) -> float:
        return dict(self.breakdown)[name]


def lifetime_energy(params: TechParams, horizon: int | None = None,
                    real_discount: float | None = None) -> float:
    """Degraded production of 1 kWdc over ``horizon`` years, kWh.

    ``horizon`` defaults to the analysis period. With ``real_discount`` set,
    each year's output is discounted at that rate.
    """
    horizon = params.analysis_period if horizon is None else horizon
    r = 0.0 if real_discount is None else real_discount
    return sum(params.pv_yield * (1 - params.pv_degradation) ** k / (1 + r) ** k for k in range(int(horizon)))


def _replacement_years(life: float, params: TechParams) -> list[float]:
    out, k = [], 1
    while k * life < params.service_time - 1e-9:
        out.append(k * life)
        k += 1
    return out


def _pv_costs_per_kw(install_year, construction, itc, params, terms, curves):
    capital = 1000.0 * pv_installed_cost(install_year, construction, curves)
    capital *= 1 - (terms.itc_pv if itc else 0.0)
    inverter = sum(1000.0 * params.inverter_cost / (1 + terms.real_discount) ** y
                   for y in _replacement_years(params.inverter_life, params))
    return capital, inverter


def lcoe_pv(
    install_year: float,
    construction: str = "existing",
    itc: bool = False,
    params: TechParams | None = None,
    terms: FinancingTerms | None = None,
    curves: CurveSet | None = None,
) -> LcoeResult:
    """LCOE of a residential PV array, cents/kWh (2020$).

    The numerator is the installed cost, net of the ITC when ``itc`` is
    set, plus discounted inverter replacements. The denominator is
    :func:`lifetime_energy`.
    """
    params, terms = params or TechParams(), terms or FinancingTerms()
    capital, inverter = _pv_costs_per_kw(install_year, construction, itc, params, terms, curves)
    energy = lifetime_energy(params) / 100.0
    parts = (("pv_capital", capital / energy), ("inverter_replacement", inverter / energy))
    return LcoeResult(sum(v for _, v in parts), parts, (params, terms))


def lcoe_pv_battery(
    install_year: float,
    home_profile: HomeProfile,
    effectiveness: float = 1.0,
    itc: bool = False,
    params: TechParams | None = None,
    terms: FinancingTerms | None = None,
    curves: CurveSet | None = None,
    construction: str | None = None,
) -> LcoeResult:
    """LCOE of a net-zero PV array plus a grid-independence battery.

    Battery capital and cell replacements are added to the numerator. The
    fraction ``effectiveness`` of production cycles through the battery and
    loses ``1 - battery_efficiency`` of its energy. ``construction``
    defaults to the home's construction type.
    """
    params, terms = params or TechParams(), terms or FinancingTerms()
    construction = construction or home_profile.construction
    kw = pv_size_for_net_zero(home_profile, params)
    kwh = battery_size_grid_independent(home_profile, params, effectiveness)
    pv_capital, inverter = _pv_costs_per_kw(install_year, construction, itc, params, terms, curves)
    batt_capital = kwh * battery_installed_cost(install_year, construction, curves)
    batt_capital *= 1 - (terms.itc_battery if itc else 0.0)
    replacements = sum(
        params.battery_replacement_share * kwh * battery_cost_at(install_year + y, construction, curves)
        / (1 + terms.real_discount) ** y
        for y in _replacement_years(params.battery_life, params)
    ) if kwh > 0 else 0.0
    loss = effectiveness * (1 - params.battery_efficiency)
    energy = kw * lifetime_energy(params) * (1 - loss) / 100.0
    parts = (
        ("pv_capital", kw * pv_capital / energy),
        ("inverter_replacement", kw * inverter / energy),
        ("battery_capital", batt_capital / energy),
        ("battery_replacement", replacements / energy),
    )
    return LcoeResult(sum(v for _, v in parts), parts, (params, terms))


def gas_equivalent(cents_per_kwh: float, ev: EvParams | None = None) -> float:
    """Electricity price expressed as $/gallon of gasoline for the same miles."""
    ev = ev or EvParams()
    if cents_per_kwh < 0:
        raise ValueError("price must be non-negative")
    return cents_per_kwh / 100.0 * ev.gasoline_mpg / ev.efficiency


GRID_VARIANTS = ("grid", "utility_pv")


def grid_stack(year: float, variant: str = "grid", curves: CurveSet | None = None,
               grid: GridPriceModel | None = None) -> LcoeResult:
    """Retail price split into generation, transmission, distribution, profit and taxes.

    ``variant="utility_pv"`` replaces the generation component with the
    utility PV LCOE for the year.

    Raises
    ------
    MissingDataError
        If the data bundle has no component table.
    ValueError
        If the components disagree with the retail price by more than
        0.05 cents/kWh.
    """
    if variant not in GRID_VARIANTS:
        raise ValueError(f"variant must be one of {GRID_VARIANTS}")
    curves = curves if curves is not None else default_curves()
    if curves.grid_components is None:
        raise MissingDataError("grid_stack.csv")
    check_year(year)
    parts = curves.grid_components.at(year)
    total = (grid or GridPriceModel()).price(year, "real_2020")
    if abs(sum(parts.values()) - total) > 0.05:
        raise ValueError(f"grid components sum to {sum(parts.values()):.2f}, retail price is {total:.2f}")
    if variant == "utility_pv":
        parts["generation"] = utility_lcoe(year, "pv", curves)
    breakdown = tuple(parts.items())
    return LcoeResult(sum(parts.values()), breakdown)
