"""Monthly savings of owning a net-zero system versus buying from the grid.

Monthly savings is the scenario's net present value, from the financed
schedule, spread evenly over the analysis period as a constant real monthly
amount in 2020 dollars. The avoided-bill, fuel and ownership components are
levelized the same way, so they add up to the total exactly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .finance import FinancingTerms, annuity_factor, build_schedule, npv
from .projections import CurveSet, GridPriceModel
from .sizing import EvParams, HomeProfile, TechParams, battery_size_grid_independent

TIMINGS = ("at_construction", "retrofit")
MEDIA = ("wall_battery", "v2h")
ITC_BOOKINGS = ("amortized", "first_year")


@dataclass(frozen=True)
class ScenarioConfig:
    """One home-economics case.

    Parameters
    ----------
    profile : HomeProfile
    install_year, install_month : int
        Install date. Curves are interpolated to the month.
    install_timing : {"at_construction", "retrofit"}, optional
        Chooses the new-construction or existing-construction cost curves.
        Defaults from ``profile.construction``. An existing home can only be
        a retrofit.
    storage_effectiveness : float
        Share of average daily load the storage covers, in [0, 1].
    storage_medium : {"wall_battery", "v2h"}
        ``"v2h"`` uses the EV battery through a bidirectional charger.
    itc_pv, itc_battery : bool
        Whether the investment tax credit is claimed on each part.
    ev_miles_per_year : float, optional
        Annual EV miles. When set, fuel savings are counted if
        ``fuel_savings`` is true.
    extra_pv_for_ev : bool
        Adds PV sized to the EV's annual charging energy.
    charger_cost : float, optional
        Overrides ``ev.charger_cost``.
    """

    profile: HomeProfile
    install_year: int = 2020
    install_month: int = 1
    install_timing: str | None = None
    storage_effectiveness: float = 0.0
    storage_medium: str = "wall_battery"
    itc_pv: bool = False
    itc_battery: bool = False
    ev_miles_per_year: float | None = None
    extra_pv_for_ev: bool = False
    fuel_savings: bool = True
    ev: EvParams = field(default_factory=EvParams)
    charger_cost: float | None = None

    def __post_init__(self):
        if self.install_timing is None:
            timing = "at_construction" if self.profile.construction == "new" else "retrofit"
            object.__setattr__(self, "install_timing", timing)
        if self.install_timing not in TIMINGS:
            raise ValueError(f"install_timing must be one of {TIMINGS}")
        if self.profile.construction == "existing" and self.install_timing == "at_construction":
            raise ValueError("an existing home can only be retrofitted")
        if self.storage_medium not in MEDIA:
            raise ValueError(f"storage_medium must be one of {MEDIA}")
        if not 0 <= self.storage_effectiveness <= 1:
            raise ValueError("storage_effectiveness must lie in [0, 1]")
        if not 1 <= self.install_month <= 12:
            raise ValueError("install_month must be 1..12")
        if self.ev_miles_per_year is not None and self.ev_miles_per_year < 0:
            raise ValueError("ev_miles_per_year must be non-negative")
        if self.charger_cost is None:
            object.__setattr__(self, "charger_cost", self.ev.charger_cost)

    @property
    def start(self) -> float:
        return self.install_year + (self.install_month - 1) / 12.0

    @property
    def curve_construction(self) -> str:
        return "new" if self.install_timing == "at_construction" else "existing"

    def with_itc(self, on: bool = True) -> "ScenarioConfig":
        return dataclasses.replace(self, itc_pv=on, itc_battery=on)

    def at(self, year: int, month: int = 1) -> "ScenarioConfig":
        return dataclasses.replace(self, install_year=year, install_month=month)


@dataclass(frozen=True)
class MonthlySavings:
    """Levelized monthly savings in 2020 dollars; negative means the system costs more.

    ``itc_credit`` is non-zero only with first-year ITC booking. The credit
    is then reported as a one-time amount and excluded from
    ``ownership_cost``.
    """

    dollars_per_month: float
    bill_avoided: float
    ownership_cost: float
    fuel_savings: float
    itc_credit: float = 0.0


def monthly_savings(
    scenario: ScenarioConfig,
    curves: CurveSet | None = None,
    terms: FinancingTerms | None = None,
    params: TechParams | None = None,
    grid: GridPriceModel | None = None,
    itc_booking: str = "amortized",
) -> MonthlySavings:
    """Levelized real monthly savings of ``scenario`` versus the grid.

    Each line of the financed schedule is discounted to 2020 dollars at the
    nominal discount rate. The result is converted to a level real monthly
    amount over the analysis period at the matching real rate.

    With ``itc_booking="first_year"`` the ITC is left out of the monthly
    figure and returned as ``itc_credit`` in 2020 dollars.
    """
    if itc_booking not in ITC_BOOKINGS:
        raise ValueError(f"itc_booking must be one of {ITC_BOOKINGS}")
    terms = terms or FinancingTerms()
    params = params or TechParams()
    sched = build_schedule(scenario, curves, terms, params, grid, financed=True)
    d = terms.nominal_discount
    factor = annuity_factor(terms.real_rate, int(params.analysis_period) * 12)

    def lev(include=None, exclude=()):
        return npv(sched.select(include, exclude), d) / factor

    bill = lev(include=("avoided_bill",))
    fuel = lev(include=("fuel_saving",))
    skip = ("avoided_bill", "fuel_saving")
    itc_credit = 0.0
    if itc_booking == "first_year":
        skip += ("itc",)
        itc_credit = npv(sched.select(include=("itc",)), d)
    ownership = -lev(exclude=skip)
    return MonthlySavings(bill - ownership + fuel, bill, ownership, fuel, itc_credit)


def crossover_month(
    scenario: ScenarioConfig,
    curves: CurveSet | None = None,
    terms: FinancingTerms | None = None,
    params: TechParams | None = None,
    grid: GridPriceModel | None = None,
    start: tuple[int, int] = (2020, 1),
    end: tuple[int, int] = (2050, 12),
) -> tuple[int, int] | None:
    """Earliest install month whose monthly savings are non-negative.

    Only the install date of ``scenario`` varies. Returns ``(year, month)``,
    or ``None`` if savings stay negative through ``end``.
    """
    y, mo = start
    while (y, mo) <= end:
        s = monthly_savings(scenario.at(y, mo), curves, terms, params, grid)
        if s.dollars_per_month >= 0:
            return y, mo
        y, mo = (y + 1, 1) if mo == 12 else (y, mo + 1)
    return None


def months_between(a: tuple[int, int], b: tuple[int, int]) -> int:
    return (b[0] - a[0]) * 12 + (b[1] - a[1])


def transport_monthly_savings(elec_price: float, miles: float, ev: EvParams | None = None) -> float:
    """Monthly fuel-cost saving of driving electric, $/mo.

    ``elec_price`` is in cents/kWh.
    """
    ev = ev or EvParams()
    if miles < 0:
        raise ValueError("miles must be non-negative")
    gasoline = miles / ev.gasoline_mpg * ev.gasoline_price
    electricity = miles / ev.efficiency * elec_price / 100.0
    return (gasoline - electricity) / 12.0


def v2h_substitution(
    scenario: ScenarioConfig,
    params: TechParams | None = None,
    charger_cost: float | None = None,
) -> ScenarioConfig:
    """Swap the wall battery for vehicle-to-home storage through the EV.

    Raises
    ------
    ValueError
        If the EV battery is smaller than the storage the scenario needs.
    """
    needed = battery_size_grid_independent(scenario.profile, params, scenario.storage_effectiveness)
    if scenario.ev.battery < needed:
        raise ValueError(f"EV battery {scenario.ev.battery} kWh below required storage {needed:.1f} kWh")
    cost = scenario.ev.charger_cost if charger_cost is None else charger_cost
    return dataclasses.replace(scenario, storage_medium="v2h", charger_cost=cost)


