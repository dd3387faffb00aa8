"""Net-zero PV sizing, grid-independence battery sizing, and EV charging PV."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class EfficiencyPackage:
    """Envelope and equipment upgrade bundle for a code-built home.

    ``life`` is the number of years the package keeps delivering its
    savings. It bounds the savings stream in cash-flow schedules.
    """

    savings_fraction: float = 0.317
    upfront_cost: float = 5889.0
    life: float = 18.0

    def __post_init__(self):
        if not 0 < self.savings_fraction < 1:
            raise ValueError("savings_fraction must lie in (0, 1)")
        if self.upfront_cost < 0 or self.life <= 0:
            raise ValueError("upfront_cost must be >= 0 and life > 0")


@dataclass(frozen=True)
class HomeProfile:
    """Annual electricity use of one home type."""

    name: str
    annual_load: float
    construction: str = "existing"
    efficiency_package: EfficiencyPackage | None = None

    def __post_init__(self):
        if not self.annual_load > 0:
            raise ValueError(f"{self.name}: annual_load must be positive")
        if self.construction not in ("existing", "new"):
            raise ValueError(f"{self.name}: construction must be 'existing' or 'new'")

    @property
    def net_load(self) -> float:
        """Annual load after the efficiency package, kWh/yr."""
        if self.efficiency_package is None:
            return self.annual_load
        return self.annual_load * (1 - self.efficiency_package.savings_fraction)

    @property
    def efficiency_savings(self) -> float:
        """Annual kWh avoided by the efficiency package."""
        return self.annual_load - self.net_load


@dataclass(frozen=True)
class TechParams:
    """Technology assumptions. Rates and shares are fractions, not percent.

    ``storage_derating`` is the ratio of average daily load to installed
    battery capacity for fully effective storage. ``battery_replacement_share``
    is the fraction of a new battery's installed cost paid at each
    replacement. Only the cells are swapped; the enclosure, power
    electronics and wiring are reused.
    """

    pv_yield: float = 1400.0
    pv_degradation: float = 0.005
    inverter_cost: float = 0.10
    inverter_life: float = 15.0
    battery_efficiency: float = 0.95
    battery_degradation: float = 0.035
    battery_life: float = 10.0
    analysis_period: int = 30
    service_time: int = 25
    storage_derating: float = 0.8636
    battery_replacement_share: float = 0.30

    def __post_init__(self):
        for name in ("pv_yield", "inverter_life", "battery_efficiency", "battery_life",
                     "analysis_period", "service_time", "storage_derating"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("pv_degradation", "inverter_cost", "battery_degradation", "battery_replacement_share"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.storage_derating > 1 or self.battery_efficiency > 1:
            raise ValueError("storage_derating and battery_efficiency must be <= 1")
        if self.service_time > self.analysis_period:
            raise ValueError("service_time cannot exceed analysis_period")


@dataclass(frozen=True)
class EvParams:
    """Electric vehicle and bidirectional charger assumptions."""

    battery: float = 68.7
    range: float = 220.0
    efficiency: float = 3.20
    gasoline_mpg: float = 24.2
    gasoline_price: float = 3.16
    charger_cost: float = 6000.0
    charger_life: float = 15.0

    def __post_init__(self):
        if min(self.battery, self.range, self.efficiency, self.gasoline_mpg, self.charger_life) <= 0:
            raise ValueError("EV parameters must be positive")
        if self.gasoline_price < 0 or self.charger_cost < 0:
            raise ValueError("prices must be non-negative")
        implied = self.range / self.battery
        if abs(implied - self.efficiency) > 0.005 * self.efficiency:
            raise ValueError(f"efficiency {self.efficiency} inconsistent with range/battery = {implied:.3f}")


EXISTING_HOME = HomeProfile("existing", 13300.0, "existing")
CODE_HOME = HomeProfile("code", 12086.0, "new")
IMPROVED_HOME = HomeProfile("improved", 12086.0, "new", EfficiencyPackage())
STANDARD_HOMES = {h.name: h for h in (EXISTING_HOME, CODE_HOME, IMPROVED_HOME)}


def pv_size_for_net_zero(profile: HomeProfile, params: TechParams | None = None) -> float:
    """PV capacity (kWdc) whose first-year output equals the home's net load."""
    params = params or TechParams()
    return profile.net_load / params.pv_yield


def battery_size_grid_independent(profile: HomeProfile, params: TechParams | None = None,
                                  effectiveness: float = 1.0) -> float:
    """Battery capacity (kWh) covering ``effectiveness`` of the average daily load."""
    params = params or TechParams()
    if not 0 <= effectiveness <= 1:
        raise ValueError(f"effectiveness must lie in [0, 1], got {effectiveness}")
    return effectiveness * (profile.net_load / 365.0) / params.storage_derating


def ev_extra_pv(miles_per_year: float, ev: EvParams | None = None, params: TechParams | None = None) -> float:
    """Additional PV (kWdc) whose annual output charges the EV for ``miles_per_year``."""
    ev, params = ev or EvParams(), params or TechParams()
    if miles_per_year < 0:
        raise ValueError("miles_per_year must be non-negative")
    return miles_per_year / ev.efficiency / params.pv_yield
