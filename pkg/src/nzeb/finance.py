"""Monthly cash-flow schedules and the NPV, IRR, SIR and SPB indexes.

Schedules are nominal dollars on a monthly grid. Period 0 is the install
month and period ``m`` falls ``m`` months later. Each schedule keeps one
array per annotated line (``capital:pv``, ``loan_payment``,
``avoided_bill``, ...). A line's category is the text before the first
colon.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from .errors import MultipleIrrWarning, NoIrrError
from .projections import (
    FIRST_YEAR,
    CurveSet,
    GridPriceModel,
    battery_cost_at,
    battery_installed_cost,
    check_year,
    default_curves,
    pv_installed_cost,
)
from .sizing import TechParams, battery_size_grid_independent, ev_extra_pv, pv_size_for_net_zero

if TYPE_CHECKING:
    from .savings import ScenarioConfig

# Lines that belong to the storage system rather than the PV array.
STORAGE_LINES = ("capital:battery", "replacement:battery", "itc:battery", "capital:charger", "replacement:charger")
FINANCING_LINES = ("loan_proceeds", "loan_payment")
SAVINGS_CATEGORIES = ("avoided_bill", "fuel_saving", "tax_effect")


def monthly_rate(annual_rate: float) -> float:
    """Effective monthly rate equivalent to ``annual_rate`` compounded annually."""
    return (1.0 + annual_rate) ** (1.0 / 12.0) - 1.0


def annuity_factor(annual_rate: float, months: int) -> float:
    """Present value of $1 paid at the end of each of ``months`` months."""
    r = monthly_rate(annual_rate)
    if r == 0:
        return float(months)
    return (1.0 - (1.0 + r) ** -months) / r


@dataclass(frozen=True)
class FinancingTerms:
    """Loan, discounting and incentive assumptions. Rates are fractions.

    ``itc_pv`` and ``itc_battery`` are the credit rates applied when a
    scenario claims the credit. ``interest_deduction`` switches on a tax
    saving of ``marginal_tax`` times the loan interest.
    """

    down_payment: float = 0.10
    loan_term: int = 30
    nominal_rate: float = 0.045
    real_discount: float = 0.0195
    nominal_discount: float = 0.045
    inflation: float = 0.025
    marginal_tax: float = 0.20
    itc_pv: float = 0.30
    itc_battery: float = 0.30
    interest_deduction: bool = False

    def __post_init__(self):
        if not 0 <= self.down_payment <= 1:
            raise ValueError("down_payment must lie in [0, 1]")
        if self.loan_term <= 0:
            raise ValueError("loan_term must be positive")
        for name in ("itc_pv", "itc_battery", "marginal_tax"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        implied = (1 + self.real_discount) * (1 + self.inflation) - 1
        if abs(implied - self.nominal_discount) > 0.0005:
            raise ValueError(
                f"nominal_discount {self.nominal_discount} inconsistent with real_discount and inflation "
                f"(implies {implied:.5f})"
            )

    @property
    def real_rate(self) -> float:
        """Real rate implied exactly by the nominal discount rate and inflation."""
        return (1 + self.nominal_discount) / (1 + self.inflation) - 1


def monthly_payment(principal: float, annual_rate: float, term_years: int) -> float:
    """Fixed monthly payment on a loan at ``annual_rate / 12`` per month."""
    if principal < 0 or term_years <= 0:
        raise ValueError("principal must be >= 0 and term_years > 0")
    if annual_rate <= -1:
        raise ValueError("annual_rate must exceed -100%")
    n = int(round(term_years * 12))
    r = annual_rate / 12.0
    if r == 0:
        return principal / n
    return principal * r / (1.0 - (1.0 + r) ** -n)


def _matches(label: str, prefixes: Iterable[str]) -> bool:
    return any(label == p or label.startswith(p + ":") for p in prefixes)


@dataclass(frozen=True)
class CashFlow:
    period: int
    amount: float
    annotation: str


@dataclass(frozen=True)
class CashFlowSchedule:
    """Nominal monthly cash flows split into annotated lines.

    Parameters
    ----------
    start : float
        Calendar time of period 0 as a fractional year (2037.5 is July 2037).
    inflation : float
        General inflation used to express values in 2020 dollars.
    lines : mapping of str to ndarray
        Equal-length arrays of nominal dollars. Negative values are outlays.
    """

    start: float
    inflation: float
    lines: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        lengths = {len(a) for a in self.lines.values()}
        if len(lengths) > 1:
            raise ValueError("all schedule lines must have the same length")
        frozen = {}
        for label in sorted(self.lines):
            arr = np.array(self.lines[label], dtype=float)
            arr.setflags(write=False)
            frozen[label] = arr
        object.__setattr__(self, "lines", MappingProxyType(frozen))

    @classmethod
    def from_flows(cls, flows, start: float = FIRST_YEAR, inflation: float = 0.0) -> "CashFlowSchedule":
        """Build a schedule from ``(period, amount[, annotation])`` tuples."""
        flows = [tuple(f) for f in flows]
        if not flows:
            raise ValueError("schedule needs at least one flow")
        n = max(int(f[0]) for f in flows) + 1
        lines: dict[str, np.ndarray] = {}
        for f in flows:
            period, amount = int(f[0]), float(f[1])
            if period < 0:
                raise ValueError("period indexes must be non-negative")
            label = f[2] if len(f) > 2 else "flow"
            lines.setdefault(label, np.zeros(n))[period] += amount
        return cls(start, inflation, lines)

    @property
    def n_periods(self) -> int:
        return len(next(iter(self.lines.values()))) - 1 if self.lines else 0

    @property
    def start_year(self) -> int:
        return int(math.floor(self.start + 1e-9))

    @property
    def deflator_2020(self) -> float:
        """Divide start-date nominal dollars by this to get 2020 dollars."""
        return (1 + self.inflation) ** (self.start - FIRST_YEAR)

    def total(self) -> np.ndarray:
        if not self.lines:
            return np.zeros(1)
        return np.sum(list(self.lines.values()), axis=0)

    def line(self, prefix: str) -> np.ndarray:
        """Sum of every line in category or label ``prefix``."""
        picked = [a for k, a in self.lines.items() if _matches(k, (prefix,))]
        return np.sum(picked, axis=0) if picked else np.zeros(self.n_periods + 1)

    def select(self, include: Iterable[str] | None = None, exclude: Iterable[str] = ()) -> "CashFlowSchedule":
        """Sub-schedule keeping lines matching ``include`` and not ``exclude``."""
        include = None if include is None else tuple(include)
        exclude = tuple(exclude)
        keep = {
            k: a for k, a in self.lines.items()
            if (include is None or _matches(k, include)) and not _matches(k, exclude)
        }
        if not keep:
            keep = {"empty": np.zeros(self.n_periods + 1)}
        return CashFlowSchedule(self.start, self.inflation, keep)

    def scaled(self, factor: float) -> "CashFlowSchedule":
        return CashFlowSchedule(self.start, self.inflation, {k: a * factor for k, a in self.lines.items()})

    def flows(self) -> list[CashFlow]:
        """Non-zero flows ordered by period, then annotation."""
        out = []
        for label, arr in self.lines.items():
            for p in np.flatnonzero(arr):
                out.append(CashFlow(int(p), float(arr[p]), label))
        out.sort(key=lambda f: (f.period, f.annotation))
        return out

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["period", "month", "amount", "annotation"])
        y0 = self.start_year
        m0 = int(round((self.start - y0) * 12))
        for f in self.flows():
            y, mo = divmod(m0 + f.period, 12)
            w.writerow([f.period, f"{y0 + y:04d}-{mo + 1:02d}", f"{f.amount:.2f}", f.annotation])
        return buf.getvalue()


def _discount_vector(n_periods: int, annual_rate: float) -> np.ndarray:
    return (1.0 + monthly_rate(annual_rate)) ** -np.arange(n_periods + 1, dtype=float)


def _pv(cash: np.ndarray, annual_rate: float) -> float:
    return float(cash @ _discount_vector(len(cash) - 1, annual_rate))


def npv(schedule: CashFlowSchedule, discount: float) -> float:
    """Net present value in 2020 dollars.

    Flows are discounted to period 0 at the effective monthly equivalent of
    the nominal annual ``discount`` rate, then deflated to 2020.
    """
    return _pv(schedule.total(), discount) / schedule.deflator_2020


def _npv_many(cash: np.ndarray, rates: np.ndarray) -> np.ndarray:
    m = (1.0 + rates) ** (1.0 / 12.0)
    t = np.arange(len(cash), dtype=float)
    return (m[:, None] ** -t[None, :]) @ cash


def irr_roots(schedule: CashFlowSchedule, lo: float = -0.5, hi: float = 1.0, tol: float = 1e-6) -> list[float]:
    """Every annual rate in ``[lo, hi]`` where the NPV changes sign, ascending."""
    cash = schedule.total()
    if not (cash > 0).any() or not (cash < 0).any():
        raise NoIrrError("cash flows never change sign")
    grid = np.linspace(lo, hi, 601)
    vals = _npv_many(cash, grid)
    roots = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(_bisect(cash, grid[i], grid[i + 1], a, min(tol, 1e-12)))
    if vals[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def _bisect(cash: np.ndarray, lo: float, hi: float, f_lo: float, tol: float) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = _pv(cash, mid)
        if f_mid == 0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def irr(schedule: CashFlowSchedule, lo: float = -0.5, hi: float = 1.0, tol: float = 1e-6) -> float:
    """Nominal annual internal rate of return.

    The bracket is scanned for sign changes and each one is refined by
    bisection. When several roots exist the smallest is returned and a
    :class:`MultipleIrrWarning` is issued.

    Raises
    ------
    NoIrrError
        If the flows never change sign or no root lies in the bracket.
    """
    roots = irr_roots(schedule, lo, hi, tol)
    if not roots:
        raise NoIrrError(f"no IRR in [{lo:.0%}, {hi:.0%}]")
    if len(roots) > 1:
        warnings.warn(f"{len(roots)} IRR roots in bracket; returning the smallest", MultipleIrrWarning, stacklevel=2)
    return roots[0]


def sir(schedule: CashFlowSchedule, discount: float) -> float:
    """Savings-to-investment ratio.

    Investment is the present value of outlays, net of financing and tax
    credits. Savings is the present value of the remaining inflows.
    Replacement lines are left out of both sides, so SIR rates the original
    purchase. NPV still counts replacements.

    Raises
    ------
    ZeroDivisionError
        If the investment is zero.
    """
    savings = investment = 0.0
    for label, arr in schedule.lines.items():
        if _matches(label, ("replacement",)):
            continue
        if _matches(label, FINANCING_LINES + ("itc",)):
            investment -= _pv(arr, discount)
        else:
            savings += _pv(np.maximum(arr, 0.0), discount)
            investment -= _pv(np.minimum(arr, 0.0), discount)
    if investment <= 0:
        raise ZeroDivisionError("schedule has no investment")
    return savings / investment


def spb(schedule: CashFlowSchedule, exclude: Iterable[str] = ()) -> float | None:
    """Simple payback in years, or ``None`` if the investment is never recovered.

    Flows are deflated to constant dollars and accumulated without
    discounting. The crossing is interpolated linearly within the month.
    Lines matching ``exclude`` are dropped first.
    """
    sub = schedule.select(exclude=exclude)
    t = np.arange(sub.n_periods + 1, dtype=float)
    cum = np.cumsum(sub.total() / (1 + schedule.inflation) ** (t / 12.0))
    if cum[0] >= 0:
        return 0.0
    hits = np.flatnonzero(cum >= 0)
    if hits.size == 0:
        return None
    k = int(hits[0])
    frac = -cum[k - 1] / (cum[k] - cum[k - 1])
    return (k - 1 + frac) / 12.0


@dataclass(frozen=True)
class FinancialSummary:
    """NPV (2020$), IRR (nominal fraction), SIR and SPB (years).

    ``irr`` is ``None`` when no root exists in the bracket. ``spb`` is
    ``None`` when the system never pays back.
    """

    npv: float
    irr: float | None
    sir: float
    spb: float | None
    irr_multiple: bool = False


def _install_costs(scenario: "ScenarioConfig", curves: CurveSet, params: TechParams) -> dict[str, float]:
    """Real 2020$ capital by line, plus the sizes behind it."""
    t0 = scenario.start
    cc = scenario.curve_construction
    kw_home = pv_size_for_net_zero(scenario.profile, params)
    kw_ev = 0.0
    if scenario.extra_pv_for_ev and scenario.ev_miles_per_year:
        kw_ev = ev_extra_pv(scenario.ev_miles_per_year, scenario.ev, params)
    out = {"kw_home": kw_home, "kw_ev": kw_ev, "kwh": 0.0}
    out["capital:pv"] = (kw_home + kw_ev) * 1000.0 * pv_installed_cost(t0, cc, curves)
    needed = battery_size_grid_independent(scenario.profile, params, scenario.storage_effectiveness)
    if scenario.storage_medium == "wall_battery":
        out["kwh"] = needed
        out["capital:battery"] = needed * battery_installed_cost(t0, cc, curves)
    elif scenario.storage_medium == "v2h":
        if scenario.ev.battery < needed:
            raise ValueError(f"EV battery {scenario.ev.battery} kWh below required storage {needed:.1f} kWh")
        out["capital:charger"] = scenario.charger_cost
    pkg = scenario.profile.efficiency_package
    if pkg is not None:
        out["capital:efficiency"] = pkg.upfront_cost
    return out


def _replacement_periods(life: float, params: TechParams) -> list[tuple[float, int]]:
    """(years after install, period) for each replacement before end of service."""
    out, k = [], 1
    while k * life < params.service_time - 1e-9:
        out.append((k * life, int(round(k * life * 12))))
        k += 1
    return out


def build_schedule(
    scenario: "ScenarioConfig",
    curves: CurveSet | None = None,
    terms: FinancingTerms | None = None,
    params: TechParams | None = None,
    grid: GridPriceModel | None = None,
    *,
    financed: bool = True,
) -> CashFlowSchedule:
    """Nominal monthly cash flows for one scenario over the analysis period.

    Parameters
    ----------
    scenario : ScenarioConfig
        Home, install date, storage, incentives and EV settings.
    curves, terms, params, grid : optional
        Data bundle and assumptions. Defaults are used when omitted.
    financed : bool
        If true, the capital is paid as a down payment plus a fixed-rate
        loan. If false, the schedule is the unlevered project with capital
        paid in full at period 0.

    Returns
    -------
    CashFlowSchedule
        Lines are ``capital:*``, ``itc:*`` (month 12), ``replacement:*``
        (inverter, battery cells, charger), ``avoided_bill`` and
        ``avoided_bill:efficiency``, optionally ``fuel_saving``, and when
        financed ``loan_proceeds``, ``loan_payment`` and ``tax_effect``.
    """
    curves = curves if curves is not None else default_curves()
    terms = terms or FinancingTerms()
    params = params or TechParams()
    grid = grid or GridPriceModel(inflation=terms.inflation)
    t0 = scenario.start
    check_year(t0, what="install year")

    n = int(params.analysis_period) * 12
    m = np.arange(n + 1)
    t = t0 + m / 12.0
    index = (1 + terms.inflation) ** (t - FIRST_YEAR)  # 2020$ -> nominal
    lines: dict[str, np.ndarray] = {}

    def put(label: str, period: int, amount: float) -> None:
        if 0 <= period <= n and amount != 0:
            lines.setdefault(label, np.zeros(n + 1))[period] += amount

    costs = _install_costs(scenario, curves, params)
    capital_labels = [k for k in costs if k.startswith("capital:")]
    for label in capital_labels:
        put(label, 0, -costs[label] * index[0])

    if scenario.itc_pv:
        put("itc:pv", 12, terms.itc_pv * costs["capital:pv"] * index[0])
    if scenario.itc_battery and "capital:battery" in costs:
        put("itc:battery", 12, terms.itc_battery * costs["capital:battery"] * index[0])

    kw = costs["kw_home"] + costs["kw_ev"]
    for yrs, p in _replacement_periods(params.inverter_life, params):
        put("replacement:inverter", p, -kw * 1000.0 * params.inverter_cost * index[p])
    if costs["kwh"] > 0:
        for yrs, p in _replacement_periods(params.battery_life, params):
            unit = battery_cost_at(t0 + yrs, scenario.curve_construction, curves)
            put("replacement:battery", p, -params.battery_replacement_share * costs["kwh"] * unit * index[p])
    if "capital:charger" in costs:
        for yrs, p in _replacement_periods(scenario.ev.charger_life, params):
            put("replacement:charger", p, -scenario.charger_cost * index[p])

    # Monthly energy flows, paid at the end of each month.
    months = m[1:]
    year_of = (months - 1) // 12
    in_service = year_of < params.service_time
    yearly = np.where(in_service, (1 - params.pv_degradation) ** year_of, 0.0)
    price = grid.real(t[1:]) / 100.0 * index[1:]  # nominal $/kWh
    home_kwh = costs["kw_home"] * params.pv_yield / 12.0 * yearly
    lines["avoided_bill"] = np.concatenate([[0.0], home_kwh * price])

    pkg = scenario.profile.efficiency_package
    if pkg is not None:
        active = months <= pkg.life * 12 + 1e-9
        saved = scenario.profile.efficiency_savings / 12.0 * active
        lines["avoided_bill:efficiency"] = np.concatenate([[0.0], saved * price])

    miles = scenario.ev_miles_per_year or 0.0
    if miles > 0 and scenario.fuel_savings:
        ev = scenario.ev
        gasoline = miles / 12.0 / ev.gasoline_mpg * ev.gasoline_price * index[1:]
        charge_kwh = miles / 12.0 / ev.efficiency
        ev_pv_kwh = costs["kw_ev"] * params.pv_yield / 12.0 * yearly
        lines["fuel_saving"] = np.concatenate([[0.0], gasoline - (charge_kwh - ev_pv_kwh) * price])

    if financed:
        capital = -sum(lines[k][0] for k in capital_labels if k in lines)
        principal = (1 - terms.down_payment) * capital
        nloan = int(round(terms.loan_term * 12))
        if nloan > n:
            raise ValueError("loan_term cannot exceed analysis_period")
        pay = monthly_payment(principal, terms.nominal_rate, terms.loan_term)
        put("loan_proceeds", 0, principal)
        if pay > 0:
            payments = np.zeros(n + 1)
            payments[1:nloan + 1] = -pay
            lines["loan_payment"] = payments
            if terms.interest_deduction:
                r = terms.nominal_rate / 12.0
                k = np.arange(nloan)
                growth = (1 + r) ** k
                balance = principal * growth - (pay * (growth - 1) / r if r else pay * k)
                tax = np.zeros(n + 1)
                tax[1:nloan + 1] = terms.marginal_tax * balance * r
                lines["tax_effect"] = tax

    return CashFlowSchedule(t0, terms.inflation, lines)


def storage_system_cost(
    scenario: "ScenarioConfig",
    curves: CurveSet | None = None,
    terms: FinancingTerms | None = None,
    params: TechParams | None = None,
) -> float:
    """Present value at install (nominal $) of storage capital, credits and replacements."""
    sched = build_schedule(scenario, curves, terms, params, financed=False).select(include=STORAGE_LINES)
    return -_pv(sched.total(), (terms or FinancingTerms()).nominal_discount)


def efficiency_package_sir(
    scenario: "ScenarioConfig",
    curves: CurveSet | None = None,
    terms: FinancingTerms | None = None,
    params: TechParams | None = None,
    grid: GridPriceModel | None = None,
) -> float:
    """SIR of the efficiency package alone: its avoided bills over its cost.

    Uses the unlevered schedule at the nominal discount rate.

    Raises
    ------
    ValueError
        If the scenario's home has no efficiency package.
    """
    if scenario.profile.efficiency_package is None:
        raise ValueError(f"{scenario.profile.name} has no efficiency package")
    terms = terms or FinancingTerms()
    proj = build_schedule(scenario, curves, terms, params, grid, financed=False)
    return sir(proj.select(include=("capital:efficiency", "avoided_bill:efficiency")), terms.nominal_discount)


def financial_summary(
    scenario: "ScenarioConfig",
    curves: CurveSet | None = None,
    terms: FinancingTerms | None = None,
    params: TechParams | None = None,
    grid: GridPriceModel | None = None,
) -> FinancialSummary:
    """Table-style indexes for one scenario.

    NPV and SIR use the financed schedule at the nominal discount rate. IRR
    is the unlevered project return. SPB uses the unlevered schedule
    without storage lines, so it is the payback of the PV array and any
    efficiency package.
    """
    terms = terms or FinancingTerms()
    fin = build_schedule(scenario, curves, terms, params, grid, financed=True)
    proj = build_schedule(scenario, curves, terms, params, grid, financed=False)
    multiple = False
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", MultipleIrrWarning)
            rate = irr(proj)
        multiple = any(issubclass(w.category, MultipleIrrWarning) for w in caught)
    except NoIrrError:
        rate = None
    return FinancialSummary(
        npv=npv(fin, terms.nominal_discount),
        irr=rate,
        sir=sir(fin, terms.nominal_discount),
        spb=spb(proj, exclude=STORAGE_LINES),
        irr_multiple=multiple,
    )
