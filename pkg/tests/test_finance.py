import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nzeb.errors import MultipleIrrWarning, NoIrrError
from nzeb.finance import (
    STORAGE_LINES,
    CashFlowSchedule,
    FinancingTerms,
    annuity_factor,
    build_schedule,
    efficiency_package_sir,
    financial_summary,
    irr,
    monthly_payment,
    npv,
    sir,
    spb,
)
from nzeb.savings import ScenarioConfig
from nzeb.sizing import CODE_HOME, EXISTING_HOME, IMPROVED_HOME, TechParams


def amortize(principal, annual_rate, years, payment):
    """Balance left after paying ``payment`` monthly, one month at a time."""
    balance = principal
    for _ in range(years * 12):
        balance = balance * (1 + annual_rate / 12) - payment
    return balance


def brute_npv(flows, annual_rate):
    m = (1 + annual_rate) ** (1 / 12) - 1
    total = 0.0
    for period, amount in flows:
        total += amount / (1 + m) ** period
    return total


class TestMonthlyPayment:
    def test_zero_rate(self):
        assert monthly_payment(12000, 0.0, 10) == pytest.approx(100.0, abs=1e-12)

    def test_standard_mortgage(self):
        pay = monthly_payment(100_000, 0.045, 30)
        assert pay == pytest.approx(506.69, abs=0.005)
        assert amortize(100_000, 0.045, 30, pay) == pytest.approx(0.0, abs=1e-6)

    def test_zero_principal(self):
        assert monthly_payment(0, 0.045, 30) == 0.0

    @pytest.mark.parametrize("years", [10, 15, 30])
    @pytest.mark.parametrize("rate", [0.01, 0.045, 0.09])
    def test_amortization_oracle(self, years, rate):
        pay = monthly_payment(25_000, rate, years)
        assert amortize(25_000, rate, years, pay) == pytest.approx(0.0, abs=1e-6)

    def test_rate_floor(self):
        with pytest.raises(ValueError):
            monthly_payment(1000, -1.0, 10)


class TestNpv:
    def test_all_zero(self):
        assert npv(CashFlowSchedule.from_flows([(0, 0.0), (12, 0.0)]), 0.05) == 0.0

    def test_definitional(self):
        s = CashFlowSchedule.from_flows([(0, -100.0), (12, 110.0)])
        assert npv(s, 0.10) == pytest.approx(0.0, abs=1e-10)

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.integers(0, 36), st.floats(-1e4, 1e4)), min_size=1, max_size=20),
           st.floats(-0.3, 0.5))
    def test_brute_force_oracle(self, flows, rate):
        engine = npv(CashFlowSchedule.from_flows(flows), rate)
        oracle = brute_npv(flows, rate)
        assert engine == pytest.approx(oracle, rel=1e-9, abs=1e-9)

    @given(st.floats(-5, 5))
    def test_linear(self, a):
        s = CashFlowSchedule.from_flows([(0, -100.0), (5, 30.0), (20, 90.0)])
        assert npv(s.scaled(a), 0.04) == pytest.approx(a * npv(s, 0.04), rel=1e-12, abs=1e-12)

    def test_deflated_to_2020(self):
        s = CashFlowSchedule.from_flows([(0, 100.0)], start=2030, inflation=0.025)
        assert npv(s, 0.04) == pytest.approx(100 / 1.025 ** 10)


class TestIrr:
    def test_ten_percent(self):
        s = CashFlowSchedule.from_flows([(0, -100.0), (12, 110.0)])
        assert irr(s) == pytest.approx(0.10, abs=1e-6)

    def test_no_sign_change(self):
        with pytest.raises(NoIrrError):
            irr(CashFlowSchedule.from_flows([(0, 100.0), (3, 5.0)]))

    def test_multiple_roots_flagged(self):
        # -100, +230, -132 has roots at 10% and 20% per period.
        s = CashFlowSchedule.from_flows([(0, -100.0), (12, 230.0), (24, -132.0)])
        with pytest.warns(MultipleIrrWarning):
            r = irr(s)
        assert r == pytest.approx(0.10, abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(100, 1e5), st.lists(st.floats(1, 5000), min_size=2, max_size=30))
    def test_self_consistency(self, outlay, inflows):
        flows = [(0, -outlay)] + [(12 * (k + 1), v) for k, v in enumerate(inflows)]
        s = CashFlowSchedule.from_flows(flows)
        assume(sum(inflows) > outlay * 0.6)
        try:
            r = irr(s)
        except NoIrrError:
            return
        assert abs(npv(s, r)) < 0.01


class TestSirSpb:
    def test_no_savings(self):
        assert sir(CashFlowSchedule.from_flows([(0, -100.0)]), 0.05) == 0.0

    def test_zero_investment(self):
        with pytest.raises(ZeroDivisionError):
            sir(CashFlowSchedule.from_flows([(0, 100.0)]), 0.05)

    def test_spb_simple(self):
        flows = [(0, -100.0)] + [(12 * k, 10.0) for k in range(1, 21)]
        assert spb(CashFlowSchedule.from_flows(flows)) == pytest.approx(10.0, abs=1e-9)

    def test_spb_interpolates(self):
        flows = [(0, -100.0)] + [(k, 4.0) for k in range(1, 41)]
        assert spb(CashFlowSchedule.from_flows(flows)) == pytest.approx(25 / 12)

    def test_no_payback(self):
        assert spb(CashFlowSchedule.from_flows([(0, -100.0), (12, 10.0)])) is None

    @settings(max_examples=60)
    @given(st.floats(100, 1e4), st.lists(st.floats(0, 3000), min_size=1, max_size=24), st.floats(0.0, 0.12))
    def test_sir_npv_equivalence(self, outlay, inflows, rate):
        s = CashFlowSchedule.from_flows([(0, -outlay)] + [(6 * (k + 1), v) for k, v in enumerate(inflows)])
        n = npv(s, rate)
        assume(abs(n) > 1e-6)
        assert (sir(s, rate) > 1) == (n > 0)


def scen(home=EXISTING_HOME, year=2020, e=0.0, itc=False, **kw):
    return ScenarioConfig(home, year, storage_effectiveness=e, itc_pv=itc, itc_battery=itc, **kw)


class TestBuildSchedule:
    def test_down_payment(self):
        s = build_schedule(scen())
        period0 = s.lines["capital:pv"][0] + s.lines["loan_proceeds"][0]
        assert period0 == pytest.approx(-0.10 * 9.5 * 2260, abs=1.0)
        assert period0 == pytest.approx(-2147, abs=1.0)

    def test_itc_in_month_12(self):
        s = build_schedule(scen(itc=True))
        itc = s.lines["itc:pv"]
        assert np.flatnonzero(itc).tolist() == [12]
        assert itc[12] == pytest.approx(0.30 * -s.lines["capital:pv"][0])

    def test_no_battery_no_battery_replacements(self):
        s = build_schedule(scen())
        assert "replacement:battery" not in s.lines
        assert all(f.annotation != "replacement:battery" for f in s.flows())

    def test_battery_replacements_years_10_and_20(self):
        s = build_schedule(scen(e=1.0))
        assert np.flatnonzero(s.lines["replacement:battery"]).tolist() == [120, 240]

    def test_inverter_replacement_year_15(self):
        s = build_schedule(scen())
        inv = s.lines["replacement:inverter"]
        assert np.flatnonzero(inv).tolist() == [180]
        assert inv[180] == pytest.approx(-9.5 * 100 * 1.025 ** 15)

    def test_loan_amortizes(self):
        s = build_schedule(scen())
        principal = s.lines["loan_proceeds"][0]
        pay = -s.lines["loan_payment"][1]
        assert amortize(principal, 0.045, 30, pay) == pytest.approx(0.0, abs=1e-6)

    def test_no_production_after_service(self):
        s = build_schedule(scen())
        assert (s.lines["avoided_bill"][25 * 12 + 1:] == 0).all()
        assert (s.lines["avoided_bill"][1:25 * 12 + 1] > 0).all()

    def test_first_bill_is_monthly_output_at_grid_price(self):
        s = build_schedule(scen())
        expected = 9.5 * 1400 / 12 * 0.113 * 1.025 ** (1 / 12)
        assert s.lines["avoided_bill"][1] == pytest.approx(expected, rel=1e-9)

    def test_unlevered_has_no_loan(self):
        s = build_schedule(scen(), financed=False)
        assert not any(k.startswith("loan") for k in s.lines)

    def test_csv_audit_export(self):
        text = build_schedule(scen(itc=True)).to_csv_text()
        lines = text.splitlines()
        assert lines[0] == "period,month,amount,annotation"
        assert "12,2021-01," in text

    def test_schedule_is_read_only(self):
        s = build_schedule(scen())
        with pytest.raises(ValueError):
            s.lines["avoided_bill"][3] = 0.0
        with pytest.raises(TypeError):
            s.lines["x"] = np.zeros(3)

    def test_interest_deduction_adds_savings(self):
        on = FinancingTerms(interest_deduction=True)
        s = build_schedule(scen(), terms=on)
        assert s.lines["tax_effect"][1] == pytest.approx(0.20 * s.lines["loan_proceeds"][0] * 0.045 / 12)
        assert npv(s, 0.045) > npv(build_schedule(scen()), 0.045)


CASES = [
    scen(),
    scen(CODE_HOME),
    scen(IMPROVED_HOME),
    scen(e=1.0),
    scen(CODE_HOME, 2035, e=0.5),
    scen(e=1.0, storage_medium="v2h"),
]


class TestItcMonotone:
    @pytest.mark.parametrize("case", CASES, ids=lambda c: f"{c.profile.name}-{c.storage_effectiveness}")
    def test_itc_never_hurts(self, case):
        off = financial_summary(case.with_itc(False))
        on = financial_summary(case.with_itc(True))
        assert on.npv >= off.npv
        assert on.irr >= off.irr
        assert on.spb <= off.spb


class TestSummary:
    def test_summary_fields(self):
        fs = financial_summary(scen())
        assert fs.npv > 0 and fs.sir > 1
        assert 0 < fs.irr < 0.2
        assert 5 < fs.spb < 30

    def test_spb_ignores_storage(self):
        a = financial_summary(scen())
        b = financial_summary(scen(e=1.0))
        assert b.spb == pytest.approx(a.spb, rel=1e-9)
        proj = build_schedule(scen(e=1.0), financed=False)
        assert spb(proj, exclude=STORAGE_LINES) == pytest.approx(a.spb, rel=1e-9)

    def test_sir_matches_npv_sign_without_replacements(self):
        terms = FinancingTerms()
        s = build_schedule(scen(), terms=terms).select(exclude=("replacement",))
        assert (sir(s, terms.nominal_discount) > 1) == (npv(s, terms.nominal_discount) > 0)

    def test_annuity_factor_zero_rate(self):
        assert annuity_factor(0.0, 360) == 360.0


class TestEfficiencyPackage:
    def test_hand_oracle(self):
        terms, params = FinancingTerms(), TechParams()
        saved = IMPROVED_HOME.efficiency_savings / 12 * 0.113
        pv = sum(saved * 1.025 ** (m / 12) / (1 + terms.nominal_discount) ** (m / 12) for m in range(1, 18 * 12 + 1))
        engine = efficiency_package_sir(scen(IMPROVED_HOME), terms=terms, params=params)
        assert engine == pytest.approx(pv / 5889, rel=1e-9)

    def test_requires_package(self):
        with pytest.raises(ValueError):
            efficiency_package_sir(scen(CODE_HOME))


class TestTermsValidation:
    def test_fisher_consistency(self):
        with pytest.raises(ValueError):
            FinancingTerms(nominal_discount=0.06)

    def test_v2h_needs_big_enough_ev(self):
        from nzeb.sizing import EvParams, HomeProfile
        big = HomeProfile("big", 30000.0)
        small_ev = EvParams(battery=40.0, range=128.0)
        with pytest.raises(ValueError):
            build_schedule(ScenarioConfig(big, 2020, storage_effectiveness=1.0, storage_medium="v2h", ev=small_ev))

    def test_multiple_irr_warning_is_user_warning(self):
        assert issubclass(MultipleIrrWarning, UserWarning)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            irr(CashFlowSchedule.from_flows([(0, -100.0), (12, 110.0)]))
