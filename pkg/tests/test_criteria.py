import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_summary
from ndstab import criteria
from ndstab.criteria import (
    MissingLimit,
    NotConstant,
    NotNonDelayed,
    alpha_interval_theorem1,
    best_verdict,
    check_corollary1,
    check_corollary2,
    check_corollary3,
    check_corollary5,
    check_corollary_main,
    check_prop_tang_zou,
    check_prop_yu,
    check_theorem1,
    check_theorem2,
    check_theorem3,
    tau0,
    tau_bar,
)
from ndstab.params import IntegralSummary, ParameterSummary, summarize


def mk(norm_a, inf_a, norm_b, sigma, tau, delta, inf_b=None, plus=None, minus=None,
       limit_tau=None, limsup=None):
    return ParameterSummary(
        norm_a=norm_a, inf_a=inf_a,
        norm_a_plus=norm_a if plus is None else plus,
        norm_a_minus=0.0 if minus is None else minus,
        norm_b=norm_b, inf_b=norm_b if inf_b is None else inf_b,
        sigma=sigma, tau=tau, delta=delta,
        limit_tau=limit_tau, limsup_int_b=limsup,
    )


EX1 = mk(0.6, 0.6, 1.0, 0.2, 0.14, 0.14, limit_tau=0.14)
EX2 = mk(0.6, 0.4, 0.15, 1.0, 1.0, 1.0, inf_b=0.8 * 0.15)
EX4 = mk(0.6, -0.6, 0.15, 0.2, 0.5, 0.5, inf_b=0.05, plus=0.6, minus=0.6, limit_tau=0.5)


# -- lag scales -------------------------------------------------------------------

def test_tau0_values():
    assert tau0(mk(0.6, 0.4, 0.15, 1, 1, 1)) == pytest.approx(0.4 / (0.15 * math.e), abs=1e-15)
    assert tau0(mk(0.0, 0.0, 1 / math.e, 0, 0, 0)) == pytest.approx(1.0, abs=1e-12)
    # applicability scale of the near-critical benchmark at r = 0.0587
    v = tau0(mk(0.499, 0.497, 0.0587, math.pi, math.pi, math.pi))
    assert v == pytest.approx(0.501 / (math.e * 0.0587), abs=1e-15)
    assert v == pytest.approx(math.pi, abs=2e-3)


def test_tau_bar_value():
    assert tau_bar(EX4) == pytest.approx(0.4 / (math.e * 0.15), abs=1e-15)


# -- main test --------------------------------------------------------------------

def test_theorem1_ex2_alpha1():
    v = check_theorem1(EX2, 1.0)
    assert v.applicable and v.satisfied
    lhs = 0.15 * (1 + 2.25)
    rhs = 0.4 * (1 + 1 / math.e)
    assert lhs == pytest.approx(0.4875, abs=1e-15)
    assert v.margin == pytest.approx(rhs - lhs, abs=1e-14)
    assert v.margin == pytest.approx(0.059652, abs=1e-5)


def test_theorem1_fails_at_larger_amplitude():
    s = mk(0.6, 0.4, 0.2, 1.0, 1.0, 1.0)
    v = check_theorem1(s, 1.0)
    assert v.applicable and not v.satisfied
    assert v.margin == pytest.approx(0.4 * (1 + 1 / math.e) - 0.65, abs=1e-14)


def test_theorem1_gate_on_sign():
    v = check_theorem1(mk(0.6, 0.0, 0.1, 0.2, 0.5, 0.5), 0.5)
    assert not v.applicable and not v.satisfied
    assert "a0" in v.reason
    assert math.isnan(v.margin)


def test_theorem1_rejects_alpha_outside_unit():
    with pytest.raises(ValueError):
        check_theorem1(EX2, 1.5)


def test_alpha_interval_ex1():
    iv = alpha_interval_theorem1(EX1)
    assert not iv.empty
    assert iv.lower == pytest.approx(0.1 * math.e, abs=1e-12)
    assert iv.upper == pytest.approx(0.35 * math.e, abs=1e-12)
    assert iv.lower_open and not iv.upper_open


def test_alpha_interval_empty_for_infeasible_amplitude():
    s = mk(0.6, 0.4, 0.2, 1.0, 1.0, 1.0)
    assert alpha_interval_theorem1(s).empty


def test_alpha_interval_entire_unit_interval():
    # sigma = 0, tau ||b|| < 1 - ||a||, delta >= tau0
    s = mk(0.3, 0.3, 0.5, 0.0, 1.0, 1.0)
    assert 1.0 * 0.5 < 0.7 and s.delta >= tau0(s)
    iv = alpha_interval_theorem1(s)
    assert (iv.lower, iv.upper) == (0.0, 1.0)
    assert not iv.lower_open and not iv.upper_open


# -- endpoint corollaries ------------------------------------------------------------

def test_corollary_main_near_critical_bound():
    # part b) threshold on the coefficient amplitude
    r_crit = 0.501 / (math.pi * (1 + 0.499 * 0.503 / 0.501 ** 2))
    for r, expect in ((0.99 * r_crit, True), (1.01 * r_crit, False)):
        s = mk(0.499, 0.497, r, math.pi, math.pi, math.pi)
        _, part_b = check_corollary_main(s)
        assert part_b.satisfied is expect
    assert r_crit == pytest.approx(0.079737, abs=1e-6)


def test_corollary_main_part_a_needs_gate():
    s = mk(0.6, 0.6, 1.0, 0.2, 0.14, 0.0)  # delta = 0 < tau0
    part_a, _ = check_corollary_main(s)
    assert not part_a.applicable


def test_corollary_main_non_neutral_reduction():
    # norm_a -> 0, sigma = 0: part b) reduces to tau ||b|| < 1
    s = mk(0.0, 1e-9, 0.9, 0.0, 1.0, 0.5)
    _, part_b = check_corollary_main(s)
    assert part_b.satisfied
    assert part_b.margin == pytest.approx(1.0 - 0.9, abs=1e-12)


def test_corollary3_ex1_alpha_dependence():
    assert check_corollary3(EX1, 0.5).satisfied
    assert not check_corollary3(EX1, 0.0).satisfied
    assert not check_corollary3(EX1, 1.0).satisfied  # lower bound fails: 0.4/e > 0.14


def test_corollary3_needs_limit():
    with pytest.raises(MissingLimit):
        check_corollary3(mk(0.6, 0.6, 1.0, 0.2, 0.14, 0.14), 0.5)


def test_corollary1_worked_case():
    s = mk(0.55, 0.55, 1.0, 0.1, 0.1, 0.1)
    v = check_corollary1(s, 0.6)
    assert v.applicable and v.satisfied
    lhs = 0.1 + 0.1 * 0.55 / 0.45
    rhs = 0.45 * (1 + 0.6 / math.e)
    assert v.margin == pytest.approx(rhs - lhs, abs=1e-14)
    # gate just beyond its bound flips to not applicable
    assert not check_corollary1(s, 0.61).applicable


def test_corollary1_alpha0_reduction():
    s = mk(0.55, 0.55, 1.0, 0.0, 0.3, 0.0)
    v = check_corollary1(s, 0.0)
    assert v.margin == pytest.approx(0.45 - 0.3, abs=1e-14)


def test_corollary1_rejects_variable_a():
    with pytest.raises(NotConstant):
        check_corollary1(EX2, 0.5)


def test_corollary2_cases():
    v = check_corollary2(mk(0.6, 0.4, 0.1, 1.0, 0.0, 0.0))
    assert v.satisfied and v.margin == pytest.approx(1 - 0.5625, abs=1e-12)
    v = check_corollary2(mk(0.6, 0.4, 1.0, 0.0, 0.0, 0.0))
    assert v.satisfied and v.margin == 1.0
    v = check_corollary2(mk(0.6, 0.4, 0.3, 2.0, 0.0, 0.0))
    assert not v.satisfied and v.margin == pytest.approx(1 - 3.375, abs=1e-12)
    with pytest.raises(NotNonDelayed):
        check_corollary2(EX1)


# -- sign-split test -----------------------------------------------------------------

def test_theorem2_ex4_alpha_045():
    v = check_theorem2(EX4, 0.45)
    assert v.applicable and v.satisfied
    lhs = 0.075 + 0.1125 + 0.225
    rhs = 0.4 + 0.45 * 0.4 / math.e
    assert lhs == pytest.approx(0.4125, abs=1e-15)
    assert v.margin == pytest.approx(rhs - lhs, abs=1e-14)


def test_theorem2_alpha_threshold():
    thr = 0.0125 * math.e / 0.4
    assert thr == pytest.approx(0.084946, abs=1e-6)
    assert check_theorem2(EX4, 1.001 * thr).satisfied
    assert not check_theorem2(EX4, 0.999 * thr).satisfied


def test_theorem2_nonnegative_constant_reduction():
    # a- = 0 and constant a: the sigma term carries 1/(1-c)^2 with no (1-a0)
    c, b, tau, sigma = 0.3, 0.4, 0.5, 0.7
    s = mk(c, c, b, sigma, tau, 0.5)
    v = check_theorem2(s, 0.0)
    lhs = tau * b + sigma * c * b / ((1 - c) * (1 - c))
    assert v.margin == pytest.approx((1 - c) - lhs, abs=1e-14)


def test_corollary5_ex4():
    part_a, part_b = check_corollary5(EX4)
    assert not part_a.applicable  # tau_bar ~ 0.981 is not < delta = 0.5
    assert "tau_bar" in part_a.reason
    assert part_b.applicable and not part_b.satisfied
    assert part_b.margin == pytest.approx(0.4 - 0.4125, abs=1e-14)


# -- integral-delay test ---------------------------------------------------------------

EX5I = IntegralSummary(
    tilde_delta=0.25 * math.log(2.0), tilde_tau=0.25 * math.log(2.0),
    tilde_sigma=0.25 * math.log(3.0), tilde_tau0=0.45 / math.e,
    norm_a=0.55, inf_a=0.55,
)


def test_theorem3_pantograph_alphas():
    v1 = check_theorem3(EX5I, 1.0)
    assert v1.applicable and v1.satisfied
    assert v1.stability_kind == "asymptotic"
    lhs = 0.25 * math.log(2.0) + 0.25 * math.log(3.0) * 0.55 * 0.45 / 0.2025
    assert v1.margin == pytest.approx(0.45 * (1 + 1 / math.e) - lhs, abs=1e-13)
    assert check_theorem3(EX5I, 0.36).satisfied
    assert not check_theorem3(EX5I, 0.30).satisfied


def test_theorem3_requires_positive_alpha():
    with pytest.raises(ValueError):
        check_theorem3(EX5I, 0.0)


def test_theorem3_hypothesis_note_present():
    v = check_theorem3(EX5I, 1.0)
    assert any("int b" in n for n in v.notes)


# -- baselines -------------------------------------------------------------------------

def test_prop_yu_thresholds():
    assert criteria.yu_threshold(0.0) == 1.5
    assert criteria.yu_threshold(0.499) == pytest.approx(0.002002, abs=1e-12)
    assert criteria.yu_threshold(0.5) == pytest.approx(0.0, abs=1e-15)
    s = mk(0.5, 0.1, 1.0, 0.0, 1.0, 1.0)
    assert not check_prop_yu(s, 0.1).applicable


def test_prop_tang_zou_thresholds():
    assert criteria.tang_zou_threshold(0.499) == pytest.approx(math.sqrt(0.004), abs=1e-15)
    assert criteria.tang_zou_threshold(0.1) == pytest.approx(1.3, abs=1e-15)
    assert criteria.tang_zou_threshold(0.6) is None
    s = mk(0.6, 0.1, 1.0, 0.0, 1.0, 1.0)
    assert not check_prop_tang_zou(s, 0.1).applicable


def test_baselines_reject_variable_delays():
    s = mk(0.3, 0.1, 1.0, 0.0, 1.0, 1.0)
    assert not check_prop_yu(s, 0.1, constant_delays=False).applicable
    assert not check_prop_tang_zou(s, 0.1, constant_delays=False).applicable


# -- margin structure --------------------------------------------------------------------

def test_margin_zero_is_not_satisfied():
    # engineer an exact zero margin: rhs == lhs
    s = mk(0.0, 0.5, 1.0, 0.0, 1.0, 1.0)  # lhs = tau*b = 1, rhs = 1 at alpha=0
    v = check_theorem1(s, 0.0)
    assert v.margin == 0.0 and not v.satisfied


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 1.0))
def test_margin_monotonicity(seed, alpha):
    rng = np.random.default_rng(seed)
    s = random_summary(rng)
    v = check_theorem1(s, alpha)
    if not v.applicable:
        return
    bump = 1.05

    def margin_of(**kw):
        base = dict(norm_a=s.norm_a, inf_a=s.inf_a, norm_b=s.norm_b,
                    sigma=s.sigma, tau=s.tau, delta=s.delta)
        base.update(kw)
        s2 = mk(base["norm_a"], base["inf_a"], base["norm_b"],
                base["sigma"], base["tau"], base["delta"])
        rhs = (1 - s2.norm_a) * (1 + alpha / math.e)
        lhs = s2.tau * s2.norm_b + s2.sigma * s2.norm_a * s2.norm_b * (1 - s2.inf_a) / (1 - s2.norm_a) ** 2
        return rhs - lhs

    m0 = margin_of()
    if s.tau > 0:
        assert margin_of(tau=s.tau * bump) < m0
    if s.sigma > 0 and s.norm_a > 0:
        assert margin_of(sigma=s.sigma * bump) < m0
    assert margin_of(norm_b=s.norm_b * bump) < m0
    if alpha < 0.9:
        v_hi = check_theorem1(s, alpha + 0.05)
        if v_hi.applicable:
            assert v_hi.margin > v.margin


def test_best_verdict_ex1(ex1):
    verdicts = {v.criterion: v for v in best_verdict(ex1)}
    c3 = verdicts["corollary3"]
    assert c3.satisfied
    assert c3.witness_alpha == pytest.approx(0.61161, abs=1e-4)  # interval midpoint
    assert not verdicts["prop_yu"].applicable
    assert not verdicts["prop_tang_zou"].applicable
    assert verdicts["theorem1"].satisfied  # feasible at alpha near the gate cap


def test_best_verdict_ex4(ex4):
    verdicts = {v.criterion: v for v in best_verdict(ex4)}
    assert verdicts["theorem2"].satisfied
    assert not verdicts["theorem1"].applicable  # a changes sign


def test_best_verdict_trivial_nondelayed():
    from ndstab.eqspec import EquationSpec
    from ndstab.expr import const, tvar
    spec = EquationSpec(a=const(0.0), b=const(1.0), g=tvar(), h=tvar(),
                        t0=0.0, horizon=10.0)
    verdicts = {v.criterion: v for v in best_verdict(spec, grid_points=2001)}
    assert verdicts["corollary2"].satisfied
    assert verdicts["corollary2"].margin == 1.0


def test_verdict_sorted_satisfied_first(ex4):
    verdicts = best_verdict(ex4)
    flags = [v.satisfied for v in verdicts]
    assert flags == sorted(flags, reverse=True)


def test_verdict_json_shape(ex1):
    d = best_verdict(ex1)[0].to_dict()
    assert set(d) == {"criterion", "applicable", "satisfied", "margin",
                      "alpha", "kind", "certification", "notes"}
