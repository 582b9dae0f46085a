from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from dofcast.analysis import (SystemConfig, channel_aggregation_sum_dof, lower_bound_sum_dof,
                              two_user_region, two_user_sum_dof)
from dofcast.errors import CausalityError, DomainError, InfeasiblePlan
from dofcast.schemes.params import SchemeParams, solve_params
from dofcast.schemes.plans import (Plan, Segment, aggregation_schedule, corner_plan, make_plan,
                                   mat_plan, optimal_plan, overload_plan, timeshare_plan, zf_plan)

from strategies import configs


def test_corner_c_params():
    cfg = SystemConfig(2, 1, 1, 1)
    p = solve_params(cfg, "C")
    assert (p.delta, p.theta, p.eta) == (F(2, 3), F(1, 3), 1)
    assert p.design_balance(cfg) == 0 and p.fits(cfg)


def test_corner_e_params():
    cfg = SystemConfig(2, 1, F(1, 2), 2)
    p = solve_params(cfg, "e")
    assert (p.delta, p.theta, p.eta) == (F(1, 2), 0, F(1, 2))
    assert p.design_balance(cfg) == 0
    assert solve_params(SystemConfig(2, 1, 0, 0), "E").eta == 0


def test_regime_mismatch():
    with pytest.raises(DomainError):
        solve_params(SystemConfig(2, 1, F(1, 4), 2), "C")
    with pytest.raises(DomainError):
        solve_params(SystemConfig(2, 1, 1, 1), "F")
    with pytest.raises(DomainError):
        solve_params(SystemConfig(3, 1, 1, 1), "C")
    with pytest.raises(DomainError):
        solve_params(SystemConfig(2, 1, 1, 1), "D")


def test_param_validation():
    with pytest.raises(DomainError):
        SchemeParams(F(1, 2), F(1, 4), F(1, 2))
    with pytest.raises(DomainError):
        SchemeParams(F(-1), 0, 1)
    with pytest.raises(DomainError):
        SchemeParams(0, 0, F(3, 2))


@given(configs(K=st.just(2)))
def test_corner_plans_reach_region_corners(cfg):
    corners = two_user_region(cfg).corners
    for name, pt in corners.items():
        plan = corner_plan(cfg, name)
        assert plan.predicted_per_user() == pt.d
        if plan.params is not None and name in "CEF":
            assert plan.params.design_balance(cfg) == 0
        plan.check_causality()


@given(configs())
def test_optimal_and_timeshare_match_bounds(cfg):
    plan = optimal_plan(cfg)
    want = two_user_sum_dof(cfg).value if cfg.K == 2 else lower_bound_sum_dof(cfg).value
    assert plan.predicted_sum == want
    assert timeshare_plan(cfg).predicted_sum == lower_bound_sum_dof(cfg).value
    assert aggregation_schedule(cfg).predicted_sum == channel_aggregation_sum_dof(cfg)
    plan.check_causality()


def test_scheme_predictions():
    cfg = SystemConfig(2, 1, 1, 2)
    assert overload_plan(cfg).predicted_sum == 4
    assert zf_plan(cfg).predicted_sum == 3  # single-user share plus the idle pipe
    assert aggregation_schedule(cfg).predicted_sum == F(10, 3)
    assert mat_plan(SystemConfig(3, 1, 1, F(2, 9)), 2).predicted_sum == 2
    assert make_plan(SystemConfig(3, 2, 1, 12), "overload").predicted_sum == 18


def test_infeasible_plans():
    with pytest.raises(InfeasiblePlan):
        overload_plan(SystemConfig(2, 1, 1, 1))
    with pytest.raises(InfeasiblePlan):
        mat_plan(SystemConfig(3, 1, 1, F(1, 9)), 2)
    cfg = SystemConfig(2, 1, F(1, 2), 0)
    with pytest.raises(InfeasiblePlan):
        Plan("bad", cfg, (Segment("single", F(3, 4), target=0),))
    with pytest.raises(InfeasiblePlan):
        Plan("bad", cfg, (Segment("zf", F(3, 4)),))
    with pytest.raises(InfeasiblePlan):
        Plan("bad", cfg, (Segment("overload", F(1, 2)),))
    with pytest.raises(DomainError):
        Segment("mat", F(1, 2))
    with pytest.raises(DomainError):
        make_plan(cfg, "nope")


def test_layout_and_causality():
    cfg = SystemConfig(2, 1, F(1, 3), 2)
    plan = make_plan(cfg, "overload")
    assert plan.T_c == 3
    assert plan.layout() == [0, 1, 1]
    plan.check_causality()
    bad = Plan("bad", cfg, (Segment("zf", F(2, 3)), Segment("single", F(1, 3), target=0)))
    bad.check_causality()  # blind segments are placed first
    with pytest.raises(DomainError):
        plan.use_counts(2)


def test_causality_violation_is_caught(monkeypatch):
    cfg = SystemConfig(2, 1, F(1, 3), 2)
    plan = make_plan(cfg, "zf")
    monkeypatch.setattr(Plan, "layout", lambda self, T_c=None: [1, 0, 0])
    with pytest.raises(CausalityError):
        plan.check_causality()
