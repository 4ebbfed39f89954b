import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netctl.analytics import PoaQuery, pigou_nce_social_cost
from netctl.control_game import verify_potential_descent
from netctl.instances import braess, pigou
from netctl.os_choice import (
    InfeasibleSharesError,
    OsShareProfile,
    induced_equilibrium,
    os_best_response_step,
    passenger_cost,
    passenger_total_cost,
    solve_os_game,
)


def profile(fractions, inst=None):
    return OsShareProfile.from_fractions(inst or pigou(1), fractions)


def test_symmetric_passenger_cost():
    costs = passenger_cost(pigou(1), profile((0.5, 0.5)), "od")
    assert costs == {"os1": pytest.approx(7 / 9, abs=1e-8), "os2": pytest.approx(7 / 9, abs=1e-8)}


def test_lopsided_passenger_cost():
    # os2 routes all 0.05 on the bottom, os1 answers with (1 - 0.05) / 2
    costs = passenger_cost(pigou(1), profile((0.95, 0.05)), "od")
    assert costs["os1"] == pytest.approx((0.475 * 0.525 + 0.475) / 0.95, abs=1e-8)
    assert costs["os2"] == pytest.approx(0.525, abs=1e-8)


def test_empty_controller_quotes_cheapest_path():
    costs = passenger_cost(pigou(1), profile((1.0, 0.0)), "od")
    assert costs["os1"] == pytest.approx(0.75, abs=1e-8)
    assert costs["os2"] == pytest.approx(0.5, abs=1e-8)


def test_passenger_total_is_social_cost_for_single_population():
    y = profile((0.7, 0.3))
    nce = induced_equilibrium(pigou(1), y)
    assert passenger_total_cost(pigou(1), y, "od", nce) == pytest.approx(nce.social_cost, abs=1e-9)


@pytest.mark.parametrize(
    "start, eta, expected",
    [((0.9, 0.1), 0.1, (0.8, 0.2)), ((1.0, 0.0), 1.0, (0.0, 1.0)), ((0.5, 0.5), 0.1, (0.5, 0.5))],
)
def test_single_step(start, eta, expected):
    y = os_best_response_step(pigou(1), profile(start), eta)
    assert y.fractions("od") == pytest.approx(np.array(expected), abs=1e-12)


def test_step_size_range():
    with pytest.raises(ValueError):
        os_best_response_step(pigou(1), profile((0.5, 0.5)), 0.0)
    with pytest.raises(ValueError):
        os_best_response_step(pigou(1), profile((0.5, 0.5)), 1.5)


def test_infeasible_shares_rejected():
    y = OsShareProfile({"od": {"os1": 0.5, "os2": 0.4}}, ("os1", "os2"))
    with pytest.raises(InfeasibleSharesError):
        passenger_cost(pigou(1), y, "od")
    y = OsShareProfile({"od": {"os1": 1.2, "os2": -0.2}}, ("os1", "os2"))
    with pytest.raises(InfeasibleSharesError):
        passenger_cost(pigou(1), y, "od")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=4).filter(lambda w: sum(w) > 0.05), st.floats(0.01, 1.0))
def test_step_conserves_mass(weights, eta):
    y = os_best_response_step(pigou(1), profile(weights), eta)
    row = y.shares["od"]
    assert sum(row.values()) == pytest.approx(1.0, abs=1e-12)
    assert all(v >= 0 for v in row.values())


@pytest.mark.parametrize("start", [(0.9, 0.1), (0.6, 0.3, 0.1), (0.2, 0.8), (1.0, 0.0, 0.0)])
def test_dynamics_reach_proportional_shares(start):
    inst = pigou(1)
    trace = solve_os_game(inst, profile(start))
    R = len(start)
    assert trace.converged
    assert trace.final.shares.fractions("od") == pytest.approx(np.full(R, 1 / R), abs=1e-3)
    assert trace.final.social_cost == pytest.approx(pigou_nce_social_cost(PoaQuery(1, R)), abs=1e-4)
    for step in trace.steps:
        assert sum(step.shares.shares["od"].values()) == pytest.approx(1.0, abs=1e-12)
    assert verify_potential_descent([s.potential for s in trace.steps])


def test_proportional_start_is_fixed_point():
    trace = solve_os_game(pigou(1), profile((0.5, 0.5)))
    assert trace.converged
    assert len(trace.steps) == 1


def test_dynamics_on_braess():
    trace = solve_os_game(braess(1), profile((0.8, 0.2), braess(1)))
    assert trace.converged
    assert trace.final.shares.fractions("od") == pytest.approx(np.array([0.5, 0.5]), abs=1e-3)


def test_quadratic_pigou_reaches_worst_case_cost():
    trace = solve_os_game(pigou(2), profile((0.7, 0.3), pigou(2)))
    assert trace.converged
    assert trace.final.social_cost == pytest.approx(pigou_nce_social_cost(PoaQuery(2, 2)), abs=1e-4)
