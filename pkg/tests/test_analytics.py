import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import pigou_sc, pigou_symmetric_nce
from netctl.analytics import (
    PoaQuery,
    empirical_poa,
    pigou_nce_flow,
    pigou_nce_social_cost,
    pigou_so_social_cost,
    poa_closed_form,
    poa_limit,
    poa_sweep,
    poa_expanded_form,
    social_cost_surface,
    threshold_reciprocal_scan,
    worst_case_threshold,
)
from netctl.equilibrium import SELFISH, FlowProfile, social_cost
from netctl.instances import braess, pigou

P_SCAN = np.linspace(0.25, 8.0, 32)
R_SCAN = range(1, 41)


@pytest.mark.parametrize("p, R, expected", [(1, 2, 1 / 3), (1, 3, 1 / 4), (2, 2, 8**-0.5), (2, 3, 15**-0.5)])
def test_nce_flow(p, R, expected):
    assert pigou_nce_flow(PoaQuery(p, R)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("p", [0.5, 1, 2, 3, 4])
@pytest.mark.parametrize("R", [1, 2, 3, 7])
def test_nce_flow_matches_root_oracle(p, R):
    assert pigou_nce_flow(PoaQuery(p, R)) == pytest.approx(pigou_symmetric_nce(p, R), abs=1e-10)


@pytest.mark.parametrize("p, R, expected", [(1, 2, 7 / 9), (1, 1, 3 / 4)])
def test_nce_social_cost(p, R, expected):
    assert pigou_nce_social_cost(PoaQuery(p, R)) == pytest.approx(expected, abs=1e-12)


def test_nce_social_cost_tends_to_ue_cost():
    assert pigou_nce_social_cost(PoaQuery(1, 10**6)) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("p", [0.5, 1, 2, 3, 4])
@pytest.mark.parametrize("R", [1, 2, 3, 6])
def test_nce_social_cost_agrees_with_evaluator(p, R):
    q = PoaQuery(p, R)
    inst = pigou(p)
    f = R * pigou_nce_flow(q)
    flows = FlowProfile.build(inst, {(SELFISH, "od"): np.array([1 - f, f])})
    assert pigou_nce_social_cost(q) == pytest.approx(social_cost(inst, flows), abs=1e-12)
    assert pigou_nce_social_cost(q) == pytest.approx(pigou_sc(f, p), abs=1e-12)


def test_so_social_cost():
    assert pigou_so_social_cost(1) == pytest.approx(0.75, abs=1e-15)
    assert pigou_so_social_cost(2) == pytest.approx(3**-1.5 + 1 - 3**-0.5, abs=1e-12)
    assert pigou_so_social_cost(2) == pytest.approx(0.61510, abs=1e-5)


def test_so_social_cost_decreasing_in_p():
    values = [pigou_so_social_cost(p) for p in np.linspace(1, 8, 71)]
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("p, R, expected", [(1, 1, 1.0), (1, 2, 28 / 27), (1, 3, 13 / 12)])
def test_poa_closed_form(p, R, expected):
    assert poa_closed_form(PoaQuery(p, R)) == pytest.approx(expected, abs=1e-12)


@given(st.floats(0.1, 10.0), st.integers(1, 10**6))
def test_expanded_form_agrees(p, R):
    q = PoaQuery(p, R)
    assert poa_expanded_form(q) == pytest.approx(poa_closed_form(q), rel=1e-9)


def test_poa_limit():
    assert abs(poa_limit(1) - 4 / 3) <= 1e-12
    assert poa_limit(2) == pytest.approx(3 * math.sqrt(3) / (3 * math.sqrt(3) - 2), abs=1e-12)
    assert poa_limit(2) == pytest.approx(1.6258, abs=1e-4)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_closed_form_tends_to_limit(p):
    assert abs(poa_closed_form(PoaQuery(p, 10**6)) - poa_limit(p)) <= 1e-4


@pytest.mark.parametrize("p", P_SCAN)
def test_closed_form_monotone_in_R_and_below_limit(p):
    values = [poa_closed_form(PoaQuery(p, R)) for R in R_SCAN]
    assert values[0] == 1.0
    assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
    assert max(values) <= poa_limit(p) + 1e-12


@pytest.mark.parametrize("bad", [0, -1, float("nan")])
def test_degree_must_be_positive(bad):
    with pytest.raises(ValueError):
        PoaQuery(bad, 2)
    with pytest.raises(ValueError):
        poa_limit(bad)


def test_controller_count_must_be_positive_integer():
    with pytest.raises(ValueError):
        PoaQuery(1, 0)
    with pytest.raises(ValueError):
        PoaQuery(1, 2.5)


# --- control threshold -------------------------------------------------------


@pytest.mark.parametrize("p, R, expected", [(1, 2, 1 / 3), (1, 3, 1 / 4), (3, 2, 20 ** (-1 / 3))])
def test_threshold_examples(p, R, expected):
    assert worst_case_threshold(PoaQuery(p, R)) == pytest.approx(expected, abs=1e-12)


def test_threshold_lies_below_reciprocal():
    # (pR^{p-1} + R^p)^{-1/p} = (1/R)(1 + p/R)^{-1/p}, strictly under 1/R
    for p in P_SCAN:
        for R in R_SCAN:
            t = worst_case_threshold(PoaQuery(p, R))
            assert t < 1 / R
            assert t == pytest.approx((1 + p / R) ** (-1 / p) / R, rel=1e-12)
    rows = threshold_reciprocal_scan(P_SCAN, R_SCAN)
    assert len(rows) == len(P_SCAN) * len(R_SCAN)


@pytest.mark.parametrize("p", [0.5, 1, 2, 4])
def test_threshold_approaches_reciprocal(p):
    ratios = [R * worst_case_threshold(PoaQuery(p, R)) for R in (10, 100, 10**4, 10**6)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(1.0, abs=1e-5)


# --- empirical ----------------------------------------------------------------


@pytest.mark.parametrize("R, expected, tol", [(1, 1.0, 1e-6), (2, 28 / 27, 1e-5)])
def test_empirical_poa_pigou(R, expected, tol):
    assert empirical_poa(pigou(1, R)) == pytest.approx(expected, abs=tol)


@pytest.mark.parametrize("p", [1, 2])
def test_braess_within_pigou_bound(p):
    for R in (2, 3):
        assert empirical_poa(braess(p, R)) <= poa_closed_form(PoaQuery(p, R)) + 1e-5


def test_poa_sweep_rows():
    rows = poa_sweep([1, 2], [1, 2, 10**6])
    assert [(r.p, r.R) for r in rows] == [(1, 1), (1, 2), (1, 10**6), (2, 1), (2, 2), (2, 10**6)]
    assert rows[0].poa_closed == 1.0
    assert rows[1].poa_closed == pytest.approx(1.037037, abs=1e-6)
    assert rows[5].poa_closed == pytest.approx(1.6258, abs=1e-4)
    assert all(r.poa_empirical is None for r in rows)


# --- share surface ------------------------------------------------------------


@pytest.fixture(scope="module")
def surface_r2():
    return social_cost_surface(R=2, p=1, step=0.05)


@pytest.mark.parametrize("d1, expected", [(1.0, 0.75), (0.0, 0.75), (0.5, 7 / 9), (0.2, 0.76), (0.8, 0.76)])
def test_surface_values(surface_r2, d1, expected):
    sc = dict(zip(surface_r2.points, surface_r2.social_costs))
    assert sc[(d1,)] == pytest.approx(expected, abs=1e-6)


def test_surface_shape(surface_r2):
    assert len(surface_r2.points) == 21
    top = [pt[0] for pt in surface_r2.argmax_points()]
    assert min(top) >= 1 / 3 - 0.05 and max(top) <= 2 / 3 + 0.05
    assert max(surface_r2.social_costs) == pytest.approx(7 / 9, abs=1e-6)


def test_surface_symmetric(surface_r2):
    sc = surface_r2.social_costs
    assert np.allclose(sc, sc[::-1], atol=1e-8)


def test_three_controller_surface():
    grid = social_cost_surface(R=3, p=1, step=0.25)
    assert len(grid.points) == 15
    sc = dict(zip(grid.points, grid.social_costs))
    assert sc[(0.0, 0.0)] == pytest.approx(0.75, abs=1e-6)
    assert sc[(0.5, 0.5)] == pytest.approx(7 / 9, abs=1e-6)
    assert max(grid.social_costs) <= pigou_nce_social_cost(PoaQuery(1, 3)) + 1e-6


def test_surface_rejects_bad_step():
    with pytest.raises(ValueError):
        social_cost_surface(step=0.3)
    with pytest.raises(ValueError):
        social_cost_surface(R=4)
