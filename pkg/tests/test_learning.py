import math

import numpy as np
import pytest

from netctl.control_game import solve_nce
from netctl.equilibrium import solve_so
from netctl.instances import braess, pigou
from netctl.learning import (
    EpisodeLog,
    LearnerConfig,
    LearnerState,
    action_set,
    learning_curve,
    run_episode,
    simplex_grid,
)


@pytest.fixture(scope="module")
def episodes():
    runs = {}
    for p in (1, 2):
        for R in (1, 2, 3):
            inst = braess(p, R)
            runs[(p, R)] = (inst, run_episode(inst, 2000))
    return runs


def flat_log(values):
    values = np.asarray(values, dtype=float)
    n = len(values)
    return EpisodeLog(("os1",), np.zeros((n, 1), int), values[:, None], values)


@pytest.mark.parametrize("n, res, count", [(1, 11, 1), (2, 11, 11), (3, 11, 66), (3, 3, 6), (4, 5, 35)])
def test_simplex_grid(n, res, count):
    g = simplex_grid(n, res)
    assert g.shape == (count, n)
    assert np.allclose(g.sum(axis=1), 1.0)
    assert np.all(g >= 0)
    assert len({tuple(row) for row in g}) == count


def test_action_set_scales_by_share():
    inst = braess(1, 2)
    acts = action_set(inst, "os1", LearnerConfig())
    assert len(acts.splits) == 66
    assert all(s["od"].sum() == pytest.approx(0.5) for s in acts.splits)


def test_config_rejects_tiny_resolution():
    with pytest.raises(ValueError):
        LearnerConfig(resolution=1)


def test_learning_rate_schedule():
    st = LearnerState(np.zeros(66))
    assert st.learning_rate(1) == pytest.approx(math.sqrt(math.log(66)))
    assert st.learning_rate(100) == pytest.approx(math.sqrt(math.log(66) / 100))
    w = st.weights(5)
    assert np.allclose(w, 1 / 66)


def test_constant_log_gives_flat_curve():
    curve = learning_curve(flat_log([1.7] * 50), 10)
    assert [v for _, v in curve] == pytest.approx([1.7] * 50)


def test_window_one_is_raw_series():
    values = [1.5, 2.0, 1.6, 1.8]
    curve = learning_curve(flat_log(values), 1)
    assert curve == [(1, 1.5), (2, 2.0), (3, 1.6), (4, 1.8)]


def test_window_bounds():
    with pytest.raises(ValueError):
        learning_curve(flat_log([1.0, 2.0]), 0)
    with pytest.raises(ValueError):
        learning_curve(flat_log([1.0, 2.0]), 3)


def test_episode_reproducible():
    a = run_episode(braess(1, 2), 200, seed=7)
    b = run_episode(braess(1, 2), 200, seed=7)
    assert np.array_equal(a.actions, b.actions)
    assert np.array_equal(a.social_costs, b.social_costs)


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("R", [1, 2, 3])
def test_trailing_mean_near_equilibrium(episodes, p, R):
    inst, log = episodes[(p, R)]
    target = solve_nce(inst).social_cost
    assert abs(log.trailing_mean(200) - target) <= 0.05 * target


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("R", [1, 2, 3])
def test_social_cost_never_below_optimum(episodes, p, R):
    inst, log = episodes[(p, R)]
    so = solve_so(inst, tol=1e-12).social_cost
    assert log.social_costs.min() >= so - 1e-9


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("R", [1, 2, 3])
def test_no_regret(episodes, p, R):
    _, log = episodes[(p, R)]
    for k in range(len(log.controllers)):
        K = len(log.action_sets[k].splits)
        assert log.regret(k) / log.scale <= 5 * math.sqrt(math.log(K) / log.rounds)


def test_two_controller_mean_between_optimum_and_worst(episodes):
    _, log = episodes[(1, 2)]
    final = learning_curve(log, 200)[-1][1]
    assert 1.5 <= final <= 2.0


@pytest.mark.parametrize("p, headline", [(1, 150.0), (2, 123.0)])
def test_full_control_hundred_round_total(episodes, p, headline):
    # 100 rounds of the converged learner, summed
    _, log = episodes[(p, 1)]
    total = 100 * log.trailing_mean(100)
    assert abs(total - headline) <= 0.05 * headline


def test_full_control_approaches_optimum(episodes):
    inst, log = episodes[(1, 1)]
    so = solve_so(inst).social_cost
    early = log.social_costs[:100].mean()
    late = log.trailing_mean(200)
    assert late < early
    assert late - so < 0.05


def test_pigou_learners():
    inst = pigou(1, 2)
    log = run_episode(inst, 2000, LearnerConfig(resolution=21))
    assert log.trailing_mean(200) == pytest.approx(7 / 9, rel=0.05)
