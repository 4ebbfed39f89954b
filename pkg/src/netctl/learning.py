"""Independent exponential-weights learners playing the repeated control game."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from netctl.equilibrium import worst_feasible_social_cost
from netctl.game_model import GameInstance

# refuse action grids larger than this per controller
MAX_ACTIONS = 200_000


@dataclass(frozen=True)
class LearnerConfig:
    resolution: int = 11  # grid points per path dimension, endpoints included
    normalize: bool = True

    def __post_init__(self) -> None:
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")


def simplex_grid(n_paths: int, resolution: int) -> np.ndarray:
    """All splits over ``n_paths`` paths with fractions in multiples of ``1/(resolution-1)``."""
    k = resolution - 1
    rows = []
    for cut in itertools.combinations(range(k + n_paths - 1), n_paths - 1):
        bounds = (-1,) + cut + (k + n_paths - 1,)
        rows.append([bounds[j + 1] - bounds[j] - 1 for j in range(n_paths)])
    return np.array(rows, dtype=float) / k


@dataclass
class ActionSet:
    """A controller's discretised strategies as path splits and edge loads."""

    controller: str
    populations: tuple[str, ...]
    splits: list[dict[str, np.ndarray]]
    loads: np.ndarray  # (n_actions, m)


def action_set(instance: GameInstance, r: str, config: LearnerConfig) -> ActionSet:
    asg = instance.assignment
    pops = tuple(asg.populations_of(r))
    inc = instance.incidence
    grids = [simplex_grid(len(instance.population(i).paths), config.resolution) for i in pops]
    size = math.prod(len(g) for g in grids) if grids else 0
    if size == 0:
        raise ValueError(f"controller {r} has an empty action grid")
    if size > MAX_ACTIONS:
        raise ValueError(f"controller {r} has {size} actions; lower the resolution")
    splits = []
    loads = np.zeros((size, len(instance.network.edges)))
    for a, combo in enumerate(itertools.product(*(range(len(g)) for g in grids))):
        split = {}
        for i, g, c in zip(pops, grids, combo):
            x = g[c] * asg.share(r, i)
            split[i] = x
            loads[a] += x @ inc[i]
        splits.append(split)
    return ActionSet(r, pops, splits, loads)


@dataclass
class LearnerState:
    """Exponential weights kept as cumulative (normalised) losses per action."""

    cumulative_loss: np.ndarray
    round: int = 0

    @property
    def n_actions(self) -> int:
        return len(self.cumulative_loss)

    def learning_rate(self, t: int) -> float:
        return math.sqrt(math.log(max(self.n_actions, 2)) / t)

    def weights(self, t: int) -> np.ndarray:
        z = -self.learning_rate(t) * self.cumulative_loss
        z -= z.max()
        w = np.exp(z)
        return w / w.sum()


@dataclass
class EpisodeLog:
    controllers: tuple[str, ...]
    actions: np.ndarray  # (rounds, R) chosen action indices
    controller_costs: np.ndarray  # (rounds, R)
    social_costs: np.ndarray  # (rounds,)
    # per controller: hindsight cost of every grid action, summed over rounds
    hindsight_costs: list[np.ndarray] = field(default_factory=list)
    action_sets: list[ActionSet] = field(default_factory=list, repr=False)
    scale: float = 1.0

    @property
    def rounds(self) -> int:
        return len(self.social_costs)

    def trailing_mean(self, window: int) -> float:
        return float(self.social_costs[-window:].mean())

    def regret(self, k: int) -> float:
        """Average excess of realised cost over the best fixed grid action (cost units)."""
        realised = self.controller_costs[:, k].sum()
        return float((realised - self.hindsight_costs[k].min()) / self.rounds)


def run_episode(instance: GameInstance, rounds: int, config: LearnerConfig = LearnerConfig(), seed: int = 0) -> EpisodeLog:
    """Play ``rounds`` rounds of the control game with full-information Hedge learners.

    Every round each controller samples a split from its weights, the joint
    loads are formed, and each controller is charged its realised cost.  It
    then scores every grid action against the others' realised loads and
    updates with rate ``sqrt(ln K / t)`` on costs divided by the worst
    feasible social cost.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    instance.require_valid()
    asg = instance.assignment
    controllers = tuple(r for r in asg.controllers if asg.populations_of(r))
    sets = [action_set(instance, r, config) for r in controllers]
    scale = worst_feasible_social_cost(instance) if config.normalize else 1.0
    scale = scale if scale > 0 else 1.0
    states = [LearnerState(np.zeros(len(s.splits))) for s in sets]
    rng = np.random.default_rng(seed)
    costs = instance.network.cost_array

    R = len(controllers)
    chosen = np.zeros((rounds, R), dtype=int)
    ccost = np.zeros((rounds, R))
    sc = np.zeros(rounds)
    hindsight = [np.zeros(len(s.splits)) for s in sets]
    for t in range(1, rounds + 1):
        picks = [int(rng.choice(st.n_actions, p=st.weights(t))) for st in states]
        own = [s.loads[a] for s, a in zip(sets, picks)]
        total = np.sum(own, axis=0)
        sc[t - 1] = float((total * costs.value(total)).sum())
        for k, (s, st) in enumerate(zip(sets, states)):
            others = total - own[k]
            cand = s.loads
            action_costs = (cand * costs.value(cand + others)).sum(axis=1)
            ccost[t - 1, k] = action_costs[picks[k]]
            hindsight[k] += action_costs
            st.cumulative_loss += action_costs / scale
            st.round = t
        chosen[t - 1] = picks
    return EpisodeLog(controllers, chosen, ccost, sc, hindsight, sets, scale)


def learning_curve(log: EpisodeLog, window: int) -> list[tuple[int, float]]:
    """Trailing-window mean social cost after every round (1-based rounds)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > log.rounds:
        raise ValueError(f"window {window} exceeds the {log.rounds} logged rounds")
    sc = log.social_costs
    return [(t, float(sc[max(0, t - window) : t].mean())) for t in range(1, log.rounds + 1)]
