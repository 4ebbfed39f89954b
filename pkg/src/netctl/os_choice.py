"""Operating systems game: populations choose which controller routes them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from netctl.control_game import NceResult, solve_nce
from netctl.equilibrium import path_cost_table
from netctl.game_model import DEMAND_RTOL, ControlAssignment, GameInstance

# per-unit cost differences below this count as ties
TIE_TOL = 1e-7


class InfeasibleSharesError(ValueError):
    pass


@dataclass(frozen=True)
class OsShareProfile:
    """``shares[i][r] = y_i^r``: mass of population ``i`` that picked controller ``r``."""

    shares: Mapping[str, Mapping[str, float]]
    controllers: tuple[str, ...]

    @classmethod
    def from_fractions(cls, instance: GameInstance, fractions: Sequence[float]) -> "OsShareProfile":
        names = tuple(f"os{k + 1}" for k in range(len(fractions)))
        total = float(sum(fractions))
        shares = {
            pop.id: {r: pop.demand * float(a) / total for r, a in zip(names, fractions)}
            for pop in instance.populations
        }
        return cls(shares, names)

    def assignment(self) -> ControlAssignment:
        """Control assignment of the induced game; unchosen controllers are dropped."""
        active = tuple(r for r in self.controllers if any(s.get(r, 0.0) > 0 for s in self.shares.values()))
        return ControlAssignment(
            active, {r: {i: s[r] for i, s in self.shares.items() if s.get(r, 0.0) > 0} for r in active}
        )

    def fractions(self, i: str) -> np.ndarray:
        row = self.shares[i]
        total = sum(row.values())
        return np.array([row.get(r, 0.0) / total for r in self.controllers])

    def proportionality_deviation(self) -> float:
        n = len(self.controllers)
        return max(float(np.abs(self.fractions(i) - 1.0 / n).max()) for i in self.shares)


@dataclass(frozen=True)
class OsStep:
    shares: OsShareProfile
    per_unit_costs: Mapping[str, Mapping[str, float]]
    social_cost: float
    potential: float


@dataclass(frozen=True)
class OsChoiceTrace:
    steps: tuple[OsStep, ...]
    converged: bool
    final_deviation: float
    nce: Optional[NceResult] = field(default=None, repr=False)

    @property
    def final(self) -> OsStep:
        return self.steps[-1]


def check_shares(instance: GameInstance, y: OsShareProfile) -> None:
    for pop in instance.populations:
        row = y.shares.get(pop.id)
        if row is None:
            raise InfeasibleSharesError(f"no shares for population {pop.id}")
        if any(v < 0 for v in row.values()):
            raise InfeasibleSharesError(f"negative share in population {pop.id}")
        if set(row) - set(y.controllers):
            raise InfeasibleSharesError(f"population {pop.id} picks an unknown controller")
        total = sum(row.values())
        if abs(total - pop.demand) > DEMAND_RTOL * max(1.0, pop.demand):
            raise InfeasibleSharesError(f"shares of {pop.id} sum to {total:.12g}, demand {pop.demand:.12g}")


def _warm_start(instance: GameInstance, y: OsShareProfile, previous: Optional[NceResult]):
    """Previous equilibrium splits rescaled to the new shares."""
    if previous is None:
        return None
    flows = {}
    for i, row in y.shares.items():
        n = len(instance.population(i).paths)
        for r, v in row.items():
            if v <= 0:
                continue
            old = previous.flows.flows.get((r, i))
            if old is not None and old.sum() > 0:
                flows[(r, i)] = old * (v / old.sum())
            else:
                flows[(r, i)] = np.full(n, v / n)
    return flows


def induced_equilibrium(
    instance: GameInstance, y: OsShareProfile, tol: float = 1e-10, previous: Optional[NceResult] = None
) -> NceResult:
    check_shares(instance, y)
    game = instance.with_assignment(y.assignment())
    res = solve_nce(game, tol=tol, initial=_warm_start(instance, y, previous))
    if not res.converged:
        raise RuntimeError("induced control game did not converge")
    return res


def _per_unit(instance: GameInstance, y: OsShareProfile, nce: NceResult) -> dict[str, dict[str, float]]:
    table = path_cost_table(instance, nce.flows.edge_loads)
    out = {}
    for i, row in y.shares.items():
        costs = table[i]
        out[i] = {}
        for r in y.controllers:
            v = row.get(r, 0.0)
            if v > 0:
                out[i][r] = float(nce.flows.flows[(r, i)] @ costs) / v
            else:
                # an empty controller routes its first infinitesimal user selfishly
                out[i][r] = float(costs.min())
    return out


def passenger_cost(
    instance: GameInstance, y: OsShareProfile, i: str, nce: Optional[NceResult] = None
) -> dict[str, float]:
    """Per-unit travel cost population ``i`` experiences under each controller.

    For a controller nobody in ``i`` picked, the value is the cost a marginal
    joiner would pay: the cheapest path at current loads.
    """
    if nce is None:
        nce = induced_equilibrium(instance, y)
    else:
        check_shares(instance, y)
    return _per_unit(instance, y, nce)[i]


def passenger_total_cost(instance: GameInstance, y: OsShareProfile, i: str, nce: Optional[NceResult] = None) -> float:
    """Aggregate ``C_i(y) = sum_r y_i^r * per-unit cost``."""
    costs = passenger_cost(instance, y, i, nce)
    return sum(y.shares[i].get(r, 0.0) * c for r, c in costs.items())


def _step(y: OsShareProfile, per_unit, etas: Mapping[str, float], demands, tie_tol: float) -> OsShareProfile:
    new = {}
    for i, row in y.shares.items():
        costs = per_unit[i]
        users = [r for r in y.controllers if row.get(r, 0.0) > 0]
        hi = max(users, key=lambda r: (costs[r], -y.controllers.index(r)))
        lo = min(y.controllers, key=lambda r: (costs[r], y.controllers.index(r)))
        row = dict(row)
        if costs[hi] - costs[lo] > tie_tol:
            amount = min(etas[i] * demands[i], row[hi])
            row[hi] -= amount
            row[lo] = row.get(lo, 0.0) + amount
            if row[hi] < DEMAND_RTOL * demands[i] * 1e-3:
                row[lo] += row[hi]
                row[hi] = 0.0
        new[i] = row
    return OsShareProfile(new, y.controllers)


def os_best_response_step(
    instance: GameInstance,
    y: OsShareProfile,
    eta: float,
    nce: Optional[NceResult] = None,
    tie_tol: float = TIE_TOL,
) -> OsShareProfile:
    """Move ``eta * d_i`` of every population from its costliest controller to its cheapest.

    Ties go to the lower controller index; a population whose cost spread is
    within ``tie_tol`` stays put.
    """
    if not 0 < eta <= 1:
        raise ValueError("step size must lie in (0, 1]")
    if nce is None:
        nce = induced_equilibrium(instance, y)
    else:
        check_shares(instance, y)
    per_unit = _per_unit(instance, y, nce)
    demands = {p.id: p.demand for p in instance.populations}
    return _step(y, per_unit, {i: eta for i in y.shares}, demands, tie_tol)


def _spread(per_unit, y: OsShareProfile, i: str) -> float:
    costs = per_unit[i]
    users = [r for r in y.controllers if y.shares[i].get(r, 0.0) > 0]
    return max(costs[r] for r in users) - min(costs.values())


def solve_os_game(
    instance: GameInstance,
    start: OsShareProfile,
    eta: float = 0.05,
    tol: float = 1e-6,
    max_steps: int = 10_000,
    nce_tol: float = 1e-10,
) -> OsChoiceTrace:
    """Best-response dynamics of populations over controllers.

    Stops once every population's per-unit cost spread, or the profile's
    largest deviation from proportional shares, drops below ``tol``.  A
    population's step size is halved whenever its spread fails to shrink,
    which stops the dynamics from cycling around the fixed point.
    """
    if not 0 < eta <= 1:
        raise ValueError("step size must lie in (0, 1]")
    instance.require_valid()
    demands = {p.id: p.demand for p in instance.populations}
    etas = {i: eta for i in start.shares}
    y = start
    nce = induced_equilibrium(instance, y, tol=nce_tol)
    steps = []
    last_spread: dict[str, float] = {}
    converged = False
    for k in range(max_steps + 1):
        per_unit = _per_unit(instance, y, nce)
        steps.append(OsStep(y, per_unit, nce.social_cost, nce.potential_trace[-1]))
        spreads = {i: _spread(per_unit, y, i) for i in y.shares}
        if max(spreads.values()) < tol or y.proportionality_deviation() < tol:
            converged = True
            break
        if k == max_steps:
            break
        for i, s in spreads.items():
            if i in last_spread and s >= last_spread[i]:
                etas[i] *= 0.5
        last_spread = spreads
        y = _step(y, per_unit, etas, demands, tie_tol=min(TIE_TOL, tol))
        nce = induced_equilibrium(instance, y, tol=nce_tol, previous=nce)
    return OsChoiceTrace(tuple(steps), converged, y.proportionality_deviation(), nce)
