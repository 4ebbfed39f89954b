"""User equilibria, social optima, social cost and the Beckmann potential."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from netctl.costs import Cost
from netctl.frank_wolfe import Block, EdgeObjective, minimize
from netctl.game_model import DEMAND_RTOL, GameInstance

# owner key for a population without declared information types
SELFISH = "*"

# reported path flows below this are set to zero
FLOW_FLOOR = 1e-12


class InfeasibleFlowError(ValueError):
    pass


@dataclass(frozen=True)
class FlowProfile:
    """Path flows keyed by ``(owner, population)`` plus the induced edge loads.

    The owner is a controller id for control-game profiles, or an information
    type id (``"*"`` for a population without types) for UE/SO profiles.
    """

    flows: Mapping[tuple[str, str], np.ndarray]
    edge_loads: np.ndarray

    @classmethod
    def build(cls, instance: GameInstance, flows: Mapping[tuple[str, str], np.ndarray]) -> "FlowProfile":
        flows = {key: np.asarray(x, dtype=float) for key, x in flows.items()}
        return cls(flows, edge_loads(instance, flows))

    def population_flows(self, i: str) -> np.ndarray:
        """Path flows of population ``i`` summed over owners."""
        parts = [x for (_, pop), x in self.flows.items() if pop == i]
        return np.sum(parts, axis=0)

    def owner_flows(self, owner: str) -> dict[str, np.ndarray]:
        return {pop: x for (o, pop), x in self.flows.items() if o == owner}

    def truncated(self, instance: GameInstance) -> "FlowProfile":
        flows = {key: np.where(x < FLOW_FLOOR, 0.0, x) for key, x in self.flows.items()}
        return FlowProfile.build(instance, flows)


@dataclass(frozen=True)
class EquilibriumResult:
    flows: FlowProfile
    social_cost: float
    potential: float
    # cost of every path, per (owner, population); C_k is the min over known paths
    path_costs: Mapping[tuple[str, str], np.ndarray]
    type_costs: Mapping[tuple[str, str], float]
    iterations: int
    relative_gap: float
    converged: bool


def edge_loads(instance: GameInstance, flows: Mapping[tuple[str, str], np.ndarray]) -> np.ndarray:
    loads = np.zeros(len(instance.network.edges))
    inc = instance.incidence
    for (_, i), x in flows.items():
        loads += x @ inc[i]
    return loads


def edge_cost(poly: Cost, f: float) -> float:
    """Cost of an edge carrying load ``f``."""
    if f < 0:
        raise ValueError(f"edge load must be >= 0, got {f}")
    return float(poly(f))


def check_feasible(instance: GameInstance, flows: FlowProfile) -> None:
    """Raise :class:`InfeasibleFlowError` unless every population's demand is routed."""
    for (owner, i), x in flows.flows.items():
        if i not in instance.population_index:
            raise InfeasibleFlowError(f"unknown population {i!r}")
        if x.shape != (len(instance.population(i).paths),):
            raise InfeasibleFlowError(f"flow vector for ({owner}, {i}) has wrong length")
        if np.any(x < -FLOW_FLOOR):
            raise InfeasibleFlowError(f"negative path flow for ({owner}, {i})")
    for pop in instance.populations:
        routed = sum(float(x.sum()) for (_, i), x in flows.flows.items() if i == pop.id)
        if abs(routed - pop.demand) > max(DEMAND_RTOL * pop.demand, 10 * FLOW_FLOOR):
            raise InfeasibleFlowError(f"population {pop.id} routes {routed:.12g} of demand {pop.demand:.12g}")


def _potential_of_loads(instance: GameInstance, loads: np.ndarray) -> float:
    return float(instance.network.cost_array.integral(loads).sum())


def _social_cost_of_loads(instance: GameInstance, loads: np.ndarray) -> float:
    return float((loads * instance.network.cost_array.value(loads)).sum())


def beckmann_potential(instance: GameInstance, flows: FlowProfile) -> float:
    """``sum_e int_0^{f_e} c_e(z) dz`` in closed form."""
    check_feasible(instance, flows)
    return _potential_of_loads(instance, flows.edge_loads)


def social_cost(instance: GameInstance, flows: FlowProfile) -> float:
    """Total travel cost ``sum_e f_e c_e(f_e)``."""
    check_feasible(instance, flows)
    return _social_cost_of_loads(instance, flows.edge_loads)


def path_cost_table(instance: GameInstance, loads: np.ndarray) -> dict[str, np.ndarray]:
    """Cost of every path of every population at the given edge loads."""
    c = instance.network.cost_array.value(loads)
    return {i: inc @ c for i, inc in instance.incidence.items()}


def aggregate_path_cost(instance: GameInstance, flows: FlowProfile) -> float:
    """``sum`` over all path flows of flow times path cost; equals social cost."""
    table = path_cost_table(instance, flows.edge_loads)
    return float(sum(x @ table[i] for (_, i), x in flows.flows.items()))


def demand_blocks(instance: GameInstance) -> list[tuple[str, str, tuple[int, ...], float]]:
    """``(owner, population, allowed path indices, demand)`` for every knowledge type."""
    out = []
    for pop in instance.populations:
        types = instance.types_of(pop.id)
        if not types:
            out.append((SELFISH, pop.id, tuple(range(len(pop.paths))), pop.demand))
        for k in types:
            if k.demand > 0:
                out.append((k.id, pop.id, tuple(sorted(set(k.known_paths))), k.demand))
    return out


def _initial_split(n: int, demand: float, rng: Optional[np.random.Generator]) -> np.ndarray:
    if rng is None:
        return np.full(n, demand / n)
    return rng.dirichlet(np.ones(n)) * demand


def solve_ue(
    instance: GameInstance,
    tol: float = 1e-8,
    max_iters: int = 100_000,
    seed: int = 0,
) -> EquilibriumResult:
    """Information-constrained user equilibrium by minimising the Beckmann potential.

    Controller boundaries are ignored: every information type routes its
    demand selfishly over its known paths.  ``seed=0`` starts from uniform
    splits, any other seed from a random point of each type's simplex.
    """
    instance.require_valid()
    return _solve_selfish(instance, instance, tol, max_iters, seed)


def solve_so(
    instance: GameInstance,
    tol: float = 1e-8,
    max_iters: int = 100_000,
    seed: int = 0,
) -> EquilibriumResult:
    """Social optimum as the user equilibrium under marginal costs ``c + z c'``.

    Social cost, potential and path costs are reported with the original costs.
    """
    instance.require_valid()
    marginal = marginal_instance(instance)
    return _solve_selfish(marginal, instance, tol, max_iters, seed)


def marginal_instance(instance: GameInstance) -> GameInstance:
    return instance.with_costs([e.cost.marginal() for e in instance.network.edges])


def _solve_selfish(
    solve_on: GameInstance, report_on: GameInstance, tol: float, max_iters: int, seed: int
) -> EquilibriumResult:
    rng = np.random.default_rng(seed) if seed else None
    specs = demand_blocks(solve_on)
    inc = solve_on.incidence
    blocks = [Block(inc[i][list(allowed)], d) for _, i, allowed, d in specs]
    x0 = [_initial_split(len(allowed), d, rng) for _, _, allowed, d in specs]
    obj = EdgeObjective(solve_on.network.cost_array, "potential")
    stats = minimize(obj, blocks, x0, tol=tol, max_iters=max_iters)

    flows = {}
    for (owner, i, allowed, _), x in zip(specs, stats.flows):
        full = np.zeros(len(solve_on.population(i).paths))
        full[list(allowed)] = x
        flows[(owner, i)] = full
    profile = FlowProfile.build(report_on, flows).truncated(report_on)
    return _result(report_on, profile, specs, stats.iterations, stats.relative_gap, stats.converged)


def _result(instance, profile, specs, iterations, rel_gap, converged) -> EquilibriumResult:
    table = path_cost_table(instance, profile.edge_loads)
    path_costs = {}
    type_costs = {}
    for owner, i, allowed, _ in specs:
        path_costs[(owner, i)] = table[i].copy()
        type_costs[(owner, i)] = float(table[i][list(allowed)].min())
    return EquilibriumResult(
        flows=profile,
        social_cost=_social_cost_of_loads(instance, profile.edge_loads),
        potential=_potential_of_loads(instance, profile.edge_loads),
        path_costs=path_costs,
        type_costs=type_costs,
        iterations=iterations,
        relative_gap=rel_gap,
        converged=converged,
    )


def icue_violation(instance: GameInstance, result: EquilibriumResult) -> float:
    """Largest excess of a used path's cost over the cheapest known path of its type."""
    worst = 0.0
    for owner, i, allowed, _ in demand_blocks(instance):
        x = result.flows.flows[(owner, i)]
        costs = result.path_costs[(owner, i)]
        cmin = costs[list(allowed)].min()
        used = [s for s in allowed if x[s] > 0]
        if used:
            worst = max(worst, float(costs[used].max() - cmin))
    return worst


def worst_feasible_social_cost(instance: GameInstance) -> float:
    """Maximum social cost over all feasible flows.

    Social cost is convex in the path flows, so the maximum is attained at a
    vertex: every population on a single path.
    """
    inc = instance.incidence
    pops = instance.populations
    best = 0.0
    for choice in itertools.product(*(range(len(p.paths)) for p in pops)):
        loads = sum(p.demand * inc[p.id][s] for p, s in zip(pops, choice))
        best = max(best, _social_cost_of_loads(instance, np.asarray(loads)))
    return best
