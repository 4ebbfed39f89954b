"""Network control game: controllers best-respond on their own subpopulations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from netctl.equilibrium import (
    FlowProfile,
    _potential_of_loads,
    _social_cost_of_loads,
    check_feasible,
    path_cost_table,
)
from netctl.frank_wolfe import Block, EdgeObjective, SolveStats, duality_gap, minimize
from netctl.game_model import GameInstance, UnknownControllerError

# best-response subproblems are solved well below the outer tolerance
INNER_TOL = 1e-13
DESCENT_SLACK = 1e-9


class BestResponseError(RuntimeError):
    pass


@dataclass(frozen=True)
class ControllerCostReport:
    controller: str
    cost: float
    by_population: Mapping[str, float]


@dataclass(frozen=True)
class KktResidual:
    """Per ``(population, path)`` KKT data of a controller's routing problem.

    ``multipliers[i][s]`` is the reduced self-marginal cost of path ``s``
    (the multiplier of ``x_s >= 0``); ``slackness[i][s]`` is ``x_s`` times it.
    """

    controller: str
    multipliers: Mapping[str, np.ndarray]
    slackness: Mapping[str, np.ndarray]

    @property
    def max_slackness(self) -> float:
        return max((float(np.abs(v).max()) for v in self.slackness.values()), default=0.0)


@dataclass(frozen=True)
class BestResponse:
    controller: str
    flows: Mapping[str, np.ndarray]
    cost: float
    kkt: KktResidual
    iterations: int
    converged: bool


@dataclass(frozen=True)
class NceResult:
    flows: FlowProfile
    reports: tuple[ControllerCostReport, ...]
    social_cost: float
    rounds: int
    potential_trace: tuple[float, ...]
    converged: bool
    final_gap: float
    gap_trace: tuple[float, ...] = field(default=())

    def report(self, r: str) -> ControllerCostReport:
        for rep in self.reports:
            if rep.controller == r:
                return rep
        raise UnknownControllerError(r)


def controller_cost(instance: GameInstance, flows: FlowProfile, r: str) -> ControllerCostReport:
    """Total travel cost of the traffic routed by ``r`` at the joint edge loads."""
    if r not in instance.assignment.controllers:
        raise UnknownControllerError(r)
    check_feasible(instance, flows)
    table = path_cost_table(instance, flows.edge_loads)
    by_pop = {i: float(x @ table[i]) for i, x in flows.owner_flows(r).items()}
    return ControllerCostReport(r, float(sum(by_pop.values())), by_pop)


def _controller_blocks(instance: GameInstance, r: str) -> tuple[list[str], list[Block]]:
    pops = instance.assignment.populations_of(r)
    inc = instance.incidence
    return pops, [Block(inc[i], instance.assignment.share(r, i)) for i in pops]


def _own_objective(instance: GameInstance, fixed_loads: np.ndarray) -> EdgeObjective:
    return EdgeObjective(instance.network.cost_array, "own", offset=fixed_loads)


def _kkt(obj: EdgeObjective, r: str, pops, blocks, flows, loads) -> KktResidual:
    grad = obj.grad(loads)
    mult, slack = {}, {}
    for i, b, x in zip(pops, blocks, flows):
        pg = b.incidence @ grad
        mult[i] = pg - pg.min()
        slack[i] = x * mult[i]
    return KktResidual(r, mult, slack)


def _respond(instance, r, fixed_loads, start, tol, max_iters) -> tuple[list[str], list[Block], SolveStats, EdgeObjective]:
    pops, blocks = _controller_blocks(instance, r)
    if start is None:
        start = [np.full(b.incidence.shape[0], b.demand / b.incidence.shape[0]) for b in blocks]
    obj = _own_objective(instance, fixed_loads)
    return pops, blocks, minimize(obj, blocks, start, tol=tol, max_iters=max_iters), obj


def best_response(
    instance: GameInstance,
    fixed_loads: np.ndarray,
    r: str,
    tol: float = INNER_TOL,
    max_iters: int = 100_000,
    initial: Optional[Mapping[str, np.ndarray]] = None,
) -> BestResponse:
    """Route ``r``'s demand to minimise its own cost against fixed loads of the others.

    The subproblem ``min sum_e x_e c_e(x_e + g_e)`` is convex for nonnegative
    coefficients and is solved on self-marginal costs ``c(x+g) + x c'(x+g)``.

    Raises:
        BestResponseError: the relative gap did not reach ``tol``.
    """
    if r not in instance.assignment.controllers:
        raise UnknownControllerError(r)
    instance.require_valid()
    fixed_loads = np.asarray(fixed_loads, dtype=float)
    pops = instance.assignment.populations_of(r)
    start = None if initial is None else [np.asarray(initial[i], dtype=float) for i in pops]
    pops, blocks, stats, obj = _respond(instance, r, fixed_loads, start, tol, max_iters)
    if not stats.converged:
        raise BestResponseError(f"best response of {r} stalled at relative gap {stats.relative_gap:.3e}")
    kkt = _kkt(obj, r, pops, blocks, stats.flows, stats.loads)
    return BestResponse(
        r,
        dict(zip(pops, stats.flows)),
        obj.value(stats.loads),
        kkt,
        stats.iterations,
        stats.converged,
    )


def initial_profile(instance: GameInstance, seed: int = 0) -> dict[tuple[str, str], np.ndarray]:
    """Uniform path splits, or seeded random simplex points when ``seed != 0``."""
    rng = np.random.default_rng(seed) if seed else None
    flows = {}
    asg = instance.assignment
    for r in asg.controllers:
        for i in asg.populations_of(r):
            n = len(instance.population(i).paths)
            d = asg.share(r, i)
            flows[(r, i)] = np.full(n, d / n) if rng is None else rng.dirichlet(np.ones(n)) * d
    return flows


def solve_nce(
    instance: GameInstance,
    tol: float = 1e-9,
    max_rounds: int = 10_000,
    seed: int = 0,
    initial: Optional[Mapping[tuple[str, str], np.ndarray]] = None,
) -> NceResult:
    """Nash equilibrium of the control game by round-robin best responses.

    Before each controller moves, its best-response gap (an upper bound on the
    cost it can still save by deviating) is recorded; the run has converged
    once every gap in a full round is at most ``tol``.  ``potential_trace``
    holds the Beckmann potential of the start and after every move.
    """
    instance.require_valid()
    asg = instance.assignment
    inc = instance.incidence
    flows = dict(initial) if initial is not None else initial_profile(instance, seed)
    flows = {k: np.asarray(v, dtype=float).copy() for k, v in flows.items()}
    active = [r for r in asg.controllers if asg.populations_of(r)]

    def own_loads(r: str) -> np.ndarray:
        out = np.zeros(len(instance.network.edges))
        for i in asg.populations_of(r):
            out += flows[(r, i)] @ inc[i]
        return out

    loads = {r: own_loads(r) for r in active}
    total = sum(loads.values())
    trace = [_potential_of_loads(instance, total)]
    gaps = []
    converged = False
    rounds = 0
    worst = np.inf
    while rounds < max_rounds:
        rounds += 1
        worst = 0.0
        for r in active:
            fixed = total - loads[r]
            pops = asg.populations_of(r)
            start = [flows[(r, i)] for i in pops]
            _, blocks, stats, _ = _respond(instance, r, fixed, start, INNER_TOL, 100_000)
            worst = max(worst, stats.initial_gap)
            for i, x in zip(pops, stats.flows):
                flows[(r, i)] = x
            loads[r] = own_loads(r)
            total = fixed + loads[r]
            trace.append(_potential_of_loads(instance, total))
        gaps.append(worst)
        if worst <= tol:
            converged = True
            break

    profile = FlowProfile.build(instance, flows)
    reports = tuple(controller_cost(instance, profile, r) for r in asg.controllers)
    return NceResult(
        flows=profile,
        reports=reports,
        social_cost=_social_cost_of_loads(instance, profile.edge_loads),
        rounds=rounds,
        potential_trace=tuple(trace),
        converged=converged,
        final_gap=float(worst),
        gap_trace=tuple(gaps),
    )


def verify_potential_descent(trace: Sequence[float], slack: float = DESCENT_SLACK) -> bool:
    """True iff no step of the trace increases by ``slack`` or more."""
    return all(b - a < slack for a, b in zip(trace, trace[1:]))


def improvement_available(instance: GameInstance, flows: FlowProfile, r: str) -> float:
    """Cost ``r`` would save by switching to its exact best response."""
    own = np.zeros(len(instance.network.edges))
    inc = instance.incidence
    for i, x in flows.owner_flows(r).items():
        own += x @ inc[i]
    fixed = flows.edge_loads - own
    br = best_response(instance, fixed, r, initial=flows.owner_flows(r))
    current = controller_cost(instance, flows, r).cost
    return current - br.cost


def best_response_gap(instance: GameInstance, flows: FlowProfile, r: str) -> float:
    """First-order bound on the improvement available to ``r``."""
    pops, blocks = _controller_blocks(instance, r)
    own = np.zeros(len(instance.network.edges))
    inc = instance.incidence
    xs = [flows.flows[(r, i)] for i in pops]
    for i, x in zip(pops, xs):
        own += x @ inc[i]
    obj = _own_objective(instance, flows.edge_loads - own)
    gap, _ = duality_gap(obj, blocks, xs, own)
    return gap


def affine_splittable_potential(instance: GameInstance, flows: FlowProfile) -> float:
    """Exact potential of the control game when every edge cost is affine.

    With ``c_e(f) = a_e f + b_e`` the function
    ``sum_e [b_e f_e + a_e/2 (f_e**2 + sum_r (x_e^r)**2)]`` changes by exactly a
    controller's cost change under any unilateral deviation.
    """
    a, b = [], []
    for e in instance.network.edges:
        terms = dict((q, coef) for coef, q in e.cost.terms() if coef != 0.0)
        if set(terms) - {0.0, 1.0}:
            raise ValueError(f"edge {e.id} is not affine")
        a.append(terms.get(1.0, 0.0))
        b.append(terms.get(0.0, 0.0))
    a, b = np.array(a), np.array(b)
    inc = instance.incidence
    own_sq = np.zeros(len(a))
    for r in instance.assignment.controllers:
        own = np.zeros(len(a))
        for i, x in flows.owner_flows(r).items():
            own += x @ inc[i]
        own_sq += own**2
    f = flows.edge_loads
    return float((b * f + 0.5 * a * (f**2 + own_sq)).sum())
