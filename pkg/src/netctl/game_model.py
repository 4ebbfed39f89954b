"""Networks, populations, information types and controller assignments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from netctl.costs import Cost, CostPolynomial, EdgeCostArray, PowerCost

Path = tuple[str, ...]

# relative tolerance for demand bookkeeping (share sums, type sums)
DEMAND_RTOL = 1e-9


class InvalidInstanceError(ValueError):
    """Raised when a solver is handed an instance that fails validation."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid game instance:\n" + report.format())


class UnknownControllerError(KeyError):
    pass


class NoPathError(ValueError):
    pass


class TooManyPathsError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    cost: Cost


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {e.id: k for k, e in enumerate(self.edges)}

    @cached_property
    def cost_array(self) -> EdgeCostArray:
        return EdgeCostArray([e.cost for e in self.edges])

    def edge(self, edge_id: str) -> Edge:
        return self.edges[self.edge_index[edge_id]]

    def with_costs(self, costs: Sequence[Cost]) -> "Network":
        edges = tuple(Edge(e.id, e.tail, e.head, c) for e, c in zip(self.edges, costs))
        return Network(self.nodes, edges)


@dataclass(frozen=True)
class Population:
    id: str
    origin: str
    destination: str
    demand: float
    paths: tuple[Path, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(tuple(p) for p in self.paths))
        object.__setattr__(self, "demand", float(self.demand))


@dataclass(frozen=True)
class InformationType:
    """A knowledge class inside a population.

    ``known_paths`` holds indices into the population's path list.
    """

    id: str
    population: str
    known_paths: tuple[int, ...]
    demand: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "known_paths", tuple(int(k) for k in self.known_paths))
        object.__setattr__(self, "demand", float(self.demand))


@dataclass(frozen=True)
class ControlAssignment:
    """Demand routed by each controller: ``shares[r][i] = d_i^r``."""

    controllers: tuple[str, ...]
    shares: Mapping[str, Mapping[str, float]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "controllers", tuple(self.controllers))
        object.__setattr__(
            self,
            "shares",
            {r: {i: float(v) for i, v in self.shares.get(r, {}).items()} for r in self.controllers},
        )

    def share(self, r: str, i: str) -> float:
        return self.shares.get(r, {}).get(i, 0.0)

    def populations_of(self, r: str) -> list[str]:
        """Support ``N_r`` of controller ``r``."""
        return [i for i, v in self.shares.get(r, {}).items() if v > 0.0]

    @classmethod
    def full_control(cls, populations: Sequence[Population], controller: str = "os1") -> "ControlAssignment":
        return cls((controller,), {controller: {p.id: p.demand for p in populations}})

    @classmethod
    def proportional(cls, populations: Sequence[Population], n: int) -> "ControlAssignment":
        names = tuple(f"os{k + 1}" for k in range(n))
        return cls(names, {r: {p.id: p.demand / n for p in populations} for r in names})

    @classmethod
    def from_fractions(cls, populations: Sequence[Population], fractions: Sequence[float]) -> "ControlAssignment":
        """Every population split by the same controller fractions."""
        names = tuple(f"os{k + 1}" for k in range(len(fractions)))
        return cls(
            names,
            {r: {p.id: p.demand * float(a) for p in populations} for r, a in zip(names, fractions)},
        )


@dataclass(frozen=True)
class Violation:
    code: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.location}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def format(self) -> str:
        return "ok" if self.ok else "\n".join(str(v) for v in self.violations)


@dataclass(frozen=True)
class GameInstance:
    network: Network
    populations: tuple[Population, ...]
    assignment: ControlAssignment
    information_types: tuple[InformationType, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "populations", tuple(self.populations))
        object.__setattr__(self, "information_types", tuple(self.information_types))

    @cached_property
    def population_index(self) -> dict[str, int]:
        return {p.id: k for k, p in enumerate(self.populations)}

    def population(self, i: str) -> Population:
        return self.populations[self.population_index[i]]

    @cached_property
    def incidence(self) -> dict[str, np.ndarray]:
        """Path-edge 0/1 matrices, one ``(n_paths, m)`` array per population."""
        idx = self.network.edge_index
        m = len(self.network.edges)
        out = {}
        for pop in self.populations:
            mat = np.zeros((len(pop.paths), m))
            for s, path in enumerate(pop.paths):
                for e in path:
                    mat[s, idx[e]] += 1.0
            out[pop.id] = mat
        return out

    @property
    def total_demand(self) -> float:
        return sum(p.demand for p in self.populations)

    def types_of(self, i: str) -> list[InformationType]:
        return [k for k in self.information_types if k.population == i]

    def with_assignment(self, assignment: ControlAssignment) -> "GameInstance":
        return GameInstance(self.network, self.populations, assignment, self.information_types)

    def with_costs(self, costs: Sequence[Cost]) -> "GameInstance":
        return GameInstance(
            self.network.with_costs(costs), self.populations, self.assignment, self.information_types
        )

    @cached_property
    def report(self) -> ValidationReport:
        return validate(self)

    def require_valid(self) -> None:
        if not self.report.ok:
            raise InvalidInstanceError(self.report)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= DEMAND_RTOL * max(1.0, abs(a), abs(b))


def _check_path(network: Network, pop: Population, path: Path, where: str) -> list[Violation]:
    if not path:
        return [Violation("path.empty", where, "path has no edges")]
    idx = network.edge_index
    missing = [e for e in path if e not in idx]
    if missing:
        return [Violation("path.edge", where, f"unknown edge(s) {missing}")]
    edges = [network.edge(e) for e in path]
    out = []
    if edges[0].tail != pop.origin:
        out.append(Violation("path.endpoints", where, f"starts at {edges[0].tail}, not origin {pop.origin}"))
    if edges[-1].head != pop.destination:
        out.append(
            Violation("path.endpoints", where, f"ends at {edges[-1].head}, not destination {pop.destination}")
        )
    for a, b in zip(edges, edges[1:]):
        if a.head != b.tail:
            out.append(Violation("path.contiguity", where, f"edge {a.id} does not lead into {b.id}"))
    visited = [edges[0].tail] + [e.head for e in edges]
    if len(set(visited)) != len(visited):
        out.append(Violation("path.simple", where, f"path repeats a node: {'->'.join(visited)}"))
    return out


def validate(instance: GameInstance) -> ValidationReport:
    """Check every structural invariant; violations are collected, never raised."""
    v: list[Violation] = []
    net = instance.network
    nodes = set(net.nodes)
    if len(nodes) != len(net.nodes):
        v.append(Violation("network.nodes", "nodes", "duplicate node identifiers"))

    seen: set[str] = set()
    for e in net.edges:
        where = f"edge {e.id}"
        if e.id in seen:
            v.append(Violation("edge.id", where, "duplicate edge id"))
        seen.add(e.id)
        for end in (e.tail, e.head):
            if end not in nodes:
                v.append(Violation("edge.endpoint", where, f"unknown node {end!r}"))
        terms = e.cost.terms()
        if any(not math.isfinite(a) or not math.isfinite(q) for a, q in terms):
            v.append(Violation("cost.finite", where, "non-finite cost parameter"))
        elif any(a < 0 for a, _ in terms):
            v.append(Violation("cost.nonnegative", where, "cost coefficients must be >= 0"))
        if isinstance(e.cost, PowerCost) and e.cost.power <= 0:
            v.append(Violation("cost.power", where, "power must be > 0"))

    pop_ids: set[str] = set()
    for pop in instance.populations:
        where = f"population {pop.id}"
        if pop.id in pop_ids:
            v.append(Violation("population.id", where, "duplicate population id"))
        pop_ids.add(pop.id)
        if not pop.demand > 0:
            v.append(Violation("population.demand", where, f"demand must be > 0 (got {pop.demand})"))
        if pop.origin not in nodes or pop.destination not in nodes:
            v.append(Violation("population.od", where, "origin/destination not in network"))
        if pop.origin == pop.destination:
            v.append(Violation("population.od", where, "origin equals destination"))
        if not pop.paths:
            v.append(Violation("population.paths", where, "no paths"))
        if len(set(pop.paths)) != len(pop.paths):
            v.append(Violation("path.distinct", where, "duplicate paths"))
        for s, path in enumerate(pop.paths):
            v.extend(_check_path(net, pop, path, f"{where} path {s}"))

    asg = instance.assignment
    if len(set(asg.controllers)) != len(asg.controllers):
        v.append(Violation("assignment.controllers", "controllers", "duplicate controller ids"))
    if not asg.controllers:
        v.append(Violation("assignment.controllers", "controllers", "no controllers"))
    for r in asg.controllers:
        for i, d in asg.shares.get(r, {}).items():
            if i not in pop_ids:
                v.append(Violation("assignment.population", f"controller {r}", f"unknown population {i!r}"))
            if not d >= 0 or not math.isfinite(d):
                v.append(Violation("assignment.share", f"controller {r}", f"share of {i} must be >= 0"))
    for pop in instance.populations:
        total = sum(asg.share(r, pop.id) for r in asg.controllers)
        if not _close(total, pop.demand):
            v.append(
                Violation(
                    "assignment.sum",
                    f"population {pop.id}",
                    f"controller shares sum to {total:.12g}, demand is {pop.demand:.12g}",
                )
            )

    type_ids: set[str] = set()
    for k in instance.information_types:
        where = f"information type {k.id}"
        if k.id in type_ids:
            v.append(Violation("type.id", where, "duplicate type id"))
        type_ids.add(k.id)
        if k.population not in pop_ids:
            v.append(Violation("type.population", where, f"unknown population {k.population!r}"))
            continue
        pop = instance.population(k.population)
        if not k.known_paths:
            v.append(Violation("type.known", where, "known path set is empty"))
        if any(not 0 <= s < len(pop.paths) for s in k.known_paths):
            v.append(Violation("type.known", where, "known path outside the population's paths"))
        if not k.demand >= 0:
            v.append(Violation("type.demand", where, "demand must be >= 0"))
    for pop in instance.populations:
        types = instance.types_of(pop.id)
        if types and not _close(sum(k.demand for k in types), pop.demand):
            v.append(Violation("type.sum", f"population {pop.id}", "type demands do not sum to demand"))

    return ValidationReport(tuple(v))


def share_of_control(instance: GameInstance, r: str) -> float:
    asg = instance.assignment
    if r not in asg.controllers:
        raise UnknownControllerError(r)
    return sum(asg.share(r, i) for i in asg.populations_of(r)) / instance.total_demand


def is_proportional(instance: GameInstance, tol: float = 1e-9) -> bool:
    asg = instance.assignment
    n = len(asg.controllers)
    for r in asg.controllers:
        for pop in instance.populations:
            d = asg.share(r, pop.id)
            if d <= 0 or abs(d / pop.demand - 1.0 / n) > tol:
                return False
    return True


def enumerate_paths(network: Network, origin: str, destination: str, max_paths: int = 64) -> list[Path]:
    """All simple origin-destination paths, ordered lexicographically by edge id.

    Raises:
        NoPathError: no path connects the pair.
        TooManyPathsError: more than ``max_paths`` simple paths exist.
    """
    if origin == destination:
        raise ValueError("origin and destination must differ")
    nodes = set(network.nodes)
    for n in (origin, destination):
        if n not in nodes:
            raise ValueError(f"unknown node {n!r}")
    out_edges: dict[str, list[Edge]] = {n: [] for n in network.nodes}
    for e in network.edges:
        out_edges[e.tail].append(e)
    for lst in out_edges.values():
        lst.sort(key=lambda e: e.id)

    found: list[Path] = []

    def dfs(node: str, visited: set[str], prefix: list[str]) -> None:
        for e in out_edges[node]:
            if e.head in visited:
                continue
            if e.head == destination:
                found.append(tuple(prefix + [e.id]))
                if len(found) > max_paths:
                    raise TooManyPathsError(
                        f"more than {max_paths} simple paths from {origin} to {destination}"
                    )
                continue
            visited.add(e.head)
            dfs(e.head, visited, prefix + [e.id])
            visited.discard(e.head)

    dfs(origin, {origin}, [])
    if not found:
        raise NoPathError(f"no path from {origin} to {destination}")
    return sorted(found)


__all__ = [
    "CostPolynomial",
    "PowerCost",
    "Path",
    "Edge",
    "Network",
    "Population",
    "InformationType",
    "ControlAssignment",
    "GameInstance",
    "Violation",
    "ValidationReport",
    "InvalidInstanceError",
    "UnknownControllerError",
    "NoPathError",
    "TooManyPathsError",
    "validate",
    "share_of_control",
    "is_proportional",
    "enumerate_paths",
]
