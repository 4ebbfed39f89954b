"""Canonical instances: Pigou's two-link network and Braess' network."""

from __future__ import annotations

from typing import Optional, Sequence

from netctl.costs import CostPolynomial, monomial
from netctl.game_model import (
    ControlAssignment,
    Edge,
    GameInstance,
    InformationType,
    Network,
    Population,
    enumerate_paths,
)


def _assignment(pops, n_controllers: int, fractions: Optional[Sequence[float]]) -> ControlAssignment:
    if fractions is not None:
        return ControlAssignment.from_fractions(pops, fractions)
    if n_controllers == 1:
        return ControlAssignment.full_control(pops)
    return ControlAssignment.proportional(pops, n_controllers)


def pigou_network(p: float = 1.0) -> Network:
    """Edge ``e1`` (top) costs 1; edge ``e2`` (bottom) costs ``f**p``."""
    return Network(
        ("O", "D"),
        (
            Edge("e1", "O", "D", CostPolynomial((1.0,))),
            Edge("e2", "O", "D", monomial(p)),
        ),
    )


def pigou(
    p: float = 1.0,
    n_controllers: int = 1,
    fractions: Optional[Sequence[float]] = None,
    demand: float = 1.0,
) -> GameInstance:
    """Pigou game with proportional control, or explicit controller fractions."""
    net = pigou_network(p)
    pops = (Population("od", "O", "D", demand, enumerate_paths(net, "O", "D")),)
    return GameInstance(net, pops, _assignment(pops, n_controllers, fractions))


def braess_network(p: float = 1.0) -> Network:
    """Braess' network: O->A and B->D cost ``f**p``, A->D and O->B cost 1, A->B is free."""
    return Network(
        ("O", "A", "B", "D"),
        (
            Edge("e1", "O", "A", monomial(p)),
            Edge("e2", "A", "D", CostPolynomial((1.0,))),
            Edge("e3", "O", "B", CostPolynomial((1.0,))),
            Edge("e4", "B", "D", monomial(p)),
            Edge("e5", "A", "B", CostPolynomial((0.0,))),
        ),
    )


def braess(
    p: float = 1.0,
    n_controllers: int = 1,
    fractions: Optional[Sequence[float]] = None,
    demand: float = 1.0,
) -> GameInstance:
    net = braess_network(p)
    pops = (Population("od", "O", "D", demand, enumerate_paths(net, "O", "D")),)
    return GameInstance(net, pops, _assignment(pops, n_controllers, fractions))


def pigou_two_types(p: float = 1.0, top_only: float = 0.4) -> GameInstance:
    """Pigou game whose type ``A`` only knows the constant top edge."""
    base = pigou(p)
    pop = base.populations[0]
    top = pop.paths.index(("e1",))
    types = (
        InformationType("A", pop.id, (top,), top_only),
        InformationType("B", pop.id, tuple(range(len(pop.paths))), pop.demand - top_only),
    )
    return GameInstance(base.network, base.populations, base.assignment, types)
