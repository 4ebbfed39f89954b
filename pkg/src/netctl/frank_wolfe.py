"""Conditional-gradient minimisation of separable edge objectives over path flows.

The feasible set is a product of scaled simplices (one per demand block) and
the objective is ``sum_e h_e(x_e)`` where ``x_e`` is the load the blocks put
on edge ``e``.  The linear subproblem is a cheapest-path choice per block;
steps shift mass from a used path onto that cheapest path (pairwise /
away-step variant), with an exact 1-D line search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from netctl.costs import EdgeCostArray


class EdgeObjective:
    """``sum_e h_e(x_e)`` for one of two edge-function families.

    ``kind="potential"``: ``h(x) = int_0^x c(z + g) dz`` (Beckmann form).
    ``kind="own"``: ``h(x) = x * c(x + g)``, a controller's own travel cost with
    background load ``g``; its gradient is the self-marginal cost.
    """

    def __init__(self, costs: EdgeCostArray, kind: str = "potential", offset: Optional[np.ndarray] = None):
        if kind not in ("potential", "own"):
            raise ValueError(f"unknown objective kind {kind!r}")
        self.costs = costs
        self.kind = kind
        m = len(costs)
        self.offset = np.zeros(m) if offset is None else np.asarray(offset, dtype=float)

    def value(self, x: np.ndarray) -> float:
        c, g = self.costs, self.offset
        if self.kind == "potential":
            return float((c.integral(x + g) - c.integral(g)).sum())
        return float((x * c.value(x + g)).sum())

    def grad(self, x: np.ndarray) -> np.ndarray:
        c, z = self.costs, x + self.offset
        if self.kind == "potential":
            return c.value(z)
        return c.value(z) + x * c.derivative(z)

    def curvature(self, x: np.ndarray) -> np.ndarray:
        c, z = self.costs, x + self.offset
        if self.kind == "potential":
            return c.derivative(z)
        return 2.0 * c.derivative(z) + x * c.second_derivative(z)


@dataclass
class Block:
    """Demand block: path-edge incidence of its allowed paths and its demand."""

    incidence: np.ndarray
    demand: float


@dataclass
class SolveStats:
    flows: list[np.ndarray]
    loads: np.ndarray
    initial_gap: float
    gap: float
    relative_gap: float
    iterations: int
    converged: bool


def duality_gap(obj: EdgeObjective, blocks: Sequence[Block], flows: Sequence[np.ndarray], loads: np.ndarray):
    """Frank-Wolfe gap ``grad . (x - s)`` and the scale ``grad . x``."""
    grad = obj.grad(loads)
    gap = 0.0
    scale = 0.0
    for b, x in zip(blocks, flows):
        pg = b.incidence @ grad
        gap += float(x @ (pg - pg.min()))
        scale += float(x @ pg)
    return gap, scale


def line_search(obj: EdgeObjective, loads: np.ndarray, direction: np.ndarray, upper: float) -> float:
    """Exact minimiser of ``t -> obj(loads + t d)`` on ``[0, upper]``.

    Safeguarded Newton on the derivative; falls back to bisection whenever a
    Newton step leaves the current bracket.
    """
    support = direction != 0.0
    d = direction[support]

    def slope(t: float) -> float:
        return float(obj.grad(loads + t * direction)[support] @ d)

    s0 = slope(0.0)
    if s0 >= 0.0:
        return 0.0
    if slope(upper) <= 0.0:
        return upper
    scale = abs(s0)
    lo, hi = 0.0, upper
    t = 0.5 * upper
    for _ in range(200):
        s = slope(t)
        if s > 0.0:
            hi = t
        else:
            lo = t
        if abs(s) <= 1e-15 * scale or hi - lo <= 4e-16 * upper:
            break
        h = float(obj.curvature(loads + t * direction)[support] @ (d * d))
        nxt = t - s / h if h > 0.0 else np.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        t = nxt
    return t


def minimize(
    obj: EdgeObjective,
    blocks: Sequence[Block],
    flows0: Sequence[np.ndarray],
    tol: float = 1e-8,
    max_iters: int = 100_000,
) -> SolveStats:
    """Minimise ``obj`` over the product of block simplices.

    Converged means relative gap ``gap / (grad . x) <= tol``; when the scale is
    zero the absolute gap is compared instead.
    """
    flows = [np.array(x, dtype=float) for x in flows0]
    m = len(obj.costs)
    loads = np.zeros(m)
    for b, x in zip(blocks, flows):
        loads += x @ b.incidence

    initial_gap = None
    gap = rel = np.inf
    it = 0
    converged = False
    while True:
        gap, scale = duality_gap(obj, blocks, flows, loads)
        if initial_gap is None:
            initial_gap = gap
        rel = gap / scale if scale > 0.0 else gap
        if rel <= tol:
            converged = True
            break
        if it >= max_iters:
            break
        it += 1
        for b, x in zip(blocks, flows):
            inc = b.incidence
            for s in range(len(x)):
                if x[s] <= 0.0:
                    continue
                pg = inc @ obj.grad(loads)
                best = int(np.argmin(pg))
                if pg[s] <= pg[best]:
                    continue
                direction = inc[best] - inc[s]
                step = line_search(obj, loads, direction, x[s])
                if step <= 0.0:
                    continue
                if step >= x[s]:
                    step = x[s]
                    x[s] = 0.0
                else:
                    x[s] -= step
                x[best] += step
                loads += step * direction
        # resync loads to avoid drift from incremental updates
        loads = np.zeros(m)
        for b, x in zip(blocks, flows):
            loads += x @ b.incidence
    return SolveStats(flows, loads, float(initial_gap), float(gap), float(rel), it, converged)
