"""Closed-form Price of Anarchy on Pigou's network and empirical sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from netctl.control_game import solve_nce
from netctl.equilibrium import solve_so
from netctl.game_model import ControlAssignment, GameInstance
from netctl.instances import pigou


@dataclass(frozen=True)
class PoaQuery:
    p: float
    R: int

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise ValueError(f"degree p must be > 0, got {self.p}")
        if int(self.R) != self.R or self.R < 1:
            raise ValueError(f"number of controllers must be an integer >= 1, got {self.R}")


def _check_p(p: float) -> None:
    if not p > 0:
        raise ValueError(f"degree p must be > 0, got {p}")


def pigou_nce_flow(q: PoaQuery) -> float:
    """Bottom-edge flow of each controller at the proportional Pigou equilibrium."""
    p, R = q.p, q.R
    return (p * R ** (p - 1) + R**p) ** (-1.0 / p)


def pigou_nce_social_cost(q: PoaQuery) -> float:
    p, R = q.p, q.R
    base = p * R ** (p - 1) + R**p
    return R ** (p + 1) * base ** (-1.0 - 1.0 / p) + 1.0 - R * base ** (-1.0 / p)


def pigou_so_social_cost(p: float) -> float:
    _check_p(p)
    return (p + 1) ** (-1.0 - 1.0 / p) + 1.0 - (p + 1) ** (-1.0 / p)


def poa_closed_form(q: PoaQuery) -> float:
    return pigou_nce_social_cost(q) / pigou_so_social_cost(q.p)


def poa_expanded_form(q: PoaQuery) -> float:
    """The same ratio expanded as ``[1 - R(R^{p-1}(p+R))^{-1/p} + ...] / [...]``."""
    p, R = q.p, q.R
    inner = R ** (p - 1) * (p + R)
    num = 1 - R * inner ** (-1 / p) + R ** (p + 1) * inner ** (-(p + 1) / p)
    den = 1 - (p + 1) ** (-1 / p) + (p + 1) ** (-(p + 1) / p)
    return num / den


def poa_limit(p: float) -> float:
    """PoA of the uncontrolled nonatomic game, the ``R -> infinity`` limit."""
    _check_p(p)
    a = (p + 1) ** (1.0 / p + 1.0)
    return a / (a - p)


def worst_case_threshold(q: PoaQuery) -> float:
    """Share of control above which a controller stops routing selfishly.

    Numerically equal to :func:`pigou_nce_flow`; it lies strictly below
    ``1/R`` for every ``p > 0``.
    """
    return pigou_nce_flow(q)


def threshold_reciprocal_scan(p_values: Sequence[float], R_values: Sequence[int]) -> list[tuple[float, int, float, float]]:
    """Rows ``(p, R, threshold, 1/R)`` where ``threshold >= 1/R`` fails."""
    rows = []
    for p in p_values:
        for R in R_values:
            t = worst_case_threshold(PoaQuery(p, R))
            if t < 1.0 / R:
                rows.append((p, R, t, 1.0 / R))
    return rows


def empirical_poa(instance: GameInstance, tol: float = 1e-9, seeds: Sequence[int] = (0, 1, 2)) -> float:
    """Worst NCE social cost over several starts divided by the optimal social cost."""
    if len(seeds) < 1:
        raise ValueError("need at least one seed")
    worst = 0.0
    for s in seeds:
        res = solve_nce(instance, tol=tol, seed=s)
        if not res.converged:
            raise RuntimeError(f"control game did not converge (seed {s}, gap {res.final_gap:.3e})")
        worst = max(worst, res.social_cost)
    so = solve_so(instance, tol=min(tol, 1e-10))
    if not so.converged:
        raise RuntimeError("social optimum did not converge")
    return worst / so.social_cost


@dataclass(frozen=True)
class AxisSpec:
    name: str
    lo: float
    hi: float
    step: float


@dataclass(frozen=True)
class SweepGrid:
    """Social cost at every feasible grid point of the controller shares."""

    axes: tuple[AxisSpec, ...]
    points: tuple[tuple[float, ...], ...]
    social_costs: tuple[float, ...]

    def argmax_points(self, atol: float = 1e-6) -> list[tuple[float, ...]]:
        top = max(self.social_costs)
        return [pt for pt, sc in zip(self.points, self.social_costs) if sc >= top - atol]


def _surface_point(args) -> float:
    template, fractions, tol = args
    nonzero = [(k, a) for k, a in enumerate(fractions) if a > 0]
    names = tuple(f"os{k + 1}" for k, _ in nonzero)
    shares = {
        f"os{k + 1}": {pop.id: pop.demand * a for pop in template.populations} for k, a in nonzero
    }
    res = solve_nce(template.with_assignment(ControlAssignment(names, shares)), tol=tol)
    if not res.converged:
        raise RuntimeError(f"control game did not converge at shares {fractions}")
    return res.social_cost


def sweep_workers() -> int:
    try:
        return max(1, int(os.environ.get("NETCTL_THREADS", "1")))
    except ValueError:
        return 1


def social_cost_surface(
    template: Optional[GameInstance] = None,
    R: int = 2,
    p: float = 1.0,
    step: float = 0.05,
    tol: float = 1e-9,
) -> SweepGrid:
    """NCE social cost over controller shares ``d1 (, d2)`` with ``dR = 1 - sum``.

    The same fractions apply to every population of ``template`` (default:
    Pigou with degree ``p``).  Controllers with a zero share are left out of
    the induced game.
    """
    if not step > 0:
        raise ValueError("grid step must be > 0")
    if R not in (2, 3):
        raise ValueError("surfaces are defined for 2 or 3 controllers")
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1")
    template = template if template is not None else pigou(p)
    template.require_valid()

    fractions: list[tuple[float, ...]] = []
    points: list[tuple[float, ...]] = []
    if R == 2:
        for a in range(n + 1):
            d1 = a / n
            points.append((d1,))
            fractions.append((d1, (n - a) / n))
        axes = (AxisSpec("d1", 0.0, 1.0, step),)
    else:
        for a in range(n + 1):
            for b in range(n + 1 - a):
                points.append((a / n, b / n))
                fractions.append((a / n, b / n, (n - a - b) / n))
        axes = (AxisSpec("d1", 0.0, 1.0, step), AxisSpec("d2", 0.0, 1.0, step))

    jobs = [(template, f, tol) for f in fractions]
    workers = sweep_workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            costs = list(pool.map(_surface_point, jobs))
    else:
        costs = [_surface_point(j) for j in jobs]
    return SweepGrid(axes, tuple(points), tuple(costs))


@dataclass(frozen=True)
class PoaRow:
    p: float
    R: int
    poa_closed: float
    poa_empirical: Optional[float]
    poa_limit: float


# proportional Pigou games beyond this many controllers are not solved numerically
EMPIRICAL_MAX_R = 64


def _poa_row(args) -> PoaRow:
    p, R, empirical, tol = args
    q = PoaQuery(p, R)
    emp = None
    if empirical and R <= EMPIRICAL_MAX_R:
        emp = empirical_poa(pigou(p, R), tol=tol)
    return PoaRow(p, R, poa_closed_form(q), emp, poa_limit(p))


def poa_sweep(
    p_values: Sequence[float], R_values: Sequence[int], empirical: bool = False, tol: float = 1e-9
) -> list[PoaRow]:
    """One row per ``(p, R)`` in lexicographic order."""
    jobs = [(float(p), int(R), empirical, tol) for p in p_values for R in R_values]
    for p, R, _, _ in jobs:
        PoaQuery(p, R)
    workers = sweep_workers()
    if workers > 1 and empirical:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_poa_row, jobs))
    return [_poa_row(j) for j in jobs]
