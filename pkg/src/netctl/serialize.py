"""JSON serialisation of results and CSV emission for sweeps and traces."""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence

import numpy as np

from netctl.analytics import PoaRow, SweepGrid
from netctl.control_game import NceResult
from netctl.equilibrium import EquilibriumResult, FlowProfile
from netctl.game_model import GameInstance
from netctl.learning import EpisodeLog
from netctl.os_choice import OsChoiceTrace


def _flow_rows(instance: GameInstance, flows: FlowProfile) -> list[dict]:
    rows = []
    for (owner, i), x in flows.flows.items():
        paths = instance.population(i).paths
        for s, v in enumerate(x):
            rows.append({"owner": owner, "population": i, "path_index": s, "path": list(paths[s]), "flow": float(v)})
    return rows


def _loads(instance: GameInstance, flows: FlowProfile) -> dict[str, float]:
    return {e.id: float(f) for e, f in zip(instance.network.edges, flows.edge_loads)}


def equilibrium_to_dict(instance: GameInstance, result: EquilibriumResult, kind: str) -> dict:
    return {
        "kind": kind,
        "social_cost": result.social_cost,
        "potential": result.potential,
        "relative_gap": result.relative_gap,
        "iterations": result.iterations,
        "converged": result.converged,
        "edge_loads": _loads(instance, result.flows),
        "flows": _flow_rows(instance, result.flows),
        "type_costs": [
            {"owner": o, "population": i, "cost": c} for (o, i), c in result.type_costs.items()
        ],
    }


def nce_to_dict(instance: GameInstance, result: NceResult) -> dict:
    return {
        "kind": "nce",
        "social_cost": result.social_cost,
        "rounds": result.rounds,
        "converged": result.converged,
        "final_gap": result.final_gap,
        "edge_loads": _loads(instance, result.flows),
        "flows": _flow_rows(instance, result.flows),
        "controller_costs": [
            {"controller": rep.controller, "cost": rep.cost, "by_population": dict(rep.by_population)}
            for rep in result.reports
        ],
        "potential_trace": list(result.potential_trace),
    }


def flows_from_dict(instance: GameInstance, data: dict) -> FlowProfile:
    """Rebuild the flow profile stored in a serialised result."""
    flows: dict[tuple[str, str], np.ndarray] = {}
    for row in data["flows"]:
        key = (row["owner"], row["population"])
        if key not in flows:
            flows[key] = np.zeros(len(instance.population(row["population"]).paths))
        flows[key][row["path_index"]] = row["flow"]
    return FlowProfile.build(instance, flows)


def to_json(data: dict) -> str:
    return json.dumps(data, indent=2) + "\n"


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def poa_csv(rows: Sequence[PoaRow]) -> str:
    return _csv(
        ["p", "R", "poa_closed", "poa_empirical", "poa_limit"],
        ((r.p, r.R, r.poa_closed, r.poa_empirical, r.poa_limit) for r in rows),
    )


def surface_csv(grid: SweepGrid) -> str:
    header = [a.name for a in grid.axes] + ["social_cost"]
    return _csv(header, (list(pt) + [sc] for pt, sc in zip(grid.points, grid.social_costs)))


def os_trace_csv(trace: OsChoiceTrace) -> str:
    rows = []
    for k, step in enumerate(trace.steps):
        for i, shares in step.shares.shares.items():
            for r in step.shares.controllers:
                rows.append((k, i, r, shares.get(r, 0.0), step.per_unit_costs[i][r], step.social_cost))
    return _csv(["step", "population", "controller", "share", "per_unit_cost", "social_cost"], rows)


def episode_csv(log: EpisodeLog) -> str:
    rows = []
    for t in range(log.rounds):
        for k, r in enumerate(log.controllers):
            rows.append((t + 1, r, float(log.controller_costs[t, k]), float(log.social_costs[t])))
    return _csv(["round", "controller", "cost", "social_cost"], rows)
