"""Reading and writing game files (JSON text).

Top-level keys: ``nodes``, ``edges``, ``populations``, optional
``controllers`` (default: one controller with full control) and optional
``information_types``.  Populations without ``paths`` get every simple path.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path as FsPath
from typing import Any, Optional, Union

from netctl.costs import CostPolynomial, PowerCost
from netctl.game_model import (
    ControlAssignment,
    Edge,
    GameInstance,
    InformationType,
    Network,
    NoPathError,
    Population,
    TooManyPathsError,
    enumerate_paths,
)


class GameFileError(ValueError):
    """Malformed game file; the message names the offending line when known."""


def bundled_games() -> list[str]:
    root = resources.files("netctl") / "games"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".game"))


def resolve(path: Union[str, FsPath]) -> FsPath:
    """Return ``path`` if it exists, else the bundled game of that name."""
    p = FsPath(path)
    if p.exists():
        return p
    bundled = resources.files("netctl") / "games" / p.name
    if bundled.is_file():
        return FsPath(str(bundled))
    raise FileNotFoundError(f"no such game file: {path}")


def _locate(text: str, keys: tuple) -> Optional[int]:
    """Line number (1-based) of the node at ``keys``, via YAML marks (JSON is YAML)."""
    try:
        import yaml

        node = yaml.compose(text)
        for k in keys:
            if isinstance(k, int):
                node = node.value[k]
            else:
                node = next(v for kn, v in node.value if kn.value == k)
        return node.start_mark.line + 1
    except Exception:
        return None


class _Reader:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, keys: tuple, message: str):
        where = "".join(f"[{k}]" if isinstance(k, int) else f".{k}" for k in keys).lstrip(".")
        line = _locate(self.text, keys)
        prefix = f"{self.source}:{line}" if line else self.source
        raise GameFileError(f"{prefix}: {where or '<root>'}: {message}")

    def get(self, obj: Any, key: str, keys: tuple, kind=None, default=...):
        if not isinstance(obj, dict):
            self.fail(keys, "expected an object")
        if key not in obj:
            if default is not ...:
                return default
            self.fail(keys, f"missing key {key!r}")
        value = obj[key]
        if kind is not None and not isinstance(value, kind):
            self.fail(keys + (key,), f"expected {getattr(kind, '__name__', kind)}")
        return value

    def number(self, obj, key, keys, default=...) -> float:
        v = self.get(obj, key, keys, default=default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(keys + (key,), "expected a number")
        return float(v)


def parse_game(text: str, source: str = "<game>", max_paths: int = 64) -> GameInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    rd = _Reader(text, source)
    if not isinstance(data, dict):
        rd.fail((), "top level must be an object")

    nodes = rd.get(data, "nodes", (), list)
    edges = []
    for k, e in enumerate(rd.get(data, "edges", (), list)):
        at = ("edges", k)
        if isinstance(e, dict) and "power" in e:
            cost = PowerCost(rd.number(e, "power", at), rd.number(e, "coefficient", at, default=1.0))
        else:
            coeffs = rd.get(e, "coeffs", at, list)
            if not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in coeffs):
                rd.fail(at + ("coeffs",), "coefficients must be numbers")
            cost = CostPolynomial(tuple(coeffs))
        edges.append(Edge(str(rd.get(e, "id", at)), str(rd.get(e, "tail", at)), str(rd.get(e, "head", at)), cost))
    network = Network(tuple(str(n) for n in nodes), tuple(edges))

    pops = []
    for k, p in enumerate(rd.get(data, "populations", (), list)):
        at = ("populations", k)
        origin, dest = str(rd.get(p, "origin", at)), str(rd.get(p, "destination", at))
        raw = rd.get(p, "paths", at, list, default=None)
        if raw is None:
            try:
                paths = enumerate_paths(network, origin, dest, max_paths)
            except (NoPathError, TooManyPathsError, ValueError) as exc:
                rd.fail(at, str(exc))
        else:
            paths = [tuple(str(e) for e in path) for path in raw]
        pops.append(Population(str(rd.get(p, "id", at)), origin, dest, rd.number(p, "demand", at), tuple(paths)))

    raw_ctrl = rd.get(data, "controllers", (), list, default=None)
    if raw_ctrl is None:
        assignment = ControlAssignment.full_control(pops)
    else:
        names, shares = [], {}
        for k, c in enumerate(raw_ctrl):
            at = ("controllers", k)
            r = str(rd.get(c, "id", at))
            names.append(r)
            sh = rd.get(c, "shares", at, dict)
            for i, v in sh.items():
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    rd.fail(at + ("shares", i), "expected a number")
            shares[r] = {str(i): float(v) for i, v in sh.items()}
        assignment = ControlAssignment(tuple(names), shares)

    types = []
    by_id = {p.id: p for p in pops}
    for k, t in enumerate(rd.get(data, "information_types", (), list, default=[])):
        at = ("information_types", k)
        pid = str(rd.get(t, "population", at))
        pop = by_id.get(pid)
        if pop is None:
            rd.fail(at + ("population",), f"unknown population {pid!r}")
        if "known_paths" in t:
            known = []
            for path in rd.get(t, "known_paths", at, list):
                path = tuple(str(e) for e in path)
                if path not in pop.paths:
                    rd.fail(at + ("known_paths",), f"path {list(path)} is not a path of {pid}")
                known.append(pop.paths.index(path))
        else:
            # a known edge set admits the paths lying entirely inside it
            edge_set = {str(e) for e in rd.get(t, "known_edges", at, list)}
            known = [s for s, path in enumerate(pop.paths) if set(path) <= edge_set]
        types.append(InformationType(str(rd.get(t, "id", at)), pid, tuple(known), rd.number(t, "demand", at)))

    return GameInstance(network, tuple(pops), assignment, tuple(types))


def load_game(path: Union[str, FsPath], max_paths: int = 64) -> GameInstance:
    p = resolve(path)
    return parse_game(p.read_text(), str(p), max_paths)


def game_to_dict(instance: GameInstance) -> dict:
    out: dict[str, Any] = {
        "nodes": list(instance.network.nodes),
        "edges": [
            {"id": e.id, "tail": e.tail, "head": e.head, **e.cost.to_json()} for e in instance.network.edges
        ],
        "populations": [
            {
                "id": p.id,
                "origin": p.origin,
                "destination": p.destination,
                "demand": p.demand,
                "paths": [list(path) for path in p.paths],
            }
            for p in instance.populations
        ],
        "controllers": [
            {"id": r, "shares": dict(instance.assignment.shares.get(r, {}))}
            for r in instance.assignment.controllers
        ],
    }
    if instance.information_types:
        out["information_types"] = [
            {
                "id": k.id,
                "population": k.population,
                "demand": k.demand,
                "known_paths": [list(instance.population(k.population).paths[s]) for s in k.known_paths],
            }
            for k in instance.information_types
        ]
    return out


def dump_game(instance: GameInstance) -> str:
    return json.dumps(game_to_dict(instance), indent=2) + "\n"
