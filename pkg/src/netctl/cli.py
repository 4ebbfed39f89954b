"""Command-line entry point: ``netctl <subcommand> ...``.

Exit codes: 0 success, 1 input or validation error, 2 solver non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from netctl import analytics, serialize
from netctl.control_game import solve_nce
from netctl.equilibrium import solve_so, solve_ue
from netctl.gamefile import GameFileError, load_game
from netctl.game_model import GameInstance, validate
from netctl.learning import LearnerConfig, run_episode
from netctl.os_choice import OsShareProfile, solve_os_game

log = logging.getLogger("netctl")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2


class InputError(Exception):
    pass


def _positive(kind):
    def parse(text: str):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v

    return parse


def parse_values(text: str, kind=float) -> list:
    """``"1,2,3"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        n = int(round((stop - start) / step))
        values = [start + k * step for k in range(n + 1) if start + k * step <= stop + 1e-9]
    else:
        values = [float(x) for x in text.split(",") if x.strip()]
    if not values:
        raise argparse.ArgumentTypeError(f"empty value list {text!r}")
    if kind is int:
        if any(v != int(v) for v in values):
            raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
        return [int(v) for v in values]
    return [round(v, 12) for v in values]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive(float), default=None, help="solver tolerance")
    common.add_argument("--max-iters", type=_positive(int), default=None, help="iteration / round budget")
    common.add_argument("--seed", type=int, default=0, help="initialisation seed (0 = uniform start)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--max-paths", type=_positive(int), default=64, help="path cap for files without paths")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="netctl", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("validate", "check a game file"),
        ("ue", "information-constrained user equilibrium"),
        ("so", "social optimum"),
        ("nce", "Nash equilibrium of the control game"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("game")

    p = sub.add_parser("poa-sweep", parents=[common], help="closed-form vs empirical PoA on Pigou")
    p.add_argument("--p", dest="p_values", type=parse_values, default=[1.0, 2.0, 3.0, 4.0])
    p.add_argument("--R", dest="R_values", type=lambda s: parse_values(s, int), default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--empirical", action="store_true", help="also solve the proportional Pigou games")

    p = sub.add_parser("surface", parents=[common], help="NCE social cost over controller shares")
    p.add_argument("game")
    p.add_argument("--R", type=int, default=2, choices=(2, 3))
    p.add_argument("--step", type=_positive(float), default=0.05)

    p = sub.add_parser("learn", parents=[common], help="exponential-weights learners on a game")
    p.add_argument("game")
    p.add_argument("--rounds", type=_positive(int), default=2000)
    p.add_argument("--window", type=_positive(int), default=200)
    p.add_argument("--resolution", type=int, default=11)

    p = sub.add_parser("os-choice", parents=[common], help="populations choosing controllers")
    p.add_argument("game")
    p.add_argument("--R", type=_positive(int), default=None, help="number of controllers")
    p.add_argument("--start", type=parse_values, default=None, help="initial controller fractions")
    p.add_argument("--eta", type=_positive(float), default=0.05)
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> GameInstance:
    try:
        instance = load_game(args.game, max_paths=args.max_paths)
    except FileNotFoundError as exc:
        raise InputError(str(exc))
    except GameFileError as exc:
        raise InputError(str(exc))
    report = validate(instance)
    if not report.ok:
        raise InputError(f"{args.game}: invalid game\n{report.format()}")
    return instance


def _summary(msg: str) -> None:
    sys.stderr.write(msg + "\n")


def run(args) -> int:
    cmd = args.command
    if cmd == "validate":
        try:
            instance = load_game(args.game, max_paths=args.max_paths)
        except (FileNotFoundError, GameFileError) as exc:
            raise InputError(str(exc))
        report = validate(instance)
        _emit(report.format() + "\n", args.out)
        return EXIT_OK if report.ok else EXIT_INPUT

    if cmd in ("ue", "so"):
        instance = _load(args)
        solver = solve_ue if cmd == "ue" else solve_so
        res = solver(instance, tol=args.tol or 1e-8, max_iters=args.max_iters or 100_000, seed=args.seed)
        _emit(serialize.to_json(serialize.equilibrium_to_dict(instance, res, cmd)), args.out)
        _summary(f"SC={res.social_cost:.6f} gap={res.relative_gap:.2e} converged={res.converged}")
        return EXIT_OK if res.converged else EXIT_NONCONVERGED

    if cmd == "nce":
        instance = _load(args)
        res = solve_nce(instance, tol=args.tol or 1e-9, max_rounds=args.max_iters or 10_000, seed=args.seed)
        _emit(serialize.to_json(serialize.nce_to_dict(instance, res)), args.out)
        _summary(f"SC={res.social_cost:.6f} rounds={res.rounds} converged={res.converged}")
        return EXIT_OK if res.converged else EXIT_NONCONVERGED

    if cmd == "poa-sweep":
        rows = analytics.poa_sweep(args.p_values, args.R_values, empirical=args.empirical, tol=args.tol or 1e-9)
        _emit(serialize.poa_csv(rows), args.out)
        return EXIT_OK

    if cmd == "surface":
        instance = _load(args)
        grid = analytics.social_cost_surface(instance, R=args.R, step=args.step, tol=args.tol or 1e-9)
        _emit(serialize.surface_csv(grid), args.out)
        top = grid.argmax_points()
        _summary(f"max SC={max(grid.social_costs):.6f} on {len(top)} grid points from {top[0]} to {top[-1]}")
        return EXIT_OK

    if cmd == "learn":
        instance = _load(args)
        if args.window > args.rounds:
            raise InputError("--window exceeds --rounds")
        episode = run_episode(instance, args.rounds, LearnerConfig(resolution=args.resolution), seed=args.seed)
        target = solve_nce(instance)
        _emit(serialize.episode_csv(episode), args.out)
        _summary(
            f"final trailing mean SC={episode.trailing_mean(args.window):.6f} "
            f"(window {args.window}); NCE target SC={target.social_cost:.6f}"
        )
        return EXIT_OK

    if cmd == "os-choice":
        instance = _load(args)
        if args.start is not None:
            fractions = args.start
            if args.R is not None and args.R != len(fractions):
                raise InputError("--start must list one fraction per controller")
        else:
            n = args.R or len(instance.assignment.controllers)
            fractions = [1.0] + [0.0] * (n - 1)
        if len(fractions) < 1 or any(f < 0 for f in fractions) or sum(fractions) <= 0:
            raise InputError("--start fractions must be nonnegative and not all zero")
        start = OsShareProfile.from_fractions(instance, fractions)
        trace = solve_os_game(
            instance, start, eta=args.eta, tol=args.tol or 1e-6, max_steps=args.max_iters or 10_000
        )
        _emit(serialize.os_trace_csv(trace), args.out)
        final = trace.final.shares
        shares = {i: [round(float(v), 9) for v in final.fractions(i)] for i in final.shares}
        _summary(f"final shares {shares} SC={trace.final.social_cost:.6f} converged={trace.converged}")
        return EXIT_OK if trace.converged else EXIT_NONCONVERGED

    raise InputError(f"unknown command {cmd}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return run(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
