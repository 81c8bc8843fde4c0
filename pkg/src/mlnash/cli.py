"""``mlnash`` command line: generate | solve | verify | export | bench.

Exit codes: 0 success, 1 I/O or solver failure, 2 invalid input (or a
profile that is not eps-Nash under ``verify``), 3 time or node limit hit
by ``solve``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import aggregate, load_plan, render_table, run_bench, table_json
from .config import global_config, load_config, local_config
from .errors import NashError, ParseError, ValidationError
from .formulations import FormulationId, build
from .game import Game, MixedProfile, regret_report
from .generators import InstanceSpec, generate
from .global_solver import solve
from .interop import append_records, export_model, game_to_json, read_game, write_atomic, write_game, write_report
from .local_solver import multistart
from .report import EQUILIBRIUM_FOUND, INFEASIBLE, SolveReport

EXIT_OK, EXIT_FAILURE, EXIT_INVALID, EXIT_LIMIT = 0, 1, 2, 3


def load_game(source: str, seed: int | None = None) -> tuple[Game, str, int | None]:
    """A game file, an instance spec or a named game id.

    Returns the game, the instance string recorded in reports and the seed
    (None for files and named games).
    """
    path = Path(source)
    if path.suffix in (".nfg", ".json") or path.exists():
        return read_game(path), str(path), None
    spec = InstanceSpec.parse(source)
    if seed is not None and spec.family != "Named":
        spec = spec.with_seed(seed)
    return generate(spec), str(spec), None if spec.family == "Named" else spec.seed


def load_profile(source: str, game: Game) -> MixedProfile:
    """Inline JSON or a file holding ``[[...], ...]`` or an object with ``profile``."""
    text = Path(source).read_text(encoding="utf-8") if Path(source).is_file() else source
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"profile is not valid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if isinstance(data, dict):
        data = data.get("profile")
    if not isinstance(data, list) or not all(isinstance(d, list) for d in data):
        raise ValidationError("profile must be a list of per-player probability lists")
    profile = MixedProfile(tuple(np.asarray(d, dtype=float) for d in data))
    if profile.strategy_counts != game.strategy_counts:
        raise ValidationError(f"profile shape {profile.strategy_counts} does not match game {game.strategy_counts}")
    return profile


def _config_values(args) -> dict[str, str]:
    values = load_config(args.config) if args.config else {}
    for key, flag in (("eps_regret", args.eps), ("seed", args.seed), ("workers", args.workers)):
        if flag is not None:
            values[key] = str(flag)
    if args.deterministic:
        values["deterministic"] = "true"
    return values


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# verbs


def cmd_generate(args) -> int:
    spec = InstanceSpec.parse(args.spec)
    if args.seed is not None and spec.family != "Named":
        spec = spec.with_seed(args.seed)
    game = generate(spec)
    if args.out:
        write_game(game, args.out)
    else:
        sys.stdout.write(game_to_json(game))
    return EXIT_OK


def cmd_solve(args) -> int:
    formulation = args.formulation or args.formulation_pos or "MLP2"
    solver = args.solver or args.solver_pos or "global"
    if solver not in ("global", "local"):
        raise ValidationError(f"solver must be 'global' or 'local', got {solver!r}")
    game, instance, seed = load_game(args.game, args.seed)
    values = _config_values(args)
    if solver == "local":
        report = multistart(game, local_config(values), time_limit=args.timeout)
        report.formulation = "LOCAL"
    else:
        config = global_config(values)
        if args.timeout is not None:
            config = replace(config, time_limit=args.timeout)
        report = solve(build(FormulationId.parse(formulation), game), game, config)
    line = write_report(report, instance, seed)
    sys.stdout.write(line)
    if args.out:
        append_records(args.out, [line])
    _summary(report)
    if report.status == EQUILIBRIUM_FOUND:
        return EXIT_OK
    return EXIT_FAILURE if report.status == INFEASIBLE else EXIT_LIMIT


def _summary(report: SolveReport) -> None:
    print(f"{report.status}: max_regret={report.max_regret:.3g} nodes={report.nodes_explored} "
          f"time={report.wall_time:.3f}s", file=sys.stderr)


def cmd_verify(args) -> int:
    game, _, _ = load_game(args.game, args.seed)
    profile = load_profile(args.profile, game)
    eps = 1e-6 if args.eps is None else args.eps
    if not eps >= 0:
        raise ValidationError(f"eps must be non-negative, got {eps}")
    rep = regret_report(game, profile)
    player = int(np.argmax(rep.exploitabilities))
    strategy = int(np.argmax(rep.utilities[player]))
    if rep.max_regret <= eps:
        print(f"ε-Nash at eps={eps:g}: max_regret={rep.max_regret:.6g}")
        return EXIT_OK
    print(f"not ε-Nash at eps={eps:g}: max_regret={rep.max_regret:.6g} "
          f"(player {player} gains by switching to strategy {strategy})")
    return EXIT_INVALID


def cmd_export(args) -> int:
    game, _, _ = load_game(args.game, args.seed)
    formulation = args.formulation or args.formulation_pos
    if not formulation:
        raise ValidationError("export needs a formulation code")
    _emit(export_model(build(FormulationId.parse(formulation), game)), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    plan = load_plan(args.plan)
    overrides = {}
    if args.timeout is not None:
        overrides["timeout_s"] = args.timeout
    if args.solver is not None:
        overrides["solver"] = args.solver
    if args.formulation is not None:
        overrides["formulations"] = (FormulationId.parse(args.formulation),)
    config = dict(plan.config)
    config.update(_config_values(args))
    plan = replace(plan, config=config, **overrides)
    records = run_bench(plan, workers=args.workers or 1)
    if args.out:
        append_records(args.out, [json.dumps(r, sort_keys=True) + "\n" for r in records])
    rows = aggregate(records)
    sys.stdout.write(render_table(rows))
    if args.table:
        write_atomic(args.table, table_json(rows))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="seed for generated games and solver starts")
    parser.add_argument("--out", help="output path")


def _solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--formulation", help="formulation code, e.g. MLP2 or MIMLP3(C,F)")
    parser.add_argument("--solver", choices=("global", "local"))
    parser.add_argument("--timeout", type=float, help="time limit in seconds")
    parser.add_argument("--eps", type=float, help="regret tolerance")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--deterministic", action="store_true")
    parser.add_argument("--config", help="key = value configuration file")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlnash", description="Nash equilibria via multilinear programs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a generated game (.nfg or .game.json)")
    p.add_argument("spec", help="e.g. 'RG(3,3)#seed=4' or 'CG(3,3,-0.2)'")
    _common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve a game and print a JSON report line")
    p.add_argument("game", help="game file, instance spec or named game")
    p.add_argument("formulation_pos", nargs="?", metavar="FORMULATION")
    p.add_argument("solver_pos", nargs="?", metavar="SOLVER")
    _common(p)
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a profile against the eps-Nash condition")
    p.add_argument("game")
    p.add_argument("profile", help="JSON profile, inline or in a file")
    p.add_argument("--eps", type=float, help="regret tolerance (default 1e-6)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write the MLIR-NASH model text of a formulation")
    p.add_argument("game")
    p.add_argument("formulation_pos", nargs="?", metavar="FORMULATION")
    p.add_argument("--formulation")
    _common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("bench", help="run a benchmark plan and print the aggregated table")
    p.add_argument("plan", help="bench plan JSON file")
    p.add_argument("--table", help="write the aggregated table as JSON")
    _common(p)
    _solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, NashError) as exc:
        # ParseError and ValidationError are ValueErrors too
        print(f"mlnash: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"mlnash: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
