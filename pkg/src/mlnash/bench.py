"""Benchmark harness: (instance x formulation) grids with per-run timeouts.

Aggregation follows the rule that an unsolved run counts as ``timeout_s``:
``average_time_s`` includes those runs, ``average_time_on_solved_s`` does
not and is absent when nothing was solved.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .config import global_config, local_config
from .errors import ValidationError
from .formulations import FormulationId, build
from .generators import InstanceSpec, generate
from .global_solver import solve
from .interop import report_record
from .local_solver import multistart

SOLVERS = ("global", "local")
LOCAL_LABEL = "LOCAL"


@dataclass(frozen=True)
class BenchPlan:
    instances: tuple[InstanceSpec, ...]
    formulations: tuple[FormulationId, ...]
    solver: str = "global"
    timeout_s: float = 60.0
    repetitions: int = 1
    family_timeouts: dict[str, float] = field(default_factory=dict)
    config: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.instances:
            raise ValidationError("a bench plan needs at least one instance")
        if not self.formulations and self.solver == "global":
            raise ValidationError("a bench plan needs at least one formulation")
        if self.solver not in SOLVERS:
            raise ValidationError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not self.timeout_s > 0 or any(not t > 0 for t in self.family_timeouts.values()):
            raise ValidationError("timeouts must be positive")
        if self.repetitions < 1:
            raise ValidationError(f"repetitions must be >= 1, got {self.repetitions}")

    def timeout_for(self, spec: InstanceSpec) -> float:
        return self.family_timeouts.get(spec.label, self.timeout_s)

    def cells(self) -> list[tuple[InstanceSpec, str, int]]:
        labels = [LOCAL_LABEL] if self.solver == "local" else [f.code for f in self.formulations]
        return [(spec, label, rep) for spec in self.instances for label in labels
                for rep in range(self.repetitions)]


def _expand_instance(entry) -> list[InstanceSpec]:
    if isinstance(entry, str):
        return [InstanceSpec.parse(entry)]
    if not isinstance(entry, dict) or "spec" not in entry:
        raise ValidationError(f"instance entry must be a string or an object with 'spec': {entry!r}")
    base = InstanceSpec.parse(entry["spec"])
    if "seeds" in entry:
        seeds = [int(s) for s in entry["seeds"]]
    else:
        first = int(entry.get("first_seed", 0))
        seeds = list(range(first, first + int(entry.get("num_seeds", 1))))
    return [base.with_seed(s) for s in seeds]


def plan_from_dict(record: dict) -> BenchPlan:
    known = {"instances", "formulations", "solver", "timeout_s", "repetitions", "family_timeouts", "config"}
    unknown = set(record) - known
    if unknown:
        raise ValidationError(f"unknown plan fields: {', '.join(sorted(unknown))}")
    try:
        instances = tuple(s for entry in record["instances"] for s in _expand_instance(entry))
    except KeyError:
        raise ValidationError("plan misses 'instances'") from None
    return BenchPlan(
        instances,
        tuple(FormulationId.parse(f) for f in record.get("formulations", [])),
        record.get("solver", "global"),
        float(record.get("timeout_s", 60.0)),
        int(record.get("repetitions", 1)),
        {str(k): float(v) for k, v in record.get("family_timeouts", {}).items()},
        {str(k): str(v) for k, v in record.get("config", {}).items()},
    )


def load_plan(path) -> BenchPlan:
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"plan is not valid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise ValidationError("plan must be a JSON object")
    return plan_from_dict(record)


def run_cell(spec: InstanceSpec, label: str, solver: str, timeout: float, config: dict[str, str]) -> dict:
    """Solve one cell; wall time covers the solver call only."""
    game = generate(spec)
    if solver == "local":
        report = multistart(game, local_config(config), time_limit=timeout)
        report.formulation = LOCAL_LABEL
    else:
        program = build(label, game)
        report = solve(program, game, replace(global_config(config), time_limit=timeout))
    record = report_record(report, str(spec), spec.seed)
    record["family"] = spec.label
    record["timeout_s"] = timeout
    return record


def _run(args):
    return run_cell(*args)


def run_bench(plan: BenchPlan, workers: int = 1) -> list[dict]:
    """Run every cell; records come back in plan order whatever the worker count."""
    jobs = [(spec, label, plan.solver, plan.timeout_for(spec), plan.config) for spec, label, _ in plan.cells()]
    if workers <= 1:
        return [_run(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run, jobs))


@dataclass(frozen=True)
class BenchRow:
    family: str
    formulation: str
    runs: int
    average_time_s: float
    percent_solved: float
    average_time_on_solved_s: float | None


def aggregate(records: list[dict]) -> list[BenchRow]:
    """One row per (family, formulation), in first-appearance order."""
    groups: dict[tuple[str, str], list[dict]] = {}
    for rec in records:
        groups.setdefault((rec["family"], rec["formulation"]), []).append(rec)
    rows = []
    for (family, formulation), recs in groups.items():
        solved = [r for r in recs if r["status"] == "EquilibriumFound"]
        times = [min(r["wall_time_s"], r["timeout_s"]) if r in solved else r["timeout_s"] for r in recs]
        on_solved = [min(r["wall_time_s"], r["timeout_s"]) for r in solved]
        rows.append(BenchRow(family, formulation, len(recs), sum(times) / len(recs),
                             100.0 * len(solved) / len(recs),
                             sum(on_solved) / len(on_solved) if on_solved else None))
    return rows


def table_json(rows: list[BenchRow]) -> str:
    return json.dumps([asdict(row) for row in rows], indent=2) + "\n"


def render_table(rows: list[BenchRow]) -> str:
    header = ("family", "formulation", "runs", "avg_time_s", "solved_%", "avg_on_solved_s")
    body = [(r.family, r.formulation, str(r.runs), f"{r.average_time_s:.3f}", f"{r.percent_solved:.0f}",
             "-" if r.average_time_on_solved_s is None else f"{r.average_time_on_solved_s:.3f}")
            for r in rows]
    widths = [max(len(h), *(len(b[k]) for b in body)) for k, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)).rstrip() for b in body]
    return "\n".join(lines) + "\n"
