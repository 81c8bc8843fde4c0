"""Solver outcome record shared by the global and local solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

from .game import MixedProfile

EQUILIBRIUM_FOUND = "EquilibriumFound"
INFEASIBLE = "Infeasible"
TIME_LIMIT = "TimeLimit"
NODE_LIMIT = "NodeLimit"
STATUSES = (EQUILIBRIUM_FOUND, INFEASIBLE, TIME_LIMIT, NODE_LIMIT)


@dataclass
class SolveReport:
    status: str
    profile: MixedProfile | None = None
    assignment: dict[str, float] = field(default_factory=dict)
    max_regret: float = float("inf")
    objective: float = float("nan")
    nodes_explored: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    solver: str = ""
    formulation: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def solved(self) -> bool:
        return self.status == EQUILIBRIUM_FOUND
