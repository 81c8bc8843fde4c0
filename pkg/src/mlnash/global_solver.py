"""Spatial branch and bound over McCormick relaxations.

Feasibility programs are searched depth first, the child whose relaxation
looks closest to exact being explored first; any certified point ends the
search. Optimisation programs are searched best first on the LP bound (ties
broken by node id) until the incumbent meets the bound or a known optimal
value. Every candidate profile is polished locally and then accepted only if
its regret is within ``eps_regret``.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ValidationError
from .formulations import MultilinearProgram, VariableRef, complete_assignment, extract_profile
from .game import Game, MixedProfile, regret_report
from .local_solver import LocalConfig, iter_starts, polish
from .lp import INFEASIBLE as LP_INFEASIBLE
from .lp import OPTIMAL as LP_OPTIMAL
from .lp import TIME_LIMIT as LP_TIME_LIMIT
from .lp import LPResult, solve_lp, solve_lp_highs
from .relaxation import MIN_WIDTH, BRANCH_DELTA, branch_select, product_violations, propagate_bounds, relax, structure_of
from .report import EQUILIBRIUM_FOUND, INFEASIBLE, NODE_LIMIT, TIME_LIMIT, SolveReport

LP_BACKENDS = ("simplex", "highs")


@dataclass(frozen=True)
class GlobalConfig:
    time_limit: float = 60.0
    node_limit: int = 1_000_000
    eps_regret: float = 1e-6
    eps_feas: float = 1e-7
    eps_term: float = 1e-7
    workers: int = 1
    deterministic: bool = True
    lp_backend: str = "simplex"
    heuristic_iters: int = 200
    gap_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("time_limit", "node_limit", "eps_regret", "eps_feas", "eps_term", "workers",
                     "heuristic_iters", "gap_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lp_backend not in LP_BACKENDS:
            raise ValidationError(f"lp_backend must be one of {LP_BACKENDS}, got {self.lp_backend!r}")


@dataclass
class BoxNode:
    lower: np.ndarray
    upper: np.ndarray
    depth: int = 0
    parent_bound: float = -np.inf
    node_id: int = 0
    branch_variable: VariableRef | None = None
    lp: LPResult | None = None

    @property
    def bound(self) -> float:
        """Lower bound (minimisation form) without the objective constant."""
        if self.lp is None or self.lp.status != LP_OPTIMAL:
            return self.parent_bound
        return max(self.lp.value, self.parent_bound)


@dataclass
class _Search:
    program: MultilinearProgram
    game: Game
    config: GlobalConfig
    deadline: float
    nodes: int = 0
    lp_iterations: int = 0
    next_id: int = 0
    best_profile: MixedProfile | None = None
    best_regret: float = np.inf
    incumbent: MixedProfile | None = None
    incumbent_value: float = np.inf  # minimisation form, constant included
    starts: Iterator[MixedProfile] | None = None

    def solve_node(self, node: BoxNode) -> None:
        if not propagate_bounds(structure_of(self.program), node.lower, node.upper):
            node.lp = LPResult(LP_INFEASIBLE, None, np.nan, 0)
            return
        relaxation = relax(self.program, node.lower, node.upper)
        if self.config.lp_backend == "highs":
            result = solve_lp_highs(relaxation.lp, deadline=self.deadline)
        else:
            result = solve_lp(relaxation.lp, deadline=self.deadline)
        self.lp_iterations += result.iterations
        node.lp = result

    def new_node(self, lower, upper, depth, parent_bound, branch_variable=None) -> BoxNode:
        node = BoxNode(lower, upper, depth, parent_bound, self.next_id, branch_variable)
        self.next_id += 1
        return node

    def objective_of(self, profile: MixedProfile) -> float:
        values = complete_assignment(self.program, self.game, profile)
        st = structure_of(self.program)
        return st.sign * self.program.objective_value(values)

    def try_candidate(self, start: MixedProfile, iters: int) -> bool:
        """Polish, certify and possibly store a candidate; True if it was certified."""
        local = LocalConfig(max_iters=iters, eps_regret=self.config.eps_regret,
                            refine_every=min(50, iters))
        profile = polish(self.game, start, local, self.deadline)
        regret = regret_report(self.game, profile).max_regret
        if regret < self.best_regret:
            self.best_profile, self.best_regret = profile, regret
        if regret > self.config.eps_regret:
            return False
        if self.program.is_feasibility:
            if self.incumbent is None:
                self.incumbent, self.incumbent_value = profile, 0.0
            return True
        value = self.objective_of(profile)
        if value < self.incumbent_value:
            self.incumbent, self.incumbent_value = profile, value
        return True

    def candidate_from(self, node: BoxNode) -> MixedProfile | None:
        try:
            profile, _ = extract_profile(self.program, node.lp.x[: len(self.program.variables)])
        except Exception:  # corrupted LP point: skip the heuristic for this node
            return None
        return profile


def _has_fractional_binary(program: MultilinearProgram, point: np.ndarray, node: BoxNode) -> bool:
    ids = structure_of(program).branchable_01
    if not ids.size:
        return False
    vals = point[ids]
    open_ = node.upper[ids] - node.lower[ids] > 0.5
    return bool(np.any(open_ & (vals > BRANCH_DELTA) & (vals < 1 - BRANCH_DELTA)))


def _children(search: _Search, node: BoxNode) -> list[BoxNode]:
    program = search.program
    if node.lp is not None and node.lp.status == LP_OPTIMAL:
        point = node.lp.x
        choice = branch_select(program, node.lower, node.upper, point, search.config.eps_term)
    else:
        # unresolved LP: split the widest variable at its midpoint
        choice = None
        point = np.concatenate([(node.lower + node.upper) / 2,
                                np.zeros(structure_of(program).num_products)])
    if choice is None:
        widths = node.upper - node.lower
        x_ids = [k for ids in program.x_ids for k in ids]
        var = max(x_ids, key=lambda k: (widths[k], -k))
        if widths[var] <= MIN_WIDTH:
            return []
        lo, hi = node.lower[var], node.upper[var]
        split, kind = float(np.clip(point[var], lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))), "spatial"
    else:
        var, split, kind = choice.variable, choice.split, choice.kind
    ref = program.variables[var].ref
    left_u, right_l = node.upper.copy(), node.lower.copy()
    if kind == "binary":
        left_u[var], right_l[var] = 0.0, 1.0
    else:
        left_u[var] = split
        right_l[var] = split
    bound = node.bound
    return [search.new_node(node.lower.copy(), left_u, node.depth + 1, bound, ref),
            search.new_node(right_l, node.upper.copy(), node.depth + 1, bound, ref)]


def _score(program: MultilinearProgram, node: BoxNode) -> float:
    """How far the child's relaxation point is from exact; lower explores first."""
    if node.lp is None or node.lp.status != LP_OPTIMAL:
        return np.inf
    st = structure_of(program)
    point = node.lp.x
    score = float(product_violations(st, point).sum()) if st.num_products else 0.0
    ids = st.branchable_01
    if ids.size:
        vals = point[ids]
        score += float(np.minimum(vals, 1.0 - vals).clip(0.0).sum())
    return score


def solve(program: MultilinearProgram, game: Game, config: GlobalConfig = GlobalConfig()) -> SolveReport:
    """Search for an equilibrium of ``game`` through ``program``.

    ``game`` is the instance the program was built from; it supplies the
    regret certificate.
    """
    if program.strategy_counts != game.strategy_counts or program.game_hash not in ("", game.digest()):
        raise ValidationError("program was not built from this game")
    t0 = time.monotonic()
    search = _Search(program, game, config, t0 + config.time_limit)
    search.starts = iter_starts(game, config.seed)
    st = structure_of(program)
    feasibility = program.is_feasibility
    target = None
    if not feasibility and program.target_value is not None:
        target = st.sign * program.target_value

    root = search.new_node(program.lower.astype(float), program.upper.astype(float), 0, -np.inf)
    search.solve_node(root)

    status = None
    open_nodes: list = []

    def push(node):
        if feasibility:
            open_nodes.append(node)
        else:
            heapq.heappush(open_nodes, (node.bound, node.node_id, node))

    def pop():
        return open_nodes.pop() if feasibility else heapq.heappop(open_nodes)[2]

    def done() -> bool:
        if search.incumbent is None:
            return False
        if feasibility:
            return True
        if target is not None and search.incumbent_value <= target + config.gap_tol * max(1.0, abs(target)):
            return True
        return False

    push(root)
    while open_nodes and status is None:
        if done():
            break
        if time.monotonic() > search.deadline:
            status = TIME_LIMIT
            break
        if search.nodes >= config.node_limit:
            status = NODE_LIMIT
            break
        node = pop()
        search.nodes += 1
        if node.lp is None:
            search.solve_node(node)
        if node.lp.status == LP_INFEASIBLE:
            continue
        if node.lp.status == LP_TIME_LIMIT:
            status = TIME_LIMIT
            break
        lp_ok = node.lp.status == LP_OPTIMAL
        if not feasibility and lp_ok:
            bound = node.bound + st.cost_constant
            if search.incumbent is not None and bound >= search.incumbent_value - config.gap_tol * max(
                    1.0, abs(search.incumbent_value)):
                # best first: every open node is at least as bad
                break
        if lp_ok and not _has_fractional_binary(program, node.lp.x, node):
            candidate = search.candidate_from(node)
            # relaxation points only need snapping; a short budget suffices
            lp_iters = max(1, config.heuristic_iters // 4)
            if candidate is not None and search.try_candidate(candidate, lp_iters) and done():
                break
        # interleaved multistart: one scheduled start per node
        if search.try_candidate(next(search.starts), config.heuristic_iters) and done():
            break
        children = _children(search, node)
        for child in children:
            search.solve_node(child)
        viable = [c for c in children if c.lp.status != LP_INFEASIBLE]
        if feasibility:
            viable.sort(key=lambda c: (_score(program, c), c.node_id), reverse=True)
        for child in viable:
            push(child)

    wall = time.monotonic() - t0
    if status is None:
        status = EQUILIBRIUM_FOUND if search.incumbent is not None else INFEASIBLE
    if status == TIME_LIMIT:
        wall = max(wall, config.time_limit)
    profile = search.incumbent if status == EQUILIBRIUM_FOUND else search.best_profile
    regret = regret_report(game, profile).max_regret if profile is not None else np.inf
    assignment, objective = {}, np.nan
    if profile is not None:
        values = complete_assignment(program, game, profile)
        assignment = program.named(values)
        objective = program.objective_value(values) if not feasibility else 0.0
    return SolveReport(status, profile, assignment, float(regret), float(objective), search.nodes,
                       search.lp_iterations, wall, "global", program.formulation.code)
