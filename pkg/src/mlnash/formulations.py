"""Multilinear-program IR and builders for the 17 equilibrium formulations.

Every formulation compiles to a :class:`MultilinearProgram`: boxed (possibly
binary) variables, and constraints/objective that are linear combinations of
multilinear monomials. A monomial is a sorted tuple of variable ids; the only
repeated-variable monomial is ``(b, b)``, introduced by the continuous
variants.

Naming follows the programs they encode: ``x[i,s]`` strategy probabilities,
``p[i]`` best-payoff bounds (MLP1/MLP2/BLP), ``u[i,s]`` pure-strategy
utilities, ``ubar[i]`` best utility, ``r[i,s]`` regrets, ``b[i,s]`` support
indicators, ``f[i,s]``/``g[i,s]`` penalty variables.
"""

from __future__ import annotations

import itertools
import warnings
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import CorruptionError, ValidationError
from .game import Game, MixedProfile, payoff_spread, regret_report

BASES = ("BLP", "MLP1", "MLP2", "MIMLP1", "MIMLP2", "MIMLP3", "MIMLP4")
RELATIONS = ("<=", "=", ">=")
SENSES = ("max", "min", "feasibility")


@dataclass(frozen=True, order=True)
class FormulationId:
    base: str
    continuous: bool = False
    feasibility: bool = False

    def __post_init__(self):
        if self.base not in BASES:
            raise ValidationError(f"unknown formulation base {self.base!r}")
        if self.base in ("BLP", "MLP1", "MLP2") and (self.continuous or self.feasibility):
            raise ValidationError(f"{self.base} has no continuous or feasibility variant")
        if self.base == "MIMLP1" and self.feasibility:
            raise ValidationError("MIMLP1 is already a feasibility program; MIMLP1F does not exist")

    @property
    def code(self) -> str:
        return self.base + ("C" if self.continuous else "") + ("F" if self.feasibility else "")

    def __str__(self) -> str:
        return self.code

    @classmethod
    def parse(cls, code: str) -> FormulationId:
        text = code.strip().upper().replace("(", "").replace(")", "").replace(",", "").replace(" ", "")
        for base in sorted(BASES, key=len, reverse=True):
            if text.startswith(base):
                suffix = text[len(base):]
                if suffix not in ("", "C", "F", "CF"):
                    break
                return cls(base, "C" in suffix, "F" in suffix)
        raise ValidationError(f"unknown formulation code {code!r}")


ALL_FORMULATIONS: tuple[FormulationId, ...] = (
    FormulationId("BLP"),
    FormulationId("MLP1"),
    FormulationId("MLP2"),
    FormulationId("MIMLP1"),
    FormulationId("MIMLP1", continuous=True),
    *(
        FormulationId(base, c, f)
        for base in ("MIMLP2", "MIMLP3", "MIMLP4")
        for c, f in ((False, False), (True, False), (False, True), (True, True))
    ),
)

MIMLP_VARIANTS = tuple(f for f in ALL_FORMULATIONS if f.base.startswith("MIMLP"))


@dataclass(frozen=True, order=True)
class VariableRef:
    kind: str
    player: int | None = None
    strategy: int | None = None

    @property
    def name(self) -> str:
        idx = [v for v in (self.player, self.strategy) if v is not None]
        return f"{self.kind}[{','.join(map(str, idx))}]"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Variable:
    ref: VariableRef
    lower: float
    upper: float
    is_binary: bool = False


Term = tuple[float, tuple[int, ...]]


@dataclass(frozen=True)
class Constraint:
    terms: tuple[Term, ...]
    relation: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValidationError(f"bad relation {self.relation!r}")


@dataclass(frozen=True)
class Objective:
    sense: str
    terms: tuple[Term, ...] = ()
    constant: float = 0.0

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValidationError(f"bad objective sense {self.sense!r}")


def merge_terms(terms: Sequence[Term]) -> tuple[Term, ...]:
    """Combine like monomials, drop zero coefficients, sort by monomial."""
    acc: dict[tuple[int, ...], float] = defaultdict(float)
    for coef, mono in terms:
        acc[mono] += coef
    return tuple((c, m) for m, c in sorted(acc.items()) if c != 0.0)


class CompiledExpression:
    """Vectorised evaluator for ``sum_k c_k prod_{v in m_k} value[v]``."""

    def __init__(self, terms: Sequence[Term], num_vars: int):
        degree = max((len(m) for _, m in terms), default=1)
        self.coefs = np.array([c for c, _ in terms], dtype=np.float64)
        # padding points at a slot that always holds 1.0
        idx = np.full((len(terms), max(degree, 1)), num_vars, dtype=np.intp)
        for k, (_, mono) in enumerate(terms):
            idx[k, : len(mono)] = mono
        self.index = idx

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Evaluate at one point (1-D) or a batch of points (2-D, one per row)."""
        values = np.asarray(values, dtype=np.float64)
        padded = np.concatenate([values, np.ones(values.shape[:-1] + (1,))], axis=-1)
        prods = np.prod(padded[..., self.index], axis=-1)
        return prods @ self.coefs


@dataclass(frozen=True, eq=False)
class MultilinearProgram:
    formulation: FormulationId
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: Objective
    strategy_counts: tuple[int, ...]
    game_hash: str = ""
    target_value: float | None = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        n = len(self.variables)
        for con in self.constraints:
            for _, mono in con.terms:
                if not mono or any(not 0 <= v < n for v in mono):
                    raise ValidationError(f"constraint {con.name!r} references an undeclared variable")
        for _, mono in self.objective.terms:
            if not mono or any(not 0 <= v < n for v in mono):
                raise ValidationError("objective references an undeclared variable")

    @property
    def num_players(self) -> int:
        return len(self.strategy_counts)

    @cached_property
    def index(self) -> dict[VariableRef, int]:
        return {v.ref: k for k, v in enumerate(self.variables)}

    def var(self, kind: str, player: int | None = None, strategy: int | None = None) -> int:
        return self.index[VariableRef(kind, player, strategy)]

    def ids_of(self, kind: str) -> list[int]:
        return [k for k, v in enumerate(self.variables) if v.ref.kind == kind]

    @cached_property
    def x_ids(self) -> tuple[tuple[int, ...], ...]:
        """Variable ids of x[i,s], one tuple per player."""
        return tuple(
            tuple(self.var("x", i, s) for s in range(k)) for i, k in enumerate(self.strategy_counts))

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables])

    @property
    def binary_ids(self) -> list[int]:
        return [k for k, v in enumerate(self.variables) if v.is_binary]

    @property
    def square_ids(self) -> list[int]:
        """Variables constrained by ``b = b^2`` (continuous variants)."""
        out = []
        for con in self.constraints:
            for _, mono in con.terms:
                if len(mono) == 2 and mono[0] == mono[1]:
                    out.append(mono[0])
        return sorted(set(out))

    @property
    def is_feasibility(self) -> bool:
        return self.objective.sense == "feasibility"

    @cached_property
    def compiled(self) -> tuple[CompiledExpression, list[CompiledExpression]]:
        n = len(self.variables)
        return (CompiledExpression(self.objective.terms, n),
                [CompiledExpression(c.terms, n) for c in self.constraints])

    def assignment_vector(self, assignment) -> np.ndarray:
        """Normalise a mapping (by ref, name or id) or a vector into a value array."""
        n = len(self.variables)
        if isinstance(assignment, Mapping):
            values = np.full(n, np.nan)
            names = {v.ref.name: k for k, v in enumerate(self.variables)}
            for key, val in assignment.items():
                if isinstance(key, VariableRef):
                    k = self.index.get(key)
                elif isinstance(key, str):
                    k = names.get(key)
                else:
                    k = int(key)
                if k is None:
                    raise ValidationError(f"unknown variable {key!r}")
                values[k] = float(val)
        else:
            values = np.asarray(assignment, dtype=np.float64).copy()
            if values.shape != (n,):
                raise ValidationError(f"assignment has shape {values.shape}, expected ({n},)")
        missing = np.flatnonzero(np.isnan(values))
        if missing.size:
            names = ", ".join(self.variables[k].ref.name for k in missing[:5])
            raise ValidationError(f"assignment misses {missing.size} variables: {names}")
        return values

    def named(self, values: np.ndarray) -> dict[str, float]:
        return {v.ref.name: float(x) for v, x in zip(self.variables, values)}

    def constraint_values(self, values: np.ndarray) -> np.ndarray:
        return np.array([expr(values) for expr in self.compiled[1]])

    def objective_value(self, values: np.ndarray) -> float:
        return float(self.compiled[0](values)) + self.objective.constant


def _violation(lhs, relation: str, rhs):
    if relation == "<=":
        return np.maximum(lhs - rhs, 0.0)
    if relation == ">=":
        return np.maximum(rhs - lhs, 0.0)
    return np.abs(lhs - rhs)


def evaluate_point(program: MultilinearProgram, assignment) -> tuple[float, float]:
    """Objective value and maximum violation (constraints, bounds, integrality)."""
    values = program.assignment_vector(assignment)
    obj = program.objective_value(values)
    worst = 0.0
    for con, expr in zip(program.constraints, program.compiled[1]):
        worst = max(worst, float(_violation(expr(values), con.relation, con.rhs)))
    lo, hi = program.lower, program.upper
    worst = max(worst, float(np.max(np.maximum(lo - values, 0.0), initial=0.0)),
                float(np.max(np.maximum(values - hi, 0.0), initial=0.0)))
    for k in program.binary_ids:
        worst = max(worst, abs(values[k] - round(values[k])))
    return obj, worst


def extract_profile(program: MultilinearProgram, assignment) -> tuple[MixedProfile, float]:
    """Read x[i,s], clip to [0,1] and renormalise each simplex.

    Returns the profile and the largest renormalisation |sum - 1| applied.
    """
    if isinstance(assignment, Mapping):
        names = {v.ref.name: k for k, v in enumerate(program.variables)}
        by_id = {}
        for key, val in assignment.items():
            k = program.index.get(key) if isinstance(key, VariableRef) else names.get(key, key)
            by_id[k] = float(val)
        values = np.zeros(len(program.variables))
        for ids in program.x_ids:
            for k in ids:
                if k not in by_id:
                    raise ValidationError(f"assignment misses {program.variables[k].ref.name}")
                values[k] = by_id[k]
    else:
        values = np.asarray(assignment, dtype=np.float64)
    dists, magnitude = [], 0.0
    for i, ids in enumerate(program.x_ids):
        d = np.clip(values[list(ids)], 0.0, 1.0)
        total = d.sum()
        if not total >= 0.5:
            raise CorruptionError(f"player {i} probabilities sum to {total!r} before renormalisation")
        magnitude = max(magnitude, abs(total - 1.0))
        dists.append(d / total)
    return MixedProfile(tuple(dists)), magnitude


# --------------------------------------------------------------------------
# builders


class _Builder:
    def __init__(self, game: Game):
        self.game = game
        self.variables: list[Variable] = []
        self.index: dict[VariableRef, int] = {}
        self.constraints: list[Constraint] = []

    def add(self, kind, player=None, strategy=None, lower=0.0, upper=1.0, binary=False) -> int:
        ref = VariableRef(kind, player, strategy)
        self.index[ref] = len(self.variables)
        self.variables.append(Variable(ref, float(lower), float(upper), binary))
        return self.index[ref]

    def x(self, i, s) -> int:
        return self.index[VariableRef("x", i, s)]

    def v(self, kind, i, s=None) -> int:
        return self.index[VariableRef(kind, i, s)]

    def constrain(self, terms, relation, rhs, name):
        self.constraints.append(Constraint(tuple(terms), relation, float(rhs), name))

    def add_strategy_vars(self):
        for i, k in enumerate(self.game.strategy_counts):
            for s in range(k):
                self.add("x", i, s)

    def simplex_rows(self):
        for i, k in enumerate(self.game.strategy_counts):
            self.constrain([(1.0, (self.x(i, s),)) for s in range(k)], "=", 1.0, f"simplex[{i}]")

    def utility_terms(self, i: int, s: int) -> list[Term]:
        """Terms of sum_{opponent profiles} A_i[s, .] prod_j x^j, lexicographic order."""
        counts = self.game.strategy_counts
        others = [j for j in range(len(counts)) if j != i]
        tensor = self.game.payoffs[i]
        terms = []
        for opp in itertools.product(*(range(counts[j]) for j in others)):
            full = list(opp)
            full.insert(i, s)
            mono = tuple(sorted(self.x(j, t) for j, t in zip(others, opp)))
            terms.append((float(tensor[tuple(full)]), mono))
        return terms

    def surplus_terms(self) -> list[Term]:
        """MLP1 objective monomials: one term per player and full profile."""
        terms = []
        for i, k in enumerate(self.game.strategy_counts):
            for s in range(k):
                xi = self.x(i, s)
                for coef, mono in self.utility_terms(i, s):
                    terms.append((coef, tuple(sorted(mono + (xi,)))))
        return terms

    def finish(self, fid, objective, target=None, notes=()) -> MultilinearProgram:
        return MultilinearProgram(fid, tuple(self.variables), tuple(self.constraints), objective,
                                  self.game.strategy_counts, self.game.digest(), target, tuple(notes))


def _payoff_bounds(game: Game, i: int) -> tuple[float, float]:
    return float(game.payoffs[i].min()), float(game.payoffs[i].max())


def big_m(game: Game, i: int) -> float:
    """U^i, replaced by 1 for constant payoff tensors."""
    spread = payoff_spread(game, i)
    return spread if spread > 0 else 1.0


def _mlp_builder(game: Game) -> _Builder:
    b = _Builder(game)
    b.add_strategy_vars()
    for i in range(game.num_players):
        b.add("p", i, None, *_payoff_bounds(game, i))
    for i, k in enumerate(game.strategy_counts):
        for s in range(k):
            b.constrain(b.utility_terms(i, s) + [(-1.0, (b.v("p", i),))], "<=", 0.0, f"best[{i},{s}]")
    b.simplex_rows()
    return b


def _surplus_objective_terms(b: _Builder) -> list[Term]:
    return b.surplus_terms() + [(-1.0, (b.v("p", i),)) for i in range(b.game.num_players)]


def build_mlp1(game: Game) -> MultilinearProgram:
    """max sum_i E_i(x) - sum_i p^i  s.t. u_s^i(x) <= p^i, simplices."""
    b = _mlp_builder(game)
    return b.finish(FormulationId("MLP1"), Objective("max", tuple(_surplus_objective_terms(b))), 0.0)


def build_mlp2(game: Game) -> MultilinearProgram:
    """MLP1's constraints plus ``sum_i E_i(x) - sum_i p^i >= 0``; no objective."""
    b = _mlp_builder(game)
    b.constrain(_surplus_objective_terms(b), ">=", 0.0, "surplus")
    return b.finish(FormulationId("MLP2"), Objective("feasibility"))


def build_blp(game: Game) -> MultilinearProgram:
    """Bilinear program of a bimatrix game, assembled from the matrices A and B."""
    if game.num_players != 2:
        raise ValidationError(f"BLP needs a 2-player game, got {game.num_players} players")
    A, B = game.payoffs
    m, n = A.shape
    b = _Builder(game)
    b.add_strategy_vars()
    p = b.add("p", 0, None, A.min(), A.max())
    q = b.add("p", 1, None, B.min(), B.max())
    xs = [b.x(0, s) for s in range(m)]
    ys = [b.x(1, t) for t in range(n)]
    for s in range(m):  # A y <= p 1
        b.constrain([(float(A[s, t]), (ys[t],)) for t in range(n)] + [(-1.0, (p,))], "<=", 0.0,
                    f"best[0,{s}]")
    for t in range(n):  # B^T x <= q 1
        b.constrain([(float(B[s, t]), (xs[s],)) for s in range(m)] + [(-1.0, (q,))], "<=", 0.0,
                    f"best[1,{t}]")
    b.simplex_rows()
    terms = [(float(A[s, t]), (xs[s], ys[t])) for s in range(m) for t in range(n)]
    terms += [(float(B[s, t]), (xs[s], ys[t])) for s in range(m) for t in range(n)]
    terms += [(-1.0, (p,)), (-1.0, (q,))]
    return b.finish(FormulationId("BLP"), Objective("max", tuple(terms)), 0.0)


def build_mimlp(k: int, game: Game) -> MultilinearProgram:
    """Mixed-integer multilinear program MIMLP``k`` (k in 1..4)."""
    if k not in (1, 2, 3, 4):
        raise ValidationError(f"MIMLP index must be 1..4, got {k}")
    counts = game.strategy_counts
    pairs = [(i, s) for i, c in enumerate(counts) for s in range(c)]
    b = _Builder(game)
    b.add_strategy_vars()
    notes = []
    for i in range(game.num_players):
        if payoff_spread(game, i) == 0:
            notes.append(f"player {i} has constant payoffs; big-M U^{i} set to 1")
    for i, s in pairs:
        b.add("u", i, s, *_payoff_bounds(game, i))
    for i in range(game.num_players):
        b.add("ubar", i, None, *_payoff_bounds(game, i))
    for i, s in pairs:
        b.add("r", i, s, 0.0, big_m(game, i))
    for i, s in pairs:
        b.add("b", i, s, 0.0, 1.0, binary=True)
    if k in (2, 4):
        for i, s in pairs:
            b.add("f", i, s, 0.0, big_m(game, i) if k == 2 else 1.0)
    if k in (3, 4):
        for i, s in pairs:
            b.add("g", i, s, 0.0, 1.0)

    b.simplex_rows()
    for i, s in pairs:
        b.constrain([(1.0, (b.v("u", i, s),))] + [(-c, m) for c, m in b.utility_terms(i, s)],
                    "=", 0.0, f"utility[{i},{s}]")
    for i, s in pairs:
        b.constrain([(1.0, (b.v("ubar", i),)), (-1.0, (b.v("u", i, s),))], ">=", 0.0, f"best[{i},{s}]")
    for i, s in pairs:
        b.constrain([(1.0, (b.v("r", i, s),)), (-1.0, (b.v("ubar", i),)), (1.0, (b.v("u", i, s),))],
                    "=", 0.0, f"regret[{i},{s}]")
    if k in (1, 2):
        for i, s in pairs:
            b.constrain([(1.0, (b.x(i, s),)), (1.0, (b.v("b", i, s),))], "<=", 1.0, f"support[{i},{s}]")
    if k in (1, 3):
        for i, s in pairs:
            b.constrain([(1.0, (b.v("r", i, s),)), (-big_m(game, i), (b.v("b", i, s),))], "<=", 0.0,
                        f"indicator[{i},{s}]")

    fid = FormulationId(f"MIMLP{k}")
    if k == 1:
        return b.finish(fid, Objective("feasibility"), notes=notes)
    if k == 2:
        for i, s in pairs:
            f = b.v("f", i, s)
            b.constrain([(1.0, (f,)), (-1.0, (b.v("r", i, s),))], ">=", 0.0, f"penalty_regret[{i},{s}]")
            b.constrain([(1.0, (f,)), (-big_m(game, i), (b.v("b", i, s),))], ">=", 0.0,
                        f"penalty_unused[{i},{s}]")
        terms = []
        for i, s in pairs:
            terms += [(1.0, (b.v("f", i, s),)), (-big_m(game, i), (b.v("b", i, s),))]
        return b.finish(fid, Objective("min", tuple(terms)), 0.0, notes)
    if k == 3:
        for i, s in pairs:
            g = b.v("g", i, s)
            b.constrain([(1.0, (g,)), (-1.0, (b.x(i, s),))], ">=", 0.0, f"penalty_prob[{i},{s}]")
            b.constrain([(1.0, (g,)), (1.0, (b.v("b", i, s),))], ">=", 1.0, f"penalty_used[{i},{s}]")
        terms = []
        for i, s in pairs:
            terms += [(1.0, (b.v("g", i, s),)), (1.0, (b.v("b", i, s),))]
        return b.finish(fid, Objective("min", tuple(terms), -float(len(pairs))), 0.0, notes)
    for i, s in pairs:
        f, g, bb = b.v("f", i, s), b.v("g", i, s), b.v("b", i, s)
        b.constrain([(1.0, (f,)), (-1.0 / big_m(game, i), (b.v("r", i, s),))], ">=", 0.0,
                    f"penalty_regret[{i},{s}]")
        b.constrain([(1.0, (f,)), (-1.0, (bb,))], ">=", 0.0, f"penalty_unused[{i},{s}]")
        b.constrain([(1.0, (g,)), (-1.0, (b.x(i, s),))], ">=", 0.0, f"penalty_prob[{i},{s}]")
        b.constrain([(1.0, (g,)), (1.0, (bb,))], ">=", 1.0, f"penalty_used[{i},{s}]")
    terms = []
    for i, s in pairs:
        terms += [(1.0, (b.v("f", i, s),)), (1.0, (b.v("g", i, s),))]
    return b.finish(fid, Objective("min", tuple(terms)), float(len(pairs)), notes)


def apply_continuous(program: MultilinearProgram) -> MultilinearProgram:
    """Replace every binary restriction by the constraint ``b = b^2`` on [0, 1]."""
    binaries = program.binary_ids
    if not binaries:
        warnings.warn(f"{program.formulation} has no binary variables; apply_continuous is a no-op")
        return replace(program, notes=program.notes + ("apply_continuous: no binaries",))
    fid = replace(program.formulation, continuous=True)
    variables = list(program.variables)
    extra = []
    for k in binaries:
        v = variables[k]
        variables[k] = Variable(v.ref, 0.0, 1.0, False)
        extra.append(Constraint(((1.0, (k,)), (-1.0, (k, k))), "=", 0.0, f"square[{v.ref.player},{v.ref.strategy}]"))
    return replace(program, formulation=fid, variables=tuple(variables),
                   constraints=program.constraints + tuple(extra))


def apply_feasibility(program: MultilinearProgram) -> MultilinearProgram:
    """Pin the objective to its known optimal value and drop it."""
    if program.objective.sense != "min":
        raise ValidationError(
            f"{program.formulation} has sense {program.objective.sense!r}; feasibility variants "
            "are defined for minimisation programs only")
    if program.target_value is None:
        raise ValidationError(f"{program.formulation} has no known optimal value")
    obj = program.objective
    pin = Constraint(obj.terms, "=", program.target_value - obj.constant, "objective_pin")
    fid = replace(program.formulation, feasibility=True)
    return replace(program, formulation=fid, constraints=program.constraints + (pin,),
                   objective=Objective("feasibility"))


def build(fid: FormulationId | str, game: Game) -> MultilinearProgram:
    if isinstance(fid, str):
        fid = FormulationId.parse(fid)
    if fid.base == "BLP":
        return build_blp(game)
    if fid.base == "MLP1":
        return build_mlp1(game)
    if fid.base == "MLP2":
        return build_mlp2(game)
    program = build_mimlp(int(fid.base[-1]), game)
    if fid.continuous:
        program = apply_continuous(program)
    if fid.feasibility:
        program = apply_feasibility(program)
    return program


# --------------------------------------------------------------------------
# consistent completion of a profile


def complete_assignment(program: MultilinearProgram, game: Game, profile: MixedProfile,
                        tol: float = 1e-9) -> np.ndarray:
    """Extend a profile to all program variables.

    Utilities, best values and regrets are computed exactly; ``p = ubar``.
    Indicators ``b`` are chosen per strategy to minimise the formulation's
    penalty while respecting whichever of the support/indicator constraints
    the formulation carries; ``f`` and ``g`` sit at their lower envelopes.
    """
    rep = regret_report(game, profile)
    values = np.zeros(len(program.variables))
    base = program.formulation.base
    for k, var in enumerate(program.variables):
        ref = var.ref
        i, s = ref.player, ref.strategy
        if ref.kind == "x":
            values[k] = profile[i][s]
        elif ref.kind in ("p", "ubar"):
            values[k] = rep.best_values[i]
        elif ref.kind == "u":
            values[k] = rep.utilities[i][s]
        elif ref.kind == "r":
            values[k] = rep.regrets[i][s]
    for k, var in enumerate(program.variables):
        ref = var.ref
        if ref.kind != "b":
            continue
        i, s = ref.player, ref.strategy
        x, r, big = profile[i][s], rep.regrets[i][s], big_m(game, i)
        if base == "MIMLP1":
            unused = x <= r / big  # pick whichever of x=0 / r=0 is closer to holding
        elif base == "MIMLP2":
            unused = x <= tol
        elif base == "MIMLP3":
            unused = r > tol * big
        else:
            unused = x < r / big
        values[k] = 1.0 if unused else 0.0
        if base in ("MIMLP2", "MIMLP4"):
            f = program.index[VariableRef("f", i, s)]
            values[f] = max(r, big * values[k]) if base == "MIMLP2" else max(r / big, values[k])
        if base in ("MIMLP3", "MIMLP4"):
            g = program.index[VariableRef("g", i, s)]
            values[g] = max(x, 1.0 - values[k])
    return values


def canonical_form(program: MultilinearProgram):
    """Order-independent structural summary used for isomorphism checks."""
    names = [v.ref for v in program.variables]

    def named(terms):
        return tuple(sorted((tuple(sorted(names[v] for v in m)), c) for c, m in merge_terms(terms)))

    variables = tuple(sorted((v.ref, v.lower, v.upper, v.is_binary) for v in program.variables))
    constraints = tuple(sorted((named(c.terms), c.relation, c.rhs) for c in program.constraints))
    obj = (program.objective.sense, named(program.objective.terms), program.objective.constant)
    return variables, constraints, obj


def iter_monomials(program: MultilinearProgram) -> Iterator[tuple[int, ...]]:
    for _, mono in program.objective.terms:
        yield mono
    for con in program.constraints:
        for _, mono in con.terms:
            yield mono


def max_degree(program: MultilinearProgram) -> int:
    return max((len(m) for m in iter_monomials(program)), default=0)


Assignment = Union[Mapping, np.ndarray, Sequence[float]]

__all__ = [
    "ALL_FORMULATIONS", "MIMLP_VARIANTS", "FormulationId", "VariableRef", "Variable", "Constraint",
    "Objective", "MultilinearProgram", "build", "build_mlp1", "build_mlp2", "build_blp",
    "build_mimlp", "apply_continuous", "apply_feasibility", "evaluate_point", "extract_profile",
    "complete_assignment", "canonical_form", "merge_terms", "big_m", "max_degree",
]
