"""Linear relaxations of multilinear programs over boxes.

A monomial ``v1 v2 ... vd`` (ids sorted) is decomposed by a left fold into
bilinear products ``w2 = v1 v2, w3 = w2 v3, ...``; auxiliaries are shared
between monomials with a common prefix. Every bilinear product carries the
four McCormick inequalities for the current box. A square ``w = b^2`` gets the
secant ``w <= (l+u) b - l u`` and tangents ``w >= 2 c b - c^2`` at
``c in {l, u}``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from .formulations import MultilinearProgram, merge_terms
from .lp import EQ, GE, LE, LinearProgram

_SENSE_CODE = {"<=": LE, "=": EQ, ">=": GE}

BRANCH_DELTA = 1e-6
MIN_WIDTH = 1e-9


@dataclass
class RelaxationStructure:
    """Box-independent part of a program's relaxation."""

    program: MultilinearProgram
    n_orig: int
    n_lp: int
    # product k defines column n_orig + k as factor_a[k] * factor_b[k]
    factor_a: np.ndarray
    factor_b: np.ndarray
    column_of: dict[tuple[int, ...], int]
    A_con: np.ndarray
    senses_con: np.ndarray
    b_con: np.ndarray
    cost: np.ndarray  # minimisation form
    cost_constant: float
    sign: float  # +1 for min/feasibility, -1 for max
    simplex_rows: list[tuple[np.ndarray, float]]
    branchable_01: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))

    @property
    def num_products(self) -> int:
        return self.factor_a.size

    @property
    def is_square(self) -> np.ndarray:
        return self.factor_a == self.factor_b


_CACHE: "weakref.WeakKeyDictionary[MultilinearProgram, RelaxationStructure]" = weakref.WeakKeyDictionary()


def structure_of(program: MultilinearProgram) -> RelaxationStructure:
    cached = _CACHE.get(program)
    if cached is None:
        cached = _CACHE[program] = _build_structure(program)
    return cached


def _build_structure(program: MultilinearProgram) -> RelaxationStructure:
    n = len(program.variables)
    column_of: dict[tuple[int, ...], int] = {(v,): v for v in range(n)}
    fa: list[int] = []
    fb: list[int] = []

    def column(mono: tuple[int, ...]) -> int:
        if mono in column_of:
            return column_of[mono]
        prefix = column(mono[:-1])
        col = n + len(fa)
        fa.append(prefix)
        fb.append(mono[-1])
        column_of[mono] = col
        return col

    merged_cons = [merge_terms(c.terms) for c in program.constraints]
    merged_obj = merge_terms(program.objective.terms)
    for terms in merged_cons + [merged_obj]:
        for _, mono in terms:
            column(mono)
    n_lp = n + len(fa)

    A = np.zeros((len(program.constraints), n_lp))
    for r, terms in enumerate(merged_cons):
        for coef, mono in terms:
            A[r, column_of[mono]] += coef
    senses = np.array([_SENSE_CODE[c.relation] for c in program.constraints], dtype=int)
    rhs = np.array([c.rhs for c in program.constraints], dtype=float)

    sense = program.objective.sense
    sign = -1.0 if sense == "max" else 1.0
    cost = np.zeros(n_lp)
    if sense != "feasibility":
        for coef, mono in merged_obj:
            cost[column_of[mono]] += sign * coef

    simplex_rows = []
    for con, terms in zip(program.constraints, merged_cons):
        if con.relation == "=" and terms and all(len(m) == 1 and c > 0 for c, m in terms):
            ids = np.array([m[0] for _, m in terms])
            coefs = np.array([c for c, _ in terms])
            if np.all(coefs == 1.0):
                simplex_rows.append((ids, con.rhs))

    branch01 = sorted(set(program.binary_ids) | set(program.square_ids))
    return RelaxationStructure(program, n, n_lp, np.array(fa, dtype=np.intp), np.array(fb, dtype=np.intp),
                               column_of, A, senses, rhs, cost, sign * program.objective.constant, sign,
                               simplex_rows, np.array(branch01, dtype=np.intp))


def propagate_bounds(structure: RelaxationStructure, lower: np.ndarray, upper: np.ndarray,
                     rounds: int = 2) -> bool:
    """Tighten x-bounds in place through the simplex equalities; False if empty."""
    for _ in range(rounds):
        for ids, rhs in structure.simplex_rows:
            lo, hi = lower[ids], upper[ids]
            slo, shi = lo.sum(), hi.sum()
            if slo > rhs + 1e-9 or shi < rhs - 1e-9:
                return False
            lower[ids] = np.maximum(lo, rhs - (shi - hi))
            upper[ids] = np.minimum(hi, rhs - (slo - lo))
    return bool(np.all(lower <= upper + 1e-12))


def product_bounds(structure: RelaxationStructure, lower: np.ndarray, upper: np.ndarray):
    """Extend original bounds with interval bounds of every auxiliary column."""
    lo = np.concatenate([lower, np.zeros(structure.num_products)])
    hi = np.concatenate([upper, np.zeros(structure.num_products)])
    n = structure.n_orig
    for k, (a, b) in enumerate(zip(structure.factor_a, structure.factor_b)):
        if a == b:
            la, ua = lo[a], hi[a]
            cands = (la * la, ua * ua)
            lo[n + k] = 0.0 if la <= 0.0 <= ua else min(cands)
            hi[n + k] = max(cands)
        else:
            cands = (lo[a] * lo[b], lo[a] * hi[b], hi[a] * lo[b], hi[a] * hi[b])
            lo[n + k] = min(cands)
            hi[n + k] = max(cands)
    return lo, hi


@dataclass
class LinearRelaxation:
    lp: LinearProgram
    structure: RelaxationStructure
    lower: np.ndarray  # LP column bounds
    upper: np.ndarray

    @property
    def n_envelope_rows(self) -> int:
        return self.lp.A.shape[0] - self.structure.A_con.shape[0]


def envelope_rows(structure: RelaxationStructure, lo: np.ndarray, hi: np.ndarray):
    """McCormick / secant / tangent rows for the given column bounds."""
    n = structure.n_orig
    bil = np.flatnonzero(~structure.is_square)
    sq = np.flatnonzero(structure.is_square)
    rows = 4 * bil.size + 3 * sq.size
    A = np.zeros((rows, structure.n_lp))
    rhs = np.zeros(rows)
    senses = np.zeros(rows, dtype=int)

    a, b = structure.factor_a[bil], structure.factor_b[bil]
    w = n + bil
    la, ua, lb, ub = lo[a], hi[a], lo[b], hi[b]
    k = bil.size
    r = np.arange(k)
    # w >= la*b + lb*a - la*lb ;  w >= ua*b + ub*a - ua*ub
    # w <= ua*b + lb*a - ua*lb ;  w <= la*b + ub*a - la*ub
    for block, (ca, cb, sense) in enumerate(((la, lb, GE), (ua, ub, GE), (ua, lb, LE), (la, ub, LE))):
        rr = block * k + r
        A[rr, w] = 1.0
        np.add.at(A, (rr, b), -ca)
        np.add.at(A, (rr, a), -cb)
        rhs[rr] = -ca * cb
        senses[rr] = sense

    off = 4 * k
    v = structure.factor_a[sq]
    w = n + sq
    lv, uv = lo[v], hi[v]
    q = sq.size
    r = np.arange(q)
    # secant: w - (l+u) v <= -l u
    A[off + r, w] = 1.0
    A[off + r, v] = -(lv + uv)
    rhs[off + r] = -lv * uv
    senses[off + r] = LE
    for t, c in enumerate((lv, uv), start=1):
        rr = off + t * q + r
        A[rr, w] = 1.0
        A[rr, v] = -2.0 * c
        rhs[rr] = -c * c
        senses[rr] = GE
    return A, senses, rhs


def relax(program: MultilinearProgram, lower: np.ndarray, upper: np.ndarray) -> LinearRelaxation:
    """LP relaxation of ``program`` restricted to the box [lower, upper] of original variables."""
    st = structure_of(program)
    lo, hi = product_bounds(st, np.asarray(lower, float), np.asarray(upper, float))
    A_env, s_env, b_env = envelope_rows(st, lo, hi)
    lp = LinearProgram(st.cost, np.vstack([st.A_con, A_env]), np.concatenate([st.senses_con, s_env]),
                       np.concatenate([st.b_con, b_env]), lo, hi)
    return LinearRelaxation(lp, st, lo, hi)


def product_violations(structure: RelaxationStructure, point: np.ndarray) -> np.ndarray:
    """|w - a*b| for every product column at an LP point."""
    w = point[structure.n_orig:]
    return np.abs(w - point[structure.factor_a] * point[structure.factor_b])


@dataclass(frozen=True)
class Branch:
    variable: int
    split: float
    kind: str  # "binary" or "spatial"


def branch_select(program: MultilinearProgram, lower: np.ndarray, upper: np.ndarray,
                  point: np.ndarray, eps_term: float = 1e-7) -> Branch | None:
    """Pick the branching variable for a node, or None if the LP point is eps-feasible.

    0/1 variables (binaries and ``b`` in ``b = b^2``) with a fractional LP value
    come first, most fractional first. Otherwise the original factor of the
    product with the largest |w - a b| is split at its LP value, clamped to
    the middle 80% of its interval.
    """
    st = structure_of(program)
    if st.branchable_01.size:
        ids = st.branchable_01
        vals = point[ids]
        open_ = upper[ids] - lower[ids] > 0.5
        frac = open_ & (vals > BRANCH_DELTA) & (vals < 1 - BRANCH_DELTA)
        if np.any(frac):
            dist = np.where(frac, np.abs(vals - 0.5), np.inf)
            return Branch(int(ids[np.argmin(dist)]), 0.5, "binary")
    if st.num_products == 0:
        return None
    viol = product_violations(st, point)
    order = np.argsort(-viol, kind="stable")
    n = st.n_orig
    for k in order:
        if viol[k] <= eps_term:
            return None
        factors = [f for f in (st.factor_a[k], st.factor_b[k]) if f < n]
        widths = [upper[f] - lower[f] for f in factors]
        if not factors or max(widths) <= MIN_WIDTH:
            continue
        var = int(factors[int(np.argmax(widths))])
        lo, hi = lower[var], upper[var]
        width = hi - lo
        split = float(np.clip(point[var], lo + 0.1 * width, hi - 0.1 * width))
        return Branch(var, split, "spatial")
    return None
