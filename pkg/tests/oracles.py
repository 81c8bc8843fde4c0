"""Independent reference computations used by the tests.

Nothing here imports mlnash numerics: payoffs are read as plain nested
loops over profiles, and 2-player equilibria are enumerated exactly with
``fractions.Fraction``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def profiles(counts):
    return itertools.product(*(range(k) for k in counts))


def payoff(tensor, profile):
    value = tensor
    for s in profile:
        value = value[s]
    return float(value)


def strategy_utilities(payoffs, counts, dists, player):
    """u_s^i by summing over every opponent profile."""
    out = [0.0] * counts[player]
    for prof in profiles(counts):
        weight = 1.0
        for j, s in enumerate(prof):
            if j != player:
                weight *= dists[j][s]
        out[prof[player]] += weight * payoff(payoffs[player], prof)
    return out


def regret(payoffs, counts, dists) -> float:
    """max_i (max_s u_s^i - sum_s x_s^i u_s^i)."""
    worst = 0.0
    for i in range(len(counts)):
        utils = strategy_utilities(payoffs, counts, dists, i)
        expected = sum(p * u for p, u in zip(dists[i], utils))
        worst = max(worst, max(utils) - expected)
    return worst


def pure_equilibria(payoffs, counts):
    """Pure profiles from which no player has a strictly better pure deviation."""
    found = []
    for prof in profiles(counts):
        stable = True
        for i in range(len(counts)):
            here = payoff(payoffs[i], prof)
            for s in range(counts[i]):
                dev = list(prof)
                dev[i] = s
                if payoff(payoffs[i], tuple(dev)) > here:
                    stable = False
        if stable:
            found.append(prof)
    return found


# --------------------------------------------------------------------------
# exact linear algebra


def _rank_solve(rows, rhs):
    """Gauss-Jordan over Fractions.

    Returns (consistent, unique, solution); the solution sets free
    variables to zero.
    """
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((k for k in range(r, len(m)) if m[k][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for k in range(len(m)):
            if k != r and m[k][c] != 0:
                f = m[k][c]
                m[k] = [a - f * b for a, b in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
    consistent = all(any(v != 0 for v in row[:-1]) or row[-1] == 0 for row in m)
    sol = [Fraction(0)] * ncols
    for k, c in enumerate(pivots):
        sol[c] = m[k][-1]
    return consistent, len(pivots) == ncols, sol


def _indifference(M, rows_, cols_):
    """Mix over ``cols_`` making every row in ``rows_`` earn the same value.

    Unknowns are the column weights and the common value.
    """
    k = len(cols_)
    eqs = [[M[r][c] for c in cols_] + [Fraction(-1)] for r in rows_]
    rhs = [Fraction(0)] * len(rows_)
    eqs.append([Fraction(1)] * k + [Fraction(0)])
    rhs.append(Fraction(1))
    return _rank_solve(eqs, rhs)


def _subsets(n):
    for size in range(1, n + 1):
        yield from itertools.combinations(range(n), size)


def _exact(matrix):
    return [[Fraction(v).limit_denominator(10**12) for v in row] for row in matrix]


def _transpose(M):
    return [list(col) for col in zip(*M)]


def is_nondegenerate(A, B) -> bool:
    """No mixed strategy with k support points has more than k pure best responses.

    Checked exactly for both players: for every column set J and every row
    set I with |I| = |J| + 1, the rows of I cannot all be indifferent under
    a mixture supported within J.
    """
    A, B = _exact(A), _exact(B)
    for M in (A, _transpose(B)):
        rows, cols = len(M), len(M[0])
        for J in _subsets(cols):
            for I in itertools.combinations(range(rows), len(J) + 1):
                consistent, unique, sol = _indifference(M, I, J)
                if consistent and (not unique or all(w >= 0 for w in sol[:-1])):
                    return False
    return True


def support_enumeration(A, B):
    """All equilibria of a nondegenerate bimatrix game as exact (x, y) tuples.

    For each pair of equal-size supports, solve the two indifference
    systems exactly, then keep solutions that are nonnegative and against
    which no pure strategy does better than the support value.
    """
    A, B = _exact(A), _exact(B)
    Bt = _transpose(B)
    m, n = len(A), len(A[0])
    found = []
    for I in _subsets(m):
        for J in itertools.combinations(range(n), len(I)):
            ok_y, uniq_y, sy = _indifference(A, I, J)
            ok_x, uniq_x, sx = _indifference(Bt, J, I)
            if not (ok_y and uniq_y and ok_x and uniq_x):
                continue
            y = [Fraction(0)] * n
            x = [Fraction(0)] * m
            for c, w in zip(J, sy[:-1]):
                y[c] = w
            for r, w in zip(I, sx[:-1]):
                x[r] = w
            if min(x) < 0 or min(y) < 0:
                continue
            v, w = sy[-1], sx[-1]
            if any(sum(A[r][c] * y[c] for c in range(n)) > v for r in range(m)):
                continue
            if any(sum(x[r] * B[r][c] for r in range(m)) > w for c in range(n)):
                continue
            if (x, y) not in found:
                found.append((x, y))
    return found


def as_floats(eq):
    return tuple([float(v) for v in d] for d in eq)


# --------------------------------------------------------------------------
# auxiliary variables of the MIMLPs, derived from an exact equilibrium


def auxiliary_values(payoffs, counts, dists, zero_tol=1e-12):
    """u, ubar, r, b (b = 1 exactly on unused strategies), U^i per player."""
    aux = {"u": {}, "ubar": {}, "r": {}, "b": {}, "U": {}}
    for i in range(len(counts)):
        utils = strategy_utilities(payoffs, counts, dists, i)
        best = max(utils)
        flat = [payoff(payoffs[i], prof) for prof in profiles(counts)]
        spread = max(flat) - min(flat)
        aux["U"][i] = spread if spread > 0 else 1.0
        aux["ubar"][i] = best
        for s, u in enumerate(utils):
            aux["u"][i, s] = u
            aux["r"][i, s] = best - u
            aux["b"][i, s] = 1.0 if dists[i][s] <= zero_tol else 0.0
    return aux


def mimlp_assignment(base, payoffs, counts, dists):
    """Name -> value map of a consistent MIMLP point at ``dists``.

    ``f`` and ``g`` sit at the smallest values their penalty rows allow.
    """
    aux = auxiliary_values(payoffs, counts, dists)
    out = {}
    for i, k in enumerate(counts):
        out[f"ubar[{i}]"] = aux["ubar"][i]
        big = aux["U"][i]
        for s in range(k):
            x, r, b = dists[i][s], aux["r"][i, s], aux["b"][i, s]
            out[f"x[{i},{s}]"] = x
            out[f"u[{i},{s}]"] = aux["u"][i, s]
            out[f"r[{i},{s}]"] = r
            out[f"b[{i},{s}]"] = b
            if base == "MIMLP2":
                out[f"f[{i},{s}]"] = max(r, big * b)
            if base == "MIMLP4":
                out[f"f[{i},{s}]"] = max(r / big, b)
            if base in ("MIMLP3", "MIMLP4"):
                out[f"g[{i},{s}]"] = max(x, 1.0 - b)
    return out


def mlp_assignment(payoffs, counts, dists, p):
    out = {f"p[{i}]": p[i] for i in range(len(counts))}
    for i, k in enumerate(counts):
        for s in range(k):
            out[f"x[{i},{s}]"] = dists[i][s]
    return out


def mlp1_objective(payoffs, counts, dists, p):
    """sum_i (E_i - p^i) by nested loops."""
    total = 0.0
    for i in range(len(counts)):
        utils = strategy_utilities(payoffs, counts, dists, i)
        total += sum(q * u for q, u in zip(dists[i], utils)) - p[i]
    return total
