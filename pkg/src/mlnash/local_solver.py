"""Multistart local search on the squared-exploitability merit function.

``Phi(x) = sum_i (ubar_i(x) - E_i(x))^2`` is zero exactly at equilibria. It
is descended by projected gradient steps, and approximate points are snapped
to exact equilibria by Newton's method on the indifference conditions of a
guessed support. Success is always decided by the regret certificate.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .game import Game, MixedProfile, contract, regret_report
from .report import EQUILIBRIUM_FOUND, NODE_LIMIT, TIME_LIMIT, SolveReport

STEP_RULES = ("fixed", "backtracking")


@dataclass(frozen=True)
class LocalConfig:
    max_starts: int = 32
    max_iters: int = 400
    step_rule: str = "backtracking"
    eps_regret: float = 1e-6
    seed: int = 0
    dirichlet_starts: int = 24
    refine_every: int = 100
    step_size: float = 0.1  # fixed rule: scaled by 1 / spread^2

    def __post_init__(self):
        if self.step_rule not in STEP_RULES:
            raise ValidationError(f"step_rule must be one of {STEP_RULES}, got {self.step_rule!r}")
        for name in ("max_starts", "max_iters", "eps_regret", "refine_every", "step_size"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.dirichlet_starts < 0:
            raise ValidationError(f"dirichlet_starts must be >= 0, got {self.dirichlet_starts}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def _split(game: Game, vec: np.ndarray) -> list[np.ndarray]:
    return np.split(np.asarray(vec, dtype=np.float64), np.cumsum(game.strategy_counts)[:-1])


def pair_matrix(game: Game, dists, i: int, j: int) -> np.ndarray:
    """``M[s, t] = d u_s^i / d x_t^j``: A_i contracted over everyone but i and j."""
    m = contract(game.payoffs[i], dists, keep=(i, j))
    return m if i < j else m.T


def derivatives(game: Game, dists) -> tuple[list[np.ndarray], dict[tuple[int, int], np.ndarray]]:
    """Utility vectors ``u^i`` and all pair matrices ``M_ij`` at ``dists``."""
    n = game.num_players
    pairs = {(i, j): pair_matrix(game, dists, i, j) for i in range(n) for j in range(n) if i != j}
    utils = [pairs[i, (i + 1) % n] @ dists[(i + 1) % n] for i in range(n)]
    return utils, pairs


def merit_terms(game: Game, vec) -> tuple[float, np.ndarray]:
    """Phi and its gradient at a concatenated strategy vector (need not lie on the simplices)."""
    dists = _split(game, vec)
    utils, pairs = derivatives(game, dists)
    grads = [np.zeros_like(d) for d in dists]
    phi = 0.0
    for i, u in enumerate(utils):
        best = int(np.argmax(u))
        e = u[best] - dists[i] @ u
        phi += e * e
        if e == 0.0:
            continue
        # ubar^i does not depend on x^i; E_i is linear in x^i
        grads[i] -= 2.0 * e * u
        for j in range(game.num_players):
            if j != i:
                M = pairs[i, j]
                grads[j] += 2.0 * e * (M[best] - dists[i] @ M)
    return float(phi), np.concatenate(grads)


def smooth_regret_terms(game: Game, vec) -> tuple[float, np.ndarray]:
    """``R(x) = sum_i sum_s max(0, u_s^i - E_i)^2`` and its gradient.

    R is continuously differentiable and vanishes exactly at equilibria, so
    it carries descent through points where Phi has a kink.
    """
    dists = _split(game, vec)
    utils, pairs = derivatives(game, dists)
    grads = [np.zeros_like(d) for d in dists]
    value = 0.0
    for i, u in enumerate(utils):
        pos = np.maximum(u - dists[i] @ u, 0.0)
        value += pos @ pos
        total = pos.sum()
        if total == 0.0:
            continue
        grads[i] -= 2.0 * total * u
        for j in range(game.num_players):
            if j != i:
                M = pairs[i, j]
                grads[j] += 2.0 * (pos @ M - total * (dists[i] @ M))
    return float(value), np.concatenate(grads)


def merit(game: Game, profile: MixedProfile) -> float:
    return merit_terms(game, profile.vector())[0]


def merit_gradient(game: Game, vec) -> np.ndarray:
    return merit_terms(game, vec)[1]


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project(game: Game, vec: np.ndarray) -> np.ndarray:
    return np.concatenate([project_simplex(d) for d in _split(game, vec)])


def _profile(game: Game, vec: np.ndarray) -> MixedProfile:
    dists = [np.clip(d, 0.0, None) for d in _split(game, vec)]
    return MixedProfile(tuple(d / d.sum() for d in dists))


def _spread(game: Game) -> float:
    return max(1.0, max(float(p.max() - p.min()) for p in game.payoffs))


def _projected_descent(game, x, terms, config, deadline, stop_value):
    """Projected gradient on ``terms``; Armijo backtracking or a fixed step."""
    value, g = terms(game, x)
    fixed = config.step_size / _spread(game) ** 2
    t = fixed
    for it in range(config.max_iters):
        if value <= stop_value:
            break
        if deadline is not None and it % 32 == 0 and time.monotonic() > deadline:
            break
        if config.step_rule == "fixed":
            x = project(game, x - fixed * g)
            value, g = terms(game, x)
            continue
        t *= 2.0
        while True:
            cand = project(game, x - t * g)
            decrease = g @ (x - cand)
            if decrease <= 0.0:
                return x  # projected-stationary
            value_c, g_c = terms(game, cand)
            if value_c <= value - 1e-4 * decrease:
                x, value, g = cand, value_c, g_c
                break
            t *= 0.5
            if t < 1e-18:
                return x
    return x


def descend(game: Game, start: MixedProfile, config: LocalConfig = LocalConfig(),
            deadline: float | None = None) -> MixedProfile:
    """Projected gradient descent on Phi from ``start``; Phi never increases under backtracking."""
    x = _projected_descent(game, start.vector().copy(), merit_terms, config, deadline,
                           config.eps_regret ** 2)
    return _profile(game, x)


def descend_smooth(game: Game, start: MixedProfile, config: LocalConfig = LocalConfig(),
                   deadline: float | None = None) -> MixedProfile:
    """Projected gradient descent on the smooth companion R."""
    x = _projected_descent(game, start.vector().copy(), smooth_regret_terms, config, deadline,
                           config.eps_regret ** 2 / 4)
    return _profile(game, x)


def _support_guesses(game: Game, profile: MixedProfile) -> list[tuple[tuple[int, ...], ...]]:
    rep = regret_report(game, profile)
    spread = _spread(game)
    guesses = []
    for tau in (1e-2, 1e-3, 1e-5):
        guesses.append(tuple(tuple(np.flatnonzero(d > tau)) for d in profile.distributions))
    for theta in (1e-3, 1e-2):
        guesses.append(tuple(tuple(np.flatnonzero(r <= theta * spread)) for r in rep.regrets))
    unique = []
    for g in guesses:
        if all(len(s) for s in g) and g not in unique:
            unique.append(g)
    return unique


def solve_on_support(game: Game, support, start: MixedProfile, iters: int = 20) -> MixedProfile | None:
    """Newton's method on ``u_s^i = v_i (s in S_i), sum_{S_i} x^i = 1``; None if it fails."""
    n = game.num_players
    counts = game.strategy_counts
    dists = [np.zeros(k) for k in counts]
    for i, s in enumerate(support):
        d = start[i][list(s)]
        dists[i][list(s)] = d / d.sum() if d.sum() > 0 else 1.0 / len(s)
    offsets = np.concatenate([[0], np.cumsum([len(s) for s in support])])
    n_x = int(offsets[-1])
    size = n_x + n
    values = np.array([dists[i] @ contract(game.payoffs[i], dists, keep=(i,)) for i in range(n)])
    first_norm = np.inf
    for it in range(iters):
        rows, res = [], []
        for i in range(n):
            S = list(support[i])
            u = contract(game.payoffs[i], dists, keep=(i,))
            J = np.zeros((len(S), size))
            for j in range(n):
                if j != i:
                    M = pair_matrix(game, dists, i, j)
                    J[:, offsets[j]:offsets[j + 1]] = M[np.ix_(S, list(support[j]))]
            J[:, n_x + i] = -1.0
            rows.append(J)
            res.append(u[S] - values[i])
            norm = np.zeros((1, size))
            norm[0, offsets[i]:offsets[i + 1]] = 1.0
            rows.append(norm)
            res.append([dists[i][S].sum() - 1.0])
        J = np.vstack(rows)
        r = np.concatenate(res)
        if np.max(np.abs(r)) < 1e-13:
            break
        if it == 0:
            first_norm = max(float(np.max(np.abs(r))), 1e-12)
        norm_r = float(np.max(np.abs(r)))
        if norm_r > 1e3 * first_norm:
            return None  # diverging: wrong support
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return None
        for i in range(n):
            dists[i][list(support[i])] += step[offsets[i]:offsets[i + 1]]
        values += step[n_x:]
    for d in dists:
        if d.min() < -1e-9 or not np.all(np.isfinite(d)):
            return None
    try:
        return MixedProfile(tuple(np.clip(d, 0.0, None) / np.clip(d, 0.0, None).sum() for d in dists))
    except (ValidationError, ZeroDivisionError, FloatingPointError):
        return None


def refine_support(game: Game, profile: MixedProfile) -> MixedProfile:
    """Best-regret result among Newton solves on supports guessed from ``profile``."""
    best, best_regret = profile, regret_report(game, profile).max_regret
    for support in _support_guesses(game, profile):
        with np.errstate(all="ignore"):
            cand = solve_on_support(game, support, profile)
        if cand is None:
            continue
        reg = regret_report(game, cand).max_regret
        if reg < best_regret:
            best, best_regret = cand, reg
    return best


def polish(game: Game, start: MixedProfile, config: LocalConfig = LocalConfig(),
           deadline: float | None = None) -> MixedProfile:
    """Descend Phi, then alternate descents on R with support refinement.

    Returns the lowest-regret profile seen.
    """
    best = refine_support(game, start)
    best_regret = regret_report(game, best).max_regret
    if best_regret <= config.eps_regret:
        return best
    x = descend(game, start, replace(config, max_iters=min(config.refine_every, config.max_iters)), deadline)
    done = 0
    while done < config.max_iters and best_regret > config.eps_regret:
        if deadline is not None and time.monotonic() > deadline:
            break
        cand = refine_support(game, x)
        reg = regret_report(game, cand).max_regret
        if reg < best_regret:
            best, best_regret = cand, reg
        if best_regret <= config.eps_regret:
            break
        chunk = min(config.refine_every, config.max_iters - done)
        x = descend_smooth(game, x, replace(config, max_iters=chunk), deadline)
        done += chunk
    return best


def iter_starts(game: Game, seed: int = 0, dirichlet: int = 24):
    """Uniform profile, ``dirichlet`` seeded Dirichlet(1) samples, pure profiles in
    lexicographic order, then further Dirichlet samples without end."""
    counts = game.strategy_counts
    yield MixedProfile.uniform(counts)
    rng = np.random.default_rng(seed)
    for _ in range(dirichlet):
        yield MixedProfile(tuple(rng.dirichlet(np.ones(k)) for k in counts))
    for idx in np.ndindex(*counts):
        yield MixedProfile.pure(counts, idx)
    while True:
        yield MixedProfile(tuple(rng.dirichlet(np.ones(k)) for k in counts))


def start_points(game: Game, config: LocalConfig) -> list[MixedProfile]:
    """The first ``max_starts`` entries of ``iter_starts``."""
    return list(itertools.islice(iter_starts(game, config.seed, config.dirichlet_starts), config.max_starts))


def multistart(game: Game, config: LocalConfig = LocalConfig(), time_limit: float | None = None) -> SolveReport:
    """Polish from each start in turn; stop at the first certified equilibrium."""
    t0 = time.monotonic()
    deadline = None if time_limit is None else t0 + time_limit
    best, best_regret = None, np.inf
    timed_out = False
    for start in start_points(game, config):
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            break
        cand = polish(game, start, config, deadline)
        reg = regret_report(game, cand).max_regret
        if reg < best_regret:
            best, best_regret = cand, reg
        if best_regret <= config.eps_regret:
            break
    if best_regret <= config.eps_regret:
        status = EQUILIBRIUM_FOUND
    else:
        # out of starts counts as exhausting the node budget
        timed_out = timed_out or (deadline is not None and time.monotonic() > deadline)
        status = TIME_LIMIT if timed_out else NODE_LIMIT
    wall = time.monotonic() - t0
    if status == TIME_LIMIT and time_limit is not None:
        wall = max(wall, time_limit)
    return SolveReport(status, best, {}, float(best_regret), float(merit(game, best)) if best else np.nan,
                       wall_time=wall, solver="local")
