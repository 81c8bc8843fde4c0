from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mlnash import LocalConfig, MixedProfile, generate, multistart, named_game
from mlnash.errors import ValidationError
from mlnash.game import max_regret
from mlnash.local_solver import (
    descend,
    iter_starts,
    merit,
    merit_terms,
    polish,
    project,
    project_simplex,
    smooth_regret_terms,
    start_points,
)
from mlnash.report import EQUILIBRIUM_FOUND

PENNIES = named_game("matching_pennies")


def _exploitability_sq(game, prof):
    dists = [d.tolist() for d in prof.distributions]
    total = 0.0
    for i in range(game.num_players):
        utils = oracles.strategy_utilities(game.payoffs, game.strategy_counts, dists, i)
        total += (max(utils) - sum(p * u for p, u in zip(dists[i], utils))) ** 2
    return total


def _central_difference(f, x, h=1e-6):
    grad = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        grad[k] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


def _gradient_error(terms, game, vec):
    _, g = terms(game, vec)
    fd = _central_difference(lambda v: terms(game, v)[0], vec)
    return np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1.0)


# --------------------------------------------------------------------------
# merit


def test_merit_examples():
    assert merit(PENNIES, MixedProfile.uniform((2, 2))) == 0.0
    heads = MixedProfile((np.array([1.0, 0.0]), np.array([0.5, 0.5])))
    assert merit(PENNIES, heads) == 1.0
    game = generate("RG(3,3)#seed=42")
    uni = MixedProfile.uniform(game.strategy_counts)
    assert merit(game, uni) == pytest.approx(_exploitability_sq(game, uni), rel=1e-12)


def test_gradient_matches_finite_differences_on_rg33():
    game = generate("RG(3,3)#seed=42")
    rng = np.random.default_rng(0)
    for _ in range(50):
        vec = np.concatenate([rng.dirichlet(np.ones(3)) for _ in range(3)])
        assert _gradient_error(merit_terms, game, vec) <= 1e-5


@pytest.mark.parametrize("spec", ["RG(2,[3,4])#seed=1", "CG(3,3,-0.2)#seed=2", "RG(4,2)#seed=3",
                                  "CG(4,[2,3,2,2],0.5)#seed=4", "three_player_majority"])
def test_gradients_across_families(spec):
    game = generate(spec)
    rng = np.random.default_rng(1)
    for _ in range(20):
        vec = np.concatenate([rng.dirichlet(np.ones(k)) for k in game.strategy_counts])
        assert _gradient_error(merit_terms, game, vec) <= 1e-5
        assert _gradient_error(smooth_regret_terms, game, vec) <= 1e-5


# --------------------------------------------------------------------------
# projection


def test_projection_examples():
    assert project_simplex(np.array([2.0, 0.0])).tolist() == [1.0, 0.0]
    assert project_simplex(np.array([0.5, 0.5, 0.5])) == pytest.approx([1 / 3] * 3, abs=1e-15)
    assert project_simplex(np.array([-1.0, -1.0])).tolist() == [0.5, 0.5]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8))
def test_projection_is_valid_and_idempotent(values):
    p = project_simplex(np.array(values))
    assert p.min() >= 0.0 and abs(p.sum() - 1.0) <= 1e-12
    assert np.max(np.abs(project_simplex(p) - p)) <= 1e-12
    # the projection is the nearest simplex point: no vertex is closer
    v = np.array(values)
    for k in range(len(values)):
        e = np.zeros(len(values))
        e[k] = 1.0
        assert np.linalg.norm(v - p) <= np.linalg.norm(v - e) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.lists(st.integers(1, 5), min_size=2, max_size=3))
def test_project_whole_profile(seed, counts):
    game = generate(f"RG({len(counts)},[{','.join(map(str, counts))}])#seed={seed}")
    rng = np.random.default_rng(seed)
    vec = rng.normal(size=sum(counts)) * 3
    MixedProfile(tuple(np.split(project(game, vec), np.cumsum(counts)[:-1])))
    valid = np.concatenate([rng.dirichlet(np.ones(k)) for k in counts])
    assert np.max(np.abs(project(game, valid) - valid)) <= 1e-12


# --------------------------------------------------------------------------
# descent


def test_descend_fixed_at_equilibrium():
    uni = MixedProfile.uniform((2, 2))
    out = descend(PENNIES, uni)
    assert all(np.array_equal(a, b) for a, b in zip(out.distributions, uni.distributions))


@pytest.mark.parametrize("rule", ["backtracking", "fixed"])
def test_pennies_descent_converges(rule):
    start = MixedProfile((np.array([0.9, 0.1]), np.array([0.9, 0.1])))
    out = descend(PENNIES, start, LocalConfig(max_iters=10**4, step_rule=rule))
    for d in out.distributions:
        assert d == pytest.approx([0.5, 0.5], abs=1e-4)


def test_descent_is_monotone():
    game = generate("RG(3,3)#seed=5")
    start = MixedProfile.uniform(game.strategy_counts)
    values = [merit(game, descend(game, start, LocalConfig(max_iters=k, eps_regret=1e-12)))
              for k in range(1, 40)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 30))
def test_descent_never_increases_merit(seed, iters):
    game = generate(f"CG(2,3,-0.2)#seed={seed}")
    rng = np.random.default_rng(seed)
    start = MixedProfile(tuple(rng.dirichlet(np.ones(3)) for _ in range(2)))
    out = descend(game, start, LocalConfig(max_iters=iters))
    assert merit(game, out) <= merit(game, start) + 1e-12


def test_polish_snaps_to_oracle_equilibrium():
    game = generate("RG(2,3)#seed=8")
    A, B = (p.tolist() for p in game.payoffs)
    eqs = [oracles.as_floats(e) for e in oracles.support_enumeration(A, B)]
    out = polish(game, MixedProfile.uniform((3, 3)))
    assert max_regret(game, out) <= 1e-6
    vec = out.vector()
    assert min(np.max(np.abs(vec - np.concatenate(e))) for e in eqs) <= 1e-5


# --------------------------------------------------------------------------
# starts and multistart


def test_start_schedule():
    game = generate("RG(2,[2,3])#seed=0")
    starts = start_points(game, LocalConfig(max_starts=12, dirichlet_starts=4))
    assert len(starts) == 12
    assert starts[0].vector() == pytest.approx(MixedProfile.uniform((2, 3)).vector())
    vertices = [tuple(int(np.argmax(d)) for d in s.distributions) for s in starts[5:11]]
    assert vertices == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    assert all(max(d.max() for d in s.distributions) == 1.0 for s in starts[5:11])
    again = start_points(game, LocalConfig(max_starts=12, dirichlet_starts=4))
    assert all(np.array_equal(a.vector(), b.vector()) for a, b in zip(starts, again))


def test_start_iterator_is_unbounded():
    it = iter_starts(PENNIES, 3, 1)
    assert len([next(it) for _ in range(100)]) == 100


def test_multistart_pennies():
    rep = multistart(PENNIES, LocalConfig(max_starts=5))
    assert rep.status == EQUILIBRIUM_FOUND
    assert rep.max_regret <= 1e-6 and rep.solver == "local"


def test_coordination_from_vertex_starts():
    game = named_game("coordination_2x2")
    config = LocalConfig(max_starts=2, dirichlet_starts=0)
    starts = start_points(game, config)
    # uniform first, then the vertex (0, 0), which the oracle lists as pure equilibrium
    assert (0, 0) in oracles.pure_equilibria(game.payoffs, game.strategy_counts)
    out = polish(game, starts[1], config)
    assert [d.tolist() for d in out.distributions] == [[1.0, 0.0], [1.0, 0.0]]
    rep = multistart(game, config)
    assert rep.status == EQUILIBRIUM_FOUND
    assert max_regret(game, rep.profile) <= 1e-6


def test_rock_paper_scissors_uniform():
    rep = multistart(named_game("rock_paper_scissors"))
    assert rep.status == EQUILIBRIUM_FOUND
    for d in rep.profile.distributions:
        assert d == pytest.approx([1 / 3] * 3, abs=1e-4)


def test_multistart_certifies_on_random_games():
    for seed in range(5):
        game = generate(f"RG(3,3)#seed={seed}")
        rep = multistart(game, LocalConfig(max_starts=64))
        if rep.status == EQUILIBRIUM_FOUND:
            ref = oracles.regret(game.payoffs, game.strategy_counts,
                                 [d.tolist() for d in rep.profile.distributions])
            assert ref <= 1e-6


def test_config_validation():
    with pytest.raises(ValidationError):
        LocalConfig(step_rule="newton")
    with pytest.raises(ValidationError):
        LocalConfig(max_starts=0)
    with pytest.raises(ValidationError):
        LocalConfig(seed=-1)


# --------------------------------------------------------------------------
# properties


@st.composite
def game_and_profile(draw):
    n = draw(st.integers(2, 3))
    counts = draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    game = generate(f"RG({n},[{','.join(map(str, counts))}])#seed={draw(st.integers(0, 2**40))};range=-5..5")
    dists = []
    for k in counts:
        w = np.array(draw(st.lists(st.integers(0, 4), min_size=k, max_size=k)), float)
        if w.sum() == 0:
            w[0] = 1.0
        dists.append(w / w.sum())
    return game, MixedProfile(tuple(dists))


@settings(max_examples=200, deadline=None)
@given(game_and_profile())
def test_merit_nonnegative_and_zero_exactly_at_equilibria(gp):
    game, prof = gp
    value = merit(game, prof)
    assert value >= 0.0
    assert value == pytest.approx(_exploitability_sq(game, prof), rel=1e-9, abs=1e-12)
    assert (value <= 1e-18) == (max_regret(game, prof) <= 1e-9)
