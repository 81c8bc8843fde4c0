from __future__ import annotations

import numpy as np
import pytest

import oracles
from mlnash import ALL_FORMULATIONS, GlobalConfig, build, generate, named_game, solve
from mlnash.errors import ValidationError
from mlnash.global_solver import BoxNode
from mlnash.lp import OPTIMAL, LPResult
from mlnash.report import EQUILIBRIUM_FOUND, NODE_LIMIT, TIME_LIMIT

NAMED = ["matching_pennies", "rock_paper_scissors", "coordination_2x2", "three_player_majority"]


def _oracle_regret(game, profile):
    return oracles.regret(game.payoffs, game.strategy_counts, [d.tolist() for d in profile.distributions])


def _distance_to_oracle_set(game, profile):
    A, B = (p.tolist() for p in game.payoffs)
    eqs = [np.concatenate(oracles.as_floats(e)) for e in oracles.support_enumeration(A, B)]
    return min(np.max(np.abs(profile.vector() - e)) for e in eqs)


def test_pennies_mlp2_uniform():
    game = named_game("matching_pennies")
    rep = solve(build("MLP2", game), game, GlobalConfig())
    assert rep.status == EQUILIBRIUM_FOUND
    for d in rep.profile.distributions:
        assert d == pytest.approx([0.5, 0.5], abs=1e-6)
    assert rep.solver == "global" and rep.formulation == "MLP2"


def test_coordination_lands_on_a_known_equilibrium():
    game = named_game("coordination_2x2")
    rep = solve(build("MLP2", game), game)
    assert rep.status == EQUILIBRIUM_FOUND and rep.max_regret <= 1e-6
    assert len(oracles.support_enumeration(*(p.tolist() for p in game.payoffs))) == 3
    assert _distance_to_oracle_set(game, rep.profile) <= 1e-6


def test_mimlp4_pennies_objective():
    game = named_game("matching_pennies")
    rep = solve(build("MIMLP4", game), game)
    assert rep.status == EQUILIBRIUM_FOUND
    assert rep.objective == pytest.approx(4.0, abs=1e-6)


@pytest.mark.parametrize("name", NAMED)
def test_every_formulation_on_named_games(name):
    game = named_game(name)
    for fid in ALL_FORMULATIONS:
        code = getattr(fid, "code", fid)
        if code == "BLP" and game.num_players != 2:
            with pytest.raises(ValidationError):
                build(code, game)
            continue
        rep = solve(build(code, game), game, GlobalConfig(time_limit=30))
        assert rep.status == EQUILIBRIUM_FOUND, code
        assert _oracle_regret(game, rep.profile) <= 1e-6


@pytest.mark.parametrize("code", ["MLP2", "MLP1", "MIMLP1", "MIMLP3F", "MIMLP4C"])
def test_soundness_against_oracle_regret(code):
    for seed in range(4):
        game = generate(f"RG(3,2)#seed={seed}" if seed % 2 else f"CG(2,3,-0.2)#seed={seed}")
        rep = solve(build(code, game), game, GlobalConfig(time_limit=30))
        assert rep.status == EQUILIBRIUM_FOUND
        assert rep.max_regret <= 1e-6
        assert _oracle_regret(game, rep.profile) <= 1e-6


def test_two_player_results_are_oracle_equilibria():
    for seed in range(5):
        game = generate(f"RG(2,3)#seed={seed}")
        rep = solve(build("MLP2", game), game)
        assert rep.status == EQUILIBRIUM_FOUND
        assert _distance_to_oracle_set(game, rep.profile) <= 1e-5


def test_deterministic_with_one_worker():
    game = generate("RG(3,3)#seed=4")
    program = build("MIMLP2", game)
    a, b = solve(program, game), solve(program, game)
    assert a.status == b.status
    assert a.profile.vector().tobytes() == b.profile.vector().tobytes()
    assert (a.nodes_explored, a.lp_iterations, a.objective) == (b.nodes_explored, b.lp_iterations, b.objective)


def test_time_limit_reports_at_least_the_limit():
    game = generate("RG(3,5)#seed=2")
    rep = solve(build("MLP2", game), game, GlobalConfig(time_limit=0.05))
    assert rep.status == TIME_LIMIT
    assert rep.wall_time >= 0.05
    # whatever was seen before the deadline is reported with its true regret
    if rep.profile is not None:
        assert rep.max_regret == pytest.approx(_oracle_regret(game, rep.profile), rel=1e-9)


def test_node_limit():
    game = generate("RG(3,5)#seed=0")
    rep = solve(build("MLP2", game), game, GlobalConfig(node_limit=1, heuristic_iters=1))
    assert rep.status == NODE_LIMIT
    assert rep.nodes_explored == 1


def test_highs_backend_agrees():
    for seed in range(3):
        game = generate(f"RG(2,3)#seed={seed + 10}")
        program = build("MIMLP1", game)
        ours = solve(program, game)
        ref = solve(program, game, GlobalConfig(lp_backend="highs"))
        assert ours.status == ref.status == EQUILIBRIUM_FOUND
        assert _distance_to_oracle_set(game, ref.profile) <= 1e-5


def test_binary_branching_terminates_within_bound():
    # two-player MIMLP1 is linear, so every relaxation is exact and only b is branched
    for seed in range(10):
        game = generate(f"RG(2,2)#seed={seed}")
        rep = solve(build("MIMLP1", game), game)
        assert rep.status == EQUILIBRIUM_FOUND
        assert rep.nodes_explored <= 2 ** 4


def test_harder_instance_explores_a_tree():
    game = generate("RG(2,5)#seed=3")
    rep = solve(build("MLP2", game), game, GlobalConfig(time_limit=120))
    assert rep.status == EQUILIBRIUM_FOUND
    assert rep.nodes_explored > 1
    assert _distance_to_oracle_set(game, rep.profile) <= 1e-5


def test_program_must_match_game():
    with pytest.raises(ValidationError):
        solve(build("MLP2", generate("RG(2,2)#seed=1")), generate("RG(2,2)#seed=2"))


def test_config_validation():
    for bad in ({"time_limit": 0}, {"node_limit": 0}, {"eps_regret": -1e-6}, {"lp_backend": "cplex"},
                {"workers": 0}):
        with pytest.raises(ValidationError):
            GlobalConfig(**bad)


def test_box_node_bound():
    node = BoxNode(np.zeros(2), np.ones(2), parent_bound=-3.0)
    assert node.bound == -3.0
    node.lp = LPResult(OPTIMAL, np.zeros(2), -5.0, 1)
    assert node.bound == -3.0
    node.lp = LPResult(OPTIMAL, np.zeros(2), 2.0, 1)
    assert node.bound == 2.0
