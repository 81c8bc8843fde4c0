"""Normal-form games, mixed profiles and the regret-based equilibrium certificate.

Payoff tensors are stored row-major with player 0's strategy index varying
slowest, i.e. ``payoffs[i][s_0, s_1, ..., s_{n-1}]`` is player ``i``'s payoff
at the pure profile ``(s_0, ..., s_{n-1})``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, CapacityError, ValidationError

#: Absolute tolerance for simplex membership of mixed profiles.
PROB_TOL = 1e-8

#: Largest number of pure profiles enumerate_pure_equilibria will scan.
MAX_PURE_PROFILES = 10**7

PureProfile = tuple[int, ...]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Game:
    """A finite n-player game in normal form."""

    payoffs: tuple[np.ndarray, ...]
    name: str = ""

    def __post_init__(self):
        tensors = tuple(_frozen(p) for p in self.payoffs)
        if len(tensors) < 2:
            raise ValidationError(f"a game needs at least 2 players, got {len(tensors)}")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise ValidationError(
                f"payoff tensors must have one axis per player: {len(tensors)} players, "
                f"tensor has {len(shape)} axes"
            )
        for i, t in enumerate(tensors):
            if t.shape != shape:
                raise ValidationError(f"payoff tensor {i} has shape {t.shape}, expected {shape}")
            if not np.all(np.isfinite(t)):
                raise ValidationError(f"payoff tensor {i} contains non-finite entries")
        if any(k < 1 for k in shape):
            raise ValidationError(f"every player needs at least one strategy, got {shape}")
        object.__setattr__(self, "payoffs", tensors)

    @classmethod
    def from_flat(cls, strategy_counts: Sequence[int], flat_payoffs: Sequence[Sequence[float]],
                  name: str = "") -> Game:
        """Build from one row-major flat payoff list per player."""
        counts = tuple(int(k) for k in strategy_counts)
        tensors = []
        for i, flat in enumerate(flat_payoffs):
            arr = np.asarray(flat, dtype=np.float64)
            if arr.size != math.prod(counts):
                raise ValidationError(
                    f"player {i}: expected {math.prod(counts)} payoffs, got {arr.size}")
            tensors.append(arr.reshape(counts))
        return cls(tuple(tensors), name)

    @property
    def num_players(self) -> int:
        return len(self.payoffs)

    @property
    def strategy_counts(self) -> tuple[int, ...]:
        return tuple(self.payoffs[0].shape)

    @property
    def num_profiles(self) -> int:
        return math.prod(self.strategy_counts)

    def payoff(self, player: int, profile: Sequence[int]) -> float:
        return float(self.payoffs[player][tuple(profile)])

    def check_player(self, player: int) -> None:
        if not 0 <= player < self.num_players:
            raise ArgumentError(f"player {player} out of range [0, {self.num_players})")

    def digest(self) -> str:
        """Short content hash of the strategy counts and payoffs."""
        h = hashlib.sha256(repr(self.strategy_counts).encode())
        for tensor in self.payoffs:
            h.update(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def affine(self, scale: Sequence[float], shift: Sequence[float]) -> Game:
        """Return the game with payoffs ``scale[i] * A_i + shift[i]``."""
        return Game(tuple(a * p + b for p, a, b in zip(self.payoffs, scale, shift)), self.name)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<Game{label} n={self.num_players} counts={self.strategy_counts}>"


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """One probability vector per player."""

    distributions: tuple[np.ndarray, ...]

    def __post_init__(self):
        dists = tuple(_frozen(np.ravel(d)) for d in self.distributions)
        for i, d in enumerate(dists):
            if d.size == 0:
                raise ValidationError(f"player {i} has an empty distribution")
            if not np.all(np.isfinite(d)):
                raise ValidationError(f"player {i} distribution has non-finite entries")
            if d.min() < -PROB_TOL or d.max() > 1 + PROB_TOL:
                raise ValidationError(f"player {i} distribution has entries outside [0, 1]: {d}")
            if abs(d.sum() - 1.0) > PROB_TOL:
                raise ValidationError(f"player {i} distribution sums to {d.sum()!r}, not 1")
        object.__setattr__(self, "distributions", dists)

    @classmethod
    def uniform(cls, counts: Iterable[int]) -> MixedProfile:
        return cls(tuple(np.full(k, 1.0 / k) for k in counts))

    @classmethod
    def pure(cls, counts: Sequence[int], indices: Sequence[int]) -> MixedProfile:
        dists = []
        for k, s in zip(counts, indices):
            d = np.zeros(k)
            d[s] = 1.0
            dists.append(d)
        return cls(tuple(dists))

    @classmethod
    def from_vector(cls, counts: Sequence[int], vector: Sequence[float]) -> MixedProfile:
        """Split a concatenated vector (player 0 first) into distributions."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.size != sum(counts):
            raise ValidationError(f"expected {sum(counts)} entries, got {vector.size}")
        return cls(tuple(np.split(vector, np.cumsum(counts)[:-1])))

    @property
    def num_players(self) -> int:
        return len(self.distributions)

    @property
    def strategy_counts(self) -> tuple[int, ...]:
        return tuple(d.size for d in self.distributions)

    def vector(self) -> np.ndarray:
        return np.concatenate(self.distributions)

    def __getitem__(self, player: int) -> np.ndarray:
        return self.distributions[player]

    def __repr__(self) -> str:
        parts = "; ".join(np.array2string(d, precision=6, separator=",") for d in self.distributions)
        return f"MixedProfile({parts})"


@dataclass(frozen=True)
class RegretReport:
    """Per-strategy utilities and regrets of a profile.

    ``utilities[i][s]`` is u_s^i, ``best_values[i]`` is max_s u_s^i,
    ``regrets[i][s] = best_values[i] - utilities[i][s]`` and ``max_regret``
    is the largest per-player exploitability ``best_values[i] - E_i``.
    """

    utilities: tuple[np.ndarray, ...]
    best_values: np.ndarray
    regrets: tuple[np.ndarray, ...]
    expected_payoffs: np.ndarray
    max_regret: float = field(default=0.0)

    @property
    def exploitabilities(self) -> np.ndarray:
        return self.best_values - self.expected_payoffs


def check_profile(game: Game, profile: MixedProfile) -> None:
    if profile.strategy_counts != game.strategy_counts:
        raise ValidationError(
            f"profile shape {profile.strategy_counts} does not match game {game.strategy_counts}")


def contract(tensor: np.ndarray, dists: Sequence[np.ndarray], keep: Sequence[int] = ()) -> np.ndarray:
    """Contract every axis of ``tensor`` not in ``keep`` with the matching distribution.

    Axes are summed out last-to-first, so the summation order is fixed. The
    remaining axes appear in increasing order.
    """
    keep = set(keep)
    out = tensor
    for axis in reversed(range(tensor.ndim)):
        if axis not in keep:
            out = np.tensordot(out, dists[axis], axes=([axis], [0]))
    return out


def utilities(game: Game, profile: MixedProfile, player: int) -> np.ndarray:
    """Vector of u_s^i over the player's pure strategies."""
    return contract(game.payoffs[player], profile.distributions, keep=(player,))


def expected_utility(game: Game, profile: MixedProfile, player: int, pure: int) -> float:
    """Expected payoff of ``player`` switching to pure strategy ``pure``."""
    game.check_player(player)
    if not 0 <= pure < game.strategy_counts[player]:
        raise ArgumentError(
            f"strategy {pure} out of range [0, {game.strategy_counts[player]}) for player {player}")
    check_profile(game, profile)
    return float(utilities(game, profile, player)[pure])


def expected_payoff(game: Game, profile: MixedProfile, player: int) -> float:
    game.check_player(player)
    check_profile(game, profile)
    return float(profile[player] @ utilities(game, profile, player))


def regret_report(game: Game, profile: MixedProfile) -> RegretReport:
    check_profile(game, profile)
    utils = tuple(utilities(game, profile, i) for i in range(game.num_players))
    best = np.array([u.max() for u in utils])
    regrets = tuple(b - u for b, u in zip(best, utils))
    expected = np.array([profile[i] @ u for i, u in enumerate(utils)])
    # exploitability is >= 0 mathematically; guard against last-bit rounding
    max_regret = float(max(0.0, np.max(best - expected)))
    return RegretReport(utils, best, regrets, expected, max_regret)


def max_regret(game: Game, profile: MixedProfile) -> float:
    return regret_report(game, profile).max_regret


def is_epsilon_nash(game: Game, profile: MixedProfile, eps: float) -> bool:
    if eps < 0 or math.isnan(eps):
        raise ArgumentError(f"eps must be non-negative, got {eps}")
    return regret_report(game, profile).max_regret <= eps


def payoff_spread(game: Game, player: int) -> float:
    """Largest difference between any two payoffs of ``player`` (U^i)."""
    game.check_player(player)
    tensor = game.payoffs[player]
    return float(tensor.max() - tensor.min())


def enumerate_pure_equilibria(game: Game) -> list[PureProfile]:
    """All pure profiles without a profitable unilateral pure deviation, lexicographic."""
    if game.num_profiles > MAX_PURE_PROFILES:
        raise CapacityError(
            f"{game.num_profiles} pure profiles exceed the enumeration limit {MAX_PURE_PROFILES}")
    stable = np.ones(game.strategy_counts, dtype=bool)
    for i, tensor in enumerate(game.payoffs):
        stable &= tensor >= tensor.max(axis=i, keepdims=True)
    return [tuple(int(k) for k in idx) for idx in np.argwhere(stable)]
