"""Seedable instance generators: random games RG(n,k), covariance games CG(n,k,rho)
and a handful of named textbook games.

Every payoff entry is a pure function of (seed, stream, flat profile index): a
SplitMix64-style hash acts as a counter-based RNG, so generation is identical
across platforms and any subset of entries can be regenerated independently.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri

from .errors import UnknownGameError, ValidationError
from .game import Game

DEFAULT_LOW = -100
DEFAULT_HIGH = 100

_FAMILIES = ("Random", "Covariance", "Named")
_PREFIX = {"Random": "RG", "Covariance": "CG"}

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_COV_STREAM = 1 << 32


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_counter(seed: int, stream: int, counters: np.ndarray) -> np.ndarray:
    """64-bit hashes of ``counters`` under the key ``(seed, stream)``."""
    key = _finalize(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    key = _finalize(key ^ np.array([stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    counters = np.asarray(counters, dtype=np.uint64)
    return _finalize(key + (counters + np.uint64(1)) * _GOLDEN)


def uniform01(seed: int, stream: int, counters: np.ndarray) -> np.ndarray:
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    bits = hash_counter(seed, stream, counters) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    num_players: int = 2
    strategy_counts: tuple[int, ...] = ()
    rho: float = 0.0
    payoff_low: int = DEFAULT_LOW
    payoff_high: int = DEFAULT_HIGH
    seed: int = 0
    named_id: str | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "strategy_counts", tuple(int(k) for k in self.strategy_counts))
        self.validate()

    def validate(self) -> None:
        if self.family not in _FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {_FAMILIES}")
        if self.family == "Named":
            if not self.named_id:
                raise ValidationError("a Named instance needs named_id")
            return
        if self.num_players < 2:
            raise ValidationError(f"need at least 2 players, got {self.num_players}")
        if len(self.strategy_counts) != self.num_players:
            raise ValidationError(
                f"{len(self.strategy_counts)} strategy counts for {self.num_players} players")
        if any(k < 1 for k in self.strategy_counts):
            raise ValidationError(f"strategy counts must be positive: {self.strategy_counts}")
        if not self.payoff_low < self.payoff_high:
            raise ValidationError(
                f"payoff_low {self.payoff_low} must be below payoff_high {self.payoff_high}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.family == "Covariance":
            bound = -1.0 / (self.num_players - 1)
            if not bound <= self.rho <= 1.0 or math.isnan(self.rho):
                raise ValidationError(
                    f"rho={self.rho} outside [{bound:g}, 1]: the equicorrelation matrix of "
                    f"{self.num_players} players is positive semidefinite only for "
                    f"rho >= -1/(n-1)")

    @property
    def label(self) -> str:
        """Family label without seed/range, e.g. ``CG(3,5,-0.2)``."""
        if self.family == "Named":
            return self.named_id
        counts = self.strategy_counts
        k = str(counts[0]) if len(set(counts)) == 1 else "[" + ",".join(map(str, counts)) + "]"
        args = [str(self.num_players), k]
        if self.family == "Covariance":
            # shortest round-trip text so the label re-parses to the same rho
            args.append(str(int(self.rho)) if self.rho.is_integer() else repr(float(self.rho)))
        return f"{_PREFIX[self.family]}({','.join(args)})"

    def __str__(self) -> str:
        if self.family == "Named":
            return self.named_id
        return f"{self.label}#seed={self.seed};range={self.payoff_low}..{self.payoff_high}"

    def with_seed(self, seed: int) -> InstanceSpec:
        return replace(self, seed=seed)

    @classmethod
    def parse(cls, text: str) -> InstanceSpec:
        """Parse ``RG(3,3)#seed=42;range=-100..100``, ``CG(5,5,-0.2)#seed=7`` or a named id."""
        text = text.strip()
        head, _, tail = text.partition("#")
        m = re.fullmatch(r"(RG|CG)\((.*)\)", head.replace(" ", ""))
        if m is None:
            if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", head) and not tail:
                return cls("Named", named_id=head)
            raise ValidationError(f"cannot parse instance spec {text!r}")
        kind, body = m.groups()
        args = re.findall(r"\[[^\]]*\]|[^,]+", body)
        expected = 3 if kind == "CG" else 2
        if len(args) != expected:
            raise ValidationError(f"{kind} takes {expected} arguments, got {text!r}")
        try:
            n = int(args[0])
            if args[1].startswith("["):
                counts = tuple(int(v) for v in args[1][1:-1].split(","))
            else:
                counts = (int(args[1]),) * n
            rho = float(args[2]) if kind == "CG" else 0.0
        except ValueError as exc:
            raise ValidationError(f"cannot parse instance spec {text!r}: {exc}") from None
        options = {"seed": 0, "low": DEFAULT_LOW, "high": DEFAULT_HIGH}
        for item in filter(None, tail.split(";")):
            key, _, value = item.partition("=")
            key = key.strip()
            try:
                if key == "seed":
                    options["seed"] = int(value)
                elif key == "range":
                    low, high = re.fullmatch(r"\s*(-?\d+)\.\.(-?\d+)\s*", value).groups()
                    options["low"], options["high"] = int(low), int(high)
                else:
                    raise ValidationError(f"unknown option {key!r} in {text!r}")
            except (ValueError, AttributeError):
                raise ValidationError(f"bad value for {key!r} in {text!r}") from None
        family = "Covariance" if kind == "CG" else "Random"
        return cls(family, n, counts, rho, options["low"], options["high"], options["seed"])


def generate_random_game(spec: InstanceSpec) -> Game:
    """Independent uniform integer payoffs on {payoff_low, ..., payoff_high}."""
    if spec.family != "Random":
        raise ValidationError(f"expected a Random spec, got {spec.family}")
    size = math.prod(spec.strategy_counts)
    width = spec.payoff_high - spec.payoff_low + 1
    counters = np.arange(size, dtype=np.uint64)
    tensors = []
    for player in range(spec.num_players):
        u = uniform01(spec.seed, player, counters)
        values = spec.payoff_low + np.minimum(np.floor(u * width), width - 1)
        tensors.append(values.reshape(spec.strategy_counts))
    return Game(tuple(tensors), name=str(spec))


def covariance_samples(spec: InstanceSpec) -> np.ndarray:
    """Pre-rounding payoffs, shape ``(n, num_profiles)``.

    Each column is an equicorrelated normal vector (unit variance, pairwise
    correlation rho) mapped through the closed-form square root
    ``sqrt(1-rho) I + c 11^T`` of the correlation matrix, scaled so the payoff
    range spans six standard deviations around its midpoint.
    """
    if spec.family != "Covariance":
        raise ValidationError(f"expected a Covariance spec, got {spec.family}")
    n, rho = spec.num_players, spec.rho
    size = math.prod(spec.strategy_counts)
    counters = np.arange(size, dtype=np.uint64)
    z = np.stack([ndtri(uniform01(spec.seed, _COV_STREAM + j, counters)) for j in range(n)])
    a = math.sqrt(max(0.0, 1.0 - rho))
    c = (math.sqrt(max(0.0, 1.0 + (n - 1) * rho)) - a) / n
    correlated = a * z + c * z.sum(axis=0, keepdims=True)
    mid = 0.5 * (spec.payoff_low + spec.payoff_high)
    return mid + correlated * (spec.payoff_high - spec.payoff_low) / 6.0


def generate_covariance_game(spec: InstanceSpec) -> Game:
    # + 0.0 turns the -0.0 that rint produces into 0.0
    values = np.clip(np.rint(covariance_samples(spec)), spec.payoff_low, spec.payoff_high) + 0.0
    return Game(tuple(v.reshape(spec.strategy_counts) for v in values), name=str(spec))


def _majority() -> Game:
    tensor = np.zeros((3, 2, 2, 2))
    for s in np.ndindex(2, 2, 2):
        for i in range(3):
            # with three players and two actions the majority always exists
            tensor[i][s] = 1.0 if sum(a == s[i] for a in s) >= 2 else 0.0
    return Game(tuple(tensor), name="three_player_majority")


def _named_games():
    pennies = np.array([[1.0, -1.0], [-1.0, 1.0]])
    rps = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    coord = np.eye(2)
    return {
        "matching_pennies": lambda: Game((pennies, -pennies), name="matching_pennies"),
        "rock_paper_scissors": lambda: Game((rps, -rps), name="rock_paper_scissors"),
        "coordination_2x2": lambda: Game((coord, coord), name="coordination_2x2"),
        "three_player_majority": _majority,
    }


NAMED_GAMES = tuple(_named_games())


def named_game(game_id: str) -> Game:
    """Textbook fixtures.

    * ``matching_pennies``: A_1 = [[1,-1],[-1,1]], A_2 = -A_1.
    * ``rock_paper_scissors``: zero-sum cyclic 3x3 game, row player wins +1.
    * ``coordination_2x2``: both players get 1 on the diagonal, 0 elsewhere.
    * ``three_player_majority``: 3 players, 2 actions, payoff 1 to every
      player whose action is shared by at least one other player.
    """
    try:
        return _named_games()[game_id]()
    except KeyError:
        raise UnknownGameError(f"unknown named game {game_id!r}; known: {', '.join(NAMED_GAMES)}") from None


def generate(spec: InstanceSpec | str) -> Game:
    if isinstance(spec, str):
        spec = InstanceSpec.parse(spec)
    if spec.family == "Random":
        return generate_random_game(spec)
    if spec.family == "Covariance":
        return generate_covariance_game(spec)
    return named_game(spec.named_id)
