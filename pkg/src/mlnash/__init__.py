"""Nash equilibria of normal-form games through multilinear programs."""

from .errors import (ArgumentError, CapacityError, CorruptionError, NashError, ParseError, UnknownGameError,
                     ValidationError)
from .formulations import ALL_FORMULATIONS, FormulationId, MultilinearProgram, build, extract_profile
from .game import Game, MixedProfile, is_epsilon_nash, max_regret, regret_report
from .generators import InstanceSpec, generate, named_game
from .global_solver import GlobalConfig, solve
from .local_solver import LocalConfig, multistart
from .report import SolveReport

__version__ = "0.1.0"

__all__ = [
    "ALL_FORMULATIONS", "ArgumentError", "CapacityError", "CorruptionError", "FormulationId", "Game",
    "GlobalConfig", "InstanceSpec", "LocalConfig", "MixedProfile", "MultilinearProgram", "NashError",
    "ParseError", "SolveReport", "UnknownGameError", "ValidationError", "build", "extract_profile",
    "generate", "is_epsilon_nash", "max_regret", "multistart", "named_game", "regret_report", "solve",
]
