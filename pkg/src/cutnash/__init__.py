"""Approximate pure equilibria in weighted cut games."""

from .game import CutGame, GameError, State, potential, stretch, utilities
from .instances import format_instance, generate, parse_instance
from .oracles import verify_equilibrium
from .params import RHO, sigma, target_factor, tau
from .report import RunReport, build_report
from .solver import SolverConfig, partition_blocks, solve

__all__ = [
    "RHO", "CutGame", "GameError", "RunReport", "SolverConfig", "State", "build_report",
    "format_instance", "generate", "parse_instance", "partition_blocks", "potential", "sigma",
    "solve", "stretch", "target_factor", "tau", "utilities", "verify_equilibrium",
]
