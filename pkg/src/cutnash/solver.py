"""Phase-by-phase search for approximate pure equilibria.

Players are grouped into blocks of geometrically decreasing maximum
utility.  Phase ``i`` alternates single-player moves in block ``i`` with
coalition moves in block ``i + 1`` until both are stable, so that the
heavy block is never disturbed much by the lighter blocks that follow.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .game import DEFAULT_SLACK, GameError, State, apply_flip, player_mask, potential
from .local import DEFAULT_MAX_MOVES, local_moves
from .params import block_ratio, check_epsilon, iteration_budget, sigma, tau
from .rounding import DEFAULT_ROUND_CAP, RoundingConfig, round_best
from .sdp import DEFAULT_TOL, SdpError, SdpStatus, build_sdp, solve_sdp

UNVERIFIED_BUDGET = "unverified-probabilistic-budget"
ALL_INERT = "all-players-inert"


class SolverError(RuntimeError):
    """The search could not make progress it was guaranteed to make."""


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 0.25
    seed: int = 0
    initial: str = "left"
    sdp_tol: float = DEFAULT_TOL
    z_threshold: float = 1e-7
    round_cap: int = DEFAULT_ROUND_CAP
    uncapped_rounds: bool = False
    slack: float = DEFAULT_SLACK
    max_global_loops: int = 10**6
    max_phase_loops: int = 10**6
    max_moves: int = DEFAULT_MAX_MOVES

    def __post_init__(self):
        check_epsilon(self.epsilon)
        if self.initial not in ("left", "random"):
            raise ValueError(f"initial state must be 'left' or 'random', got {self.initial!r}")
        if self.round_cap < 1:
            raise ValueError("round cap must be positive")
        if self.z_threshold < 0 or self.sdp_tol <= 0:
            raise ValueError("tolerances must be positive")

    def round_iterations(self, n):
        budget = iteration_budget(n, self.epsilon)
        return budget if self.uncapped_rounds else min(self.round_cap, budget)

    def initial_state(self, n):
        if self.initial == "left":
            return State.all_left(n)
        return State.random(n, np.random.default_rng(self.seed))


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Blocks ``1..m`` by maximum utility; ``membership[j]`` is 0 for inert
    players.  ``boundaries[i - 1]`` is the upper boundary of block ``i``."""

    ratio: float
    m: int
    boundaries: tuple
    membership: np.ndarray

    def block(self, i):
        if i < 1 or i > self.m:
            return ()
        return tuple(int(j) for j in np.flatnonzero(self.membership == i))

    def upper(self, i):
        return self.boundaries[i - 1]

    def lower(self, i):
        return self.boundaries[i]

    @property
    def sizes(self):
        return tuple(len(self.block(i)) for i in range(1, self.m + 1))


def partition_blocks(game, epsilon) -> BlockPartition:
    """Block ``i`` holds players with ``U_max / D**i < U_j <= U_max / D**(i-1)``
    where ``D = 480 n / epsilon**2``."""
    d = block_ratio(game.n, epsilon)
    U = game.max_utility
    active = ~game.inert
    membership = np.zeros(game.n, dtype=np.intp)
    if not active.any():
        return BlockPartition(d, 0, (), membership)
    top = float(U[active].max())
    for j in np.flatnonzero(active):
        i = int(math.floor(math.log(top / U[j]) / math.log(d))) + 1
        # Float logs can land one off at exact boundaries.
        while U[j] <= top * d ** (-i):
            i += 1
        while i > 1 and U[j] > top * d ** (1 - i):
            i -= 1
        membership[j] = i
    m = int(membership.max())
    bounds = tuple(top * d ** (-i) for i in range(m + 1))
    return BlockPartition(d, m, bounds, membership)


@dataclass(frozen=True, eq=False)
class PhaseTrace:
    index: int
    heavy_players: tuple
    light_players: tuple
    light_upper: float
    start_state: State
    end_state: State
    moved: frozenset
    flipped: frozenset
    tau_moves: tuple
    round_gains: tuple
    round_thresholds: tuple
    round_reached: tuple
    round_iterations: tuple
    sdp_values: tuple
    wall_time: float
    flags: frozenset

    @property
    def tau_move_count(self):
        return len(self.tau_moves)

    @property
    def sdp_calls(self):
        return len(self.sdp_values)

    @property
    def round_calls(self):
        return len(self.round_gains)


@dataclass
class _PhaseLog:
    index: int
    heavy: tuple
    light: tuple
    light_upper: float
    start: State
    moved: set = field(default_factory=set)
    tau_moves: list = field(default_factory=list)
    round_gains: list = field(default_factory=list)
    round_thresholds: list = field(default_factory=list)
    round_reached: list = field(default_factory=list)
    round_iterations: list = field(default_factory=list)
    sdp_values: list = field(default_factory=list)
    flags: set = field(default_factory=set)
    started: float = field(default_factory=time.perf_counter)

    def add_local(self, result):
        self.tau_moves.extend(result.moves)
        self.moved.update(m.player for m in result.moves)

    def freeze(self, end):
        diff = frozenset(int(j) for j in np.flatnonzero(self.start.sides != end.sides))
        return PhaseTrace(self.index, self.heavy, self.light, self.light_upper, self.start, end,
                          frozenset(self.moved), diff, tuple(self.tau_moves),
                          tuple(self.round_gains), tuple(self.round_thresholds),
                          tuple(self.round_reached), tuple(self.round_iterations),
                          tuple(self.sdp_values), time.perf_counter() - self.started,
                          frozenset(self.flags))


def _scratch_log(game, partition, players):
    blocks = set(int(partition.membership[j]) for j in players if partition.membership[j])
    i = min(blocks) if blocks else 1
    upper = partition.upper(i) if partition.m else 0.0
    return _PhaseLog(-1, (), tuple(players), upper, State.all_left(game.n))


def _round_seed(seed, phase, call):
    ss = np.random.SeedSequence([int(seed) & (2**63 - 1), phase + 1, call])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def global_moves(game, state, players, config: SolverConfig, partition=None, log=None):
    """Coalition search inside one block.

    Alternates single-player moves with SDP-guided rounding until the SDP
    certifies that no coalition of the block has a large stretch.
    Returns ``(state, changed)``.
    """
    eps = config.epsilon
    if partition is None:
        partition = partition_blocks(game, eps)
    members = tuple(int(j) for j in np.flatnonzero(player_mask(game.n, players) & ~game.inert))
    if log is None:
        log = _scratch_log(game, partition, members)
    if not members:
        return state, False

    t, s = tau(eps), sigma(eps)
    block = int(partition.membership[members[0]])
    lower = partition.lower(block)
    threshold = eps * lower / 48.0
    z_floor = config.z_threshold * float(game.max_utility[list(members)].min())
    iterations = config.round_iterations(game.n)

    res = local_moves(game, state, members, t, slack=config.slack, max_moves=config.max_moves)
    log.add_local(res)
    state, changed = res.state, res.changed
    tol, retried = config.sdp_tol, False
    for _ in range(config.max_global_loops):
        sol = solve_sdp(build_sdp(game, state, members, s), tol)
        if sol.status == SdpStatus.INFEASIBLE:
            raise SdpError("the relaxation is infeasible, which a stable block cannot produce")
        if sol.status != SdpStatus.OPTIMAL:
            raise SdpError(f"SDP solve failed ({sol.solver_status})")
        log.sdp_values.append(sol.Z)
        if sol.Z <= z_floor:
            return state, changed
        seed = _round_seed(config.seed, log.index, len(log.round_gains))
        out = round_best(game, state, members, sol.player_vectors, sol.vhat,
                         RoundingConfig(iterations, threshold, seed))
        log.round_gains.append(out.best_gain)
        log.round_thresholds.append(threshold)
        log.round_reached.append(out.threshold_reached)
        log.round_iterations.append(out.iterations_run)
        if out.best_gain <= 0:
            if retried:
                raise SolverError(f"rounding found no improving coalition although Z = {sol.Z!r}")
            retried, tol = True, tol / 100.0
            continue
        if not out.threshold_reached:
            log.flags.add(UNVERIFIED_BUDGET)
        state = apply_flip(state, out.best_R)
        log.moved.update(out.best_R)
        changed, retried, tol = True, False, config.sdp_tol
        res = local_moves(game, state, members, t, slack=config.slack, max_moves=config.max_moves)
        log.add_local(res)
        state = res.state
    raise SolverError(f"coalition search exceeded {config.max_global_loops} rounds")


class SolveResult(NamedTuple):
    state: State
    traces: tuple
    partition: BlockPartition
    flags: frozenset
    wall_time: float


def solve(game, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Run every phase and return the final state with per-phase traces.

    The traces carry what the per-phase bounds are checked against; see
    :func:`cutnash.report.build_report` for the verdict.
    """
    started = time.perf_counter()
    partition = partition_blocks(game, config.epsilon)
    state = config.initial_state(game.n)
    if partition.m == 0:
        return SolveResult(state, (), partition, frozenset({ALL_INERT}), 0.0)
    t = tau(config.epsilon)
    m = partition.m
    traces = []

    def upper(i):
        return partition.upper(i) if i <= m else partition.lower(m)

    log = _PhaseLog(0, (), partition.block(1), upper(1), state)
    state, _ = global_moves(game, state, partition.block(1), config, partition, log)
    traces.append(log.freeze(state))

    for i in range(1, m):
        heavy, light = partition.block(i), partition.block(i + 1)
        log = _PhaseLog(i, heavy, light, upper(i + 1), state)
        for _ in range(config.max_phase_loops):
            res = local_moves(game, state, heavy, t, slack=config.slack,
                              max_moves=config.max_moves)
            log.add_local(res)
            state = res.state
            state, changed = global_moves(game, state, light, config, partition, log)
            if not (res.changed or changed):
                break
        else:
            raise SolverError(f"phase {i} exceeded {config.max_phase_loops} rounds")
        traces.append(log.freeze(state))

    log = _PhaseLog(m, partition.block(m), (), upper(m + 1), state)
    res = local_moves(game, state, partition.block(m), t, slack=config.slack,
                      max_moves=config.max_moves)
    log.add_local(res)
    state = res.state
    traces.append(log.freeze(state))

    flags = frozenset().union(*(tr.flags for tr in traces))
    return SolveResult(state, tuple(traces), partition, flags, time.perf_counter() - started)


def phase_potential_change(game, phase: PhaseTrace) -> float:
    """Change of the movers' potential across one phase."""
    return (potential(game, phase.end_state, phase.moved)
            - potential(game, phase.start_state, phase.moved))
