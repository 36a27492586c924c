"""Repeated single-player p-moves inside a player subset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import DEFAULT_SLACK, GameError, State, player_mask

DEFAULT_MAX_MOVES = 10**7


class MoveLimitExceeded(RuntimeError):
    """Raised when local search runs past its move ceiling.

    With exact arithmetic every p-move strictly raises the potential, so
    hitting the ceiling points at a slack misconfiguration.
    """


@dataclass(frozen=True)
class Move:
    player: int
    before: float
    after: float


@dataclass(frozen=True)
class LocalResult:
    state: State
    changed: bool
    moves: tuple


def local_moves(game, state, players, p, *, slack=DEFAULT_SLACK,
                max_moves=DEFAULT_MAX_MOVES) -> LocalResult:
    """Apply p-moves by players in ``players`` until none is left.

    Players are scanned in ascending id and the scan restarts after each
    move, so the lowest-id player holding a p-move always goes first.
    """
    if p <= 1:
        raise GameError(f"move factor must exceed 1, got {p!r}")
    if state.n != game.n:
        raise GameError("state and game disagree on the player count")
    members = np.flatnonzero(player_mask(game.n, players))
    if members.size == 0:
        return LocalResult(state, False, ())

    rows = game.matrix[members]
    cap = slack * game.max_utility[members]
    sides = state.sides.copy()
    moves = []
    while True:
        same = sides[members][:, None] == sides[None, :]
        u = (rows * ~same).sum(axis=1)
        dev = (rows * same).sum(axis=1)
        movers = np.flatnonzero(dev > p * u + cap)
        if movers.size == 0:
            break
        if len(moves) >= max_moves:
            raise MoveLimitExceeded(f"local search exceeded {max_moves} moves")
        i = movers[0]
        j = int(members[i])
        moves.append(Move(j, float(u[i]), float(dev[i])))
        sides[j] = not sides[j]

    if not moves:
        return LocalResult(state, False, ())
    return LocalResult(State(sides), True, tuple(moves))
