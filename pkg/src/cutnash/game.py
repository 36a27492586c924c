"""Cut games: states, cuts, utilities and subgame potentials.

A cut game lives on an edge-weighted graph whose nodes are the players.
Every player picks a side (left or right) and earns the weight of its
incident edges that cross the cut.  Pairs without a stored edge have
weight zero, so the sparse edge list stands in for the complete graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

LEFT = False
RIGHT = True

# Relative slack for the strict inequalities (p-moves, equilibrium checks).
DEFAULT_SLACK = 1e-9


class GameError(ValueError):
    """Invalid game, state or player set."""


def ratio(numerator, denominator):
    """Ratio with the zero-denominator convention used throughout.

    ``0/0`` is 1 and ``x/0`` for ``x > 0`` is ``math.inf``.
    """
    if denominator == 0:
        return math.inf if numerator > 0 else 1.0
    return numerator / denominator


@dataclass(frozen=True, eq=False)
class CutGame:
    """Weighted undirected graph; players are nodes ``0..n-1``.

    ``edges`` holds ``(j, k, w)`` triples with ``j < k`` after
    normalisation.  Zero-weight pairs are dropped.
    """

    n: int
    edges: tuple

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise GameError(f"player count must be a non-negative integer, got {self.n!r}")
        seen = set()
        normalised = []
        for edge in self.edges:
            j, k, w = edge
            j, k, w = int(j), int(k), float(w)
            if not (0 <= j < self.n and 0 <= k < self.n):
                raise GameError(f"edge ({j}, {k}) references a player outside 0..{self.n - 1}")
            if j == k:
                raise GameError(f"self-loop at player {j}")
            if not math.isfinite(w) or w < 0:
                raise GameError(f"edge ({j}, {k}) has invalid weight {w!r}")
            if j > k:
                j, k = k, j
            if (j, k) in seen:
                raise GameError(f"duplicate edge ({j}, {k})")
            seen.add((j, k))
            if w > 0:
                normalised.append((j, k, w))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple(normalised))

    @classmethod
    def from_matrix(cls, weights):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise GameError("weight matrix must be square")
        if not np.allclose(weights, weights.T, rtol=0, atol=0):
            raise GameError("weight matrix must be symmetric")
        n = weights.shape[0]
        j, k = np.triu_indices(n, 1)
        edges = [(a, b, weights[a, b]) for a, b in zip(j, k) if weights[a, b] != 0]
        return cls(n, tuple(edges))

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.intp)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.intp)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense symmetric weight matrix with a zero diagonal."""
        m = np.zeros((self.n, self.n))
        m[self.tails, self.heads] = self.weights
        m[self.heads, self.tails] = self.weights
        return m

    @cached_property
    def max_utility(self) -> np.ndarray:
        """Per-player U_j, the total weight of incident edges."""
        return self.matrix.sum(axis=1)

    @cached_property
    def inert(self) -> np.ndarray:
        """Players with U_j = 0; they never move and never matter."""
        return self.max_utility == 0

    def __repr__(self):
        return f"CutGame(n={self.n}, edges={len(self.edges)})"


@dataclass(frozen=True, eq=False)
class State:
    """Side assignment for every player (``True`` = right)."""

    sides: np.ndarray

    def __post_init__(self):
        sides = np.array(self.sides, dtype=bool).reshape(-1)
        sides.flags.writeable = False
        object.__setattr__(self, "sides", sides)

    @property
    def n(self):
        return self.sides.shape[0]

    @classmethod
    def all_left(cls, n):
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def random(cls, n, rng):
        return cls(rng.random(n) < 0.5)

    @classmethod
    def from_string(cls, text):
        text = text.strip()
        if set(text) - {"L", "R"}:
            raise GameError(f"state strings use only 'L' and 'R', got {text!r}")
        return cls(np.array([c == "R" for c in text], dtype=bool))

    def __str__(self):
        return "".join("R" if s else "L" for s in self.sides)

    def __repr__(self):
        return f"State({str(self)!r})"

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return np.array_equal(self.sides, other.sides)

    def __hash__(self):
        return hash(self.sides.tobytes())


@dataclass(frozen=True)
class CutView:
    in_cut: np.ndarray
    cut_weight: float


def player_mask(n, players: Optional[Iterable[int]]) -> np.ndarray:
    """Boolean membership mask for a player set, validating ids."""
    mask = np.zeros(n, dtype=bool)
    if players is None:
        return mask
    idx = np.fromiter((int(p) for p in players), dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise GameError(f"player ids must lie in 0..{n - 1}")
    mask[idx] = True
    return mask


def _check_state(game, state):
    if state.n != game.n:
        raise GameError(f"state has {state.n} entries but the game has {game.n} players")


def _check_player(game, j):
    if not (0 <= j < game.n):
        raise GameError(f"player {j} out of range 0..{game.n - 1}")


def cut_view(game: CutGame, state: State) -> CutView:
    _check_state(game, state)
    s = state.sides
    in_cut = s[game.tails] != s[game.heads]
    return CutView(in_cut, float(game.weights[in_cut].sum()))


def utilities(game: CutGame, state: State) -> np.ndarray:
    """Utility of every player in ``state``."""
    _check_state(game, state)
    s = state.sides
    return (game.matrix * (s[:, None] != s[None, :])).sum(axis=1)


def deviation_utilities(game: CutGame, state: State) -> np.ndarray:
    """Utility each player would get by switching sides alone."""
    _check_state(game, state)
    s = state.sides
    return (game.matrix * (s[:, None] == s[None, :])).sum(axis=1)


def utility(game: CutGame, state: State, j: int) -> float:
    _check_state(game, state)
    _check_player(game, j)
    s = state.sides
    return float((game.matrix[j] * (s != s[j])).sum())


def deviation_utility(game: CutGame, state: State, j: int) -> float:
    _check_state(game, state)
    _check_player(game, j)
    s = state.sides
    return float((game.matrix[j] * (s == s[j])).sum())


def potential(game: CutGame, state: State, subset=None) -> float:
    """Weight of cut edges; restricted to edges touching ``subset`` if given.

    With ``subset=None`` this is the exact potential of the full game.
    """
    view = cut_view(game, state)
    if subset is None:
        return view.cut_weight
    inside = player_mask(game.n, subset)
    touch = inside[game.tails] | inside[game.heads]
    return float(game.weights[view.in_cut & touch].sum())


def apply_flip(state: State, players) -> State:
    """Copy of ``state`` with every player in ``players`` switched."""
    flip = player_mask(state.n, players)
    return State(state.sides ^ flip)


def is_p_move(game, state, j, p, slack=DEFAULT_SLACK) -> bool:
    """Whether switching sides multiplies player j's utility by more than p.

    The comparison is ``u' > p * u + slack * U_j`` so a player with zero
    utility has a p-move exactly when its deviation utility is positive.
    """
    if p <= 1:
        raise GameError(f"move factor must exceed 1, got {p!r}")
    u = utility(game, state, j)
    dev = deviation_utility(game, state, j)
    return dev > p * u + slack * game.max_utility[j]


def flip_gain(game, state, players) -> float:
    """Phi_R after flipping R minus Phi_R before, for R = ``players``."""
    after = apply_flip(state, players)
    return potential(game, after, players) - potential(game, state, players)


def stretch(game: CutGame, state: State, players) -> float:
    players = list(players)
    if not players:
        raise GameError("stretch is undefined for an empty player set")
    before = potential(game, state, players)
    after = potential(game, apply_flip(state, players), players)
    return ratio(after, before)
