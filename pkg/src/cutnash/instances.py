"""Instance and state files, plus seeded instance generators.

Instance text is a header line ``n m`` followed by ``m`` records
``j k w`` with ``0 <= j < k < n``.  Blank lines and ``#`` comments are
ignored.  States are single lines over ``{L, R}``.
"""

from __future__ import annotations

import math

import numpy as np

from .game import CutGame, GameError, State
from .params import block_ratio, check_epsilon


class InstanceFormatError(ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class HeaderError(InstanceFormatError):
    pass


class RecordError(InstanceFormatError):
    pass


class SelfLoopError(InstanceFormatError):
    pass


class DuplicateEdgeError(InstanceFormatError):
    pass


class NegativeWeightError(InstanceFormatError):
    pass


class EdgeCountError(InstanceFormatError):
    pass


def _content_lines(text):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _int(token, line, what, error):
    try:
        value = int(token)
    except ValueError:
        raise error(line, f"{what} must be an integer, got {token!r}") from None
    return value


def parse_instance(text) -> CutGame:
    lines = list(_content_lines(text))
    if not lines:
        raise HeaderError(1, "missing header 'n m'")
    number, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise HeaderError(number, f"header needs two fields 'n m', got {header!r}")
    n = _int(parts[0], number, "player count", HeaderError)
    m = _int(parts[1], number, "edge count", HeaderError)
    if n < 0 or m < 0:
        raise HeaderError(number, "counts must be non-negative")
    records = lines[1:]
    if len(records) != m:
        last = records[-1][0] if records else number
        raise EdgeCountError(last, f"header announces {m} edges but {len(records)} follow")

    seen = {}
    edges = []
    for number, line in records:
        parts = line.split()
        if len(parts) != 3:
            raise RecordError(number, f"edge record needs 'j k w', got {line!r}")
        j = _int(parts[0], number, "player id", RecordError)
        k = _int(parts[1], number, "player id", RecordError)
        try:
            w = float(parts[2])
        except ValueError:
            raise RecordError(number, f"weight must be a number, got {parts[2]!r}") from None
        if j == k:
            raise SelfLoopError(number, f"self-loop at player {j}")
        if not (0 <= j < n and 0 <= k < n):
            raise RecordError(number, f"player ids must lie in 0..{n - 1}")
        if j > k:
            raise RecordError(number, f"records list the smaller id first, got {j} {k}")
        if not math.isfinite(w):
            raise RecordError(number, f"weight must be finite, got {parts[2]!r}")
        if w < 0:
            raise NegativeWeightError(number, f"negative weight {w!r}")
        if (j, k) in seen:
            raise DuplicateEdgeError(number, f"edge {j} {k} already given on line {seen[j, k]}")
        seen[j, k] = number
        edges.append((j, k, w))
    return CutGame(n, tuple(edges))


def format_instance(game) -> str:
    lines = [f"{game.n} {len(game.edges)}"]
    lines += [f"{j} {k} {w!r}" for j, k, w in game.edges]
    return "\n".join(lines) + "\n"


def parse_state(text, n=None) -> State:
    lines = [line for _, line in _content_lines(text)]
    if len(lines) != 1:
        raise InstanceFormatError(1, "a state file holds exactly one line over {L, R}")
    try:
        state = State.from_string(lines[0])
    except GameError as exc:
        raise InstanceFormatError(1, str(exc)) from None
    if n is not None and state.n != n:
        raise InstanceFormatError(1, f"state has {state.n} entries, expected {n}")
    return state


def format_state(state) -> str:
    return str(state) + "\n"


# -- generators ---------------------------------------------------------------

def _need(params, key, default=None, kind=int, low=None):
    value = params.get(key, default)
    if value is None:
        raise ValueError(f"missing parameter {key!r}")
    value = kind(value)
    if low is not None and value < low:
        raise ValueError(f"parameter {key!r} must be at least {low}, got {value!r}")
    return value


def _random_edges(rng, n, density, draw):
    j, k = np.triu_indices(n, 1)
    keep = rng.random(j.size) < density
    j, k = j[keep], k[keep]
    return list(zip(j.tolist(), k.tolist(), draw(j.size).tolist()))


def _uniform(params, rng):
    n = _need(params, "n", low=1)
    p = _need(params, "p", 0.5, float, 0.0)
    return CutGame(n, tuple(_random_edges(rng, n, p, lambda s: 1.0 - rng.random(s))))


def _log_uniform(params, rng):
    n = _need(params, "n", low=1)
    p = _need(params, "p", 0.5, float, 0.0)
    decades = _need(params, "decades", 4.0, float, 0.0)
    draw = lambda s: 10.0 ** rng.uniform(-decades / 2, decades / 2, s)
    return CutGame(n, tuple(_random_edges(rng, n, p, draw)))


def _ring(params, rng):
    n = _need(params, "n", low=3)
    w = _need(params, "weight", 1.0, float, 0.0)
    return CutGame(n, tuple((min(i, (i + 1) % n), max(i, (i + 1) % n), w) for i in range(n)))


def _bipartite(params, rng):
    a = _need(params, "a", low=1)
    b = _need(params, "b", a, int, 1)
    random_weights = bool(params.get("random_weights", False))
    edges = [(i, a + k, (1.0 - rng.random()) if random_weights else 1.0)
             for i in range(a) for k in range(b)]
    return CutGame(a + b, tuple(edges))


def _multi_block(params, rng):
    """Groups of players whose weights sit ``D**1.5`` apart, ``D`` being the
    block ratio; each group is a ring with random chords, and edges between
    groups carry the lighter group's scale.  With at least two players per
    group every group but possibly the lightest lands in its own block."""
    n = _need(params, "n", low=4)
    eps = check_epsilon(_need(params, "epsilon", 0.25, float))
    groups = _need(params, "groups", 2, int, 2)
    p = _need(params, "p", 0.3, float, 0.0)
    if n < 2 * groups:
        raise ValueError(f"{groups} groups need at least {2 * groups} players")
    d = block_ratio(n, eps)
    order = rng.permutation(n)
    members = np.array_split(order, groups)
    scale = [d ** (-1.5 * g) for g in range(groups)]
    group_of = np.empty(n, dtype=np.intp)
    for g, ids in enumerate(members):
        group_of[ids] = g
    edges = {}
    for g, ids in enumerate(members):
        size = len(ids)
        for t in range(size if size > 2 else 1):
            a, b = int(ids[t]), int(ids[(t + 1) % size])
            edges[min(a, b), max(a, b)] = scale[g] * rng.uniform(0.5, 1.0)
    j, k = np.triu_indices(n, 1)
    for a, b in zip(j.tolist(), k.tolist()):
        if (a, b) in edges:
            continue
        same = group_of[a] == group_of[b]
        if rng.random() < (p if same else p / 2):
            edges[a, b] = scale[max(group_of[a], group_of[b])] * rng.uniform(0.5, 1.0)
    return CutGame(n, tuple((a, b, w) for (a, b), w in sorted(edges.items())))


GENERATORS = {
    "uniform-random": _uniform,
    "log-uniform-weights": _log_uniform,
    "multi-block": _multi_block,
    "ring": _ring,
    "complete-bipartite": _bipartite,
}


def generate(kind, params=None, seed=0) -> CutGame:
    """Deterministic instance of the named family for ``(params, seed)``."""
    if kind not in GENERATORS:
        raise ValueError(f"unknown instance kind {kind!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[kind](dict(params or {}), np.random.default_rng(seed))
