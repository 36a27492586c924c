"""Rotation plus random-hyperplane rounding of SDP vectors.

Each player vector at angle ``theta`` from the reference vector is moved,
inside the plane it spans with the reference vector, to angle
``(pi/2)(1 - cos theta)``.  A random hyperplane then selects the players
whose rotated vector falls on the reference vector's side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .game import flip_gain, player_mask

UNIT_TOL = 1e-8
DEFAULT_ROUND_CAP = 10**5

# Iteration t uses row t - start of the chunk containing t; chunk c has
# CHUNK_BASE * 4**c rows (capped), so directions depend only on (seed, t).
CHUNK_BASE = 16
CHUNK_MAX = 4096


def rotation_angle(theta):
    return 0.5 * np.pi * (1.0 - np.cos(theta))


def _check_unit(v, name):
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} must be a unit vector (norm {norm!r})")


def rotate(v, vhat):
    """Rotate ``v`` towards or away from ``vhat`` within their common plane."""
    v = np.asarray(v, dtype=float)
    vhat = np.asarray(vhat, dtype=float)
    _check_unit(v, "v")
    _check_unit(vhat, "vhat")
    return rotate_many(v[None, :], vhat)[0]


def rotate_many(vectors, vhat):
    """Row-wise :func:`rotate` without the unit-length checks."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    vhat = np.asarray(vhat, dtype=float)
    cos_theta = np.clip(vectors @ vhat, -1.0, 1.0)
    target = rotation_angle(np.arccos(cos_theta))
    ortho = vectors - cos_theta[:, None] * vhat[None, :]
    norms = np.linalg.norm(ortho, axis=1)
    flat = norms < 1e-12
    safe = np.where(flat, 1.0, norms)
    ortho = ortho / safe[:, None]
    out = np.cos(target)[:, None] * vhat[None, :] + np.sin(target)[:, None] * ortho
    # Parallel or antiparallel input: the plane is degenerate, f(0)=0 and f(pi)=pi.
    out[flat] = np.where(cos_theta[flat, None] > 0, vhat, -vhat)
    return out


def xor_probability(vj, vk, vhat):
    """Probability that a uniformly random hyperplane separates the rotated
    images of ``vj`` and ``vk``."""
    rj, rk = rotate_many(np.vstack([vj, vk]), vhat)
    return float(np.arccos(np.clip(rj @ rk, -1.0, 1.0)) / np.pi)


@dataclass(frozen=True)
class RoundingConfig:
    iterations: int = DEFAULT_ROUND_CAP
    early_exit_threshold: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("rounding needs at least one iteration")


@dataclass(frozen=True)
class RoundingOutcome:
    best_R: frozenset
    best_gain: float
    best_iteration: int
    iterations_run: int
    threshold_reached: bool
    gains_summary: dict = field(default_factory=dict)


class _GainTable:
    """Potential change Phi_R(S') - Phi_R(S) for many candidate sets R.

    Only edges with exactly one endpoint in R change; cut edges lose their
    weight and non-cut edges gain it.
    """

    def __init__(self, game, state, players):
        col = np.full(game.n, -1, dtype=np.intp)
        col[list(players)] = np.arange(len(players))
        touch = (col[game.tails] >= 0) | (col[game.heads] >= 0)
        s = state.sides
        cut = s[game.tails] != s[game.heads]
        self.tail_col = col[game.tails][touch]
        self.head_col = col[game.heads][touch]
        self.coef = np.where(cut[touch], -1.0, 1.0) * game.weights[touch]

    def gains(self, chosen):
        # chosen: (T, |players|) boolean
        T = chosen.shape[0]
        pad = np.concatenate([chosen, np.zeros((T, 1), dtype=bool)], axis=1)
        xor = pad[:, self.tail_col] != pad[:, self.head_col]
        return xor @ self.coef


def _directions(seed, chunk, size, dim):
    rng = np.random.default_rng([int(seed) & (2**63 - 1), chunk])
    r = rng.standard_normal((size, dim))
    return r


def _chunk_bounds(c):
    start = 0
    for i in range(c):
        start += min(CHUNK_BASE * 4**i, CHUNK_MAX)
    return start, start + min(CHUNK_BASE * 4**c, CHUNK_MAX)


def _select(rotated, vhat, r, seed, chunk):
    """Membership matrix for directions ``r``; redraws rows that hit an
    exact zero inner product."""
    attempt = 0
    while True:
        proj = r @ rotated.T
        ref = r @ vhat
        bad = (proj == 0).any(axis=1) | (ref == 0)
        if not bad.any():
            break
        attempt += 1
        rng = np.random.default_rng([int(seed) & (2**63 - 1), chunk, attempt])
        r = r.copy()
        r[bad] = rng.standard_normal((int(bad.sum()), r.shape[1]))
    return (proj > 0) == (ref > 0)[:, None]


def round_once(game, state, players, vectors, vhat, rng) -> frozenset:
    """One rotation-and-hyperplane rounding.

    ``vectors[i]`` belongs to the i-th smallest id in ``players``.
    """
    players = np.flatnonzero(player_mask(game.n, players))
    rotated = rotate_many(vectors, vhat)
    while True:
        r = rng.standard_normal(len(vhat))
        r /= np.linalg.norm(r)
        proj = rotated @ r
        ref = float(vhat @ r)
        if ref != 0 and not (proj == 0).any():
            break
    chosen = (proj > 0) == (ref > 0)
    return frozenset(int(j) for j in players[chosen])


def round_best(game, state, players, vectors, vhat, config: RoundingConfig) -> RoundingOutcome:
    """Best of up to ``config.iterations`` roundings by potential gain.

    Stops at the first iteration whose gain reaches
    ``config.early_exit_threshold``.  Ties go to the earliest iteration.
    """
    members = np.flatnonzero(player_mask(game.n, players))
    table = _GainTable(game, state, members)
    vhat = np.asarray(vhat, dtype=float)
    rotated = rotate_many(vectors, vhat)
    dim = len(vhat)
    threshold = config.early_exit_threshold

    best_gain, best_t, best_row = -math.inf, -1, None
    total = 0
    n_pos = n_hit = 0
    g_sum = 0.0
    g_min = math.inf
    chunk = 0
    while total < config.iterations:
        start, stop = _chunk_bounds(chunk)
        stop = min(stop, config.iterations)
        r = _directions(config.rng_seed, chunk, stop - start, dim)
        chosen = _select(rotated, vhat, r, config.rng_seed, chunk)
        gains = table.gains(chosen)
        if threshold is not None:
            hits = np.flatnonzero(gains >= threshold)
            if hits.size:
                gains = gains[: hits[0] + 1]
                chosen = chosen[: hits[0] + 1]
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain, best_t, best_row = float(gains[i]), start + i, chosen[i]
        total = start + len(gains)
        n_pos += int((gains > 0).sum())
        if threshold is not None:
            n_hit += int((gains >= threshold).sum())
        g_sum += float(gains.sum())
        g_min = min(g_min, float(gains.min()))
        chunk += 1
        if threshold is not None and n_hit:
            break

    best_R = frozenset(int(j) for j in members[best_row])
    exact = flip_gain(game, state, best_R)
    reached = threshold is not None and exact >= threshold
    summary = {"count": total, "mean": g_sum / total, "min": g_min, "max": best_gain,
               "positive": n_pos}
    return RoundingOutcome(best_R, exact, best_t, total, reached, summary)
