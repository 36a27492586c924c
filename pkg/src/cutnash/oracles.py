"""Independent checks: brute force, closed forms and Monte-Carlo.

Nothing here calls the SDP or rounding code paths it is meant to check,
apart from :func:`monte_carlo_xor`, which reuses the rotation map and
tests only the hyperplane probability on top of it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .game import DEFAULT_SLACK, GameError, deviation_utilities, player_mask, ratio, utilities
from .params import RHO
from .rounding import rotate_many, rotation_angle

ENUMERATION_CEILING = 20


# -- equilibria ---------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumReport:
    factor: float
    utility: tuple
    deviation: tuple
    ratios: tuple
    worst_ratio: float
    worst_player: int
    passed: bool


def verify_equilibrium(game, state, factor, slack=DEFAULT_SLACK) -> EquilibriumReport:
    """Check that no player can multiply its utility by more than ``factor``.

    Each player must satisfy ``u' <= factor * u + slack * U_j``.
    """
    u = utilities(game, state)
    dev = deviation_utilities(game, state)
    ratios = tuple(ratio(d, x) for d, x in zip(dev, u))
    ok = dev <= factor * u + slack * game.max_utility
    worst = int(np.argmax(ratios)) if ratios else -1
    return EquilibriumReport(float(factor), tuple(map(float, u)), tuple(map(float, dev)), ratios,
                             ratios[worst] if ratios else 1.0, worst, bool(ok.all()))


# -- subset enumeration -------------------------------------------------------

def _subset_potentials(game, state, members, masks):
    """Phi_R before and after flipping R for every bitmask in ``masks``."""
    k = len(members)
    col = np.full(game.n, k, dtype=np.intp)
    col[members] = np.arange(k)
    bits = ((masks[:, None] >> np.arange(k)) & 1).astype(bool)
    bits = np.concatenate([bits, np.zeros((len(masks), 1), dtype=bool)], axis=1)
    s = state.sides
    cut = s[game.tails] != s[game.heads]
    t_in = bits[:, col[game.tails]]
    h_in = bits[:, col[game.heads]]
    touch = t_in | h_in
    after_cut = cut[None, :] ^ (t_in ^ h_in)
    before = (touch & cut[None, :]) @ game.weights
    after = (touch & after_cut) @ game.weights
    return before, after


def _enumerate(game, state, players, ceiling, batch=1 << 14):
    members = np.flatnonzero(player_mask(game.n, players))
    if members.size > ceiling:
        raise GameError(f"{members.size} players exceed the enumeration ceiling {ceiling}")
    total = 1 << members.size
    for lo in range(1, total, batch):
        masks = np.arange(lo, min(total, lo + batch), dtype=np.int64)
        before, after = _subset_potentials(game, state, members, masks)
        yield members, masks, before, after


def _members_of(members, mask):
    return frozenset(int(members[b]) for b in range(members.size) if (int(mask) >> b) & 1)


def max_stretch_subset(game, state, players, ceiling=ENUMERATION_CEILING):
    """Largest stretch over all non-empty subsets of ``players``.

    Returns ``(best_set, value)``; ``value`` is ``math.inf`` when some
    subset gains weight from a zero starting potential.
    """
    best, best_set = -math.inf, frozenset()
    for members, masks, before, after in _enumerate(game, state, players, ceiling):
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(before > 0, after / np.where(before > 0, before, 1.0),
                              np.where(after > 0, math.inf, 1.0))
        i = int(np.argmax(values))
        if values[i] > best:
            best, best_set = float(values[i]), _members_of(members, masks[i])
    if best == -math.inf:
        raise GameError("stretch needs a non-empty player set")
    return best_set, best


def best_rank_one_objective(game, state, players, sigma, ceiling=ENUMERATION_CEILING):
    """Best SDP objective over the integral points ``v_j = +-vhat``.

    Evaluated from potentials directly: the point encoding R has objective
    ``Phi_R(S') - sigma * Phi_R(S)`` and is feasible iff
    ``4 * Phi_R(S) >= min_j U_j`` over the active players.
    """
    active = player_mask(game.n, players) & ~game.inert
    bound = float(game.max_utility[active].min())
    best, best_set = -math.inf, None
    for members, masks, before, after in _enumerate(game, state, np.flatnonzero(active), ceiling):
        values = np.where(4.0 * before >= bound, after - sigma * before, -math.inf)
        i = int(np.argmax(values))
        if values[i] > best:
            best, best_set = float(values[i]), _members_of(members, masks[i])
    return best_set, best


# -- phase edge classes -------------------------------------------------------

@dataclass(frozen=True)
class EdgeClassWeights:
    wA: float = 0.0
    wC: float = 0.0
    wD: float = 0.0
    wF: float = 0.0
    wH: float = 0.0
    wI: float = 0.0
    wJ: float = 0.0
    wK: float = 0.0
    unclassified: float = 0.0


def classify_phase_edges(game, phase) -> EdgeClassWeights:
    """Split the edges touching the phase's movers into the eight classes.

    ``phase`` needs ``start_state``, ``moved``, ``heavy_players`` and
    ``light_players``.  Edges are judged at the phase's start state.
    """
    n = game.n
    moved = player_mask(n, phase.moved)
    heavy = player_mask(n, phase.heavy_players) & moved
    light = player_mask(n, phase.light_players) & moved
    if (moved & ~(heavy | light)).any():
        raise GameError("a player outside the phase's two blocks is recorded as moved")
    s = phase.start_state.sides
    acc = dict.fromkeys(("wA", "wC", "wD", "wF", "wH", "wI", "wJ", "wK", "unclassified"), 0.0)
    for j, k, w in game.edges:
        if not (moved[j] or moved[k]):
            continue
        cut = s[j] != s[k]
        if heavy[j] and heavy[k]:
            key = "wA" if cut else "unclassified"
        elif light[j] and light[k]:
            key = "wC" if cut else "unclassified"
        elif (heavy[j] and light[k]) or (light[j] and heavy[k]):
            key = "wD" if cut else "wF"
        elif heavy[j] or heavy[k]:
            key = "wH" if cut else "wI"
        else:
            key = "wJ" if cut else "wK"
        acc[key] += w
    return EdgeClassWeights(**acc)


@dataclass(frozen=True)
class ClaimCheck:
    small_block: bool
    stretch: bool
    move: Optional[bool]
    small_block_lhs: float
    stretch_lhs: float
    move_lhs: float

    @property
    def passed(self):
        return self.small_block and self.stretch and self.move is not False


def check_claims(weights: EdgeClassWeights, n, light_upper, sigma, tau, had_moves=True,
                 slack=1e-9) -> ClaimCheck:
    """Evaluate the three per-phase inequalities on class weights.

    ``light_upper`` is the upper boundary of the light block.  The move
    inequality is strict and only meaningful when the phase contained at
    least one single-player move; otherwise it is reported as ``None``.
    """
    w = weights
    small = w.wC + w.wD + w.wF + w.wJ + w.wK
    stretch = -(sigma - 1) * w.wA - sigma * w.wD - sigma * w.wH + w.wF + w.wI
    move = ((tau - 1) * w.wA + (tau - 1) * w.wD + tau * w.wH - w.wI
            + tau * w.wJ - tau * w.wK)
    return ClaimCheck(small <= n * light_upper + slack, stretch <= slack,
                      (move < slack) if had_moves else None, small - n * light_upper,
                      stretch, move)


# -- rounding geometry --------------------------------------------------------

def vectors_from_angles(theta_j, theta_k, phi):
    """Canonical 3-D placement: ``(vhat, v_j, v_k)`` with the given angles
    to ``vhat`` and dihedral angle ``phi`` between the two planes."""
    vhat = np.array([1.0, 0.0, 0.0])
    vj = np.array([math.cos(theta_j), math.sin(theta_j), 0.0])
    vk = np.array([math.cos(theta_k), math.sin(theta_k) * math.cos(phi),
                   math.sin(theta_k) * math.sin(phi)])
    return vhat, vj, vk


def _sin(x):
    # sin(pi - x) == sin(x), and pi - pi is exactly zero in floating point.
    return np.sin(np.minimum(x, np.pi - x))


def _cos_angle(x, y, z):
    return np.cos(x) * np.cos(y) + z * _sin(x) * _sin(y)


def inner_product_from_angles(theta_j, theta_k, phi):
    return _cos_angle(theta_j, theta_k, np.cos(phi))


def xor_probability_from_angles(theta_j, theta_k, phi):
    """Separation probability of the rotated pair, from the angles alone."""
    g = _cos_angle(rotation_angle(theta_j), rotation_angle(theta_k), np.cos(phi))
    return np.arccos(np.clip(g, -1.0, 1.0)) / np.pi


def xor_lower_bound(vj_dot_vk):
    return 0.25 * (1.0 - vj_dot_vk)


def xor_upper_bound(vj_dot_vhat, vk_dot_vhat, vj_dot_vk, rho=RHO):
    return 0.125 * (3 * rho - 1 + (rho - 1) * vj_dot_vhat + (rho - 1) * vk_dot_vhat
                    - (rho + 1) * vj_dot_vk)


def z_bracket(x, y):
    """Interval of z for which the arccos argument stays in [-1, 1]."""
    fx, fy = rotation_angle(x), rotation_angle(y)
    ss = _sin(fx) * _sin(fy)
    cc = np.cos(fx) * np.cos(fy)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = np.where(ss > 0, (-cc - 1.0) / ss, -np.inf)
        high = np.where(ss > 0, (1.0 - cc) / ss, np.inf)
    # The bracket always contains [-1, 1]; rounding can nibble at it when ss is small.
    return np.minimum(low, -1.0), np.maximum(high, 1.0)


def xor_bound_gap(x, y, z, rho=RHO, check_domain=True):
    """Separation probability minus the upper bound, as a function of the
    two angles to the reference vector and ``z = cos(phi)``.

    Non-positive everywhere on ``[0, pi]^2 x [-1, 1]`` for the default rho.
    """
    x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                  np.asarray(z, float))
    if check_domain:
        low, high = z_bracket(x, y)
        span = 1e-12 * np.maximum(1.0, np.abs(high))
        if np.any((z < low - span) | (z > high + span)):
            raise ValueError("z lies outside the admissible bracket")
    fx, fy = rotation_angle(x), rotation_angle(y)
    g = np.clip(_cos_angle(fx, fy, z), -1.0, 1.0)
    # The bound regrouped around a = 1 + cos x and b = 1 + cos y, which
    # makes it vanish exactly at x = y = pi.
    a, b = 1.0 + np.cos(x), 1.0 + np.cos(y)
    bound = (2 * rho * (a + b) - (rho + 1) * (a * b + z * _sin(x) * _sin(y))) / 8
    value = np.arccos(g) / np.pi - bound
    return value if value.ndim else float(value)


def stationary_z(x, y, rho=RHO, guard=1e-12):
    """Local maximiser of :func:`xor_bound_gap` in z; NaN where undefined."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    fx, fy = rotation_angle(x), rotation_angle(y)
    ss = _sin(fx) * _sin(fy)
    cc = np.cos(fx) * np.cos(fy)
    sxy = _sin(x) * _sin(y)
    ok = (ss >= guard) & (sxy >= guard)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 8.0 * ss / (np.pi * (rho + 1.0) * sxy)
        rad = 1.0 - q * q
        ok &= rad >= 0
        z = np.where(ok, (-cc + np.sqrt(np.where(ok, rad, 0.0))) / np.where(ok, ss, 1.0), np.nan)
    return z if z.ndim else float(z)


def planar_gap_closed_form(theta_j, theta_k, rho=RHO):
    """The gap at ``phi = 0`` in half-angle form, valid for ``theta_j >= theta_k``."""
    d = 0.5 * (theta_j - theta_k)
    s = 0.5 * (theta_j + theta_k)
    return (-rho / 2 + np.sin(d) * np.sin(s) - (rho - 1) / 4 * np.cos(d) * np.cos(s)
            + (rho + 1) / 4 * np.cos(d) ** 2)


BRANCHES = ("z=+1", "z=-1", "z=z2")


@dataclass(frozen=True, eq=False)
class LambdaScanResult:
    step: float
    rho: float
    tolerance: float
    max_value: float
    argmax: tuple
    violations: int
    thetas: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    stationary: np.ndarray

    @property
    def best(self):
        return np.fmax(np.fmax(self.plus, self.minus), self.stationary)


def scan_grid(step):
    """Grid on [0, pi] with spacing ``step``; pi itself is always included."""
    if step <= 0:
        raise ValueError("step must be positive")
    pts = np.arange(0.0, np.pi, step)
    return np.append(pts[pts < np.pi], np.pi)


def scan_xor_bound_gap(step=0.01, rho=RHO, tolerance=1e-6, planar_only=False) -> LambdaScanResult:
    """Maximise the gap over z in [-1, 1] at every grid point.

    On [-1, 1] the gap is maximised at an endpoint or at the stationary
    point, so three candidates per point suffice.  ``planar_only`` keeps
    just the ``z = +1`` branch.
    """
    thetas = scan_grid(step)
    X, Y = np.meshgrid(thetas, thetas, indexing="ij")
    plus = xor_bound_gap(X, Y, np.ones_like(X), rho, check_domain=False)
    if planar_only:
        minus = np.full_like(plus, np.nan)
        stat = np.full_like(plus, np.nan)
    else:
        minus = xor_bound_gap(X, Y, -np.ones_like(X), rho, check_domain=False)
        z2 = stationary_z(X, Y, rho)
        inside = np.isfinite(z2) & (z2 >= -1.0) & (z2 <= 1.0)
        stat = np.full_like(plus, np.nan)
        stat[inside] = xor_bound_gap(X[inside], Y[inside], z2[inside], rho, check_domain=False)
    stack = np.stack([plus, minus, stat])
    best = np.nanmax(stack, axis=0)
    i, j = np.unravel_index(int(np.argmax(best)), best.shape)
    branch = BRANCHES[int(np.nanargmax(stack[:, i, j]))]
    return LambdaScanResult(float(step), float(rho), float(tolerance), float(best[i, j]),
                            (float(thetas[i]), float(thetas[j]), branch),
                            int((best > tolerance).sum()), thetas, plus, minus, stat)


def write_scan_csv(result: LambdaScanResult, fh):
    """One row per grid point: angles, the three branch values and the max."""
    writer = csv.writer(fh)
    writer.writerow(["theta_j", "theta_k", "gap_plus", "gap_minus", "gap_stationary",
                     "max_gap", "branch"])
    best = result.best
    stack = np.stack([result.plus, result.minus, result.stationary])
    t = result.thetas
    for i in range(t.size):
        for j in range(t.size):
            column = stack[:, i, j]
            branch = BRANCHES[int(np.nanargmax(column))]
            cells = ["" if math.isnan(v) else repr(float(v)) for v in column]
            writer.writerow([repr(float(t[i])), repr(float(t[j])), *cells,
                             repr(float(best[i, j])), branch])


def diagonal_trace(start=3.0, stop=np.pi, num=200, rho=RHO):
    """Gap at the stationary z along ``theta_j = theta_k``; NaN where z2
    falls outside [-1, 1]."""
    theta = np.linspace(start, stop, num)
    z2 = stationary_z(theta, theta, rho)
    inside = np.isfinite(z2) & (np.abs(z2) <= 1.0)
    gap = np.full_like(theta, np.nan)
    gap[inside] = xor_bound_gap(theta[inside], theta[inside], z2[inside], rho,
                                check_domain=False)
    return theta, gap


@dataclass(frozen=True)
class MonteCarloResult:
    frequency: float
    analytic: float
    trials: int
    halfwidth: float
    agrees: bool


def monte_carlo_xor(vj, vk, vhat, trials=100_000, seed=0) -> MonteCarloResult:
    """Empirical separation frequency of the rotated pair under random
    hyperplanes, compared with the arccos formula at 3 binomial sigmas."""
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    vhat = np.asarray(vhat, float)
    rj, rk = rotate_many(np.vstack([vj, vk]), vhat)
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((trials, vhat.size))
    separated = np.sign(r @ rj) != np.sign(r @ rk)
    freq = float(separated.mean())
    p = float(np.arccos(np.clip(rj @ rk, -1.0, 1.0)) / np.pi)
    half = 3.0 * math.sqrt(p * (1.0 - p) / trials)
    return MonteCarloResult(freq, p, trials, half, abs(freq - p) <= half + 1e-12)
