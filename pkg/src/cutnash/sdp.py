"""Semidefinite relaxation for detecting high-stretch coalitions.

The program has one unit vector per active player of the block plus a
reference vector.  Gram index 0 is the reference vector and index ``1 + i``
belongs to ``problem.players[i]``.  Players outside the block are pinned to
the negated reference vector; instead of carrying their rows we substitute
``v_j . vhat = -1`` and ``v_j . v_k = -v_k . vhat`` directly, which leaves a
``(1 + |B|)``-dimensional problem with the same optimum.

The objective is ``Z = <C, X> + c0`` and the single linear constraint is
``<A, X> + a0 >= b`` on top of ``X >= 0`` and ``diag(X) = 1``.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import clarabel
import numpy as np
import scipy.sparse as sp

from .game import GameError, player_mask

DEFAULT_TOL = 1e-9
# Eigenvalues below this make a Gram matrix unusable rather than just noisy.
INDEFINITE_LIMIT = -1e-4


class SdpError(RuntimeError):
    """The SDP could not be solved or its solution could not be used."""


class SdpStatus(str, Enum):
    OPTIMAL = "optimal-within-tolerance"
    INFEASIBLE = "infeasible"
    FAILED = "numerical-failure"


@dataclass(frozen=True, eq=False)
class SdpProblem:
    players: tuple
    C: np.ndarray
    c0: float
    A: np.ndarray
    a0: float
    b: float
    sigma: float
    fixed_substitutions: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.C.shape[0]

    def objective(self, gram) -> float:
        return float(np.sum(self.C * gram) + self.c0)

    def constraint_lhs(self, gram) -> float:
        return float(np.sum(self.A * gram) + self.a0)

    def residual(self, gram) -> float:
        return self.constraint_lhs(gram) - self.b

    def assignment_gram(self, chosen) -> np.ndarray:
        """Rank-one Gram matrix with ``v_j = vhat`` for chosen players and
        ``v_j = -vhat`` for the others."""
        chosen = set(int(j) for j in chosen)
        signs = np.array([1.0] + [1.0 if p in chosen else -1.0 for p in self.players])
        return np.outer(signs, signs)


@dataclass(frozen=True, eq=False)
class SdpSolution:
    status: SdpStatus
    Z: float
    gram: Optional[np.ndarray] = None
    vectors: Optional[np.ndarray] = None
    residual: float = math.nan
    upper_bound: float = math.nan
    iterations: int = 0
    solve_time: float = 0.0
    solver_status: str = ""
    raw_gram: Optional[np.ndarray] = None

    @property
    def vhat(self):
        return self.vectors[0]

    @property
    def player_vectors(self):
        return self.vectors[1:]


def _accumulate(M, coeff, a, b):
    """Add ``coeff * (v_a . v_b)`` to matrix ``M``; returns the constant part.

    ``a`` and ``b`` are ``(gram index, sign)`` references.
    """
    (ia, sa), (ib, sb) = a, b
    c = coeff * sa * sb
    if ia == ib:
        return c
    M[ia, ib] += 0.5 * c
    M[ib, ia] += 0.5 * c
    return 0.0


def build_sdp(game, state, players, sigma) -> SdpProblem:
    """Assemble the relaxation for block ``players`` at ``state``.

    Edges with both endpoints outside the block drop out; inert players in
    ``players`` are ignored.
    """
    if state.n != game.n:
        raise GameError("state and game disagree on the player count")
    block = player_mask(game.n, players) & ~game.inert
    active = tuple(int(j) for j in np.flatnonzero(block))
    if not active:
        raise GameError("the block has no player with positive maximum utility")

    d = 1 + len(active)
    index = np.full(game.n, -1, dtype=np.intp)
    index[list(active)] = np.arange(1, d)

    C = np.zeros((d, d))
    A = np.zeros((d, d))
    c0 = 0.0
    a0 = 0.0
    vhat = (0, 1.0)
    s = state.sides
    frozen = set()
    folded = 0

    def ref(j):
        if index[j] >= 0:
            return (int(index[j]), 1.0)
        frozen.add(j)
        return (0, -1.0)

    for j, k, w in game.edges:
        if not (block[j] or block[k]):
            continue
        rj, rk = ref(j), ref(k)
        folded += (rj[0] == 0) + (rk[0] == 0)
        if s[j] == s[k]:
            # XOR term: rewards separating the endpoints.
            c0 += 0.5 * w
            c0 += _accumulate(C, -0.5 * w, rj, rk)
        else:
            # OR penalty for an edge currently in the cut.
            c0 -= 0.25 * w * (3.0 * sigma - 1.0)
            c0 += _accumulate(C, -0.25 * w * (sigma - 1.0), rj, vhat)
            c0 += _accumulate(C, -0.25 * w * (sigma - 1.0), rk, vhat)
            c0 += _accumulate(C, 0.25 * w * (sigma + 1.0), rj, rk)
            a0 += 3.0 * w
            a0 += _accumulate(A, w, rj, vhat)
            a0 += _accumulate(A, w, rk, vhat)
            a0 += _accumulate(A, -w, rj, rk)

    b = float(game.max_utility[list(active)].min())
    subs = {"frozen_players": tuple(sorted(frozen)), "folded_endpoints": int(folded),
            "rule": "v_j = -vhat for j outside the block"}
    return SdpProblem(active, C, float(c0), A, float(a0), b, float(sigma), subs)


def extract_vectors(gram) -> np.ndarray:
    """Unit vectors (as rows) whose pairwise inner products reproduce ``gram``.

    Small negative eigenvalues are clipped and rows renormalised.  The
    result has at most ``dim`` columns.
    """
    gram = np.asarray(gram, dtype=float)
    gram = 0.5 * (gram + gram.T)
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] < INDEFINITE_LIMIT:
        raise SdpError(f"Gram matrix is too indefinite (min eigenvalue {evals[0]:.3e})")
    keep = evals > 0
    if not keep.any():
        raise SdpError("Gram matrix has no positive eigenvalue")
    vectors = evecs[:, keep] * np.sqrt(evals[keep])
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise SdpError("Gram matrix has a zero diagonal entry")
    return vectors / norms[:, None]


def _triangle_pairs(d):
    return [(i, j) for j in range(d) for i in range(j + 1)]


def _svec(M, pairs):
    root2 = math.sqrt(2.0)
    return np.array([M[i, j] if i == j else root2 * M[i, j] for i, j in pairs])


def _smat(x, pairs, d):
    X = np.zeros((d, d))
    root2 = math.sqrt(2.0)
    for value, (i, j) in zip(x, pairs):
        if i == j:
            X[i, i] = value
        else:
            X[i, j] = X[j, i] = value / root2
    return X


_ATTEMPTS = (
    {},
    {"max_iter": 500, "equilibrate_enable": False},
    {"max_iter": 500, "presolve_enable": False, "static_regularization_constant": 1e-7},
)


def _run_clarabel(problem, tol, overrides):
    d = problem.dim
    pairs = _triangle_pairs(d)
    m = len(pairs)
    obj_scale = max(float(np.abs(problem.C).sum()), 1e-300)
    con_scale = max(float(np.abs(problem.A).sum()) + abs(problem.a0), abs(problem.b), 1e-300)

    q = -_svec(problem.C, pairs) / obj_scale
    diag_rows = np.zeros((d, m))
    for t, (i, j) in enumerate(pairs):
        if i == j:
            diag_rows[i, t] = 1.0
    lin_row = -_svec(problem.A, pairs)[None, :] / con_scale
    Amat = sp.vstack([sp.csc_matrix(diag_rows), sp.csc_matrix(lin_row),
                      -sp.identity(m, format="csc")]).tocsc()
    bvec = np.concatenate([np.ones(d), [(problem.a0 - problem.b) / con_scale], np.zeros(m)])
    cones = [clarabel.ZeroConeT(d), clarabel.NonnegativeConeT(1), clarabel.PSDTriangleConeT(d)]

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    for key, value in overrides.items():
        setattr(settings, key, value)
    solver = clarabel.DefaultSolver(sp.csc_matrix((m, m)), q, Amat, bvec, cones, settings)
    sol = solver.solve()
    X = _smat(np.asarray(sol.x), pairs, d)
    upper = -sol.obj_val_dual * obj_scale + problem.c0
    return sol, X, upper


def _repair(problem, gram):
    """Blend ``gram`` towards the all-chosen rank-one point until the
    linear constraint holds; convex combinations keep unit diagonal and
    positive semidefiniteness."""
    anchor = problem.assignment_gram(problem.players)
    lhs, lhs_anchor = problem.constraint_lhs(gram), problem.constraint_lhs(anchor)
    if lhs_anchor <= problem.b:
        return None
    t = (problem.b - lhs) / (lhs_anchor - lhs)
    t = min(1.0, t * (1.0 + 1e-6) + 1e-12)
    return (1.0 - t) * gram + t * anchor


def solve_sdp(problem: SdpProblem, tol: float = DEFAULT_TOL) -> SdpSolution:
    """Solve the relaxation with a primal-dual interior-point method.

    The returned ``Z`` is evaluated on the cleaned Gram matrix, i.e. it is
    the exact objective of ``vectors``, and ``upper_bound`` is the dual
    bound on the true optimum.
    """
    start = time.perf_counter()
    last_status = ""
    for overrides in _ATTEMPTS:
        sol, X, upper = _run_clarabel(problem, tol, overrides)
        last_status = str(sol.status)
        if sol.status == clarabel.SolverStatus.PrimalInfeasible:
            return SdpSolution(SdpStatus.INFEASIBLE, -math.inf, iterations=sol.iterations,
                               solve_time=time.perf_counter() - start,
                               solver_status=last_status)
        if sol.status not in (clarabel.SolverStatus.Solved, clarabel.SolverStatus.AlmostSolved):
            continue
        try:
            vectors = extract_vectors(X)
        except SdpError:
            continue
        gram = vectors @ vectors.T
        if problem.residual(gram) < 0:
            repaired = _repair(problem, gram)
            if repaired is not None:
                vectors = extract_vectors(repaired)
                gram = vectors @ vectors.T
        residual = problem.residual(gram)
        if residual < -1e-8 * max(1.0, problem.b):
            continue
        return SdpSolution(SdpStatus.OPTIMAL, problem.objective(gram), gram, vectors,
                           residual, float(upper), int(sol.iterations),
                           time.perf_counter() - start, last_status, X)
    return SdpSolution(SdpStatus.FAILED, math.nan, solve_time=time.perf_counter() - start,
                       solver_status=last_status)


def dump_sdp(problem: SdpProblem) -> str:
    """Plain-text dump of ``(C, c0, A, a0, b)`` for external cross-checks.

    Layout: a ``cutnash-sdp 1`` magic line, ``key value`` lines for dim,
    sigma, c0, a0, b and players, then a line ``C`` followed by ``dim``
    rows of ``dim`` floats, and the same for ``A``.  Floats use Python's
    shortest round-trip repr.
    """
    out = io.StringIO()
    out.write("cutnash-sdp 1\n")
    out.write(f"dim {problem.dim}\n")
    out.write(f"sigma {problem.sigma!r}\n")
    out.write(f"c0 {problem.c0!r}\n")
    out.write(f"a0 {problem.a0!r}\n")
    out.write(f"b {problem.b!r}\n")
    out.write("players " + " ".join(str(p) for p in problem.players) + "\n")
    for name, M in (("C", problem.C), ("A", problem.A)):
        out.write(name + "\n")
        for row in M:
            out.write(" ".join(repr(float(x)) for x in row) + "\n")
    return out.getvalue()


def load_sdp(text: str) -> SdpProblem:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "cutnash-sdp 1":
        raise ValueError("not a cutnash SDP dump")
    header = {}
    pos = 1
    while lines[pos] not in ("C", "A"):
        key, _, value = lines[pos].partition(" ")
        header[key] = value
        pos += 1
    d = int(header["dim"])
    mats = {}
    for _ in range(2):
        name = lines[pos].strip()
        rows = [[float(x) for x in lines[pos + 1 + r].split()] for r in range(d)]
        mats[name] = np.array(rows, dtype=float).reshape(d, d)
        pos += 1 + d
    players = tuple(int(p) for p in header.get("players", "").split())
    return SdpProblem(players, mats["C"], float(header["c0"]), mats["A"], float(header["a0"]),
                      float(header["b"]), float(header["sigma"]))
