import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cutnash.game import CutGame, GameError, State, apply_flip, potential
from cutnash.local import local_moves
from cutnash.oracles import best_rank_one_objective, max_stretch_subset
from cutnash.params import sigma, tau
from cutnash.sdp import (SdpError, SdpStatus, build_sdp, dump_sdp, extract_vectors, load_sdp,
                         solve_sdp)
from conftest import games_with_state

SIG = sigma(0.25)


def _cvxopt_value(problem):
    """Same program solved by cvxopt over the off-diagonal Gram entries."""
    cvxopt = pytest.importorskip("cvxopt")
    from cvxopt import matrix, solvers
    d = problem.dim
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    c = matrix([-2.0 * problem.C[i, j] for i, j in pairs])
    G = matrix([[-2.0 * problem.A[i, j]] for i, j in pairs])
    h = matrix([float(np.trace(problem.A) + problem.a0 - problem.b)])
    cols = []
    for i, j in pairs:
        E = np.zeros((d, d))
        E[i, j] = E[j, i] = -1.0
        cols.append(E.flatten(order="F").tolist())
    Gs = [matrix(cols)]
    hs = [matrix(np.eye(d))]
    solvers.options.update(show_progress=False, abstol=1e-9, reltol=1e-9, feastol=1e-9)
    out = solvers.sdp(c, Gl=G, hl=h, Gs=Gs, hs=hs)
    assert out["status"] == "optimal"
    return float(np.trace(problem.C) + problem.c0 - out["primal objective"])


class TestObjective:
    def test_cut_edge_rank_one_points(self):
        g = CutGame(2, ((0, 1, 1.0),))
        s = State.from_string("LR")
        pr = build_sdp(g, s, {0, 1}, SIG)
        assert pr.objective(pr.assignment_gram({0, 1})) == pytest.approx(1 - SIG)
        assert pr.objective(pr.assignment_gram({0})) == pytest.approx(-SIG)

    def test_non_cut_edge_xor_term(self):
        g = CutGame(2, ((0, 1, 1.0),))
        pr = build_sdp(g, State.all_left(2), {0, 1}, SIG)
        assert pr.objective(pr.assignment_gram({0})) == pytest.approx(1.0)

    @given(games_with_state(min_n=2, max_n=6), st.data())
    def test_rank_one_points_match_flips(self, gs, data):
        game, state = gs
        B = data.draw(st.sets(st.integers(0, game.n - 1), min_size=1))
        active = [j for j in B if not game.inert[j]]
        if not active:
            with pytest.raises(GameError):
                build_sdp(game, state, B, SIG)
            return
        pr = build_sdp(game, state, B, SIG)
        R = data.draw(st.sets(st.sampled_from(active)))
        gram = pr.assignment_gram(R)
        before = potential(game, state, R)
        after = potential(game, apply_flip(state, R), R)
        assert pr.objective(gram) == pytest.approx(after - SIG * before, abs=1e-9)
        assert pr.constraint_lhs(gram) == pytest.approx(4 * before, abs=1e-9)
        assert pr.b == min(game.max_utility[active])


class TestSolve:
    def test_one_dimensional_reduction(self):
        """Player 0 alone in B with one cut edge to a frozen neighbour.

        With x = v0.vhat the objective is -sigma (1 + x) / 2 and the
        constraint reads 2 + 2x >= 1, so the optimum sits at x = -1/2.
        """
        g = CutGame(2, ((0, 1, 1.0),))
        pr = build_sdp(g, State.from_string("RL"), {0}, SIG)
        assert pr.dim == 2
        sol = solve_sdp(pr)
        assert sol.status == SdpStatus.OPTIMAL
        assert sol.Z == pytest.approx(-SIG / 4, abs=1e-7)
        assert sol.gram[0, 1] == pytest.approx(-0.5, abs=1e-6)

    @pytest.mark.parametrize("seed", range(6))
    def test_against_rank_one_and_cvxopt(self, seed):
        rng = np.random.default_rng(seed)
        n = 6
        W = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.7), 1)
        g = CutGame.from_matrix(W + W.T)
        s = State.random(n, rng)
        B = [j for j in range(n) if not g.inert[j]][: 4 + seed % 3]
        pr = build_sdp(g, s, B, SIG)
        sol = solve_sdp(pr)
        assert sol.status == SdpStatus.OPTIMAL
        _, best = best_rank_one_objective(g, s, B, SIG)
        assert sol.Z >= best - 1e-7
        assert sol.Z == pytest.approx(_cvxopt_value(pr), abs=1e-5)
        assert sol.Z <= sol.upper_bound + 1e-6
        assert sol.residual >= -1e-8
        assert np.allclose(np.diag(sol.gram), 1.0)
        assert np.abs(sol.vectors @ sol.vectors.T - sol.raw_gram).max() < 1e-6

    @pytest.mark.parametrize("seed", range(8))
    def test_high_stretch_forces_positive_value(self, seed):
        """A coalition beating sigma at a tau-stable state is a feasible
        integral point with positive objective."""
        rng = np.random.default_rng(seed)
        W = np.triu(rng.random((6, 6)), 1)
        g = CutGame.from_matrix(W + W.T)
        s = local_moves(g, State.random(6, rng), range(6), tau(0.25)).state
        _, value = max_stretch_subset(g, s, range(6))
        sol = solve_sdp(build_sdp(g, s, range(6), SIG))
        if value > SIG:
            assert sol.Z > 1e-7 * g.max_utility.min()

    @pytest.mark.parametrize("seed", range(8))
    def test_max_cut_state_has_clearly_negative_value(self, seed):
        """At a state no coalition can improve, the expected rounding gain
        (at least Z/2 + (eps/12) min U) cannot be positive."""
        rng = np.random.default_rng(seed)
        W = np.triu(rng.random((6, 6)) * (rng.random((6, 6)) < 0.7), 1)
        g = CutGame.from_matrix(W + W.T)
        states = [State(np.array(b, dtype=bool)) for b in itertools.product([0, 1], repeat=6)]
        best = max(states, key=lambda st: potential(g, st))
        B = [j for j in range(6) if not g.inert[j]]
        assert max_stretch_subset(g, best, B)[1] <= 1.0
        sol = solve_sdp(build_sdp(g, best, B, SIG))
        assert sol.Z <= -(0.25 / 12) * g.max_utility[B].min()


class TestExtraction:
    def test_identity(self):
        v = extract_vectors(np.eye(3))
        assert np.allclose(v @ v.T, np.eye(3))

    def test_all_ones(self):
        v = extract_vectors(np.ones((3, 3)))
        assert np.allclose(v, v[0])

    def test_antipodal(self):
        v = extract_vectors(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert np.allclose(v[0], -v[1])
        assert np.allclose(np.linalg.norm(v, axis=1), 1.0)

    def test_indefinite_rejected(self):
        with pytest.raises(SdpError):
            extract_vectors(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_dump_load_round_trip():
    rng = np.random.default_rng(3)
    W = np.triu(rng.random((5, 5)), 1)
    g = CutGame.from_matrix(W + W.T)
    pr = build_sdp(g, State.random(5, rng), {0, 2, 3}, SIG)
    back = load_sdp(dump_sdp(pr))
    assert back.players == pr.players
    assert np.array_equal(back.C, pr.C) and np.array_equal(back.A, pr.A)
    assert (back.c0, back.a0, back.b, back.sigma) == (pr.c0, pr.a0, pr.b, pr.sigma)
    assert dump_sdp(back) == dump_sdp(pr)
