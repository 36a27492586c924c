import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cutnash.game import CutGame, State, potential, utilities
from cutnash.instances import generate
from cutnash.oracles import max_stretch_subset, verify_equilibrium
from cutnash.params import block_ratio, sigma, target_factor, tau
from cutnash.report import build_report
from cutnash.solver import (ALL_INERT, SolverConfig, global_moves, partition_blocks,
                            phase_potential_change, solve)


class TestPartition:
    def test_ratio(self):
        g = CutGame(10, ((0, 1, 1.0),))
        assert partition_blocks(g, 0.25).ratio == 76800

    def test_close_utilities_share_a_block(self):
        # U = {100, 1} via a star: centre 0 with two leaves of weight 99 and 1.
        g = CutGame(3, ((0, 1, 99.0), (0, 2, 1.0)))
        p = partition_blocks(g, 0.25)
        assert p.m == 1 and p.block(1) == (0, 1, 2)

    def test_distant_utilities_split(self):
        d = block_ratio(4, 0.25)
        g = CutGame(4, ((0, 1, 1.0), (2, 3, d ** -1.5)))
        p = partition_blocks(g, 0.25)
        assert p.m == 2
        assert p.block(1) == (0, 1) and p.block(2) == (2, 3)

    def test_inert_players_excluded(self):
        g = CutGame(3, ((0, 1, 1.0),))
        p = partition_blocks(g, 0.25)
        assert p.membership.tolist() == [1, 1, 0]

    def test_all_inert_sentinel(self):
        assert partition_blocks(CutGame(2, ()), 0.25).m == 0
        out = solve(CutGame(2, ()))
        assert out.traces == () and ALL_INERT in out.flags

    @given(st.lists(st.floats(-9, 0), min_size=2, max_size=6), st.sampled_from([0.1, 0.25]))
    def test_membership_invariant(self, logs, eps):
        n = 2 * len(logs)
        edges = tuple((2 * i, 2 * i + 1, 10.0 ** x) for i, x in enumerate(logs))
        g = CutGame(n, edges)
        p = partition_blocks(g, eps)
        d = block_ratio(n, eps)
        U = g.max_utility
        top = U.max()
        for j in range(n):
            i = p.membership[j]
            assert top * d ** (-i) < U[j] <= top * d ** (1 - i)
        ratio = np.log(top / U.min()) / np.log(d)
        if abs(ratio - round(ratio)) > 1e-9:
            assert p.m == 1 + int(np.floor(ratio))


class TestGlobal:
    def test_empty_block(self, triangle):
        s = State.all_left(3)
        assert global_moves(triangle, s, (), SolverConfig()) == (s, False)

    def test_single_non_cut_edge(self):
        g = CutGame(2, ((0, 1, 1.0),))
        s, changed = global_moves(g, State.all_left(2), {0, 1}, SolverConfig())
        assert changed and str(s) in ("RL", "LR")

    def test_max_cut_state_is_left_alone(self):
        rng = np.random.default_rng(5)
        W = np.triu(rng.random((6, 6)), 1)
        g = CutGame.from_matrix(W + W.T)
        states = [State(np.array(b, dtype=bool)) for b in itertools.product([0, 1], repeat=6)]
        best = max(states, key=lambda st: potential(g, st))
        assert max_stretch_subset(g, best, range(6))[1] < sigma(0.25)
        assert global_moves(g, best, range(6), SolverConfig()) == (best, False)

    @pytest.mark.parametrize("seed", range(10))
    def test_leaves_block_stable(self, seed):
        g = generate("uniform-random", {"n": 7, "p": 0.7}, seed)
        cfg = SolverConfig(seed=seed)
        B = [j for j in range(7) if not g.inert[j]]
        s, _ = global_moves(g, State.random(7, np.random.default_rng(seed)), B, cfg)
        u, dev = utilities(g, s), g.max_utility - utilities(g, s)
        assert np.all(dev[B] <= tau(0.25) * u[B] + 1e-9 * g.max_utility[B])


class TestSolve:
    def test_single_edge(self):
        g = CutGame(2, ((0, 1, 3.0),))
        out = solve(g)
        assert out.state.sides[0] != out.state.sides[1]
        assert verify_equilibrium(g, out.state, 1.0 + 1e-12).passed

    @pytest.mark.parametrize("seed", range(5))
    def test_four_cycle_ends_in_proper_colouring(self, seed):
        g = generate("ring", {"n": 4})
        out = solve(g, SolverConfig(seed=seed, initial="random"))
        s = out.state.sides
        assert all(s[j] != s[k] for j, k, _ in g.edges)
        assert verify_equilibrium(g, out.state, target_factor(0.25)).worst_ratio <= 1

    @pytest.mark.parametrize("seed", range(12))
    def test_random_instances_verify(self, seed):
        kind = ("uniform-random", "log-uniform-weights")[seed % 2]
        g = generate(kind, {"n": 4 + seed}, seed)
        cfg = SolverConfig(seed=seed)
        report = build_report(g, cfg, solve(g, cfg))
        assert report.passed or report.flags

    def test_same_seed_same_report(self):
        g = generate("log-uniform-weights", {"n": 12}, 3)
        cfg = SolverConfig(seed=4, initial="random")
        a = build_report(g, cfg, solve(g, cfg)).without_timings()
        b = build_report(g, cfg, solve(g, cfg)).without_timings()
        assert a == b

    @pytest.mark.parametrize("seed", range(6))
    def test_multi_block_traces(self, seed):
        g = generate("multi-block", {"n": 10, "groups": 2}, seed)
        out = solve(g, SolverConfig(seed=seed))
        part = out.partition
        assert part.m >= 2
        assert [t.index for t in out.traces] == list(range(part.m + 1))
        for tr in out.traces:
            # Movers come from the move log; state diffs are a subset.
            assert tr.flipped <= tr.moved
            assert tr.moved <= set(tr.heavy_players) | set(tr.light_players)
            assert tr.start_state == (out.traces[tr.index - 1].end_state if tr.index else
                                      SolverConfig().initial_state(g.n))
            if tr.index:
                assert tr.tau_move_count <= 72 * g.n / 0.25
                assert phase_potential_change(g, tr) <= 18 * g.n * tr.light_upper / 0.25
        assert out.traces[-1].end_state == out.state
        assert verify_equilibrium(g, out.state, target_factor(0.25)).passed

    def test_config_validation(self):
        for bad in ({"epsilon": 0.3}, {"initial": "middle"}, {"round_cap": 0}):
            with pytest.raises(ValueError):
                SolverConfig(**bad)

    def test_round_iterations(self):
        assert SolverConfig(round_cap=10).round_iterations(3) == 10
        assert SolverConfig(uncapped_rounds=True).round_iterations(1) == 27250660
