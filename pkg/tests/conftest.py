import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from cutnash.game import CutGame, State

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def triangle():
    # Players 0, 1, 2 with w01=1, w02=2, w12=4.
    return CutGame(3, ((0, 1, 1.0), (0, 2, 2.0), (1, 2, 4.0)))


@st.composite
def dyadic_games(draw, min_n=1, max_n=8):
    """Games whose weights are small multiples of 1/8, so sums are exact."""
    n = draw(st.integers(min_n, max_n))
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    weights = draw(st.lists(st.integers(0, 64), min_size=len(pairs), max_size=len(pairs)))
    return CutGame(n, tuple((j, k, w / 8.0) for (j, k), w in zip(pairs, weights)))


@st.composite
def games_with_state(draw, min_n=1, max_n=8):
    game = draw(dyadic_games(min_n, max_n))
    sides = draw(st.lists(st.booleans(), min_size=game.n, max_size=game.n))
    return game, State(np.array(sides, dtype=bool))


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
