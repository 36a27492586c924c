import pytest
from hypothesis import given, strategies as st

from cutnash.game import State
from cutnash.instances import (DuplicateEdgeError, EdgeCountError, HeaderError,
                               InstanceFormatError, NegativeWeightError, RecordError,
                               SelfLoopError, format_instance, format_state, generate,
                               parse_instance, parse_state)
from cutnash.solver import partition_blocks
from conftest import dyadic_games


def test_triangle(triangle):
    assert parse_instance("3 3\n0 1 1\n0 2 2\n1 2 4\n").edges == triangle.edges


def test_comments_and_blank_lines():
    g = parse_instance("# a pair\n2 1\n\n0 1 0.5  # weight\n")
    assert g.edges == ((0, 1, 0.5),)


def test_inert_players():
    g = parse_instance("2 0\n")
    assert g.n == 2 and g.inert.all()


@pytest.mark.parametrize("text, error, line", [
    ("", HeaderError, 1),
    ("2\n", HeaderError, 1),
    ("two 1\n0 1 1\n", HeaderError, 1),
    ("2 1\n0 0 5\n", SelfLoopError, 2),
    ("3 2\n0 1 1\n0 1 2\n", DuplicateEdgeError, 3),
    ("2 1\n0 1 -1\n", NegativeWeightError, 2),
    ("2 1\n0 1\n", RecordError, 2),
    ("2 1\n0 2 1\n", RecordError, 2),
    ("2 1\n1 0 1\n", RecordError, 2),
    ("2 1\n0 1 inf\n", RecordError, 2),
    ("2 1\n0 1 x\n", RecordError, 2),
    ("3 2\n0 1 1\n", EdgeCountError, 2),
])
def test_errors_carry_line_numbers(text, error, line):
    with pytest.raises(error) as info:
        parse_instance(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@given(dyadic_games(max_n=9))
def test_round_trip(game):
    text = format_instance(game)
    back = parse_instance(text)
    assert back.edges == game.edges and back.n == game.n
    assert format_instance(back) == text


def test_state_files():
    s = parse_state("LRRL\n", 4)
    assert s == State.from_string("LRRL") and format_state(s) == "LRRL\n"
    with pytest.raises(InstanceFormatError):
        parse_state("LRR\n", 4)
    with pytest.raises(InstanceFormatError):
        parse_state("LQ\n")


@pytest.mark.parametrize("kind, params", [
    ("uniform-random", {"n": 9}), ("log-uniform-weights", {"n": 9, "decades": 6}),
    ("multi-block", {"n": 12}), ("ring", {"n": 5}), ("complete-bipartite", {"a": 2, "b": 3}),
])
def test_generators_are_deterministic(kind, params):
    a, b = generate(kind, params, 7), generate(kind, params, 7)
    assert a.edges == b.edges and a.n == b.n


def test_ring_is_four_cycle():
    g = generate("ring", {"n": 4})
    assert g.edges == ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0))


def test_bipartite():
    g = generate("complete-bipartite", {"a": 2, "b": 3})
    assert g.n == 5 and len(g.edges) == 6


@pytest.mark.parametrize("seed", range(10))
def test_multi_block_has_several_blocks(seed):
    g = generate("multi-block", {"n": 12, "epsilon": 0.25}, seed)
    p = partition_blocks(g, 0.25)
    assert p.m >= 2 and sum(1 for size in p.sizes if size) >= 2


@pytest.mark.parametrize("kind, params", [
    ("no-such-kind", {}), ("uniform-random", {}), ("ring", {"n": 2}),
    ("multi-block", {"n": 5, "groups": 3}), ("multi-block", {"n": 8, "epsilon": 0.5}),
])
def test_bad_generator_params(kind, params):
    with pytest.raises(ValueError):
        generate(kind, params, 0)
