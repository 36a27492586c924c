"""Approximation constants and their derived quantities."""

import math

RHO = (1.0 + 2.0 * math.sqrt(13.0)) / 3.0


def check_epsilon(epsilon):
    if not (0.0 < epsilon <= 0.25):
        raise ValueError(f"epsilon must lie in (0, 1/4], got {epsilon!r}")
    return float(epsilon)


def sigma(epsilon):
    """Stretch bound certified by a non-positive SDP value."""
    return RHO + check_epsilon(epsilon) / 3.0


def tau(epsilon):
    """Factor used for single-player moves."""
    return RHO + 2.0 * check_epsilon(epsilon) / 3.0


def target_factor(epsilon):
    return RHO + check_epsilon(epsilon)


def block_ratio(n, epsilon):
    """Ratio between consecutive block boundaries, 480 n / eps^2."""
    return 480.0 * n / check_epsilon(epsilon) ** 2


def iteration_budget(n, epsilon):
    """Number of rounding iterations that makes a single ROUND call fail
    with probability at most eps^4 / (414720 n^4).

    >>> iteration_budget(1, 0.25)
    27250660
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    epsilon = check_epsilon(epsilon)
    count = 23040.0 * n * n / epsilon**3 * math.log(414720.0 * n**4 / epsilon**4)
    return int(math.ceil(count))
