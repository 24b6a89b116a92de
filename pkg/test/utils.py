"""Hand-built graphs and closed-form oracles shared by the tests.
"""

import math
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from spectralbounds.graph import DIRICHLET, KIRCHHOFF, NEUMANN, MetricGraph


def single_edge(length: float = 1.0, left: str = DIRICHLET, right: str = DIRICHLET) -> MetricGraph:
    """One edge between two loose ends with the given conditions."""
    return MetricGraph([0, 1], [1, 1], [left, right], [False, False], [0], [1], [length])


def path(lengths: Sequence[float], left: str = NEUMANN, right: str = DIRICHLET) -> MetricGraph:
    """A path 0 - 1 - ... - n with loose ends at both sides."""
    n = len(lengths)
    condition = [left] + [KIRCHHOFF] * (n - 1) + [right]
    degree = [1] + [2] * (n - 1) + [1]
    return MetricGraph(range(n + 1), degree, condition, [False] * (n + 1), range(n), range(1, n + 1), lengths,
                       allow_degree_two=True)


def star(lengths: Sequence[float], leaves: str = DIRICHLET) -> MetricGraph:
    """The root joined to len(lengths) loose ends."""
    k = len(lengths)
    return MetricGraph([0] + [1] * k, [k] + [1] * k, [KIRCHHOFF] + [leaves] * k, [False] * (k + 1),
                       [0] * k, range(1, k + 1), lengths, allow_degree_two=k == 2)


def bethe_secular(beta: int, depth: int, theta: float) -> float:
    return (beta - 2) / beta * math.cos(theta) * math.sin(depth * theta) + math.cos(depth * theta) * math.sin(theta)


def bethe_discrete_lambda0(beta: int, depth: int) -> float:
    """lambda0 of the difference Laplacian on the equilateral Bethe truncation with Dirichlet frontier.

    Radial eigenfunctions reduce to a Chebyshev recursion; lambda0 comes from the smallest positive
    root theta of the secular equation.
    """
    grid = np.linspace(1e-9, math.pi - 1e-9, 20 * depth + 1)
    values = [bethe_secular(beta, depth, t) for t in grid]
    for a, b, fa, fb in zip(grid, grid[1:], values, values[1:]):
        if fa == 0.0:
            theta = a
            break
        if fa * fb < 0:
            theta = brentq(lambda t: bethe_secular(beta, depth, t), a, b, xtol=1e-15)
            break
    else:
        raise AssertionError("no root of the secular equation")
    return 1.0 - 2.0 * math.sqrt(beta - 1) / beta * math.cos(theta)


def bethe_quantum_lambda0(beta: int, depth: int) -> float:
    return math.acos(1.0 - bethe_discrete_lambda0(beta, depth)) ** 2


BETHE_LAMBDA0 = {beta: math.acos(2.0 * math.sqrt(beta - 1) / beta) ** 2 for beta in (3, 4, 5)}
