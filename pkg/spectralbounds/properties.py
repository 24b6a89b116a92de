"""Randomized checks of the identities and inequalities the bounds rest on.

Each suite draws small random graphs from a seeded numpy generator and records the worst case.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from spectralbounds.graph import DIRICHLET, KIRCHHOFF, NEUMANN, MetricGraph
from spectralbounds.numerics import TOLERANCE, relative_gap
from spectralbounds.spectra import assemble_discrete, coarea_continuous_check, pl_utilities
from spectralbounds.weighted import WeightedGraph, alpha_weighted, coarea_discrete_check, weighted_lambda0

DISCRETE_CHEEGER = "discrete_cheeger"
COAREA_DISCRETE = "coarea_discrete"
COAREA_CONTINUOUS = "coarea_continuous"
NORM_EQUIVALENCE = "norm_equivalence"

DEFAULT_TRIALS = 1000


@dataclass
class SuiteResult:
    name: str
    trials: int
    failures: int = 0
    max_gap: float = 0.0
    first_failure: Optional[int] = None
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, trial: int, ok: bool, gap: float = 0.0, note: str = ""):
        self.max_gap = max(self.max_gap, gap)
        if not ok:
            self.failures += 1
            if self.first_failure is None:
                self.first_failure = trial
                if note:
                    self.notes.append(note)

    def to_dict(self) -> dict:
        return {"name": self.name, "trials": self.trials, "failures": self.failures, "max_gap": self.max_gap,
                "first_failure": self.first_failure, "notes": list(self.notes), "passed": self.passed}


#
# Random graphs
#

def random_edges(rng: np.random.Generator, n: int, extra: float = 0.3) -> List[Tuple[int, int]]:
    """A random spanning tree on n vertices plus a random share of the remaining pairs."""
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra / n:
                edges.add((u, v))
    return sorted(edges)


def random_metric_graph(rng: np.random.Generator, max_vertices: int = 10, dirichlet_share: float = 0.3) -> MetricGraph:
    """A connected metric graph with random lengths; loose ends are Dirichlet or Neumann at random."""
    n = int(rng.integers(2, max_vertices + 1))
    edges = random_edges(rng, n)
    adjacency: Dict[int, List[int]] = {v: [] for v in range(n)}
    for u, v in edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    sphere = np.full(n, -1)
    sphere[0] = 0
    queue = [0]
    for u in queue:
        for v in adjacency[u]:
            if sphere[v] < 0:
                sphere[v] = sphere[u] + 1
                queue.append(v)
    oriented = [(u, v) if sphere[u] <= sphere[v] else (v, u) for u, v in edges]
    degree = np.array([len(adjacency[v]) for v in range(n)])
    condition = [KIRCHHOFF] * n
    for v in np.flatnonzero(degree == 1):
        # The root stays free so that some vertex always carries an unknown.
        condition[v] = DIRICHLET if v != 0 and rng.random() < dirichlet_share else NEUMANN
    return MetricGraph(sphere, degree, condition, np.zeros(n, dtype=bool), [u for u, _ in oriented],
                       [v for _, v in oriented], rng.uniform(0.1, 2.0, len(edges)), allow_degree_two=True)


def random_weighted_graph(rng: np.random.Generator, max_vertices: int = 12, intrinsic: bool = True) -> WeightedGraph:
    """Random weights; with ``intrinsic`` the vertex weights dominate sum d^2 b and a nonempty proper
    subset of the vertices is Dirichlet."""
    n = int(rng.integers(2, max_vertices + 1))
    edges = random_edges(rng, n)
    source = np.array([u for u, _ in edges])
    target = np.array([v for _, v in edges])
    b = rng.uniform(0.1, 2.0, len(edges))
    d = rng.uniform(0.1, 2.0, len(edges))
    load = np.bincount(source, weights=d * d * b, minlength=n) + np.bincount(target, weights=d * d * b, minlength=n)
    m = load + rng.exponential(0.5, n) if intrinsic else rng.uniform(0.1, 2.0, n)
    dirichlet = np.zeros(n, dtype=bool)
    count = int(rng.integers(1, n))
    dirichlet[rng.choice(n, size=count, replace=False)] = True
    return WeightedGraph(m, source, target, b, d, dirichlet)


def _random_function(rng: np.random.Generator, n: int, zero_share: float = 0.2) -> np.ndarray:
    values = rng.normal(size=n)
    values[rng.random(n) < zero_share] = 0.0
    return values


#
# Suites
#

def discrete_cheeger_suite(rng: np.random.Generator, trials: int) -> SuiteResult:
    """lambda0 >= alpha^2/2 with alpha over all subsets of the non-Dirichlet vertices."""
    result = SuiteResult(DISCRETE_CHEEGER, trials)
    for trial in range(trials):
        w = random_weighted_graph(rng)
        alpha = alpha_weighted(w).value_upper
        lambda0 = weighted_lambda0(w).lambda0
        floor = alpha * alpha / 2.0
        result.record(trial, lambda0 >= floor * (1.0 - 1e-9),
                      max(0.0, floor - lambda0), f"lambda0={lambda0!r} < alpha^2/2={floor!r}")
    return result


def coarea_discrete_suite(rng: np.random.Generator, trials: int) -> SuiteResult:
    result = SuiteResult(COAREA_DISCRETE, trials)
    for trial in range(trials):
        w = random_weighted_graph(rng, intrinsic=False)
        f = np.abs(_random_function(rng, w.num_vertices))
        gap = coarea_discrete_check(w, f).gap
        result.record(trial, gap < TOLERANCE, gap, f"relative gap {gap!r}")
    return result


def coarea_continuous_suite(rng: np.random.Generator, trials: int) -> SuiteResult:
    result = SuiteResult(COAREA_CONTINUOUS, trials)
    for trial in range(trials):
        g = random_metric_graph(rng)
        gap = coarea_continuous_check(g, _random_function(rng, g.num_vertices)).gap
        result.record(trial, gap < TOLERANCE, gap, f"relative gap {gap!r}")
    return result


def norm_equivalence_suite(rng: np.random.Generator, trials: int) -> SuiteResult:
    """1/6 <= ||f||^2 / ||f||^2_m <= 1/2 and the energy equals the difference Laplacian's form."""
    result = SuiteResult(NORM_EQUIVALENCE, trials)
    for trial in range(trials):
        g = random_metric_graph(rng)
        f = _random_function(rng, g.num_vertices)
        f[g.dirichlet] = 0.0
        if not np.any(f):
            f[np.flatnonzero(~g.dirichlet)[0]] = 1.0
        norms = pl_utilities(g, f)
        ratio = norms.l2_norm_sq / norms.l2m_norm_sq
        system = assemble_discrete(g)
        x = f[system.vertex_ids]
        gap = relative_gap(norms.energy, float(x @ (system.stiffness @ x)))
        ok = 1.0 / 6.0 - TOLERANCE <= ratio <= 0.5 + TOLERANCE and gap < TOLERANCE
        result.record(trial, ok, gap, f"norm ratio {ratio!r}, energy gap {gap!r}")
    return result


SUITES: Dict[str, Callable[[np.random.Generator, int], SuiteResult]] = {
    DISCRETE_CHEEGER: discrete_cheeger_suite,
    COAREA_DISCRETE: coarea_discrete_suite,
    COAREA_CONTINUOUS: coarea_continuous_suite,
    NORM_EQUIVALENCE: norm_equivalence_suite,
}


def run_suites(names: Optional[Sequence[str]] = None, trials: int = DEFAULT_TRIALS, seed: int = 0,
               verbose: bool = False) -> List[SuiteResult]:
    """Run the named suites (all by default), each from its own generator seeded with ``seed``."""
    names = list(SUITES) if names is None else list(names)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"Unknown property suites {unknown}; expected some of {', '.join(SUITES)}.")
    results = []
    for name in names:
        result = SUITES[name](np.random.default_rng(seed), trials)
        if verbose:
            status = "passed" if result.passed else f"{result.failures} failures"
            print(f"{name}: {trials} trials, {status}, max gap {result.max_gap:.3g}")
        results.append(result)
    return results
