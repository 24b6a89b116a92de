"""Weighted graphs (V, m, b) with an edge weight d, and the discrete Cheeger estimate.

Finite graphs stand in for infinite ones through a designated Dirichlet vertex set: it is removed
from the eigenvalue problem and never belongs to a test set X. Without it the whole vertex set
would be an admissible X with empty boundary, and alpha would vanish on every finite graph.
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from spectralbounds.graph import GraphValidationError, MetricGraph, vertex_weights
from spectralbounds.isoperimetry import (ALPHA_WEIGHTED, SUBSET_BUDGET, BestTracker, EnumerationBudgetError,
                                         IsoReport, VertexSetWitness, connected_subsets)
from spectralbounds.numerics import TOLERANCE, band_integral, relative_gap
from spectralbounds.spectra import SOLVER_TOLERANCE, SpectralResult, laplacian_matrices, restrict, smallest_eigenvalue

BRUTE_FORCE_LIMIT = 20


class NotIntrinsicError(Exception):
    pass


class WeightedGraph:
    """Vertex weights m > 0, symmetric edge weights b > 0 and optional edge weights d > 0.

    Edges are stored once, as (source, target) pairs.
    """

    def __init__(self, m: Sequence[float], source: Sequence[int], target: Sequence[int], b: Sequence[float],
                 d: Optional[Sequence[float]] = None, dirichlet: Optional[Sequence[bool]] = None):
        self.m = np.asarray(m, dtype=float)
        self.source = np.asarray(source, dtype=np.int64)
        self.target = np.asarray(target, dtype=np.int64)
        self.b = np.asarray(b, dtype=float)
        self.d = None if d is None else np.asarray(d, dtype=float)
        self.dirichlet = (np.zeros(len(self.m), dtype=bool) if dirichlet is None
                          else np.asarray(dirichlet, dtype=bool))
        self.validate()

    @property
    def num_vertices(self) -> int:
        return len(self.m)

    @property
    def num_edges(self) -> int:
        return len(self.source)

    def validate(self):
        n = self.num_vertices
        if len(self.dirichlet) != n:
            raise GraphValidationError("The Dirichlet flags do not match the number of vertices.")
        if not (len(self.target) == len(self.b) == len(self.source)):
            raise GraphValidationError("Per-edge arrays have different lengths.")
        if self.d is not None and len(self.d) != len(self.b):
            raise GraphValidationError("Edge weight d must be given for every edge.")
        bad = np.flatnonzero(~np.isfinite(self.m) | (self.m <= 0))
        if len(bad):
            raise GraphValidationError(f"Vertices {bad[:10].tolist()} need a positive weight m.")
        for name, weights in (("b", self.b), ("d", self.d)):
            if weights is None:
                continue
            bad = np.flatnonzero(~np.isfinite(weights) | (weights <= 0))
            if len(bad):
                raise GraphValidationError(f"Edges {bad[:10].tolist()} need a positive weight {name}.")
        bad = np.flatnonzero((self.source < 0) | (self.source >= n) | (self.target < 0) | (self.target >= n))
        if len(bad):
            raise GraphValidationError(f"Edges {bad[:10].tolist()} reference unknown vertices.")
        bad = np.flatnonzero(self.source == self.target)
        if len(bad):
            raise GraphValidationError(f"Edges {bad[:10].tolist()} are loops.")
        pairs = {}
        for e, (u, v) in enumerate(zip(self.source.tolist(), self.target.tolist())):
            key = (min(u, v), max(u, v))
            if key in pairs:
                raise GraphValidationError(f"Edges {[pairs[key], e]} join the same vertices.")
            pairs[key] = e

    @classmethod
    def from_metric(cls, g: MetricGraph) -> "WeightedGraph":
        """m(v) = sum of incident lengths, b = 1/|e| and d = |e|, with the Dirichlet set of g."""
        return cls(vertex_weights(g), g.source, g.target, 1.0 / g.length, g.length, g.dirichlet)

    def neighbours(self) -> Dict[int, list]:
        adjacency = {v: [] for v in range(self.num_vertices)}
        for e, (u, v) in enumerate(zip(self.source.tolist(), self.target.tolist())):
            adjacency[u].append((v, e))
            adjacency[v].append((u, e))
        return adjacency

    def __repr__(self):
        return f"WeightedGraph(vertices={self.num_vertices}, edges={self.num_edges})"


@dataclass(frozen=True)
class IntrinsicCheck:
    slack: np.ndarray
    intrinsic: bool


def _require_d(w: WeightedGraph):
    if w.d is None:
        raise ValueError("This operation needs the edge weight d, and the graph has none.")


def is_intrinsic(w: WeightedGraph) -> IntrinsicCheck:
    """d is intrinsic when sum over the edges at v of d(e)^2 b(e) is at most m(v), for every v."""
    _require_d(w)
    load = w.d ** 2 * w.b
    n = w.num_vertices
    used = np.bincount(w.source, weights=load, minlength=n) + np.bincount(w.target, weights=load, minlength=n)
    slack = w.m - used
    return IntrinsicCheck(slack, bool(np.all(slack >= -TOLERANCE * w.m)))


#
# Isoperimetric constant
#

def _candidates(w: WeightedGraph, removal: Optional[Iterable[int]]) -> np.ndarray:
    allowed = ~w.dirichlet
    if removal is not None:
        removed = np.fromiter((int(v) for v in removal), dtype=np.int64)
        allowed[removed] = False
    return np.flatnonzero(allowed)


def weighted_witness(w: WeightedGraph, vertex_ids: Iterable[int]) -> VertexSetWitness:
    """(d*b)(E_b(X)) over m(X)."""
    members = frozenset(int(v) for v in vertex_ids)
    inside = np.zeros(w.num_vertices, dtype=bool)
    inside[list(members)] = True
    crossing = inside[w.source] != inside[w.target]
    boundary = math.fsum((w.d * w.b)[crossing].tolist())
    denominator = math.fsum(w.m[sorted(members)].tolist())
    return VertexSetWitness(members, boundary, denominator, boundary / denominator)


def _brute_force(w: WeightedGraph, candidates: np.ndarray, cap: int) -> BestTracker:
    """Every nonempty subset of the candidates with at most ``cap`` members, as bitmasks."""
    count = len(candidates)
    masks = np.arange(1, 1 << count, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(count)) & 1).astype(bool)
    sizes = bits.sum(axis=1)
    bits, sizes = bits[sizes <= cap], sizes[sizes <= cap]

    position = np.full(w.num_vertices, -1)
    position[candidates] = np.arange(count)
    boundary = np.zeros(len(bits))
    outside = np.zeros(len(bits), dtype=bool)
    weight = w.d * w.b
    for e in range(w.num_edges):
        u, v = position[w.source[e]], position[w.target[e]]
        in_u = bits[:, u] if u >= 0 else outside
        in_v = bits[:, v] if v >= 0 else outside
        boundary += weight[e] * (in_u != in_v)
    ratios = boundary / (bits.astype(float) @ w.m[candidates])

    best = BestTracker()
    for size in np.unique(sizes):
        of_size = np.flatnonzero(sizes == size)
        lowest = ratios[of_size].min()
        for i in of_size[np.abs(ratios[of_size] - lowest) <= TOLERANCE * max(abs(lowest), 1e-300)]:
            members = frozenset(candidates[bits[i]].tolist())
            best.offer(weighted_witness(w, members).ratio, members)
    return best


def alpha_weighted(w: WeightedGraph, cap: Optional[int] = None, removal: Optional[Iterable[int]] = None,
                   budget: int = SUBSET_BUDGET, strict: bool = True) -> IsoReport:
    """Smallest (d*b)(E_b(X))/m(X) over nonempty finite X of at most ``cap`` vertices.

    X avoids the Dirichlet set and ``removal``. Up to BRUTE_FORCE_LIMIT candidates every subset is
    tried; beyond that connected sets are grown, which suffices because the ratio of a disconnected
    set is a weighted mean of the ratios of its components.
    """
    _require_d(w)
    candidates = _candidates(w, removal)
    if len(candidates) == 0:
        raise ValueError("No vertex is available for a test set X.")
    cap = len(candidates) if cap is None else cap
    if cap < 1:
        raise ValueError(f"Enumeration cap must be at least 1, not {cap}.")

    exhaustive = True
    if len(candidates) <= BRUTE_FORCE_LIMIT:
        best = _brute_force(w, candidates, cap)
        evaluated = sum(math.comb(len(candidates), size) for size in range(1, min(cap, len(candidates)) + 1))
    else:
        allowed = set(candidates.tolist())
        neighbours = w.neighbours()
        adjacency = {v: [u for u, _ in neighbours[v] if u in allowed] for v in sorted(allowed)}
        best, evaluated = BestTracker(), 0
        try:
            for members in connected_subsets(adjacency, cap, adjacency.keys(), budget):
                best.offer(weighted_witness(w, members).ratio, members)
                evaluated += 1
        except EnumerationBudgetError:
            if strict:
                raise
            exhaustive = False

    witnesses = tuple(weighted_witness(w, best.by_size[size][2]) for size in sorted(best.by_size))
    return IsoReport(ALPHA_WEIGHTED, best.ratio, weighted_witness(w, best.items), enumeration_cap=cap,
                     exhaustive_within_cap=exhaustive, subsets_evaluated=evaluated, best_by_size=witnesses)


#
# Co-area formulae and the Cheeger estimate
#

@dataclass(frozen=True)
class DiscreteCoareaCheck:
    lhs_mass: float
    rhs_mass: float
    lhs_edges: float
    rhs_edges: float

    @property
    def gap(self) -> float:
        return max(relative_gap(self.lhs_mass, self.rhs_mass), relative_gap(self.lhs_edges, self.rhs_edges))


def coarea_discrete_check(w: WeightedGraph, f: Sequence[float], edge_weight: Optional[np.ndarray] = None) -> DiscreteCoareaCheck:
    """sum f m = int m({f > t}) dt and sum d|f(u) - f(v)| = int d(E_b({f > t})) dt.

    An edge is in E_b({f > t}) exactly for t between its two end values, so both right-hand sides
    are band integrals. ``edge_weight`` defaults to d (or b when d is absent).
    """
    values = np.asarray(f, dtype=float)
    if values.shape != (w.num_vertices,):
        raise ValueError(f"Expected {w.num_vertices} vertex values, got shape {values.shape}.")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("The co-area formulae need a finite nonnegative function.")
    if edge_weight is None:
        edge_weight = w.d if w.d is not None else w.b
    a, b = values[w.source], values[w.target]
    return DiscreteCoareaCheck(
        lhs_mass=math.fsum((values * w.m).tolist()),
        rhs_mass=band_integral(np.zeros_like(values), values, w.m),
        lhs_edges=math.fsum((edge_weight * np.abs(a - b)).tolist()),
        rhs_edges=band_integral(np.minimum(a, b), np.maximum(a, b), edge_weight),
    )


def weighted_lambda0(w: WeightedGraph, tol: float = SOLVER_TOLERANCE) -> SpectralResult:
    """Bottom of the spectrum of the weighted Laplacian with Dirichlet conditions on the Dirichlet set."""
    free = np.flatnonzero(~w.dirichlet)
    stiffness, mass = laplacian_matrices(w.source, w.target, w.b, w.m)
    return smallest_eigenvalue(restrict(stiffness, free), restrict(mass, free), tol)


def cheeger_lower_discrete(w: WeightedGraph, cap: Optional[int] = None,
                           removal: Optional[Iterable[int]] = None) -> float:
    """alpha^2/2, a lower bound for lambda0 (lambda0_ess when ``removal`` is given) for intrinsic d.

    The alpha used is the search result, so the bound is certified only when the search was
    exhaustive over all admissible X (the default for at most BRUTE_FORCE_LIMIT candidates).

    :raises NotIntrinsicError: if d is not intrinsic.
    """
    check = is_intrinsic(w)
    if not check.intrinsic:
        worst = int(np.argmin(check.slack))
        raise NotIntrinsicError(f"Edge weight d is not intrinsic: vertex {worst} has slack {check.slack[worst]!r}.")
    alpha = alpha_weighted(w, cap, removal).value_upper
    return alpha * alpha / 2.0

