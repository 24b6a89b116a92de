"""Finite truncations of infinite metric graphs, and their basic geometry.

A MetricGraph is a finite piece of a (possibly infinite) metric graph. Besides the edges that are
present, it records per-vertex information about the ambient graph: the ambient degree and whether
the vertex sits on the truncation frontier. Quantities whose definitions refer to the full graph
(boundaries, curvature, vertex weights of interior vertices) can then be evaluated exactly on the
truncation.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from spectralbounds.numerics import decay_exponent

#
# Constants
#
KIRCHHOFF = "kirchhoff"
DIRICHLET = "dirichlet"
NEUMANN = "neumann"
CONDITIONS = (KIRCHHOFF, DIRICHLET, NEUMANN)

RHO0 = "rho0"
RHOM = "rhom"
METRICS = (RHO0, RHOM)

HEURISTIC = "heuristic: truncation evidence only"

INF_M_POSITIVE = "inf_m_positive"
ELL_STAR_POSITIVE = "ell_star_positive"
RHO0_COMPLETE = "rho0_complete_trend"
RHOM_COMPLETE = "rhom_complete_trend"

# A per-sphere minimum sequence decaying slower than n^-BOUNDED_EXPONENT is read as bounded away
# from zero; radii whose increments decay no faster than n^-(1 + DIVERGENCE_SLACK) as diverging.
BOUNDED_EXPONENT = 0.2
DIVERGENCE_SLACK = 0.05


class GraphValidationError(Exception):
    pass


class EmptyRangeError(Exception):
    pass


class Vertex(NamedTuple):
    id: int
    sphere: int
    ambient_degree: int
    condition: str
    frontier: bool


class Edge(NamedTuple):
    id: int
    source: int
    target: int
    length: float


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _condition_codes(condition: Iterable) -> np.ndarray:
    codes = []
    for item in condition:
        if isinstance(item, str):
            if item not in CONDITIONS:
                raise GraphValidationError(f"Unknown vertex condition '{item}'.")
            codes.append(CONDITIONS.index(item))
        else:
            codes.append(int(item))
    return np.array(codes, dtype=np.int8)


class MetricGraph:
    """A finite truncation of a metric graph.

    Vertex and edge data are stored column-wise in read-only numpy arrays; ids are the dense array
    indices. ``vertex(i)`` and ``edge(j)`` return record views. Every edge is oriented from the
    smaller to the larger sphere.

    :param sphere: combinatorial distance of each vertex to the root.
    :param ambient_degree: degree of each vertex in the full (untruncated) graph.
    :param condition: vertex condition per vertex, a name from CONDITIONS or its index.
    :param frontier: True where the ambient star of the vertex is not fully present.
    :param source: initial vertex of each edge.
    :param target: terminal vertex of each edge.
    :param length: length of each edge.
    :param root: id of the root vertex (sphere 0).
    :param allow_degree_two: accept interior vertices of degree 2.
    :param family: optional description of the generating family, kept for reports and reloading.
    :param validate: check all invariants on construction.
    """

    def __init__(self, sphere: Sequence[int], ambient_degree: Sequence[int], condition: Sequence,
                 frontier: Sequence[bool], source: Sequence[int], target: Sequence[int],
                 length: Sequence[float], root: int = 0, allow_degree_two: bool = False,
                 family: Optional[dict] = None, validate: bool = True):
        self.sphere = _readonly(np.asarray(sphere, dtype=np.int64).copy())
        self.ambient_degree = _readonly(np.asarray(ambient_degree, dtype=np.int64).copy())
        self.condition = _readonly(_condition_codes(condition))
        self.frontier = _readonly(np.asarray(frontier, dtype=bool).copy())
        self.source = _readonly(np.asarray(source, dtype=np.int64).copy())
        self.target = _readonly(np.asarray(target, dtype=np.int64).copy())
        self.length = _readonly(np.asarray(length, dtype=float).copy())
        self.root = int(root)
        self.allow_degree_two = bool(allow_degree_two)
        self.family = family

        n = len(self.sphere)
        if not (len(self.ambient_degree) == len(self.condition) == len(self.frontier) == n):
            raise GraphValidationError("Per-vertex arrays have different lengths.")
        if not (len(self.target) == len(self.length) == len(self.source)):
            raise GraphValidationError("Per-edge arrays have different lengths.")
        if len(self.source) and (self.source.min() < 0 or self.target.min() < 0
                                 or self.source.max() >= n or self.target.max() >= n):
            bad = np.flatnonzero((self.source < 0) | (self.source >= n) | (self.target < 0) | (self.target >= n))
            raise GraphValidationError(f"Edges {bad[:10].tolist()} reference unknown vertices.")

        self._build_incidence()
        if validate:
            self.validate()

    def _build_incidence(self):
        n = self.num_vertices
        endpoints = np.concatenate([self.source, self.target])
        owners = np.concatenate([np.arange(self.num_edges), np.arange(self.num_edges)])
        order = np.argsort(endpoints, kind="stable")
        self.degree = _readonly(np.bincount(endpoints, minlength=n).astype(np.int64))
        pointer = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.degree, out=pointer[1:])
        self._incidence_pointer = _readonly(pointer)
        self._incidence = _readonly(owners[order])

    #### Size and lookup

    @property
    def num_vertices(self) -> int:
        return len(self.sphere)

    @property
    def num_edges(self) -> int:
        return len(self.source)

    @property
    def depth(self) -> int:
        return int(self.sphere.max())

    @property
    def mes(self) -> float:
        """Total length of the truncation."""
        return float(self.length.sum())

    def vertex(self, v: int) -> Vertex:
        if not 0 <= v < self.num_vertices:
            raise KeyError(f"Unknown vertex id {v}.")
        return Vertex(int(v), int(self.sphere[v]), int(self.ambient_degree[v]),
                      CONDITIONS[self.condition[v]], bool(self.frontier[v]))

    def edge(self, e: int) -> Edge:
        if not 0 <= e < self.num_edges:
            raise KeyError(f"Unknown edge id {e}.")
        return Edge(int(e), int(self.source[e]), int(self.target[e]), float(self.length[e]))

    @property
    def vertices(self) -> List[Vertex]:
        return [self.vertex(v) for v in range(self.num_vertices)]

    @property
    def edges(self) -> List[Edge]:
        return [self.edge(e) for e in range(self.num_edges)]

    def incident_edges(self, v: int) -> np.ndarray:
        if not 0 <= v < self.num_vertices:
            raise KeyError(f"Unknown vertex id {v}.")
        return self._incidence[self._incidence_pointer[v]:self._incidence_pointer[v + 1]]

    def other_end(self, e: int, v: int) -> int:
        return int(self.target[e] if self.source[e] == v else self.source[e])

    def neighbours(self, v: int) -> List[int]:
        return [self.other_end(e, v) for e in self.incident_edges(v)]

    def __iter__(self) -> Iterator[Vertex]:
        return (self.vertex(v) for v in range(self.num_vertices))

    def __repr__(self):
        return f"MetricGraph(vertices={self.num_vertices}, edges={self.num_edges}, depth={self.depth})"

    #### Masks and derived data

    @property
    def dirichlet(self) -> np.ndarray:
        return self.condition == CONDITIONS.index(DIRICHLET)

    @property
    def neumann(self) -> np.ndarray:
        return self.condition == CONDITIONS.index(NEUMANN)

    @property
    def interior(self) -> np.ndarray:
        """Vertices whose ambient star is fully present."""
        return ~self.frontier

    def is_equilateral(self, length: float = 1.0, rtol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.length - length) <= rtol * length))

    def adjacency(self, weights: Optional[np.ndarray] = None) -> sparse.csr_matrix:
        """Symmetric sparse matrix with the given per-edge weights (default: lengths)."""
        if weights is None:
            weights = self.length
        n = self.num_vertices
        rows = np.concatenate([self.source, self.target])
        cols = np.concatenate([self.target, self.source])
        data = np.concatenate([weights, weights])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def with_lengths(self, length: Sequence[float]) -> "MetricGraph":
        """The same combinatorial truncation with new edge lengths."""
        return MetricGraph(self.sphere, self.ambient_degree, self.condition, self.frontier,
                           self.source, self.target, length, root=self.root,
                           allow_degree_two=self.allow_degree_two, family=None)

    def scaled(self, factor: float) -> "MetricGraph":
        assert factor > 0, "scaling factor must be positive"
        return self.with_lengths(self.length * factor)

    #### Validation

    def validate(self):
        """Check every invariant of a truncation; raise GraphValidationError naming offenders."""
        n, m = self.num_vertices, self.num_edges
        if n == 0 or m == 0:
            raise GraphValidationError("A metric graph needs at least one edge.")
        if not 0 <= self.root < n:
            raise GraphValidationError(f"Root {self.root} is not a vertex.")
        if self.sphere[self.root] != 0:
            raise GraphValidationError(f"Root {self.root} must lie on sphere 0.")

        bad = np.flatnonzero(~np.isfinite(self.length) | (self.length <= 0))
        if len(bad):
            raise GraphValidationError(
                f"Edges {bad[:10].tolist()} violate: each edge has finite positive length.")

        bad = np.flatnonzero(self.source == self.target)
        if len(bad):
            raise GraphValidationError(f"Edges {bad[:10].tolist()} are loops.")

        low = np.minimum(self.source, self.target)
        high = np.maximum(self.source, self.target)
        keys = low * n + high
        order = np.argsort(keys, kind="stable")
        repeated = np.flatnonzero(keys[order][1:] == keys[order][:-1])
        if len(repeated):
            first = order[repeated[0]]
            duplicates = np.flatnonzero(keys == keys[first]).tolist()
            raise GraphValidationError(f"Edges {duplicates} are multiple edges between the same vertices.")

        bad = np.flatnonzero(self.sphere[self.source] > self.sphere[self.target])
        if len(bad):
            raise GraphValidationError(
                f"Edges {bad[:10].tolist()} are not oriented from the smaller to the larger sphere.")

        count, labels = csgraph.connected_components(self.adjacency(), directed=False)
        if count > 1:
            stray = np.flatnonzero(labels != labels[self.root])
            raise GraphValidationError(
                f"Graph is not connected; vertices {stray[:10].tolist()} are unreachable from the root.")

        hops = csgraph.dijkstra(self.adjacency(), directed=False, indices=self.root, unweighted=True)
        bad = np.flatnonzero(hops != self.sphere)
        if len(bad):
            raise GraphValidationError(
                f"Vertices {bad[:10].tolist()} have sphere indices different from their distance to the root.")

        special = self.condition != CONDITIONS.index(KIRCHHOFF)
        bad = np.flatnonzero(special & (self.ambient_degree != 1) & ~self.frontier)
        if len(bad):
            raise GraphValidationError(
                f"Vertices {bad[:10].tolist()} carry Dirichlet/Neumann conditions but are neither loose ends nor frontier.")

        bad = np.flatnonzero(self.frontier & ~self.dirichlet)
        if len(bad):
            raise GraphValidationError(f"Frontier vertices {bad[:10].tolist()} must carry the Dirichlet condition.")

        bad = np.flatnonzero(self.degree > self.ambient_degree)
        if len(bad):
            raise GraphValidationError(f"Vertices {bad[:10].tolist()} exceed their ambient degree.")
        bad = np.flatnonzero((self.degree == self.ambient_degree) == self.frontier)
        if len(bad):
            raise GraphValidationError(
                f"Vertices {bad[:10].tolist()} have a frontier flag inconsistent with their degree.")

        if not self.allow_degree_two:
            bad = np.flatnonzero(~self.frontier & (self.degree == 2))
            if len(bad):
                raise GraphValidationError(
                    f"Vertices {bad[:10].tolist()} have degree 2; all edges must be essential "
                    f"(pass allow_degree_two=True to override).")


#
# Vertex weights and path metrics
#

def vertex_weights(g: MetricGraph) -> np.ndarray:
    """m(v) = sum of the lengths of the edges at v, for every vertex of the truncation."""
    n = g.num_vertices
    return (np.bincount(g.source, weights=g.length, minlength=n)
            + np.bincount(g.target, weights=g.length, minlength=n))


def vertex_weight(g: MetricGraph, v: int) -> float:
    """m(v) over the truncated star of v; equal to the ambient value unless v is frontier."""
    return float(g.length[g.incident_edges(v)].sum())


def edge_costs(g: MetricGraph, metric: str = RHO0) -> np.ndarray:
    if metric == RHO0:
        return np.asarray(g.length)
    if metric == RHOM:
        m = vertex_weights(g)
        return m[g.source] + m[g.target]
    raise ValueError(f"Unknown path metric '{metric}'.")


def path_distance_array(g: MetricGraph, source: int, metric: str = RHO0, limit: float = np.inf) -> np.ndarray:
    """Single-source shortest-path distances as an array (inf beyond ``limit``)."""
    g.vertex(source)
    return csgraph.dijkstra(g.adjacency(edge_costs(g, metric)), directed=False, indices=source, limit=limit)


def path_distances(g: MetricGraph, source: int, metric: str = RHO0) -> Dict[int, float]:
    distances = path_distance_array(g, source, metric)
    return {v: float(d) for v, d in enumerate(distances)}


#
# Length extremes
#

def edges_outside_ball(g: MetricGraph, k: int) -> np.ndarray:
    """Edges with both endpoints outside the sphere-ball B_k = {v : sphere(v) < k}."""
    return g.sphere[g.source] >= k


def vertices_outside_ball(g: MetricGraph, k: int) -> np.ndarray:
    return g.sphere >= k


@dataclass(frozen=True)
class LengthExtremes:
    ell_star_upper: float
    ell_star_lower: float
    ell_ess_upper_seq: Dict[int, float] = field(default_factory=dict)
    ell_ess_lower_seq: Dict[int, float] = field(default_factory=dict)

    @property
    def ell_ess_upper(self) -> float:
        """Estimate of the essential sup: the value at the largest exclusion radius."""
        if not self.ell_ess_upper_seq:
            return self.ell_star_upper
        return self.ell_ess_upper_seq[max(self.ell_ess_upper_seq)]

    @property
    def ell_ess_lower(self) -> float:
        if not self.ell_ess_lower_seq:
            return self.ell_star_lower
        return self.ell_ess_lower_seq[max(self.ell_ess_lower_seq)]


def length_extremes(g: MetricGraph, exclusion_radii: Iterable[int] = ()) -> LengthExtremes:
    """Longest and shortest edge lengths, overall and outside growing sphere-balls.

    :param exclusion_radii: radii k for which to compute sup/inf over edges outside B_k.
    :raises EmptyRangeError: if some B_k leaves no edge.
    """
    upper, lower = {}, {}
    for k in exclusion_radii:
        if not 0 <= k <= g.depth:
            raise ValueError(f"Exclusion radius {k} outside the truncation depth {g.depth}.")
        lengths = g.length[edges_outside_ball(g, k)]
        if len(lengths) == 0:
            raise EmptyRangeError(f"No edges survive outside the ball of radius {k}.")
        upper[int(k)] = float(lengths.max())
        lower[int(k)] = float(lengths.min())
    return LengthExtremes(float(g.length.max()), float(g.length.min()), upper, lower)


#
# Self-adjointness diagnostics
#

@dataclass(frozen=True)
class SelfAdjointnessDiagnostics:
    inf_m: float
    ell_star_lower: float
    rho0_sphere_radii: List[float]
    rhom_sphere_radii: List[float]
    verdicts: FrozenSet[str]
    trend_exponents: Dict[str, float] = field(default_factory=dict)
    label: str = HEURISTIC


def per_sphere_min(values: np.ndarray, spheres: np.ndarray, depth: int) -> np.ndarray:
    """Minimum of ``values`` on every sphere 0..depth (inf where a sphere has no entry)."""
    minima = np.full(depth + 1, np.inf)
    np.minimum.at(minima, spheres, values)
    return minima


def _bounded_below(minima: np.ndarray) -> Tuple[bool, float]:
    minima = minima[np.isfinite(minima)]
    if len(minima) == 0 or minima.min() <= 0:
        return False, float("nan")
    exponent = decay_exponent(np.arange(1, len(minima) + 1), minima)
    if np.isnan(exponent):
        return True, exponent
    return exponent < BOUNDED_EXPONENT, exponent


def _diverging(radii: np.ndarray) -> Tuple[Optional[bool], float]:
    increments = np.diff(radii)
    exponent = decay_exponent(np.arange(1, len(increments) + 1), increments)
    if np.isnan(exponent):
        return None, exponent
    return exponent <= 1.0 + DIVERGENCE_SLACK, exponent


def selfadjointness_diagnostics(g: MetricGraph) -> SelfAdjointnessDiagnostics:
    """Sufficient conditions for essential self-adjointness, read off the truncation.

    inf m and l_* are reported as computed; the verdicts are trends of per-sphere sequences and are
    labeled heuristic.
    """
    m = vertex_weights(g)
    interior = g.interior
    inf_m = float(m[interior].min()) if interior.any() else float(m.min())
    radii = {}
    for metric in METRICS:
        distances = path_distance_array(g, g.root, metric)
        radii[metric] = per_sphere_min(distances, g.sphere, g.depth)

    verdicts = set()
    exponents = {}
    m_minima = per_sphere_min(m[interior], g.sphere[interior], g.depth)
    positive, exponents[INF_M_POSITIVE] = _bounded_below(m_minima)
    if positive:
        verdicts.add(INF_M_POSITIVE)
    length_minima = per_sphere_min(g.length, g.sphere[g.source], g.depth)
    positive, exponents[ELL_STAR_POSITIVE] = _bounded_below(length_minima)
    if positive:
        verdicts.add(ELL_STAR_POSITIVE)
    for metric, name in ((RHO0, RHO0_COMPLETE), (RHOM, RHOM_COMPLETE)):
        diverging, exponents[name] = _diverging(radii[metric])
        if diverging:
            verdicts.add(name)

    return SelfAdjointnessDiagnostics(inf_m, float(g.length.min()), radii[RHO0].tolist(), radii[RHOM].tolist(),
                                      frozenset(verdicts), exponents)
