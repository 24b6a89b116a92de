"""Isoperimetric constants of metric graphs by exhaustive enumeration.

Three constants are searched: the metric constant alpha (boundary degree over total length of a
connected subgraph), the discrete constant alpha_d (#boundary edges over m(X) for a vertex set X)
and the combinatorial constant alpha_comb (#boundary edges over deg(X)). Every value found is the
ratio of an explicit witness, hence an upper bound for the infimum it estimates.

Enumeration grows connected sets from a seed, only ever adding items with a larger id than the
seed, so each connected set of at most ``cap`` items is visited exactly once.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from spectralbounds.checks import Verdict, check_flag, check_leq
from spectralbounds.graph import EmptyRangeError, LengthExtremes, MetricGraph, vertex_weights
from spectralbounds.numerics import TOLERANCE, aitken_limit, close

SUBSET_BUDGET = 5_000_000

ALPHA_METRIC = "alpha_metric"
ALPHA_D = "alpha_d"
ALPHA_COMB = "alpha_comb"
ALPHA_WEIGHTED = "alpha_weighted"
KINDS = (ALPHA_METRIC, ALPHA_D, ALPHA_COMB)

# Ball ratios whose extrapolated limit falls below this share of the last ratio are read as tending to zero.
VANISHING_SHARE = 0.8


class DisconnectedSubgraphError(Exception):
    def __init__(self, components: List[List[int]]):
        super().__init__(f"Edge set is not connected; its vertex components are {components}.")
        self.components = components


class EnumerationBudgetError(Exception):
    def __init__(self, count: int, cap: int):
        super().__init__(f"Enumeration stopped after {count} connected sets (cap {cap}); "
                         f"lower the cap or raise the subset budget.")
        self.count = count
        self.cap = cap


#
# Witnesses and reports
#

@dataclass(frozen=True)
class SubgraphWitness:
    edge_ids: FrozenSet[int]
    vertex_ids: FrozenSet[int]
    boundary_vertex_ids: FrozenSet[int]
    deg_boundary: int
    volume: float
    ratio: float

    def to_dict(self) -> dict:
        return {"edge_ids": sorted(self.edge_ids), "vertex_ids": sorted(self.vertex_ids),
                "boundary_vertex_ids": sorted(self.boundary_vertex_ids), "deg_boundary": self.deg_boundary,
                "volume": self.volume, "ratio": self.ratio}


@dataclass(frozen=True)
class VertexSetWitness:
    """A vertex set X with its boundary edge count (weighted by d*b for weighted graphs) and denominator."""
    vertex_ids: FrozenSet[int]
    boundary_edges: float
    denominator: float
    ratio: float

    def to_dict(self) -> dict:
        return {"vertex_ids": sorted(self.vertex_ids), "boundary_edges": self.boundary_edges,
                "denominator": self.denominator, "ratio": self.ratio}


Witness = Union[SubgraphWitness, VertexSetWitness]


@dataclass(frozen=True)
class IsoReport:
    """Result of one isoperimetric search.

    ``value_upper`` is the smallest ratio found, ``essential_seq`` holds (k, value_upper) for the
    searches outside the sphere-balls B_k, and ``best_by_size`` the best witness of every size.
    """
    kind: str
    value_upper: float
    witness: Witness
    essential_seq: Tuple[Tuple[int, float], ...] = ()
    enumeration_cap: int = 0
    exhaustive_within_cap: bool = True
    enumeration_radius: Optional[int] = None
    subsets_evaluated: int = 0
    ball_ratios: Tuple[Tuple[int, float], ...] = ()
    best_by_size: Tuple[Witness, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value_upper": self.value_upper,
            "witness": self.witness.to_dict(),
            "essential_seq": [list(item) for item in self.essential_seq],
            "enumeration_cap": self.enumeration_cap,
            "exhaustive_within_cap": self.exhaustive_within_cap,
            "enumeration_radius": self.enumeration_radius,
            "subsets_evaluated": self.subsets_evaluated,
            "ball_ratios": [list(item) for item in self.ball_ratios],
        }


#
# Boundary of an explicit subgraph
#

def boundary_degree(g: MetricGraph, edge_ids: Iterable[int], check_connected: bool = True) -> SubgraphWitness:
    """Boundary of the subgraph spanned by ``edge_ids`` with respect to the whole graph.

    A vertex is a boundary vertex when it carries the Dirichlet condition or misses some of its
    ambient edges; Neumann loose ends never are. The boundary degree sums the subgraph degrees of
    the boundary vertices.
    """
    edges = np.array(sorted(set(int(e) for e in edge_ids)), dtype=np.int64)
    if len(edges) == 0:
        raise ValueError("A subgraph needs at least one edge.")
    if edges[0] < 0 or edges[-1] >= g.num_edges:
        raise KeyError(f"Unknown edge ids in {edges.tolist()}.")
    sources, targets = g.source[edges], g.target[edges]
    vertices, inverse = np.unique(np.concatenate([sources, targets]), return_inverse=True)
    deg_sub = np.bincount(inverse, minlength=len(vertices))

    if check_connected:
        links = sparse.coo_matrix((np.ones(len(edges)), (inverse[:len(edges)], inverse[len(edges):])),
                                  shape=(len(vertices), len(vertices)))
        count, labels = csgraph.connected_components(links, directed=False)
        if count > 1:
            components = [vertices[labels == c].tolist() for c in range(count)]
            raise DisconnectedSubgraphError(sorted(components))

    boundary = (g.dirichlet[vertices] | (deg_sub < g.ambient_degree[vertices])) & ~g.neumann[vertices]
    deg_boundary = int(deg_sub[boundary].sum())
    volume = math.fsum(g.length[edges].tolist())
    return SubgraphWitness(frozenset(edges.tolist()), frozenset(vertices.tolist()),
                           frozenset(vertices[boundary].tolist()), deg_boundary, volume, deg_boundary / volume)


def boundary_edge_classes(g: MetricGraph, witness: SubgraphWitness) -> Tuple[int, int]:
    """Numbers of witness edges with exactly one, respectively two, boundary endpoints."""
    edges = np.array(sorted(witness.edge_ids))
    boundary = np.isin(g.source[edges], list(witness.boundary_vertex_ids)).astype(int) \
        + np.isin(g.target[edges], list(witness.boundary_vertex_ids)).astype(int)
    return int(np.sum(boundary == 1)), int(np.sum(boundary == 2))


def ball_ratios(g: MetricGraph, exclusion_radius: int = 0) -> List[Tuple[int, float]]:
    """Ratio of the subgraph spanned by edges with both endpoints in spheres k..n, for n = k+1..depth.

    For k = 0 these are the balls around the root. For k > 0 the subgraph may split into several
    components; its ratio is then a weighted mean of theirs.
    """
    k = exclusion_radius
    if not 0 <= k < g.depth:
        raise ValueError(f"Exclusion radius {k} must lie in [0, {g.depth - 1}].")
    depth = g.depth
    sphere = g.sphere
    # Per-vertex counts of incident edges towards lower-or-equal and higher-or-equal spheres.
    level = (sphere[g.source] == sphere[g.target]).astype(float)
    low = np.bincount(g.target, minlength=g.num_vertices) + np.bincount(g.source, weights=level, minlength=g.num_vertices)
    high = np.bincount(g.source, minlength=g.num_vertices) + np.bincount(g.target, weights=level, minlength=g.num_vertices)

    ambient, special = g.ambient_degree, g.dirichlet & ~g.neumann
    open_boundary = ~g.neumann

    inner = np.bincount(sphere, weights=np.where(special, g.degree, 0), minlength=depth + 1)
    outer = np.bincount(sphere, weights=np.where((g.dirichlet | (low < ambient)) & open_boundary, low, 0),
                        minlength=depth + 1)
    inner_cumulative = np.concatenate([[0.0], np.cumsum(inner)])
    bottom = float(np.sum(np.where((sphere == k) & (g.dirichlet | (high < ambient)) & open_boundary, high, 0)))

    kept = g.sphere[g.source] >= k
    volume = np.cumsum(np.bincount(g.sphere[g.target][kept], weights=g.length[kept], minlength=depth + 1))

    ratios = []
    for n in range(k + 1, depth + 1):
        deg_boundary = bottom + (inner_cumulative[n] - inner_cumulative[k + 1]) + outer[n]
        ratios.append((n, float(deg_boundary / volume[n])))
    return ratios


#
# Enumeration
#

def connected_subsets(adjacency: Mapping[int, Sequence[int]], cap: int, seeds: Iterable[int],
                      budget: int = SUBSET_BUDGET) -> Iterator[FrozenSet[int]]:
    """All connected sets of at most ``cap`` items, each exactly once.

    A set is reached from its smallest item only; growth uses a stack of frozensets and a visited
    set per seed.
    """
    count = 0
    for seed in sorted(seeds):
        start = frozenset([seed])
        stack = [start]
        visited = {start}
        while stack:
            current = stack.pop()
            count += 1
            if count > budget:
                raise EnumerationBudgetError(count - 1, cap)
            yield current
            if len(current) >= cap:
                continue
            for item in current:
                for other in adjacency[item]:
                    if other > seed and other not in current:
                        grown = current | {other}
                        if grown not in visited:
                            visited.add(grown)
                            stack.append(grown)


class BestTracker:
    """Smallest ratio seen, ties broken by the lexicographically smallest sorted ids; also the best per size."""

    def __init__(self):
        self.ratio: Optional[float] = None
        self.key: Optional[tuple] = None
        self.items: Optional[FrozenSet[int]] = None
        self.by_size: Dict[int, Tuple[float, tuple, FrozenSet[int]]] = {}

    @staticmethod
    def _better(ratio: float, key: tuple, best_ratio: Optional[float], best_key: Optional[tuple]) -> bool:
        if best_ratio is None:
            return True
        if close(ratio, best_ratio, TOLERANCE):
            return key < best_key
        return ratio < best_ratio

    def offer(self, ratio: float, items: FrozenSet[int]):
        key = tuple(sorted(items))
        if self._better(ratio, key, self.ratio, self.key):
            self.ratio, self.key, self.items = ratio, key, items
        size_best = self.by_size.get(len(items))
        if size_best is None or self._better(ratio, key, size_best[0], size_best[1]):
            self.by_size[len(items)] = (ratio, key, items)


def _incidence_lists(g: MetricGraph, allowed: np.ndarray) -> Dict[int, List[int]]:
    adjacency = {}
    for e in np.flatnonzero(allowed).tolist():
        touching = np.concatenate([g.incident_edges(int(g.source[e])), g.incident_edges(int(g.target[e]))])
        adjacency[e] = [int(f) for f in touching if f != e and allowed[f]]
    return adjacency


def _region(g: MetricGraph, exclusion_radius: int, enumeration_radius: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Edge and vertex masks of the part of the graph outside B_k and within the enumeration radius."""
    edges = g.sphere[g.source] >= exclusion_radius
    vertices = g.sphere >= exclusion_radius
    if enumeration_radius is not None:
        edges &= g.sphere[g.target] <= enumeration_radius
        vertices &= g.sphere <= enumeration_radius
    return edges, vertices


def alpha_exhaustive(g: MetricGraph, cap: int, exclusion_radius: int = 0, enumeration_radius: Optional[int] = None,
                     budget: int = SUBSET_BUDGET, strict: bool = True, verbose: bool = False) -> IsoReport:
    """Smallest boundary-degree-to-length ratio over connected subgraphs with at most ``cap`` edges.

    :param exclusion_radius: search only G minus the sphere-ball B_k (edges with both endpoints at
        sphere >= k); vertices next to B_k then always count as boundary.
    :param enumeration_radius: if given, only edges within this sphere are used.
    :param strict: raise EnumerationBudgetError when the budget runs out; otherwise return the
        best witness so far with ``exhaustive_within_cap`` False.
    """
    if cap < 1:
        raise ValueError(f"Enumeration cap must be at least 1, not {cap}.")
    allowed, _ = _region(g, exclusion_radius, enumeration_radius)
    if not allowed.any():
        raise EmptyRangeError(f"No edges left outside the ball of radius {exclusion_radius}.")
    adjacency = _incidence_lists(g, allowed)

    source, target = g.source.tolist(), g.target.tolist()
    length = g.length.tolist()
    ambient = g.ambient_degree.tolist()
    dirichlet, neumann = g.dirichlet.tolist(), g.neumann.tolist()

    best = BestTracker()
    evaluated, exhaustive = 0, True
    try:
        for edges in connected_subsets(adjacency, cap, adjacency.keys(), budget):
            degree: Dict[int, int] = {}
            for e in edges:
                degree[source[e]] = degree.get(source[e], 0) + 1
                degree[target[e]] = degree.get(target[e], 0) + 1
            deg_boundary = sum(d for v, d in degree.items() if not neumann[v] and (dirichlet[v] or d < ambient[v]))
            best.offer(deg_boundary / math.fsum(length[e] for e in edges), edges)
            evaluated += 1
    except EnumerationBudgetError:
        if strict:
            raise
        exhaustive = False
    if verbose:
        print(f"alpha (k={exclusion_radius}): {evaluated} connected subgraphs, best ratio {best.ratio:.6g}")

    witnesses = tuple(boundary_degree(g, best.by_size[size][2], check_connected=False) for size in sorted(best.by_size))
    return IsoReport(ALPHA_METRIC, best.ratio, boundary_degree(g, best.items, check_connected=False),
                     enumeration_cap=cap, exhaustive_within_cap=exhaustive, enumeration_radius=enumeration_radius,
                     subsets_evaluated=evaluated, best_by_size=witnesses,
                     ball_ratios=tuple(ball_ratios(g, exclusion_radius)) if exclusion_radius < g.depth else ())


def vertex_set_witness(g: MetricGraph, vertex_ids: Iterable[int], weights: np.ndarray) -> VertexSetWitness:
    """#E_b(X) over the sum of ``weights`` on X."""
    members = frozenset(int(v) for v in vertex_ids)
    boundary_edges = sum(1 for v in members for u in g.neighbours(v) if u not in members)
    denominator = math.fsum(weights[v] for v in members)
    return VertexSetWitness(members, boundary_edges, denominator, boundary_edges / denominator)


def _vertex_search(g: MetricGraph, kind: str, weights: np.ndarray, cap: int, exclusion_radius: int,
                   enumeration_radius: Optional[int], budget: int, strict: bool, verbose: bool) -> IsoReport:
    if cap < 1:
        raise ValueError(f"Enumeration cap must be at least 1, not {cap}.")
    _, region = _region(g, exclusion_radius, enumeration_radius)
    allowed = region & ~g.frontier & ~g.dirichlet
    if not allowed.any():
        raise EmptyRangeError(f"No admissible vertices left outside the ball of radius {exclusion_radius}.")
    neighbours = {v: g.neighbours(v) for v in np.flatnonzero(allowed).tolist()}
    adjacency = {v: [u for u in near if allowed[u]] for v, near in neighbours.items()}
    weight = weights.tolist()

    best = BestTracker()
    evaluated, exhaustive = 0, True
    try:
        for members in connected_subsets(adjacency, cap, adjacency.keys(), budget):
            boundary_edges = sum(1 for v in members for u in neighbours[v] if u not in members)
            best.offer(boundary_edges / math.fsum(weight[v] for v in members), members)
            evaluated += 1
    except EnumerationBudgetError:
        if strict:
            raise
        exhaustive = False
    if verbose:
        print(f"{kind} (k={exclusion_radius}): {evaluated} connected vertex sets, best ratio {best.ratio:.6g}")

    witnesses = tuple(vertex_set_witness(g, best.by_size[size][2], weights) for size in sorted(best.by_size))
    return IsoReport(kind, best.ratio, vertex_set_witness(g, best.items, weights), enumeration_cap=cap,
                     exhaustive_within_cap=exhaustive, enumeration_radius=enumeration_radius,
                     subsets_evaluated=evaluated, best_by_size=witnesses)


def alpha_d_exhaustive(g: MetricGraph, cap: int, exclusion_radius: int = 0, enumeration_radius: Optional[int] = None,
                       budget: int = SUBSET_BUDGET, strict: bool = True, verbose: bool = False) -> IsoReport:
    """Smallest #E_b(X)/m(X) over connected sets X of at most ``cap`` non-frontier, non-Dirichlet vertices."""
    return _vertex_search(g, ALPHA_D, vertex_weights(g), cap, exclusion_radius, enumeration_radius,
                          budget, strict, verbose)


def alpha_comb_exhaustive(g: MetricGraph, cap: int, exclusion_radius: int = 0, enumeration_radius: Optional[int] = None,
                          budget: int = SUBSET_BUDGET, strict: bool = True, verbose: bool = False) -> IsoReport:
    """Smallest #E_b(X)/deg(X), with ambient degrees, over the same vertex sets as alpha_d."""
    return _vertex_search(g, ALPHA_COMB, g.ambient_degree.astype(float), cap, exclusion_radius, enumeration_radius,
                          budget, strict, verbose)


SEARCHES = {ALPHA_METRIC: alpha_exhaustive, ALPHA_D: alpha_d_exhaustive, ALPHA_COMB: alpha_comb_exhaustive}


def essential_iso_sequences(g: MetricGraph, k_max: int, cap: int, vertex_cap: Optional[int] = None,
                            kinds: Sequence[str] = KINDS, enumeration_radius: Optional[int] = None,
                            budget: int = SUBSET_BUDGET, strict: bool = True,
                            verbose: bool = False) -> Dict[str, IsoReport]:
    """Run every search on G and on G minus B_k for k = 1..k_max.

    The k = 0 search gives ``value_upper`` and the witnesses; the others fill ``essential_seq``.
    ``vertex_cap`` (default ``cap``) bounds the vertex-set searches.
    """
    if not 0 <= k_max < g.depth:
        raise ValueError(f"k_max must lie in [0, {g.depth - 1}] for a truncation of depth {g.depth}, not {k_max}.")
    reports = {}
    for kind in kinds:
        search = SEARCHES[kind]
        size = cap if kind == ALPHA_METRIC or vertex_cap is None else vertex_cap
        options = dict(enumeration_radius=enumeration_radius, budget=budget, strict=strict, verbose=verbose)
        base = search(g, size, **options)
        sequence = tuple((k, search(g, size, exclusion_radius=k, **options).value_upper) for k in range(1, k_max + 1))
        reports[kind] = replace(base, essential_seq=sequence)
    return reports


def essential_csv(reports: Mapping[str, IsoReport]) -> str:
    lines = ["k,kind,value_upper"]
    for kind in sorted(reports):
        report = reports[kind]
        lines.append(f"0,{kind},{report.value_upper!r}")
        lines.extend(f"{k},{kind},{value!r}" for k, value in report.essential_seq)
    return "\n".join(lines) + "\n"


#
# Consistency between the constants
#

def _edges_meeting(g: MetricGraph, vertex_ids: Iterable[int]) -> np.ndarray:
    return np.unique(np.concatenate([g.incident_edges(v) for v in vertex_ids]))


def _vanishing(ratios: Sequence[Tuple[int, float]]) -> bool:
    last = ratios[-1][1]
    if last <= TOLERANCE:
        return True
    return bool(aitken_limit([r for _, r in ratios]) < VANISHING_SHARE * last)


def check_connection_inequalities(g: MetricGraph, reports: Mapping[str, IsoReport], extremes: LengthExtremes,
                                  curvature: Optional[np.ndarray] = None) -> List[Verdict]:
    """Check the inequalities linking alpha, alpha_d and alpha_comb on matched witnesses.

    Every computed value only bounds its infimum from above, so the inequalities are verified on
    pairs of witnesses built from each other (a vertex set X and the edges meeting X; a subgraph
    and its inner vertices). A failure indicates a bug, not a property of the graph.

    :param curvature: per-vertex K (NaN at frontier vertices); enables the pointwise curvature check.
    """
    verdicts = []
    m = vertex_weights(g)
    ell_upper, ell_lower = extremes.ell_star_upper, extremes.ell_star_lower

    if ALPHA_D in reports:
        for witness in reports[ALPHA_D].best_by_size:
            grown = boundary_degree(g, _edges_meeting(g, witness.vertex_ids))
            verdicts.append(check_leq("half_alpha_le_alpha_d", 0.5 * grown.ratio, witness.ratio,
                                      "metric vs discrete isoperimetric constant, X and the edges meeting X",
                                      detail=f"|X|={len(witness.vertex_ids)}"))

    if ALPHA_COMB in reports:
        for witness in reports[ALPHA_COMB].best_by_size:
            grown = boundary_degree(g, _edges_meeting(g, witness.vertex_ids))
            verdicts.append(check_leq("alpha_le_comb_ceiling", grown.ratio, 2.0 * witness.ratio / ell_lower,
                                      "metric vs combinatorial isoperimetric constant (upper)",
                                      detail=f"|X|={len(witness.vertex_ids)}"))

    if ALPHA_METRIC in reports:
        report = reports[ALPHA_METRIC]
        for witness in report.best_by_size:
            inner = witness.vertex_ids - witness.boundary_vertex_ids
            detail = f"|E|={len(witness.edge_ids)}"
            cut = sum(1 for v in inner for u in g.neighbours(v) if u not in inner)
            if inner and cut:
                ratio_d = cut / math.fsum(m[v] for v in inner)
                ratio_comb = cut / float(sum(g.ambient_degree[v] for v in inner))
                verdicts.append(check_leq("inverse_alpha_le_inverse_alpha_d_plus_ell", 2.0 / witness.ratio,
                                          1.0 / ratio_d + ell_upper,
                                          "metric vs discrete isoperimetric constant, subgraph and its inner vertices",
                                          detail=detail))
                verdicts.append(check_leq("alpha_ge_comb_floor", 2.0 * ratio_comb / (ell_upper * (1.0 + ratio_comb)),
                                          witness.ratio, "metric vs combinatorial isoperimetric constant (lower)",
                                          detail=detail))
            verdicts.append(check_leq("finite_volume_floor", 1.0 / g.mes, witness.ratio,
                                      "alpha >= 1/mes on a graph of finite volume", detail=detail))
            one, two = boundary_edge_classes(g, witness)
            verdicts.append(check_flag("boundary_degree_identity", witness.deg_boundary == one + 2 * two,
                                       "deg of the boundary equals #E1 + 2 #E2",
                                       detail=f"{detail}: {witness.deg_boundary} vs {one} + 2*{two}"))
            if curvature is not None:
                verdicts.extend(_curvature_witness_check(g, witness, curvature))

        if report.enumeration_radius is None and report.exhaustive_within_cap:
            verdicts.append(check_leq("alpha_le_two_over_longest_edge", report.value_upper, 2.0 / ell_upper,
                                      "single-edge test subgraph"))
            stars = ~g.frontier & ~g.dirichlet & (g.degree <= report.enumeration_cap)
            if stars.any():
                verdicts.append(check_leq("alpha_le_star_ratio", report.value_upper,
                                          float(np.min(g.degree[stars] / m[stars])), "star test subgraph"))
        if report.essential_seq:
            k = report.essential_seq[-1][0]
            shells = ball_ratios(g, k) if k < g.depth else []
            # Three points are needed to extrapolate either sequence.
            if len(report.ball_ratios) >= 3 and len(shells) >= 3:
                verdicts.append(check_flag("alpha_zero_iff_alpha_ess_zero",
                                           _vanishing(report.ball_ratios) == _vanishing(shells),
                                           "alpha = 0 iff alpha_ess = 0 (extrapolated limits of ball ratios)",
                                           detail=f"k={k}"))
    return verdicts


def _curvature_witness_check(g: MetricGraph, witness: SubgraphWitness, curvature: np.ndarray) -> List[Verdict]:
    edges = np.array(sorted(witness.edge_ids))
    vertices = np.array(sorted(witness.vertex_ids))
    frontier = vertices[g.frontier[vertices]]
    if len(frontier) and np.isin(g.source[edges], frontier).any():
        return []
    values = curvature[vertices[~g.frontier[vertices]]]
    if len(values) == 0 or not np.all(values > 0):
        return []
    return [check_leq("curvature_witness_floor", float(values.min()), witness.ratio,
                      "curvature bounds the isoperimetric ratio pointwise", detail=f"|E|={len(witness.edge_ids)}")]
