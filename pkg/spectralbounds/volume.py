"""Metric balls, volume growth and the Brooks bound.

Balls are open path-metric balls B_r(x) = {y : rho0(x, y) < r}. A point inside an edge (a, b) is
reached through one of its endpoints, so with vertex distances d the ball covers

    min(|e|, max(0, r - d(a)) + max(0, r - d(b)))

of the edge. A centre inside an edge is handled by the endpoint distances of that edge, and the
centre edge itself by a union of intervals.

Balls that reach a frontier vertex are censored: beyond it the truncation misses part of the
ambient graph.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csgraph

from spectralbounds.checks import HEURISTIC, INAPPLICABLE, LAMBDA0_ESS, Bound
from spectralbounds.graph import MetricGraph, vertex_weights
from spectralbounds.numerics import log_grid, tail_fit

RADIUS_GRID = 40
MIN_GRID_POINTS = 5
STAR_SAMPLE_BUDGET = 2000


class InsufficientRadiusError(Exception):
    pass


class Center(NamedTuple):
    """A point of the graph: a vertex, or an edge with the distance ``offset`` from its source."""
    vertex: Optional[int] = None
    edge: Optional[int] = None
    offset: float = 0.0

    @classmethod
    def at_vertex(cls, v: int) -> "Center":
        return cls(vertex=int(v))

    @classmethod
    def midpoint(cls, g: MetricGraph, e: int) -> "Center":
        return cls(edge=int(e), offset=float(g.length[e]) / 2.0)

    @classmethod
    def parse(cls, text: str, g: MetricGraph) -> "Center":
        """Read ``root``, ``vertex:ID``, ``edge:ID`` (midpoint) or ``edge:ID:OFFSET``."""
        kind, _, rest = text.partition(":")
        if kind == "root" and not rest:
            return cls.at_vertex(g.root)
        if kind == "vertex" and rest:
            v = int(rest)
            g.vertex(v)
            return cls.at_vertex(v)
        if kind == "edge" and rest:
            e, _, offset = rest.partition(":")
            g.edge(int(e))
            if not offset:
                return cls.midpoint(g, int(e))
            t = float(offset)
            if not 0.0 <= t <= g.length[int(e)]:
                raise ValueError(f"Offset {t} outside edge {e} of length {g.length[int(e)]!r}.")
            return cls(edge=int(e), offset=t)
        raise ValueError(f"Cannot read centre '{text}'; expected root, vertex:ID, edge:ID or edge:ID:OFFSET.")

    def label(self) -> str:
        if self.edge is None:
            return f"vertex:{self.vertex}"
        return f"edge:{self.edge}:{self.offset!r}"


#
# Distances and balls
#

@dataclass(frozen=True)
class _Reach:
    distances: np.ndarray
    # For centres inside an edge: (edge, offset, length, distance between the edge's ends).
    center_edge: Optional[Tuple[int, float, float, float]] = None


def _reach(g: MetricGraph, center: Center, limit: float, adjacency=None) -> _Reach:
    adjacency = g.adjacency() if adjacency is None else adjacency
    if center.edge is None:
        g.vertex(center.vertex)
        return _Reach(csgraph.dijkstra(adjacency, directed=False, indices=center.vertex, limit=limit))
    e = center.edge
    u, w, length = int(g.source[e]), int(g.target[e]), float(g.length[e])
    rows = csgraph.dijkstra(adjacency, directed=False, indices=[u, w], limit=limit + length)
    distances = np.minimum(center.offset + rows[0], length - center.offset + rows[1])
    return _Reach(distances, (e, center.offset, length, float(rows[0][w])))


def _interval_cover(intervals: List[Tuple[float, float]], length: float) -> float:
    clipped = sorted((max(a, 0.0), min(b, length)) for a, b in intervals if b > 0.0 and a < length)
    total, end = 0.0, 0.0
    for a, b in clipped:
        if b <= end:
            continue
        total += b - max(a, end)
        end = b
    return total


def _center_edge_cover(offset: float, length: float, between: float, r: float) -> float:
    """Part of the centre edge within distance r, going directly or around through the rest of the graph."""
    intervals = [(offset - r, offset + r)]
    if r > offset + between:
        intervals.append((length - (r - offset - between), length))
    if r > length - offset + between:
        intervals.append((0.0, r - (length - offset) - between))
    return _interval_cover(intervals, length)


def _volumes(g: MetricGraph, reach: _Reach, radii: np.ndarray) -> np.ndarray:
    near, far = reach.distances[g.source], reach.distances[g.target]
    touched = np.minimum(near, far) < (radii.max() if len(radii) else 0.0)
    if reach.center_edge is not None:
        touched[reach.center_edge[0]] = False
    near, far, lengths = near[touched], far[touched], g.length[touched]
    volumes = np.empty(len(radii))
    for i, r in enumerate(radii):
        volumes[i] = np.minimum(lengths, np.maximum(r - near, 0.0) + np.maximum(r - far, 0.0)).sum()
        if reach.center_edge is not None:
            _, offset, length, between = reach.center_edge
            volumes[i] += _center_edge_cover(offset, length, between, r)
    return volumes


def _frontier_distance(g: MetricGraph, reach: _Reach) -> float:
    if not g.frontier.any():
        return float("inf")
    return float(reach.distances[g.frontier].min())


def ball_volumes(g: MetricGraph, center: Center, radii: Sequence[float], adjacency=None) -> np.ndarray:
    radii = np.asarray(radii, dtype=float)
    if len(radii) and radii.min() < 0:
        raise ValueError(f"Ball radii must be nonnegative, got {radii.min()}.")
    limit = float(radii.max()) if len(radii) else 0.0
    return _volumes(g, _reach(g, center, limit, adjacency), radii)


def ball_volume(g: MetricGraph, center: Center, r: float) -> float:
    """vol_x(r) = mes(B_r(x))."""
    return float(ball_volumes(g, center, [r])[0])


def valid_radius(g: MetricGraph, center: Center, adjacency=None) -> float:
    """Largest radius whose ball does not reach the truncation frontier (inf without a frontier)."""
    return _frontier_distance(g, _reach(g, center, np.inf, adjacency))


def discrete_ball_weights(g: MetricGraph, v: int, radii: Sequence[float], adjacency=None) -> np.ndarray:
    """m(B_r(v)): the sum of the vertex weights m(u) over the vertices u with rho0(v, u) < r."""
    radii = np.asarray(radii, dtype=float)
    distances = _reach(g, Center.at_vertex(v), float(radii.max()), adjacency).distances
    m = vertex_weights(g)
    order = np.argsort(distances, kind="stable")
    cumulative = np.concatenate([[0.0], np.cumsum(m[order])])
    return cumulative[np.searchsorted(distances[order], radii, side="left")]


@dataclass(frozen=True)
class BallVolumeTable:
    center: Center
    radii: np.ndarray
    volumes: np.ndarray
    valid_radius: float

    @property
    def censored(self) -> np.ndarray:
        return self.radii > self.valid_radius

    def to_dict(self) -> dict:
        return {
            "center": self.center.label(),
            "radii": self.radii.tolist(),
            "volumes": self.volumes.tolist(),
            "valid_radius": self.valid_radius,
            "censored": self.censored.tolist(),
        }


def ball_volume_table(g: MetricGraph, center: Center, radii: Sequence[float]) -> BallVolumeTable:
    adjacency = g.adjacency()
    reach = _reach(g, center, np.inf, adjacency)
    radii = np.asarray(radii, dtype=float)
    return BallVolumeTable(center, radii, _volumes(g, reach, radii), _frontier_distance(g, reach))


#
# Growth rates
#

@dataclass(frozen=True)
class GrowthEstimate:
    """log(volume)/r along a radius grid and its a + b/r tail fit; ``mu`` is the intercept a.

    ``at_radius`` is the last sequence value when the grid was ended at a requested radius.
    """
    table: BallVolumeTable
    sequence: np.ndarray
    mu: float
    slope: float
    discrete: bool = False
    at_radius: Optional[float] = None

    def to_dict(self) -> dict:
        record = self.table.to_dict()
        record.update(sequence=self.sequence.tolist(), mu=self.mu, slope=self.slope, discrete=self.discrete,
                      at_radius=self.at_radius)
        return record


def _growth_radii(g: MetricGraph, valid: float, reach: _Reach, num: int, radius: Optional[float] = None) -> np.ndarray:
    shortest = float(g.length.min())
    if not np.isfinite(valid):
        reached = reach.distances[np.isfinite(reach.distances)]
        valid = float(reached.max()) + shortest
    if valid <= shortest or num < MIN_GRID_POINTS:
        raise InsufficientRadiusError(
            f"Radius range [{shortest!r}, {valid!r}] with {num} grid points is too small for a growth estimate.")
    if radius is not None:
        if radius <= shortest:
            raise InsufficientRadiusError(f"Growth radius {radius!r} must exceed the shortest edge {shortest!r}.")
        valid = radius
    return log_grid(shortest, valid, num)


def _fit(radii: np.ndarray, values: np.ndarray, valid: float) -> Tuple[np.ndarray, float, float]:
    with np.errstate(divide="ignore"):
        sequence = np.log(values) / radii
    usable = np.isfinite(sequence) & (radii <= valid)
    if usable.sum() < 2:
        raise InsufficientRadiusError("Fewer than two uncensored radii with positive volume.")
    a, b = tail_fit(radii[usable], sequence[usable], start=radii[usable].max() / 2.0)
    return sequence, a, b


def mu_estimate(g: MetricGraph, center: Optional[Center] = None, num: int = RADIUS_GRID,
                radius: Optional[float] = None) -> GrowthEstimate:
    """Exponential volume growth rate mu_x = liminf log(vol_x(r))/r, by a tail fit over r >= valid/2.

    :param radius: end the grid at this radius, past the valid radius if need be, and report
        log(vol_x(radius))/radius as ``at_radius``. Censored radii never enter the tail fit.
    :raises InsufficientRadiusError: if the uncensored radius range is too short for a fit.
    """
    center = Center.at_vertex(g.root) if center is None else center
    reach = _reach(g, center, np.inf)
    valid = _frontier_distance(g, reach)
    radii = _growth_radii(g, valid, reach, num, radius)
    table = BallVolumeTable(center, radii, _volumes(g, reach, radii), valid)
    sequence, a, b = _fit(radii, table.volumes, min(valid, radii.max()))
    return GrowthEstimate(table, sequence, a, b, at_radius=float(sequence[-1]) if radius is not None else None)


def mu_d_estimate(g: MetricGraph, v: Optional[int] = None, num: int = RADIUS_GRID,
                  radius: Optional[float] = None) -> GrowthEstimate:
    """Growth rate of the vertex-weight volume m(B_r(v)) of the discrete graph."""
    v = g.root if v is None else int(v)
    center = Center.at_vertex(v)
    reach = _reach(g, center, np.inf)
    valid = _frontier_distance(g, reach)
    radii = _growth_radii(g, valid, reach, num, radius)
    weights = discrete_ball_weights(g, v, radii)
    table = BallVolumeTable(center, radii, weights, valid)
    sequence, a, b = _fit(radii, weights, min(valid, radii.max()))
    return GrowthEstimate(table, sequence, a, b, discrete=True,
                          at_radius=float(sequence[-1]) if radius is not None else None)


@dataclass(frozen=True)
class StarVolumeEstimate:
    """Sampled vol_*(r) = min over centres x of vol_x(r)/vol_x(1).

    The minimum runs over the sampled centres whose ball of radius r (and 1) stays inside the
    truncation; it is an upper estimate of the infimum over the whole graph.
    """
    r_probe: float
    min_ratio: float
    witness: Optional[Center]
    radii: np.ndarray
    star_volumes: np.ndarray
    sequence: np.ndarray
    mu_star: float
    sampled: int
    censored: int
    partial: bool
    ratios: List[Tuple[str, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "r_probe": self.r_probe,
            "min_ratio": self.min_ratio,
            "witness": self.witness.label() if self.witness is not None else None,
            "radii": self.radii.tolist(),
            "star_volumes": self.star_volumes.tolist(),
            "sequence": self.sequence.tolist(),
            "mu_star": self.mu_star,
            "sampled": self.sampled,
            "censored": self.censored,
            "partial": self.partial,
        }


def star_centers(g: MetricGraph) -> List[Center]:
    """Non-frontier vertices in id order, then every edge midpoint."""
    vertices = [Center.at_vertex(v) for v in np.flatnonzero(~g.frontier)]
    return vertices + [Center.midpoint(g, e) for e in range(g.num_edges)]


def mu_star_estimate(g: MetricGraph, r_probe: float = 3.0, budget: int = STAR_SAMPLE_BUDGET,
                     num: int = 8, verbose: bool = False) -> StarVolumeEstimate:
    """Sample vol_x(r)/vol_x(1) over at most ``budget`` centres at radii 1..r_probe.

    ``partial`` is set when the budget cut the sample short. Centres whose balls are censored at a
    radius do not take part in the minimum at that radius.
    """
    if r_probe < 1.0:
        raise ValueError(f"The probe radius must be at least 1, not {r_probe}.")
    centers = star_centers(g)
    partial = len(centers) > budget
    centers = centers[:budget]
    radii = np.unique(np.concatenate([np.linspace(1.0, r_probe, num), [r_probe]]))
    adjacency = g.adjacency()

    best = np.full(len(radii), np.inf)
    witness, censored, ratios = None, 0, []
    for i, center in enumerate(centers):
        reach = _reach(g, center, float(radii.max()), adjacency)
        valid = _frontier_distance(g, reach)
        volumes = _volumes(g, reach, radii)
        if valid < 1.0:
            censored += 1
            continue
        ratio = volumes / volumes[0]
        ratio[radii > valid] = np.inf
        if radii[-1] > valid:
            censored += 1
        else:
            ratios.append((center.label(), float(ratio[-1])))
            if ratio[-1] < best[-1]:
                witness = center
        best = np.minimum(best, ratio)
        if verbose and (i + 1) % 500 == 0:
            print(f"vol_* sampling: {i + 1}/{len(centers)} centres, current minimum {best[-1]!r}")

    with np.errstate(divide="ignore", invalid="ignore"):
        sequence = np.log(best) / radii
    usable = np.isfinite(sequence)
    mu_star = tail_fit(radii[usable], sequence[usable])[0] if usable.sum() >= 2 else float("nan")
    return StarVolumeEstimate(float(r_probe), float(best[-1]), witness, radii, best, sequence, mu_star,
                              len(centers), censored, partial, ratios)


#
# Bounds and closed forms
#

def brooks_upper(mu: float, mu_star: Optional[float] = None, complete: bool = True) -> List[Bound]:
    """lambda0_ess <= mu_*^2/4 <= mu^2/4 for graphs that are complete in the path metric.

    Completeness cannot be read off a truncation; ``complete`` carries the trend verdict and the
    bounds are heuristic at best.
    """
    applicability = HEURISTIC if complete else INAPPLICABLE
    note = "" if complete else " (completeness trend not established)"
    bounds = [Bound("brooks_mu", max(mu, 0.0) ** 2 / 4.0 if complete else None,
                    f"Brooks-type bound lambda0_ess <= mu^2/4{note}", applicability, LAMBDA0_ESS)]
    if mu_star is not None and not math.isnan(mu_star):
        bounds.append(Bound("brooks_mu_star", max(mu_star, 0.0) ** 2 / 4.0 if complete else None,
                            f"Brooks-type bound lambda0_ess <= mu_*^2/4{note}", applicability, LAMBDA0_ESS))
    return bounds


def bethe_ball_volume(beta: int, n: int) -> float:
    """vol_o(n) on the equilateral T_beta."""
    return beta * ((beta - 1) ** n - 1) / (beta - 2)


def geometric_antitree_ball_volume(beta: int, n: int) -> float:
    """vol_o(n) on the equilateral antitree A_beta."""
    return beta * (beta ** (2 * n) - 1) / (beta ** 2 - 1)


def lower_envelope_geometric_antitree(beta: int, r: float) -> float:
    """A lower bound for vol_*(r) on A_beta."""
    return (beta ** (2 * math.floor(r) + 1) - beta) / (beta ** 4 - 1)


def volume_csv(table: BallVolumeTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["r", "vol", "log_vol_over_r", "censored"])
    for r, vol, censored in zip(table.radii, table.volumes, table.censored):
        ratio = math.log(vol) / r if vol > 0 and r > 0 else float("nan")
        writer.writerow([repr(float(r)), repr(float(vol)), repr(ratio), int(censored)])
    return buffer.getvalue()
