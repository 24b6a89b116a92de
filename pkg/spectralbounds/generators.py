"""Truncations of the standard example families: Bethe lattices, antitrees, the sparse tree and ℤ^d.

Every generator numbers the root 0, orders vertices sphere by sphere, orients edges from the
smaller to the larger sphere, and marks the last sphere as frontier (with Dirichlet condition).
"""

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from spectralbounds.graph import DIRICHLET, KIRCHHOFF, NEUMANN, CONDITIONS, MetricGraph

EDGE_BUDGET = 10**7

BETHE = "bethe"
ANTITREE = "antitree"
GEOMETRIC_ANTITREE = "geometric_antitree"
SPARSE_TREE = "sparse_tree"
LATTICE = "lattice"
FAMILIES = (BETHE, ANTITREE, GEOMETRIC_ANTITREE, SPARSE_TREE, LATTICE)

LengthRule = Union[float, Sequence[float], Callable[[int], float]]


class EdgeBudgetError(Exception):
    pass


def _check_budget(edges: int, budget: int, family: str):
    if edges > budget:
        raise EdgeBudgetError(f"{family} truncation needs {edges} edges, more than the budget of {budget}.")


def _per_sphere_lengths(rule: LengthRule, depth: int) -> np.ndarray:
    """Lengths of the edges leaving sphere n, for n = 0..depth-1."""
    if callable(rule):
        lengths = np.array([float(rule(n)) for n in range(depth)])
    elif np.isscalar(rule):
        lengths = np.full(depth, float(rule))
    else:
        lengths = np.asarray(rule, dtype=float)
        if len(lengths) < depth:
            raise ValueError(f"Length sequence has {len(lengths)} entries; depth {depth} needs {depth}.")
        lengths = lengths[:depth]
    if not np.all(np.isfinite(lengths) & (lengths > 0)):
        raise ValueError("Edge lengths must be finite and positive.")
    return lengths


def _conditions(ambient_degree: np.ndarray, frontier: np.ndarray, dirichlet_loose_ends: bool) -> np.ndarray:
    condition = np.full(len(frontier), CONDITIONS.index(KIRCHHOFF), dtype=np.int8)
    loose = (ambient_degree == 1) & ~frontier
    condition[loose] = CONDITIONS.index(DIRICHLET if dirichlet_loose_ends else NEUMANN)
    condition[frontier] = CONDITIONS.index(DIRICHLET)
    return condition


#
# Family description
#

@dataclass(frozen=True)
class FamilySpec:
    """A generator family with its parameters; ``build()`` produces the truncation.

    Fields that do not apply to the family are left as None.
    """
    family: str
    depth: int
    beta: Optional[int] = None
    q: Optional[int] = None
    s: Optional[float] = None
    dim: Optional[int] = None
    length: float = 1.0
    sizes: Optional[Tuple[int, ...]] = None
    lengths: Optional[Tuple[float, ...]] = None
    dirichlet_pendants: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"Unknown family '{self.family}'; expected one of {', '.join(FAMILIES)}.")
        if self.depth < 1:
            raise ValueError(f"Depth must be at least 1, not {self.depth}.")

    def build(self, edge_budget: int = EDGE_BUDGET) -> MetricGraph:
        if self.family == BETHE:
            lengths = self.lengths if self.lengths is not None else self.length
            return bethe(self.beta, self.depth, lengths, edge_budget=edge_budget)
        if self.family == ANTITREE:
            return antitree(self.q if self.q is not None else 1, self.s if self.s is not None else 0.0, self.depth,
                            sizes=self.sizes, lengths=self.lengths, edge_budget=edge_budget)
        if self.family == GEOMETRIC_ANTITREE:
            return geometric_antitree(self.beta, self.depth, edge_budget=edge_budget)
        if self.family == SPARSE_TREE:
            return sparse_tree(self.depth, dirichlet_pendants=self.dirichlet_pendants, edge_budget=edge_budget)
        return lattice(self.dim, self.depth, self.length, edge_budget=edge_budget)

    def at_depth(self, depth: int) -> "FamilySpec":
        return dataclasses.replace(self, depth=depth)

    @property
    def finite_volume(self) -> Optional[bool]:
        """Whether the infinite graph has finite total length (None when it depends on user sequences)."""
        if self.family == ANTITREE:
            if self.sizes is not None or self.lengths is not None:
                return None
            return self.s > 2 * self.q + 1
        return False

    def to_dict(self) -> dict:
        record = {key: value for key, value in dataclasses.asdict(self).items() if value is not None}
        for key in ("sizes", "lengths"):
            if key in record:
                record[key] = list(record[key])
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "FamilySpec":
        record = dict(record)
        for key in ("sizes", "lengths"):
            if record.get(key) is not None:
                record[key] = tuple(record[key])
        return cls(**record)


#
# Bethe lattices
#

def bethe_sphere_sizes(beta: int, depth: int) -> np.ndarray:
    sizes = np.ones(depth + 1, dtype=np.int64)
    if depth >= 1:
        sizes[1:] = beta * (beta - 1) ** np.arange(depth, dtype=np.int64)
    return sizes


def bethe(beta: int, depth: int, lengths: LengthRule = 1.0, edge_budget: int = EDGE_BUDGET) -> MetricGraph:
    """The regular tree T_beta truncated at ``depth``.

    :param lengths: a constant, a per-sphere sequence or a callable n -> length of the edges
        between spheres n and n+1.
    """
    if beta < 3:
        raise ValueError(f"Bethe lattices need beta >= 3, not {beta}.")
    if depth < 1:
        raise ValueError(f"Depth must be at least 1, not {depth}.")
    sizes = bethe_sphere_sizes(beta, depth)
    _check_budget(int(sizes.sum()) - 1, edge_budget, BETHE)
    per_sphere = _per_sphere_lengths(lengths, depth)

    starts = np.concatenate([[0], np.cumsum(sizes)])
    sphere = np.repeat(np.arange(depth + 1), sizes)
    children = np.where(sphere == 0, beta, beta - 1)[:starts[depth]]
    source = np.repeat(np.arange(starts[depth]), children)
    target = np.arange(1, starts[-1])
    length = per_sphere[sphere[source]]

    frontier = sphere == depth
    ambient_degree = np.full(len(sphere), beta)
    family = FamilySpec(BETHE, depth, beta=beta,
                        length=float(per_sphere[0]) if np.all(per_sphere == per_sphere[0]) else 1.0,
                        lengths=None if np.all(per_sphere == per_sphere[0]) else tuple(per_sphere.tolist()))
    return MetricGraph(sphere, ambient_degree, _conditions(ambient_degree, frontier, False), frontier,
                       source, target, length, family=family.to_dict())


#
# Antitrees
#

def antitree(q: int = 1, s: float = 0.0, depth: int = 1, sizes: Optional[Sequence[int]] = None,
             lengths: Optional[LengthRule] = None, edge_budget: int = EDGE_BUDGET) -> MetricGraph:
    """Antitree with spheres S_0..S_depth, complete bipartite joins between consecutive spheres.

    Defaults: s_n = (n+1)^q vertices in sphere n, and edges between S_n and S_{n+1} of length
    (n+1)^(-s). Explicit ``sizes`` must cover n = 0..depth+1, since the size of the first sphere
    beyond the truncation fixes the ambient degree of the frontier.
    """
    if depth < 1:
        raise ValueError(f"Depth must be at least 1, not {depth}.")
    default_rules = sizes is None and lengths is None
    if sizes is None:
        if q < 1 or int(q) != q:
            raise ValueError(f"Antitree exponent q must be a positive integer, not {q}.")
        if s < 0:
            raise ValueError(f"Antitree length exponent s must be nonnegative, not {s}.")
        counts = (np.arange(depth + 2, dtype=np.int64) + 1) ** int(q)
    else:
        counts = np.asarray(sizes, dtype=np.int64)
        if len(counts) < depth + 2:
            raise ValueError(f"Sphere sizes must cover spheres 0..{depth + 1}, got {len(counts)} entries.")
        counts = counts[:depth + 2]
        if counts[0] != 1 or np.any(counts < 1):
            raise ValueError("Sphere sizes must start with a single root and stay positive.")
    if lengths is None:
        lengths = (np.arange(depth, dtype=float) + 1.0) ** (-float(s))
    per_sphere = _per_sphere_lengths(lengths, depth)

    joins = counts[:depth] * counts[1:depth + 1]
    _check_budget(int(joins.sum()), edge_budget, ANTITREE)

    shown = counts[:depth + 1]
    starts = np.concatenate([[0], np.cumsum(shown)])
    sphere = np.repeat(np.arange(depth + 1), shown)

    sources, targets = [], []
    for n in range(depth):
        lower = np.arange(starts[n], starts[n + 1])
        upper = np.arange(starts[n + 1], starts[n + 2])
        sources.append(np.repeat(lower, len(upper)))
        targets.append(np.tile(upper, len(lower)))
    source = np.concatenate(sources)
    target = np.concatenate(targets)
    length = np.repeat(per_sphere, joins)

    previous = np.concatenate([[0], counts[:depth]])
    ambient_degree = (previous + counts[1:depth + 2])[sphere]
    frontier = sphere == depth

    if default_rules:
        family = FamilySpec(ANTITREE, depth, q=int(q), s=float(s))
    else:
        family = FamilySpec(ANTITREE, depth, sizes=tuple(int(c) for c in counts),
                            lengths=tuple(per_sphere.tolist()))
    return MetricGraph(sphere, ambient_degree, _conditions(ambient_degree, frontier, False), frontier,
                       source, target, length, allow_degree_two=bool(np.any(ambient_degree == 2)),
                       family=family.to_dict())


def geometric_antitree(beta: int, depth: int, edge_budget: int = EDGE_BUDGET) -> MetricGraph:
    """Equilateral antitree A_beta with sphere sizes beta^n."""
    if beta < 2:
        raise ValueError(f"Geometric antitrees need beta >= 2, not {beta}.")
    sizes = [beta ** n for n in range(depth + 2)]
    g = antitree(depth=depth, sizes=sizes, lengths=1.0, edge_budget=edge_budget)
    g.family = FamilySpec(GEOMETRIC_ANTITREE, depth, beta=beta).to_dict()
    return g


#
# The sparse tree
#

def pendant_count(n: int) -> int:
    """Number of pendant edges at spine vertex v_n: 2^(j^2) when n = j^2, otherwise one (none at v_0)."""
    if n == 0:
        return 0
    j = math.isqrt(n)
    return 2 ** n if j * j == n else 1


def sparse_tree(depth: int, dirichlet_pendants: bool = False, edge_budget: int = EDGE_BUDGET) -> MetricGraph:
    """A half-line v_0, v_1, ... of unit edges with pendant bundles; spine vertices come first in id order."""
    if depth < 1:
        raise ValueError(f"Depth must be at least 1, not {depth}: the sparse tree needs at least one edge.")
    counts = [pendant_count(n) for n in range(depth + 1)]
    _check_budget(depth + sum(counts), edge_budget, SPARSE_TREE)

    counts = np.array(counts, dtype=np.int64)
    spine = np.arange(depth + 1)
    owners = np.repeat(spine, counts)
    pendants = depth + 1 + np.arange(len(owners))

    sphere = np.concatenate([spine, owners + 1])
    source = np.concatenate([spine[:-1], owners])
    target = np.concatenate([spine[1:], pendants])
    length = np.ones(len(source))

    spine_degree = counts + 2
    spine_degree[0] = 1
    ambient_degree = np.concatenate([spine_degree, np.ones(len(owners), dtype=np.int64)])
    frontier = np.zeros(len(sphere), dtype=bool)
    frontier[depth] = True

    condition = _conditions(ambient_degree, frontier, dirichlet_pendants)
    condition[0] = CONDITIONS.index(NEUMANN)
    family = FamilySpec(SPARSE_TREE, depth, dirichlet_pendants=dirichlet_pendants)
    return MetricGraph(sphere, ambient_degree, condition, frontier, source, target, length,
                       family=family.to_dict())


#
# Lattices
#

def lattice(dim: int, radius: int, length: float = 1.0, edge_budget: int = EDGE_BUDGET) -> MetricGraph:
    """The l1-ball of the given radius in ℤ^dim, with unit steps scaled to ``length``.

    Vertices are ordered by l1-norm, then lexicographically.
    """
    if dim < 1:
        raise ValueError(f"Lattice dimension must be at least 1, not {dim}.")
    if radius < 1:
        raise ValueError(f"Radius must be at least 1, not {radius}.")
    if not (np.isfinite(length) and length > 0):
        raise ValueError(f"Lattice edge length must be positive, not {length}.")

    points = [p for p in itertools.product(range(-radius, radius + 1), repeat=dim)
              if sum(abs(c) for c in p) <= radius]
    _check_budget(dim * len(points), edge_budget, LATTICE)
    points.sort(key=lambda p: (sum(abs(c) for c in p), p))
    index = {p: i for i, p in enumerate(points)}
    norms = np.array([sum(abs(c) for c in p) for p in points])

    edges = []
    for p, i in index.items():
        for axis in range(dim):
            neighbour = p[:axis] + (p[axis] + 1,) + p[axis + 1:]
            j = index.get(neighbour)
            if j is not None:
                edges.append((i, j) if norms[i] < norms[j] else (j, i))
    edges.sort()
    source = np.array([e[0] for e in edges])
    target = np.array([e[1] for e in edges])

    frontier = norms == radius
    ambient_degree = np.full(len(points), 2 * dim)
    family = FamilySpec(LATTICE, radius, dim=dim, length=float(length))
    return MetricGraph(norms, ambient_degree, _conditions(ambient_degree, frontier, False), frontier,
                       source, target, np.full(len(edges), float(length)), allow_degree_two=(dim == 1),
                       family=family.to_dict())
