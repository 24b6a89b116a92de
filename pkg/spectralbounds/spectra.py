"""Bottom of the spectrum of finite truncations.

Two operators are assembled on a truncation with Dirichlet conditions on its Dirichlet set
(Dirichlet loose ends and the frontier):

  - the difference Laplacian, as the generalized problem L x = lambda D x with
    L[v][u] = -1/|e_uv|, L[v][v] = sum 1/|e| and D = diag(m);
  - the Kirchhoff Laplacian, by continuous piecewise-linear finite elements with consistent mass.
    Kirchhoff and Neumann conditions are the natural conditions of the form, so continuity at the
    vertices is all the assembly enforces.

Both are solved by shift-invert iteration on sparse factorizations, with a dense solver for
small systems.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse import linalg as spla

from spectralbounds.checks import APPLICABLE, HEURISTIC, LAMBDA0, Bound
from spectralbounds.generators import FamilySpec
from spectralbounds.graph import MetricGraph, vertex_weights
from spectralbounds.numerics import band_integral, relative_gap

SOLVER_TOLERANCE = 1e-8
MAX_ITERATIONS = 10_000
DENSE_CUTOFF = 500
MESH_DIVISOR = 20
NODE_BUDGET = 5_000_000

QUANTUM = "quantum"
DISCRETE = "discrete"
MODES = (QUANTUM, DISCRETE)


class SolverConvergenceError(Exception):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual!r})")
        self.residual = residual


class EmptySystemError(Exception):
    pass


#
# Assembly
#

def _free_index(g: MetricGraph) -> Tuple[np.ndarray, np.ndarray]:
    free = np.flatnonzero(~g.dirichlet)
    index = np.full(g.num_vertices, -1, dtype=np.int64)
    index[free] = np.arange(len(free))
    return free, index


@dataclass(frozen=True)
class DiscreteSystem:
    """Stiffness L and mass D of the difference Laplacian, restricted to the non-Dirichlet vertices.

    Row i belongs to vertex ``vertex_ids[i]``; ``index[v]`` is the row of v, or -1.
    """
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    vertex_ids: np.ndarray
    index: np.ndarray

    @property
    def size(self) -> int:
        return len(self.vertex_ids)


def laplacian_matrices(source: np.ndarray, target: np.ndarray, b: np.ndarray,
                       m: np.ndarray) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Unrestricted weighted Laplacian with edge weights b, and the diagonal mass of vertex weights m."""
    n = len(m)
    off = -sparse.csr_matrix((np.concatenate([b, b]), (np.concatenate([source, target]),
                                                      np.concatenate([target, source]))), shape=(n, n))
    diagonal = np.bincount(source, weights=b, minlength=n) + np.bincount(target, weights=b, minlength=n)
    return (off + sparse.diags(diagonal)).tocsr(), sparse.diags(m).tocsr()


def restrict(matrix: sparse.csr_matrix, keep: np.ndarray) -> sparse.csr_matrix:
    return matrix[keep][:, keep].tocsr()


def assemble_discrete(g: MetricGraph) -> DiscreteSystem:
    free, index = _free_index(g)
    if len(free) == 0:
        raise EmptySystemError("Every vertex carries a Dirichlet condition; the difference Laplacian has no unknowns.")
    stiffness, mass = laplacian_matrices(g.source, g.target, 1.0 / g.length, vertex_weights(g))
    return DiscreteSystem(restrict(stiffness, free), restrict(mass, free), free, index)


@dataclass(frozen=True)
class FemSystem:
    """Linear finite elements on a subdivision of every edge into segments of length at most h_target.

    Unknowns are the non-Dirichlet vertices first (in id order), then the inner nodes of edge 0,
    edge 1, and so on.
    """
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    h_target: float
    segments: np.ndarray
    vertex_index: np.ndarray
    num_vertex_nodes: int

    @property
    def size(self) -> int:
        return self.stiffness.shape[0]


def default_mesh(g: MetricGraph) -> float:
    return float(g.length.min()) / MESH_DIVISOR


def assemble_quantum_fem(g: MetricGraph, h_target: Optional[float] = None, node_budget: int = NODE_BUDGET) -> FemSystem:
    if h_target is None:
        h_target = default_mesh(g)
    if not h_target > 0:
        raise ValueError(f"The mesh size must be positive, not {h_target}.")
    free, index = _free_index(g)

    segments = np.maximum(np.ceil(g.length / h_target - 1e-9).astype(np.int64), 1)
    inner = segments - 1
    total_nodes = len(free) + int(inner.sum())
    if total_nodes == 0:
        raise EmptySystemError(f"Mesh size {h_target} leaves no unknowns between the Dirichlet vertices.")
    if total_nodes > node_budget:
        raise ValueError(f"Mesh size {h_target} needs {total_nodes} nodes, more than the budget of {node_budget}.")
    base = len(free) + np.concatenate([[0], np.cumsum(inner)[:-1]])

    owner = np.repeat(np.arange(g.num_edges), segments)
    step = np.arange(len(owner)) - np.repeat(np.cumsum(segments) - segments, segments)
    h = (g.length / segments)[owner]
    left = np.where(step == 0, index[g.source[owner]], base[owner] + step - 1)
    right = np.where(step == segments[owner] - 1, index[g.target[owner]], base[owner] + step)

    rows, cols, k_data, m_data = [], [], [], []
    for a, b, k_local, m_local in ((left, left, 1.0, 2.0), (right, right, 1.0, 2.0),
                                   (left, right, -1.0, 1.0), (right, left, -1.0, 1.0)):
        keep = (a >= 0) & (b >= 0)
        rows.append(a[keep])
        cols.append(b[keep])
        k_data.append(k_local / h[keep])
        m_data.append(m_local * h[keep] / 6.0)
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    shape = (total_nodes, total_nodes)
    stiffness = sparse.csr_matrix((np.concatenate(k_data), (rows, cols)), shape=shape)
    mass = sparse.csr_matrix((np.concatenate(m_data), (rows, cols)), shape=shape)
    return FemSystem(stiffness, mass, float(h_target), segments, index, len(free))


#
# Eigensolvers
#

@dataclass(frozen=True)
class SpectralResult:
    lambda0: float
    residual: float
    size: int
    mode: Optional[str] = None
    depth: Optional[int] = None
    h_target: Optional[float] = None
    eigenvalues: Tuple[float, ...] = ()
    monotone_history: Tuple[Tuple[int, float], ...] = ()
    monotone: Optional[bool] = None
    vector: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "residual": self.residual,
            "size": self.size,
            "mode": self.mode,
            "depth": self.depth,
            "h_target": self.h_target,
            "eigenvalues": list(self.eigenvalues),
            "monotone_history": [list(item) for item in self.monotone_history],
            "monotone": self.monotone,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "SpectralResult":
        record = dict(record)
        record["eigenvalues"] = tuple(record.get("eigenvalues", ()))
        record["monotone_history"] = tuple(tuple(item) for item in record.get("monotone_history", ()))
        return cls(**record)


def _residual(A, B, x: np.ndarray, value: float) -> float:
    bx = B @ x
    return float(np.linalg.norm(A @ x - value * bx) / np.linalg.norm(bx))


def _dense(A, B, k: int) -> Tuple[np.ndarray, np.ndarray]:
    a = A.toarray() if sparse.issparse(A) else np.asarray(A, dtype=float)
    b = B.toarray() if sparse.issparse(B) else np.asarray(B, dtype=float)
    return scipy.linalg.eigh(a, b, subset_by_index=[0, k - 1])


def _factorize(A, B, tol: float):
    for sigma in (0.0, -tol):
        try:
            return sigma, spla.splu(sparse.csc_matrix(A - sigma * B))
        except RuntimeError:
            continue
    raise SolverConvergenceError("Factorization of the shifted stiffness matrix failed", float("nan"))


def _real_vector(x: np.ndarray) -> np.ndarray:
    pivot = x[np.argmax(np.abs(x))]
    return np.real(x * np.conj(pivot) / abs(pivot))


def _polish(A, B, lu, x: np.ndarray, tol: float, max_iterations: int) -> Tuple[float, np.ndarray, float]:
    """Inverse iteration with Rayleigh quotients until the residual drops below ``tol``."""
    x = x / math.sqrt(x @ (B @ x))
    value = float(x @ (A @ x))
    residual = _residual(A, B, x, value)
    iterations = 0
    while residual > tol and iterations < max_iterations:
        x = lu.solve(B @ x)
        x /= math.sqrt(x @ (B @ x))
        value = float(x @ (A @ x))
        residual = _residual(A, B, x, value)
        iterations += 1
    if residual > tol:
        raise SolverConvergenceError(f"Inverse iteration did not converge in {max_iterations} steps", residual)
    return value, x, residual


def smallest_eigenvalues(A, B, k: int = 1, tol: float = SOLVER_TOLERANCE,
                         max_iterations: int = MAX_ITERATIONS) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The k smallest eigenvalues of A x = lambda B x, with eigenvectors (as columns) and residuals.

    Systems below DENSE_CUTOFF unknowns are solved densely. Larger ones use shift-invert Arnoldi on
    (A - sigma B)^-1 B with a B-normalized all-ones start vector; the smallest pair is then polished
    by inverse iteration so that its residual ||Ax - lambda Bx|| / ||Bx|| is at most ``tol``.
    """
    n = A.shape[0]
    if n == 0:
        raise EmptySystemError("The eigenvalue problem has no unknowns.")
    if not 1 <= k <= n:
        raise ValueError(f"Cannot compute {k} eigenvalues of a system with {n} unknowns.")

    if n < DENSE_CUTOFF or k >= n - 1:
        values, vectors = _dense(A, B, k)
        residuals = np.array([_residual(A, B, vectors[:, i], values[i]) for i in range(k)])
        if residuals[0] > tol:
            raise SolverConvergenceError("Dense eigensolve missed the residual tolerance", float(residuals[0]))
        return values, vectors, residuals

    A, B = sparse.csr_matrix(A), sparse.csr_matrix(B)
    sigma, lu = _factorize(A, B, tol)
    operator = spla.LinearOperator(A.shape, matvec=lambda x: lu.solve(B @ x), dtype=float)
    start = np.ones(n) / math.sqrt(B.sum())
    try:
        inverted, raw = spla.eigs(operator, k=k, which="LM", v0=start, tol=tol * 1e-2, maxiter=max_iterations)
    except spla.ArpackNoConvergence as error:
        raise SolverConvergenceError("Shift-invert iteration did not converge", float("nan")) from error

    values = np.real(1.0 / inverted) + sigma
    order = np.argsort(values)
    values = values[order]
    vectors = np.column_stack([_real_vector(raw[:, i]) for i in order])
    values[0], vectors[:, 0], _ = _polish(A, B, lu, vectors[:, 0], tol, max_iterations)
    residuals = np.array([_residual(A, B, vectors[:, i], values[i]) for i in range(k)])
    return values, vectors, residuals


def smallest_eigenvalue(A, B, tol: float = SOLVER_TOLERANCE, max_iterations: int = MAX_ITERATIONS) -> SpectralResult:
    values, vectors, residuals = smallest_eigenvalues(A, B, 1, tol, max_iterations)
    return SpectralResult(float(values[0]), float(residuals[0]), A.shape[0], eigenvalues=(float(values[0]),),
                          vector=vectors[:, 0])


def truncation_lambda0(g: MetricGraph, mode: str = QUANTUM, h_target: Optional[float] = None, k: int = 1,
                       tol: float = SOLVER_TOLERANCE, node_budget: int = NODE_BUDGET) -> SpectralResult:
    """lambda0 of one truncation, for the Kirchhoff Laplacian (``quantum``) or the difference Laplacian."""
    if mode == QUANTUM:
        system = assemble_quantum_fem(g, h_target, node_budget)
        h_target = system.h_target
    elif mode == DISCRETE:
        system = assemble_discrete(g)
        h_target = None
    else:
        raise ValueError(f"Unknown mode '{mode}'; expected one of {', '.join(MODES)}.")
    values, vectors, residuals = smallest_eigenvalues(system.stiffness, system.mass, k, tol)
    return SpectralResult(float(values[0]), float(residuals[0]), system.size, mode, g.depth, h_target,
                          tuple(float(v) for v in values), vector=vectors[:, 0])


def lambda0_sequence(spec: FamilySpec, depths: Sequence[int], mode: str = QUANTUM, h_target: Optional[float] = None,
                     tol: float = SOLVER_TOLERANCE, node_budget: int = NODE_BUDGET,
                     verbose: bool = False) -> SpectralResult:
    """lambda0 of the truncations at increasing depths, which are nested and therefore nonincreasing.

    One mesh size (from the deepest truncation unless given) is used throughout. The result is the
    deepest value, with ``monotone_history`` and the ``monotone`` flag (checked with 10 * tol slack).
    """
    depths = list(depths)
    if not depths or any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError(f"Depths must be a nonempty increasing sequence, not {depths}.")
    graphs = [spec.at_depth(depth).build() for depth in depths]
    if mode == QUANTUM and h_target is None:
        h_target = default_mesh(graphs[-1])

    history, result = [], None
    for depth, g in zip(depths, graphs):
        result = truncation_lambda0(g, mode, h_target, tol=tol, node_budget=node_budget)
        history.append((depth, result.lambda0))
        if verbose:
            print(f"{mode} lambda0 at depth {depth}: {result.lambda0!r} ({result.size} unknowns)")
    values = [value for _, value in history]
    monotone = all(b <= a + 10 * tol * max(1.0, abs(a)) for a, b in zip(values, values[1:]))
    return SpectralResult(result.lambda0, result.residual, result.size, mode, depths[-1], result.h_target,
                          result.eigenvalues, tuple(history), monotone, result.vector)


#
# Equilateral graphs
#

def equilateral_transfer(lambda_quantum: float) -> float:
    """lambda0 of the difference Laplacian from lambda0 of the Kirchhoff Laplacian: 1 - cos(sqrt(lambda))."""
    if not 0.0 <= lambda_quantum <= math.pi ** 2:
        raise ValueError(f"The transfer is defined on [0, pi^2], not at {lambda_quantum!r}.")
    return 1.0 - math.cos(math.sqrt(lambda_quantum))


def inverse_equilateral_transfer(lambda_discrete: float) -> float:
    if not 0.0 <= lambda_discrete <= 2.0:
        raise ValueError(f"The inverse transfer is defined on [0, 2], not at {lambda_discrete!r}.")
    return math.acos(1.0 - lambda_discrete) ** 2


def discrete_to_quantum_ceiling(lambda_discrete: float, equilateral: bool = False) -> List[Bound]:
    """Upper bounds for the Kirchhoff lambda0 from the difference Laplacian's lambda0."""
    bounds = [Bound("six_lambda_discrete", 6.0 * lambda_discrete,
                    "piecewise-linear test functions: lambda0(H) <= 6 lambda0(h)", APPLICABLE, LAMBDA0)]
    if equilateral and 0.0 <= lambda_discrete <= 2.0:
        bounds.append(Bound("equilateral_transfer", inverse_equilateral_transfer(lambda_discrete),
                            "equilateral graphs: lambda0(h) = 1 - cos(sqrt(lambda0(H))), checked on truncations",
                            HEURISTIC, LAMBDA0))
    return bounds


#
# Piecewise-linear functions
#

@dataclass(frozen=True)
class PiecewiseLinearNorms:
    l2_norm_sq: float
    energy: float
    l2m_norm_sq: float


def _vertex_values(g: MetricGraph, f: Union[Mapping[int, complex], Sequence[complex], np.ndarray]) -> np.ndarray:
    if isinstance(f, Mapping):
        missing = [v for v in range(g.num_vertices) if v not in f]
        if missing:
            raise ValueError(f"Vertex values missing for vertices {missing[:10]}.")
        f = [f[v] for v in range(g.num_vertices)]
    values = np.asarray(f)
    if values.shape != (g.num_vertices,):
        raise ValueError(f"Expected {g.num_vertices} vertex values, got shape {values.shape}.")
    return values


def pl_utilities(g: MetricGraph, f) -> PiecewiseLinearNorms:
    """Exact norms of the function that is linear on every edge with vertex values f.

    f may be complex and must vanish on Dirichlet vertices.
    """
    values = _vertex_values(g, f)
    bad = np.flatnonzero(g.dirichlet & (values != 0))
    if len(bad):
        raise ValueError(f"Vertex values must vanish on Dirichlet vertices {bad[:10].tolist()}.")
    a, b = values[g.source], values[g.target]
    l2 = np.sum(g.length * (np.abs(a) ** 2 + np.real(a * np.conj(b)) + np.abs(b) ** 2)) / 3.0
    energy = np.sum(np.abs(a - b) ** 2 / g.length)
    l2m = np.sum(vertex_weights(g) * np.abs(values) ** 2)
    return PiecewiseLinearNorms(float(l2), float(energy), float(l2m))


@dataclass(frozen=True)
class CoareaCheck:
    """Both sides of the co-area formula for h = f and h = f^2 on a piecewise-linear f."""
    lhs: float
    rhs: float
    lhs_squared: float
    rhs_squared: float

    @property
    def gap(self) -> float:
        return max(relative_gap(self.lhs, self.rhs), relative_gap(self.lhs_squared, self.rhs_squared))


def coarea_continuous_check(g: MetricGraph, f) -> CoareaCheck:
    """int |h'| against int #(boundary of {h > t}) dt.

    The right-hand sides are band integrals over the level crossings: a linear edge crosses every
    level between its end values once; for f^2 an edge on which f changes sign crosses the levels
    below each end value once, on either side of its zero.
    """
    values = np.asarray(_vertex_values(g, f), dtype=float)
    a, b = values[g.source], values[g.target]
    lhs = float(np.sum(np.abs(a - b)))
    rhs = band_integral(np.minimum(a, b), np.maximum(a, b))

    a2, b2 = a * a, b * b
    sign_change = a * b < 0
    lhs_squared = float(np.sum(np.where(sign_change, a2 + b2, np.abs(a2 - b2))))
    same = ~sign_change
    lo = np.concatenate([np.minimum(a2, b2)[same], np.zeros(2 * sign_change.sum())])
    hi = np.concatenate([np.maximum(a2, b2)[same], a2[sign_change], b2[sign_change]])
    rhs_squared = band_integral(lo, hi)
    return CoareaCheck(lhs, rhs, lhs_squared, rhs_squared)


#
# Plumbing
#

def richardson(lambda_h: float, lambda_half: float, order: int = 2) -> float:
    """Extrapolate from meshes h and h/2 for an error of order h^order."""
    factor = 2.0 ** order
    return (factor * lambda_half - lambda_h) / (factor - 1.0)


def export_coo(matrix, path: Union[str, Path]):
    """Write the nonzero entries as "row col value" lines."""
    coo = sparse.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{int(coo.row[i])} {int(coo.col[i])} {float(coo.data[i])!r}" for i in order]
    Path(path).write_text("\n".join(lines) + "\n")
