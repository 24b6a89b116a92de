"""Test the finite element and difference Laplacian eigenvalues and the piecewise-linear utilities.
"""

import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
from scipy import sparse

from spectralbounds.generators import BETHE, FamilySpec, bethe
from spectralbounds.graph import DIRICHLET, NEUMANN
from spectralbounds.spectra import (DENSE_CUTOFF, DISCRETE, QUANTUM, EmptySystemError, assemble_quantum_fem,
                                    coarea_continuous_check, discrete_to_quantum_ceiling, equilateral_transfer,
                                    export_coo, inverse_equilateral_transfer, lambda0_sequence, pl_utilities,
                                    richardson, truncation_lambda0)

from .utils import bethe_discrete_lambda0, bethe_quantum_lambda0, path, single_edge


def uniform_fem_lambda0(h: float) -> float:
    """Linear elements on the unit interval with uniform mesh h and Dirichlet ends."""
    c = math.cos(math.pi * h)
    return 6.0 / h ** 2 * (1.0 - c) / (2.0 + c)


class TestQuantum(unittest.TestCase):
    def test_single_edge_dirichlet(self):
        g = single_edge(1.0)
        coarse = truncation_lambda0(g, QUANTUM, h_target=0.1)
        fine = truncation_lambda0(g, QUANTUM, h_target=0.05)
        self.assertAlmostEqual(coarse.lambda0, uniform_fem_lambda0(0.1), places=9)
        assert coarse.lambda0 > fine.lambda0 > math.pi ** 2
        assert (coarse.lambda0 - math.pi ** 2) / (fine.lambda0 - math.pi ** 2) >= 3.5
        assert abs(fine.lambda0 - math.pi ** 2) < 1e-2 * math.pi ** 2
        assert coarse.mode == QUANTUM and coarse.h_target == 0.1

    def test_single_edge_mixed(self):
        result = truncation_lambda0(single_edge(2.0, DIRICHLET, NEUMANN), QUANTUM, h_target=0.1)
        expected = (math.pi / 4.0) ** 2
        assert abs(result.lambda0 - expected) < 1e-3 * expected

    def test_higher_eigenvalues(self):
        result = truncation_lambda0(single_edge(1.0), QUANTUM, h_target=0.05, k=2)
        assert result.eigenvalues[0] < result.eigenvalues[1]
        assert abs(result.eigenvalues[1] - 4.0 * math.pi ** 2) < 2e-2 * 4.0 * math.pi ** 2

    def test_bethe_shift_invert(self):
        g = bethe(3, 3)
        system = assemble_quantum_fem(g, 1.0 / 40)
        assert system.size > DENSE_CUTOFF
        result = truncation_lambda0(g, QUANTUM, h_target=1.0 / 40)
        expected = bethe_quantum_lambda0(3, 3)
        assert abs(result.lambda0 - expected) < 1e-3 * expected
        assert result.residual <= 1e-8

    def test_fem_node_layout(self):
        system = assemble_quantum_fem(path([1.0, 0.5]), 0.25)
        assert system.segments.tolist() == [4, 2]
        # vertices 0 and 1 are free, then 3 + 1 inner nodes
        assert system.num_vertex_nodes == 2
        assert system.size == 6

    def test_empty_and_budget(self):
        with self.assertRaises(EmptySystemError):
            truncation_lambda0(single_edge(1.0), QUANTUM, h_target=2.0)
        with self.assertRaises(ValueError):
            truncation_lambda0(bethe(3, 3), QUANTUM, h_target=1e-3, node_budget=1000)
        with self.assertRaises(ValueError):
            truncation_lambda0(bethe(3, 3), "wave")


class TestDiscrete(unittest.TestCase):
    def test_bethe(self):
        for depth in (2, 3, 5):
            result = truncation_lambda0(bethe(3, depth), DISCRETE)
            self.assertAlmostEqual(result.lambda0, bethe_discrete_lambda0(3, depth), places=9)
            assert result.h_target is None

    def test_all_dirichlet(self):
        with self.assertRaises(EmptySystemError):
            truncation_lambda0(single_edge(1.0), DISCRETE)

    def test_sequence_is_monotone(self):
        result = lambda0_sequence(FamilySpec(BETHE, 2, beta=3), [2, 3, 4], DISCRETE)
        assert result.monotone
        assert [depth for depth, _ in result.monotone_history] == [2, 3, 4]
        values = [value for _, value in result.monotone_history]
        assert values[0] > values[1] > values[2]
        self.assertAlmostEqual(result.lambda0, bethe_discrete_lambda0(3, 4), places=9)
        assert result.depth == 4
        with self.assertRaises(ValueError):
            lambda0_sequence(FamilySpec(BETHE, 2, beta=3), [3, 2], DISCRETE)

    def test_quantum_sequence_shares_mesh(self):
        result = lambda0_sequence(FamilySpec(BETHE, 2, beta=3), [2, 3], QUANTUM)
        assert result.monotone
        assert result.h_target == 1.0 / 20


class TestTransfer(unittest.TestCase):
    def test_round_trip_values(self):
        self.assertAlmostEqual(equilateral_transfer(math.pi ** 2 / 4.0), 1.0, places=15)
        self.assertAlmostEqual(inverse_equilateral_transfer(1.0), math.pi ** 2 / 4.0, places=15)
        with self.assertRaises(ValueError):
            equilateral_transfer(10.0)
        with self.assertRaises(ValueError):
            inverse_equilateral_transfer(2.5)

    def test_truncation_agrees(self):
        g = bethe(3, 2)
        quantum = truncation_lambda0(g, QUANTUM).lambda0
        discrete = truncation_lambda0(g, DISCRETE).lambda0
        assert abs(equilateral_transfer(quantum) - discrete) < 1e-3 * discrete
        assert quantum <= 6.0 * discrete

    def test_fine_mesh_depth_eight(self):
        g = bethe(3, 8)
        quantum = truncation_lambda0(g, QUANTUM, 0.01).lambda0
        discrete = truncation_lambda0(g, DISCRETE).lambda0
        assert abs(discrete - equilateral_transfer(quantum)) <= 1e-3

    def test_ceilings(self):
        bounds = discrete_to_quantum_ceiling(0.1)
        assert [b.name for b in bounds] == ["six_lambda_discrete"]
        self.assertAlmostEqual(bounds[0].value, 0.6, places=15)
        bounds = discrete_to_quantum_ceiling(1.0, equilateral=True)
        assert [b.name for b in bounds] == ["six_lambda_discrete", "equilateral_transfer"]
        self.assertAlmostEqual(bounds[1].value, math.pi ** 2 / 4.0, places=15)


class TestPiecewiseLinear(unittest.TestCase):
    def setUp(self):
        # m = [1, 3, 2]
        self.g = path([1.0, 2.0])

    def test_norms(self):
        for f in ([1.0, 1.0, 0.0], [1j, 1j, 0.0], {0: 1.0, 1: 1.0, 2: 0.0}):
            norms = pl_utilities(self.g, f)
            self.assertAlmostEqual(norms.l2_norm_sq, 5.0 / 3.0, places=14)
            self.assertAlmostEqual(norms.energy, 0.5, places=14)
            self.assertAlmostEqual(norms.l2m_norm_sq, 4.0, places=14)

    def test_invalid_values(self):
        with self.assertRaises(ValueError):
            pl_utilities(self.g, [1.0, 1.0, 1.0])
        with self.assertRaises(ValueError):
            pl_utilities(self.g, [1.0, 1.0])
        with self.assertRaises(ValueError):
            pl_utilities(self.g, {0: 1.0})

    def test_coarea(self):
        check = coarea_continuous_check(self.g, [0.5, -1.0, 0.0])
        self.assertAlmostEqual(check.lhs, 2.5, places=14)
        self.assertAlmostEqual(check.lhs_squared, 2.25, places=14)
        assert check.gap < 1e-12

    def test_richardson(self):
        self.assertAlmostEqual(richardson(1.1, 1.025), 1.0, places=14)
        coarse = uniform_fem_lambda0(0.1)
        fine = uniform_fem_lambda0(0.05)
        assert abs(richardson(coarse, fine) - math.pi ** 2) < abs(fine - math.pi ** 2) / 10


class TestExport(unittest.TestCase):
    def test_coo(self):
        matrix = sparse.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
        with tempfile.TemporaryDirectory() as directory:
            target = Path(directory) / "stiffness.coo"
            export_coo(matrix, target)
            assert target.read_text().splitlines() == ["0 0 2.0", "0 1 -1.0", "1 0 -1.0", "1 1 2.0"]
