"""Test weighted graphs, intrinsic edge weights and the discrete Cheeger estimate.
"""

import unittest

import numpy as np

from spectralbounds.generators import bethe
from spectralbounds.graph import GraphValidationError
from spectralbounds.isoperimetry import EnumerationBudgetError
from spectralbounds.spectra import DISCRETE, truncation_lambda0
from spectralbounds.weighted import (NotIntrinsicError, WeightedGraph, alpha_weighted, cheeger_lower_discrete,
                                     coarea_discrete_check, is_intrinsic, weighted_lambda0)

from .utils import path


class TestWeightedGraph(unittest.TestCase):
    def test_from_metric(self):
        w = WeightedGraph.from_metric(path([1.0, 2.0]))
        assert w.m.tolist() == [1.0, 3.0, 2.0]
        assert w.b.tolist() == [1.0, 0.5]
        assert w.d.tolist() == [1.0, 2.0]
        assert w.dirichlet.tolist() == [False, False, True]
        check = is_intrinsic(w)
        assert check.intrinsic
        assert np.allclose(check.slack, 0.0)

    def test_validation(self):
        with self.assertRaisesRegex(GraphValidationError, "positive weight m"):
            WeightedGraph([1.0, 0.0], [0], [1], [1.0])
        with self.assertRaisesRegex(GraphValidationError, "loops"):
            WeightedGraph([1.0, 1.0], [0], [0], [1.0])
        with self.assertRaisesRegex(GraphValidationError, "same vertices"):
            WeightedGraph([1.0, 1.0], [0, 1], [1, 0], [1.0, 1.0])
        with self.assertRaisesRegex(GraphValidationError, "every edge"):
            WeightedGraph([1.0, 1.0], [0], [1], [1.0], d=[1.0, 2.0])

    def test_needs_d(self):
        w = WeightedGraph([1.0, 1.0], [0], [1], [1.0], dirichlet=[False, True])
        with self.assertRaises(ValueError):
            alpha_weighted(w)
        with self.assertRaises(ValueError):
            is_intrinsic(w)


class TestAlpha(unittest.TestCase):
    def test_path(self):
        w = WeightedGraph.from_metric(path([1.0, 1.0, 1.0]))
        report = alpha_weighted(w)
        self.assertAlmostEqual(report.value_upper, 0.2, places=14)
        assert report.witness.vertex_ids == frozenset({0, 1, 2})
        assert report.exhaustive_within_cap
        assert report.subsets_evaluated == 7

    def test_bethe_brute_force(self):
        w = WeightedGraph.from_metric(bethe(3, 3))
        self.assertAlmostEqual(alpha_weighted(w, cap=6).value_upper, 4.0 / 9.0, places=12)
        self.assertAlmostEqual(alpha_weighted(w).value_upper, 0.4, places=12)

    def test_bethe_connected_growth(self):
        w = WeightedGraph.from_metric(bethe(3, 4))
        report = alpha_weighted(w, cap=4)
        self.assertAlmostEqual(report.value_upper, 0.5, places=12)
        assert len(report.witness.vertex_ids) == 4
        with self.assertRaises(EnumerationBudgetError):
            alpha_weighted(w, cap=4, budget=10)
        assert not alpha_weighted(w, cap=4, budget=10, strict=False).exhaustive_within_cap

    def test_removal(self):
        w = WeightedGraph.from_metric(bethe(3, 3))
        report = alpha_weighted(w, removal=[0])
        self.assertAlmostEqual(report.value_upper, 5.0 / 9.0, places=12)
        assert 0 not in report.witness.vertex_ids

    def test_no_candidates(self):
        w = WeightedGraph([1.0, 1.0], [0], [1], [1.0], d=[1.0], dirichlet=[True, True])
        with self.assertRaises(ValueError):
            alpha_weighted(w)


class TestCheeger(unittest.TestCase):
    def test_lower_bound(self):
        w = WeightedGraph.from_metric(path([1.0, 1.0, 1.0]))
        floor = cheeger_lower_discrete(w)
        self.assertAlmostEqual(floor, 0.02, places=14)
        assert floor <= weighted_lambda0(w).lambda0

    def test_matches_difference_laplacian(self):
        g = bethe(3, 3)
        self.assertAlmostEqual(weighted_lambda0(WeightedGraph.from_metric(g)).lambda0,
                               truncation_lambda0(g, DISCRETE).lambda0, places=12)

    def test_not_intrinsic(self):
        w = WeightedGraph([1.0, 1.0], [0], [1], [1.0], d=[2.0], dirichlet=[False, True])
        assert not is_intrinsic(w).intrinsic
        with self.assertRaises(NotIntrinsicError):
            cheeger_lower_discrete(w)


class TestCoarea(unittest.TestCase):
    def test_identities(self):
        w = WeightedGraph.from_metric(path([1.0, 2.0]))
        check = coarea_discrete_check(w, [2.0, 1.0, 0.0])
        assert check.lhs_mass == 5.0
        assert check.lhs_edges == 3.0
        assert check.gap < 1e-12

    def test_negative_function(self):
        w = WeightedGraph.from_metric(path([1.0, 2.0]))
        with self.assertRaises(ValueError):
            coarea_discrete_check(w, [1.0, -1.0, 0.0])
