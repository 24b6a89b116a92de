"""Test boundary degrees, subgraph enumeration and the isoperimetric searches.
"""

import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from spectralbounds.curvature import curvature_profile
from spectralbounds.generators import antitree, bethe, lattice
from spectralbounds.graph import NEUMANN, EmptyRangeError, length_extremes
from spectralbounds.isoperimetry import (ALPHA_COMB, ALPHA_D, ALPHA_METRIC, BestTracker, DisconnectedSubgraphError,
                                         EnumerationBudgetError, alpha_comb_exhaustive, alpha_d_exhaustive,
                                         alpha_exhaustive, ball_ratios, boundary_degree, boundary_edge_classes,
                                         check_connection_inequalities, connected_subsets, essential_csv,
                                         essential_iso_sequences)

from .utils import path, star


class TestBoundaryDegree(unittest.TestCase):
    def test_dirichlet_star(self):
        g = star([1.0, 1.0, 1.0])
        whole = boundary_degree(g, [0, 1, 2])
        assert whole.deg_boundary == 3
        assert whole.ratio == 1.0
        single = boundary_degree(g, [1])
        assert single.boundary_vertex_ids == frozenset({0, 2})
        assert single.ratio == 2.0

    def test_neumann_loose_ends_are_not_boundary(self):
        g = star([1.0, 2.0, 3.0], leaves=NEUMANN)
        assert boundary_degree(g, [0, 1, 2]).deg_boundary == 0
        assert boundary_degree(g, [2]).ratio == 1.0 / 3.0

    def test_disconnected(self):
        with self.assertRaises(DisconnectedSubgraphError) as context:
            boundary_degree(path([1.0, 1.0, 1.0]), [0, 2])
        assert context.exception.components == [[0, 1], [2, 3]]
        with self.assertRaises(DisconnectedSubgraphError) as context:
            boundary_degree(path([1.0] * 6), [0, 2, 3, 5])
        assert context.exception.components == [[0, 1], [2, 3, 4], [5, 6]]

    def test_cycles_are_connected(self):
        g = lattice(2, 2)
        whole = boundary_degree(g, range(g.num_edges))
        assert whole.vertex_ids == frozenset(range(g.num_vertices))
        assert whole.deg_boundary == int(np.sum(g.degree[g.frontier]))

    def test_bad_edges(self):
        g = path([1.0, 1.0])
        with self.assertRaises(KeyError):
            boundary_degree(g, [5])
        with self.assertRaises(ValueError):
            boundary_degree(g, [])

    def test_edge_classes(self):
        g = bethe(3, 2)
        witness = boundary_degree(g, range(g.num_edges))
        assert boundary_edge_classes(g, witness) == (6, 0)
        assert witness.deg_boundary == 6


class TestEnumeration(unittest.TestCase):
    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=1, max_value=6))
    def test_path_subsets_counted_once(self, n, cap):
        adjacency = {i: [j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)}
        subsets = list(connected_subsets(adjacency, cap, range(n)))
        assert len(subsets) == len(set(subsets))
        assert len(subsets) == sum(n - s + 1 for s in range(1, min(cap, n) + 1))

    def test_budget(self):
        adjacency = {i: [j for j in (i - 1, i + 1) if 0 <= j < 10] for i in range(10)}
        with self.assertRaises(EnumerationBudgetError) as context:
            list(connected_subsets(adjacency, 5, range(10), budget=7))
        assert context.exception.count == 7

    def test_tie_rule(self):
        best = BestTracker()
        best.offer(0.5, frozenset({3, 4}))
        best.offer(0.5 * (1 + 1e-14), frozenset({1, 2}))
        assert best.items == frozenset({1, 2})
        best.offer(0.5, frozenset({0, 1, 2}))
        assert best.items == frozenset({0, 1, 2})
        assert best.by_size[2][2] == frozenset({1, 2})
        assert best.by_size[3][0] == 0.5


class TestBethe(unittest.TestCase):
    def test_metric_alpha_cap_eight(self):
        report = alpha_exhaustive(bethe(3, 3), 8)
        self.assertAlmostEqual(report.value_upper, 5.0 / 7.0, places=12)
        assert report.exhaustive_within_cap
        assert report.witness.ratio == report.value_upper
        assert len(report.witness.edge_ids) == 7

    def test_small_cap(self):
        report = alpha_exhaustive(bethe(3, 4), 4)
        assert report.value_upper == 1.0
        assert len(report.best_by_size[0].edge_ids) == 1
        assert report.best_by_size[0].ratio == 2.0

    def test_ball_ratios(self):
        ratios = ball_ratios(bethe(3, 4))
        assert [n for n, _ in ratios] == [1, 2, 3, 4]
        for n, ratio in ratios:
            self.assertAlmostEqual(ratio, 2.0 ** (n - 1) / (2.0 ** n - 1), places=12)

    def test_vertex_kinds(self):
        g = bethe(3, 3)
        for search in (alpha_d_exhaustive, alpha_comb_exhaustive):
            report = search(g, 6)
            self.assertAlmostEqual(report.value_upper, 4.0 / 9.0, places=12)
            assert len(report.witness.vertex_ids) == 6
            assert not (report.witness.vertex_ids & set(range(10, g.num_vertices)))

    def test_essential_sequences(self):
        reports = essential_iso_sequences(bethe(3, 4), 2, 4)
        assert set(reports) == {ALPHA_METRIC, ALPHA_D, ALPHA_COMB}
        assert reports[ALPHA_METRIC].essential_seq == ((1, 1.0), (2, 1.0))
        csv_text = essential_csv(reports)
        assert csv_text.splitlines()[0] == "k,kind,value_upper"
        with self.assertRaises(ValueError):
            essential_iso_sequences(bethe(3, 2), 2, 4)

    def test_connection_inequalities(self):
        g = bethe(3, 4)
        reports = essential_iso_sequences(g, 1, 5)
        verdicts = check_connection_inequalities(g, reports, length_extremes(g), curvature_profile(g).K)
        assert verdicts
        failed = [v.name for v in verdicts if not v.passed]
        assert failed == [], failed

    def test_cap_ten(self):
        g = bethe(3, 4)
        report = alpha_exhaustive(g, 10)
        self.assertAlmostEqual(report.value_upper, 2.0 / 3.0, places=12)
        assert len(report.witness.edge_ids) == 9
        assert report.value_upper >= 0.5
        # Connected sets of s vertices have s + 2 boundary edges and m = 3s.
        self.assertAlmostEqual(alpha_d_exhaustive(g, 10).value_upper, 0.4, places=12)


def zero_iff_verdicts(g, k_max, cap=4):
    reports = essential_iso_sequences(g, k_max, cap, kinds=(ALPHA_METRIC,))
    verdicts = check_connection_inequalities(g, reports, length_extremes(g, range(k_max + 1)))
    return [v for v in verdicts if v.name == "alpha_zero_iff_alpha_ess_zero"]


class TestBallRatioTrends(unittest.TestCase):
    def test_bethe_shells_do_not_vanish(self):
        for depth in (5, 6, 7):
            verdicts = zero_iff_verdicts(bethe(3, depth), 2)
            assert len(verdicts) == 1 and verdicts[0].passed, depth
        verdicts = zero_iff_verdicts(bethe(3, 4), 1)
        assert len(verdicts) == 1 and verdicts[0].passed

    def test_lattices_vanish_on_both_sides(self):
        for g in (lattice(1, 6), lattice(2, 5)):
            verdicts = zero_iff_verdicts(g, 1)
            assert len(verdicts) == 1 and verdicts[0].passed

    def test_antitree(self):
        verdicts = zero_iff_verdicts(antitree(1, 1.0, 6), 1)
        assert len(verdicts) == 1 and verdicts[0].passed

    def test_needs_three_shells(self):
        assert zero_iff_verdicts(bethe(3, 3), 1) == []


class TestScaling(unittest.TestCase):
    def test_isoperimetric_constants(self):
        g = antitree(1, 1.0, 5)
        doubled = g.scaled(2.0)
        self.assertAlmostEqual(alpha_exhaustive(doubled, 3).value_upper, alpha_exhaustive(g, 3).value_upper / 2.0,
                               places=12)
        self.assertAlmostEqual(alpha_d_exhaustive(doubled, 3).value_upper,
                               alpha_d_exhaustive(g, 3).value_upper / 2.0, places=12)
        assert alpha_comb_exhaustive(doubled, 3).value_upper == alpha_comb_exhaustive(g, 3).value_upper


class TestBudgets(unittest.TestCase):
    def test_strict(self):
        g = bethe(3, 4)
        with self.assertRaises(EnumerationBudgetError):
            alpha_exhaustive(g, 6, budget=50)
        partial = alpha_exhaustive(g, 6, budget=50, strict=False)
        assert not partial.exhaustive_within_cap
        assert partial.subsets_evaluated == 50

    def test_enumeration_radius(self):
        g = antitree(1, 1.0, 6)
        report = alpha_exhaustive(g, 3, enumeration_radius=2)
        assert report.enumeration_radius == 2
        assert all(g.sphere[g.target[e]] <= 2 for e in report.witness.edge_ids)

    def test_empty_region(self):
        with self.assertRaises(EmptyRangeError):
            alpha_exhaustive(bethe(3, 2), 3, exclusion_radius=2)
        with self.assertRaises(ValueError):
            alpha_exhaustive(bethe(3, 2), 0)
