"""Test metric ball volumes, the growth rate estimates and the Brooks-type ceilings.
"""

import math
import unittest

import numpy as np

from spectralbounds.checks import HEURISTIC, INAPPLICABLE
from spectralbounds.generators import antitree, bethe, geometric_antitree, sparse_tree
from spectralbounds.volume import (Center, InsufficientRadiusError, ball_volume, ball_volume_table, ball_volumes,
                                   bethe_ball_volume, brooks_upper, discrete_ball_weights,
                                   geometric_antitree_ball_volume, lower_envelope_geometric_antitree, mu_d_estimate,
                                   mu_estimate, mu_star_estimate, valid_radius, volume_csv)

from .utils import single_edge


class TestBalls(unittest.TestCase):
    def test_centre_inside_edge(self):
        g = single_edge(1.0)
        center = Center.midpoint(g, 0)
        self.assertAlmostEqual(ball_volume(g, center, 0.3), 0.6, places=14)
        assert ball_volume(g, center, 2.0) == 1.0

    def test_bethe_balls(self):
        g = bethe(3, 5)
        root = Center.at_vertex(g.root)
        volumes = ball_volumes(g, root, [1.0, 1.5, 2.0, 3.0, 4.0])
        assert volumes.tolist() == [3.0, 6.0, 9.0, 21.0, 45.0]
        for n in range(1, 5):
            assert ball_volume(g, root, float(n)) == bethe_ball_volume(3, n)

    def test_geometric_antitree_balls(self):
        g = geometric_antitree(2, 4)
        for n in range(1, 4):
            assert ball_volume(g, Center.at_vertex(g.root), float(n)) == geometric_antitree_ball_volume(2, n)
        assert geometric_antitree_ball_volume(2, 2) == 10.0

    def test_sparse_tree_pendant_bundles(self):
        g = sparse_tree(16)
        assert ball_volume(g, Center.at_vertex(g.root), 17.0) == 66094.0

    def test_negative_radius(self):
        with self.assertRaises(ValueError):
            ball_volumes(bethe(3, 2), Center.at_vertex(0), [-1.0])

    def test_valid_radius_and_censoring(self):
        g = bethe(3, 4)
        assert valid_radius(g, Center.at_vertex(g.root)) == 4.0
        v = int(np.flatnonzero(g.sphere == 1)[0])
        assert valid_radius(g, Center.at_vertex(v)) == 3.0
        assert valid_radius(single_edge(), Center.at_vertex(0)) == math.inf

        table = ball_volume_table(bethe(3, 3), Center.at_vertex(0), [1.0, 2.0, 3.0, 4.0])
        assert table.valid_radius == 3.0
        assert table.censored.tolist() == [False, False, False, True]
        assert table.to_dict()["center"] == "vertex:0"

    def test_discrete_weights(self):
        g = bethe(3, 3)
        assert discrete_ball_weights(g, g.root, [1.0, 1.5]).tolist() == [3.0, 12.0]

    def test_csv(self):
        table = ball_volume_table(bethe(3, 3), Center.at_vertex(0), [1.0, 4.0])
        lines = volume_csv(table).splitlines()
        assert lines[0] == "r,vol,log_vol_over_r,censored"
        assert lines[1] == f"1.0,3.0,{math.log(3.0)!r},0"
        assert lines[2].endswith(",1")


class TestCenter(unittest.TestCase):
    def setUp(self):
        self.g = bethe(3, 2)

    def test_parse(self):
        assert Center.parse("root", self.g) == Center.at_vertex(0)
        assert Center.parse("vertex:3", self.g) == Center(vertex=3)
        assert Center.parse("edge:2", self.g) == Center(edge=2, offset=0.5)
        assert Center.parse("edge:2:0.25", self.g) == Center(edge=2, offset=0.25)
        assert Center.parse("edge:2:0.25", self.g).label() == "edge:2:0.25"

    def test_parse_errors(self):
        with self.assertRaises(ValueError):
            Center.parse("edge:2:5", self.g)
        with self.assertRaises(ValueError):
            Center.parse("face:1", self.g)
        with self.assertRaises(KeyError):
            Center.parse("vertex:999", self.g)


class TestGrowth(unittest.TestCase):
    def test_geometric_antitree(self):
        estimate = mu_estimate(geometric_antitree(2, 8))
        assert abs(estimate.mu - 2.0 * math.log(2.0)) < 0.1 * 2.0 * math.log(2.0)
        assert estimate.table.valid_radius == 8.0
        assert not estimate.discrete

    def test_harmonic_antitree(self):
        # Spheres at distance H_n with n^2/2 volume: growth rate 2.
        estimate = mu_estimate(antitree(1, 1.0, 80))
        assert 1.8 < estimate.mu < 2.2

    def test_discrete_bethe(self):
        estimate = mu_d_estimate(bethe(3, 8))
        assert estimate.discrete
        assert 0.4 < estimate.mu < 1.0
        assert set(estimate.to_dict()) >= {"mu", "slope", "sequence", "volumes", "censored"}

    def test_sparse_tree_at_radius(self):
        estimate = mu_estimate(sparse_tree(16), radius=17.0)
        assert estimate.table.radii[-1] == 17.0
        assert estimate.table.censored[-1]
        self.assertAlmostEqual(estimate.at_radius, math.log(66094.0) / 17.0, places=12)
        assert abs(estimate.at_radius - math.log(2.0)) < 0.1 * math.log(2.0)
        assert estimate.to_dict()["at_radius"] == estimate.at_radius
        assert mu_estimate(sparse_tree(16)).at_radius is None

    def test_discrete_at_radius(self):
        estimate = mu_d_estimate(bethe(3, 4), radius=6.0)
        self.assertAlmostEqual(estimate.at_radius, math.log(90.0) / 6.0, places=12)
        with self.assertRaises(InsufficientRadiusError):
            mu_estimate(bethe(3, 4), radius=0.5)

    def test_insufficient_radius(self):
        with self.assertRaises(InsufficientRadiusError):
            mu_estimate(bethe(3, 1))
        with self.assertRaises(InsufficientRadiusError):
            mu_estimate(bethe(3, 3), num=3)


class TestStarVolume(unittest.TestCase):
    def test_sparse_tree_witness(self):
        estimate = mu_star_estimate(sparse_tree(12), r_probe=3.0)
        assert estimate.witness == Center.at_vertex(9)
        assert estimate.min_ratio == 522.0 / 514.0
        assert not estimate.partial
        assert estimate.to_dict()["witness"] == "vertex:9"

    def test_budget(self):
        estimate = mu_star_estimate(sparse_tree(12), r_probe=3.0, budget=10)
        assert estimate.partial
        assert estimate.sampled == 10

    def test_geometric_antitree_envelope(self):
        estimate = mu_star_estimate(geometric_antitree(2, 6), r_probe=2.0, num=3)
        assert estimate.min_ratio >= lower_envelope_geometric_antitree(2, 2.0)

    def test_probe_radius(self):
        with self.assertRaises(ValueError):
            mu_star_estimate(bethe(3, 3), r_probe=0.5)


class TestBrooks(unittest.TestCase):
    def test_values(self):
        bounds = brooks_upper(2.0, 1.0)
        assert [b.value for b in bounds] == [1.0, 0.25]
        assert all(b.applicability == HEURISTIC for b in bounds)
        assert len(brooks_upper(2.0, float("nan"))) == 1

    def test_incomplete(self):
        bounds = brooks_upper(2.0, 1.0, complete=False)
        assert all(b.value is None and b.applicability == INAPPLICABLE for b in bounds)
