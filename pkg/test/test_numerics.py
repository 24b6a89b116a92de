"""Test the tolerance comparisons and the trend extrapolation helpers.
"""

import unittest

from spectralbounds.numerics import aitken_limit, leq, tail_fit


class TestComparisons(unittest.TestCase):
    def test_leq(self):
        assert leq(1.0, 1.0 + 1e-15)
        assert leq(1.0 + 1e-13, 1.0)
        assert not leq(1.1, 1.0)
        assert leq(1.05, 1.0, rtol=0.1)
        assert not leq(float("inf"), 1.0, rtol=0.1)


class TestExtrapolation(unittest.TestCase):
    def test_aitken_geometric(self):
        assert aitken_limit([1.0, 0.5, 0.25]) == 0.0
        self.assertAlmostEqual(aitken_limit([3.0, 2.0 + 1.0 / 3.0, 2.0 + 1.0 / 9.0]), 2.0, places=12)

    def test_aitken_short_or_flat(self):
        assert aitken_limit([0.7]) == 0.7
        assert aitken_limit([1.0, 0.7]) == 0.7
        assert aitken_limit([0.5, 0.5, 0.5]) == 0.5
        assert aitken_limit([1.0, 2.0, 3.0]) == 3.0

    def test_aitken_harmonic(self):
        # For 1/n the extrapolated limit is 1/(2(n-1)), well below the last value.
        self.assertAlmostEqual(aitken_limit([1.0 / 4.0, 1.0 / 5.0, 1.0 / 6.0]), 0.1, places=12)

    def test_tail_fit(self):
        xs = [1.0, 2.0, 4.0, 8.0]
        a, b = tail_fit(xs, [2.0 + 3.0 / x for x in xs], start=1.0)
        self.assertAlmostEqual(a, 2.0, places=12)
        self.assertAlmostEqual(b, 3.0, places=12)
