"""Test the bounds report: its verdicts, conclusions and stored form.
"""

import dataclasses
import json
import tempfile
import unittest
from pathlib import Path

from spectralbounds.checks import APPLICABLE, LAMBDA0, LAMBDA0_ESS
from spectralbounds.generators import antitree, bethe, lattice
from spectralbounds.report import (FAILED_VERDICTS, PASS, REPORT_FORMAT, BoundsReport, ReportConfig, bounds_csv,
                                   build_report, exit_code, load_report, recheck, report_json, save_report,
                                   verify_orderings)
from spectralbounds.spectra import DISCRETE, QUANTUM

from .utils import bethe_discrete_lambda0, bethe_quantum_lambda0

SMALL = ReportConfig(cap=5, k_max=1)


class TestBethe(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.g = bethe(3, 3)
        cls.report = build_report(cls.g, SMALL)

    def test_all_verdicts_pass(self):
        failed = [(v.name, v.lhs, v.rhs) for v in self.report.verdicts if not v.passed]
        assert failed == [], failed
        assert self.report.passed
        assert self.report.conclusions["all_verdicts_pass"]
        assert exit_code(self.report.verdicts) == PASS

    def test_computed_values(self):
        self.assertAlmostEqual(self.report.computed[DISCRETE].lambda0, bethe_discrete_lambda0(3, 3), places=9)
        expected = bethe_quantum_lambda0(3, 3)
        assert abs(self.report.computed[QUANTUM].lambda0 - expected) < 1e-3 * expected

    def test_bounds(self):
        lower = {b.name: b for b in self.report.lower_bounds}
        assert lower["lambda0_alpha_from_K"].value == 0.0625
        assert lower["finite_volume_floor"].value == 1.0 / (4.0 * 21.0 ** 2)
        assert lower["trivial"].value == 0.0
        upper = {b.name: b for b in self.report.upper_bounds}
        assert upper["longest_edge"].applicability == APPLICABLE
        assert "loose_end_edge" not in upper
        assert {"buser", "six_lambda_discrete", "equilateral_transfer"} <= set(upper)
        assert all(b.target == LAMBDA0_ESS for b in self.report.essential_upper)
        assert all(b.target == LAMBDA0 for b in self.report.lower_bounds)
        assert "equilateral_transfer_gap" in {v.name for v in self.report.verdicts}

    def test_conclusions(self):
        conclusions = self.report.conclusions
        assert conclusions["lambda0_trend"] == "positive"
        self.assertAlmostEqual(conclusions["lambda0_floor"], 0.0625, places=12)
        assert conclusions["lambda0_floor"] <= conclusions["lambda0_computed"] <= conclusions["lambda0_ceiling"]
        assert not conclusions["discrete_spectrum_indicator"]
        self.assertAlmostEqual(conclusions["lambda0_ess_floor_limits"]["K"], 0.0625, places=12)

    def test_metadata(self):
        assert self.report.graph["num_vertices"] == 22
        assert self.report.graph["equilateral_unit"]
        assert self.report.graph["finite_volume"] is False
        assert self.report.header.startswith("Enumerated isoperimetric values are upper estimates")

    def test_deterministic(self):
        assert report_json(build_report(bethe(3, 3), SMALL)) == report_json(self.report)

    def test_csv(self):
        lines = bounds_csv(self.report).splitlines()
        assert lines[0] == "section,name,value,applicability,target,source"
        assert any(line.startswith("lower,trivial,0.0,applicable,") for line in lines)


class TestStoredReports(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.report = build_report(bethe(3, 3), ReportConfig(cap=4, k_max=1, volume=False))

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / "report.json"

    def tearDown(self):
        self.directory.cleanup()

    def test_round_trip(self):
        save_report(self.report, self.path)
        loaded = load_report(self.path)
        assert report_json(loaded) == report_json(self.report)
        assert loaded.config == self.report.config
        assert all(v.passed for v in recheck(loaded))

    def test_tampered_eigenvalue(self):
        record = json.loads(report_json(self.report))
        record["computed"][QUANTUM]["lambda0"] = 1e-6
        tampered = BoundsReport.from_dict(record)
        failed = [v.name for v in verify_orderings(tampered) if not v.passed]
        assert "lower<=computed:lambda0_alpha_from_K" in failed
        assert exit_code(recheck(tampered)) == FAILED_VERDICTS

    def test_tampered_verdict(self):
        record = json.loads(report_json(self.report))
        record["verdicts"][0]["lhs"] = record["verdicts"][0]["rhs"] * 2.0 + 1.0
        tampered = BoundsReport.from_dict(record)
        assert tampered.verdicts[0].passed
        assert not recheck(tampered)[0].passed

    def test_wrong_format(self):
        record = json.loads(report_json(self.report))
        record["format"] = "bounds/0"
        with self.assertRaisesRegex(ValueError, REPORT_FORMAT):
            BoundsReport.from_dict(record)

    def test_without_eigensolves(self):
        report = build_report(bethe(3, 3), dataclasses.replace(SMALL, quantum=False, discrete=False, volume=False))
        assert report.computed == {}
        assert report.conclusions["lambda0_computed"] is None
        assert report.passed


class TestTrends(unittest.TestCase):
    def test_unit_antitree_tends_to_zero(self):
        config = ReportConfig(cap=3, k_max=1, enumeration_radius=3, mesh=0.25, depths=(4, 8, 16), discrete=False,
                              volume=False)
        report = build_report(antitree(1, 0.0, 16), config)
        history = report.computed["quantum_history"]
        assert history.monotone
        assert [depth for depth, _ in history.monotone_history] == [4, 8, 16]
        assert report.conclusions["lambda0_trend"] == "zero"
        assert report.conclusions["lambda0_floor"] < config.zero_threshold
        zero_iff = [v for v in report.verdicts if v.name == "lambda0_zero_iff_essential_zero"]
        assert len(zero_iff) == 1 and zero_iff[0].passed


BOUNDS_ONLY = dict(quantum=False, discrete=False, volume=False)


class TestEssentialConsistency(unittest.TestCase):
    def test_bethe_zero_iff(self):
        for depth in (5, 6, 7):
            report = build_report(bethe(3, depth), ReportConfig(cap=5, **BOUNDS_ONLY))
            verdicts = [v for v in report.verdicts if v.name == "alpha_zero_iff_alpha_ess_zero"]
            assert len(verdicts) == 1 and verdicts[0].passed, depth
            assert verdicts[0].detail == "k=2"

    def test_floors_and_ceilings_share_k(self):
        report = build_report(antitree(1, 3.0, 6), ReportConfig(cap=3, k_max=1, **BOUNDS_ONLY))
        floors = {b.name: b for b in report.essential_lower}
        self.assertAlmostEqual(floors["lambda0_ess_from_K"].value, 64.0 / 9.0, places=10)
        checked = [v for v in report.verdicts if v.name.startswith("essential_floor<=ceiling:")]
        assert checked
        failed = [(v.name, v.lhs, v.rhs) for v in checked if not v.passed]
        assert failed == [], failed


class TestFamilies(unittest.TestCase):
    def test_sandwich(self):
        config = ReportConfig(cap=3, k_max=1, volume=False)
        for g in (bethe(3, 4), bethe(4, 3), antitree(1, 1.0, 4), antitree(2, 1.0, 3), lattice(1, 6), lattice(2, 4)):
            report = build_report(g, config)
            failed = [(v.name, v.lhs, v.rhs) for v in report.verdicts if not v.passed]
            assert failed == [], (g.family, failed)
            conclusions = report.conclusions
            assert conclusions["lambda0_floor"] <= conclusions["lambda0_computed"] <= conclusions["lambda0_ceiling"]
