from .graph import MetricGraph, GraphValidationError
from .generators import FamilySpec, bethe, antitree, geometric_antitree, sparse_tree, lattice
from .report import build_report, verify_orderings, BoundsReport, ReportConfig
