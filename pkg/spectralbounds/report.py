"""Every bound and every computed eigenvalue of one truncation, checked against each other.

Enumerated isoperimetric values only bound their infima from above, so they never produce a
certified lower bound for lambda0: Cheeger floors come from curvature, and enumeration supplies
ceilings (Buser) and witnesses. Essential quantities are never computed directly; the report carries
the two-sided essential bounds instead, most of them read off trends and labeled heuristic.
"""

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from spectralbounds.checks import (APPLICABLE, HEURISTIC, INAPPLICABLE, LAMBDA0, LAMBDA0_ESS, Bound, Verdict,
                                   check_flag, check_leq)
from spectralbounds.curvature import (DIVERGING, curvature_alpha_bounds, curvature_profile,
                                      essential_curvature_limits)
from spectralbounds.generators import FamilySpec
from spectralbounds.graph import RHO0_COMPLETE, MetricGraph, length_extremes, selfadjointness_diagnostics
from spectralbounds.isoperimetry import (ALPHA_METRIC, SUBSET_BUDGET, check_connection_inequalities,
                                         essential_iso_sequences)
from spectralbounds.numerics import decay_exponent
from spectralbounds.serialize import dumps
from spectralbounds.spectra import (DISCRETE, NODE_BUDGET, QUANTUM, SOLVER_TOLERANCE, SpectralResult,
                                    discrete_to_quantum_ceiling, equilateral_transfer, lambda0_sequence,
                                    truncation_lambda0)
from spectralbounds.volume import (STAR_SAMPLE_BUDGET, InsufficientRadiusError, brooks_upper, mu_d_estimate,
                                   mu_estimate, mu_star_estimate)

REPORT_FORMAT = "bounds/1"

HEADER = ("Enumerated isoperimetric values are upper estimates of their infima: certified Cheeger floors "
          "come from curvature, enumeration gives ceilings and witnesses. Essential entries are bounds, "
          "not computed values.")

VANISHING_EXPONENT = 0.5

PASS = 0
FAILED_VERDICTS = 2
EXECUTION_ERROR = 1


@dataclass(frozen=True)
class ReportConfig:
    cap: int = 8
    vertex_cap: Optional[int] = None
    k_max: int = 2
    enumeration_radius: Optional[int] = None
    iso_budget: int = SUBSET_BUDGET
    strict: bool = False
    mesh: Optional[float] = None
    tol: float = SOLVER_TOLERANCE
    depths: Tuple[int, ...] = ()
    quantum: bool = True
    discrete: bool = True
    volume: bool = True
    mu_probe: float = 3.0
    mu_budget: int = STAR_SAMPLE_BUDGET
    trend_rtol: float = 0.1
    transfer_gap: float = 1e-3
    fem_node_budget: int = NODE_BUDGET
    zero_threshold: float = 1e-2
    threads: int = 1

    def to_dict(self) -> dict:
        record = dataclasses.asdict(self)
        record["depths"] = list(self.depths)
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "ReportConfig":
        record = dict(record)
        record["depths"] = tuple(record.get("depths", ()))
        return cls(**record)


@dataclass
class BoundsReport:
    graph: dict
    config: ReportConfig
    lower_bounds: List[Bound] = field(default_factory=list)
    upper_bounds: List[Bound] = field(default_factory=list)
    essential_lower: List[Bound] = field(default_factory=list)
    essential_upper: List[Bound] = field(default_factory=list)
    computed: Dict[str, SpectralResult] = field(default_factory=dict)
    isoperimetry: Dict[str, dict] = field(default_factory=dict)
    curvature: dict = field(default_factory=dict)
    volume: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    verdicts: List[Verdict] = field(default_factory=list)
    conclusions: dict = field(default_factory=dict)
    header: str = HEADER

    @property
    def passed(self) -> bool:
        return all(verdict.passed for verdict in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "header": self.header,
            "graph": self.graph,
            "config": self.config.to_dict(),
            "lower_bounds": [b.to_dict() for b in self.lower_bounds],
            "upper_bounds": [b.to_dict() for b in self.upper_bounds],
            "essential_lower": [b.to_dict() for b in self.essential_lower],
            "essential_upper": [b.to_dict() for b in self.essential_upper],
            "computed": {name: result.to_dict() for name, result in self.computed.items()},
            "isoperimetry": self.isoperimetry,
            "curvature": self.curvature,
            "volume": self.volume,
            "diagnostics": self.diagnostics,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "conclusions": self.conclusions,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "BoundsReport":
        if record.get("format") != REPORT_FORMAT:
            raise ValueError(f"Expected a '{REPORT_FORMAT}' report, got format '{record.get('format')}'.")
        record = _restore(record)
        return cls(
            graph=record["graph"],
            config=ReportConfig.from_dict(record["config"]),
            lower_bounds=[Bound.from_dict(b) for b in record["lower_bounds"]],
            upper_bounds=[Bound.from_dict(b) for b in record["upper_bounds"]],
            essential_lower=[Bound.from_dict(b) for b in record["essential_lower"]],
            essential_upper=[Bound.from_dict(b) for b in record["essential_upper"]],
            computed={name: SpectralResult.from_dict(r) for name, r in record["computed"].items()},
            isoperimetry=record["isoperimetry"],
            curvature=record["curvature"],
            volume=record["volume"],
            diagnostics=record["diagnostics"],
            verdicts=[Verdict.from_dict(v) for v in record["verdicts"]],
            conclusions=record["conclusions"],
            header=record.get("header", HEADER),
        )


#### JSON

def _sanitize(value):
    """JSON has no infinities or NaN: write them as "inf"/"-inf" and null."""
    if isinstance(value, dict):
        return {str(key): _sanitize(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(item) for item in value]
    if isinstance(value, np.ndarray):
        return _sanitize(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def _restore(value):
    if isinstance(value, dict):
        return {key: _restore(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_restore(item) for item in value]
    if value == "inf":
        return float("inf")
    if value == "-inf":
        return float("-inf")
    return value


def report_json(report: BoundsReport) -> str:
    return dumps(_sanitize(report.to_dict()))


def save_report(report: BoundsReport, path: Union[str, Path]):
    Path(path).write_text(report_json(report))


def load_report(path: Union[str, Path]) -> BoundsReport:
    return BoundsReport.from_dict(json.loads(Path(path).read_text()))


#
# Bounds
#

def _usable(bounds: List[Bound], target: str, applicable_only: bool = False) -> List[Bound]:
    return [b for b in bounds if b.usable and b.target == target
            and (b.applicability == APPLICABLE or not applicable_only)]


def _edge_ceilings(g: MetricGraph) -> List[Bound]:
    longest = float(g.length.max())
    bounds = [Bound("longest_edge", math.pi ** 2 / longest ** 2,
                    "Dirichlet test function on the longest edge: lambda0 <= pi^2/l*^2", APPLICABLE, LAMBDA0)]
    loose = g.neumann & (g.degree == 1) & ~g.frontier
    ends = loose[g.source] | loose[g.target]
    if ends.any():
        edge = float(g.length[ends].max())
        bounds.append(Bound("loose_end_edge", (math.pi / (2.0 * edge)) ** 2,
                            "test function on an edge with a Neumann loose end: lambda0 <= (pi/(2|e|))^2",
                            APPLICABLE, LAMBDA0))
    return bounds


def _buser(alpha: Optional[float], shortest: float, name: str, target: str, applicability: str) -> Bound:
    source = "Buser-type bound lambda0 <= pi^2 alpha / (2 l_*) from the enumerated witness"
    if alpha is None or not shortest > 0:
        return Bound(name, None, source, INAPPLICABLE, target)
    return Bound(name, math.pi ** 2 * alpha / (2.0 * shortest), source, applicability, target)


def _essential_floors_from_limits(limits) -> List[Bound]:
    bounds = []
    for name in ("K", "K_comb"):
        if limits.labels[name] == DIVERGING:
            bounds.append(Bound(f"lambda0_ess_{name}_limit", float("inf"),
                                f"{name} diverges at infinity: the spectrum is discrete", HEURISTIC, LAMBDA0_ESS))
    return bounds


#
# Orderings
#

def _longest_history(report: BoundsReport) -> List[Tuple[int, float]]:
    history = ()
    for result in report.computed.values():
        if len(result.monotone_history) > len(history):
            history = result.monotone_history
    return list(history)


def _vanishing(history: List[Tuple[int, float]]) -> bool:
    if len(history) < 3:
        return False
    exponent = decay_exponent([d for d, _ in history], [v for _, v in history])
    return bool(exponent > VANISHING_EXPONENT)


def verify_orderings(report: BoundsReport) -> List[Verdict]:
    """Re-derive the ordering verdicts from the values stored in the report."""
    config = report.config
    verdicts = []
    quantum = report.computed.get(QUANTUM)
    discrete = report.computed.get(DISCRETE)

    lower = _usable(report.lower_bounds, LAMBDA0)
    if quantum is not None:
        slack = 10 * config.tol
        for bound in lower:
            verdicts.append(check_leq(f"lower<=computed:{bound.name}", bound.value, quantum.lambda0, bound.source, slack))
        shortest = report.graph["ell_star_lower"]
        fem_slack = max(10 * config.tol, (math.pi * (quantum.h_target or 0.0) / shortest) ** 2 / 6.0)
        for bound in _usable(report.upper_bounds, LAMBDA0, applicable_only=True):
            rtol = 10 * config.tol if bound.name == "six_lambda_discrete" else fem_slack
            verdicts.append(check_leq(f"computed<=upper:{bound.name}", quantum.lambda0, bound.value, bound.source, rtol))
        if discrete is not None and report.graph.get("equilateral_unit"):
            gap = abs(discrete.lambda0 - equilateral_transfer(min(quantum.lambda0, math.pi ** 2)))
            verdicts.append(check_leq("equilateral_transfer_gap", gap, config.transfer_gap,
                                      "equilateral graphs: lambda0(h) = 1 - cos(sqrt(lambda0(H)))", 0.0))

    for name, result in report.computed.items():
        if len(result.monotone_history) > 1:
            verdicts.append(check_flag(f"monotone_history:{name}", bool(result.monotone),
                                       "nested truncations give nonincreasing lambda0",
                                       detail=str([list(item) for item in result.monotone_history])))

    ess_floors = _usable(report.essential_lower, LAMBDA0_ESS)
    ess_ceilings = _usable(report.essential_upper, LAMBDA0_ESS)
    for ceiling in ess_ceilings:
        for floor in ess_floors:
            if math.isinf(floor.value):
                continue
            verdicts.append(check_leq(f"essential_floor<=ceiling:{floor.name}:{ceiling.name}", floor.value,
                                      ceiling.value, f"{floor.source}; {ceiling.source}", config.trend_rtol))
        for floor in lower:
            verdicts.append(check_leq(f"lambda0_floor<=essential_ceiling:{floor.name}:{ceiling.name}", floor.value,
                                      ceiling.value, "lambda0 <= lambda0_ess", config.trend_rtol))

    if report.graph.get("finite_volume") is False:
        history = _longest_history(report)
        floors = [b.value for b in lower if b.value > 0] + [b.value for b in ess_floors if b.value > 0]
        positive = bool(floors) and max(floors) > config.zero_threshold
        verdicts.append(check_flag("lambda0_zero_iff_essential_zero", not (positive and _vanishing(history)),
                                   "lambda0 = 0 iff lambda0_ess = 0 (trend of truncation lambda0 against the floors)",
                                   detail=f"positive floor: {positive}"))
    return verdicts


def _conclusions(report: BoundsReport, limits) -> dict:
    config = report.config
    lower = _usable(report.lower_bounds, LAMBDA0)
    upper = _usable(report.upper_bounds, LAMBDA0, applicable_only=True)
    ess_lower = _usable(report.essential_lower, LAMBDA0_ESS)
    ess_upper = _usable(report.essential_upper, LAMBDA0_ESS)
    quantum = report.computed.get(QUANTUM)

    floor = max((b.value for b in lower), default=0.0)
    ess_ceiling = min((b.value for b in ess_upper), default=float("inf"))

    if floor > config.zero_threshold:
        trend = "positive"
    elif ess_ceiling <= config.zero_threshold or _vanishing(_longest_history(report)):
        trend = "zero"
    else:
        trend = "undetermined"

    limit_floors = {name: (limits.limits[name] ** 2 / 4.0 if limits.limits[name] > 0 else 0.0)
                    for name in ("K", "K_comb") if not math.isnan(limits.limits[name])}
    return {
        "lambda0_floor": floor,
        "lambda0_ceiling": min((b.value for b in upper), default=float("inf")),
        "lambda0_computed": quantum.lambda0 if quantum is not None else None,
        "lambda0_ess_floor": max((b.value for b in ess_lower), default=0.0),
        "lambda0_ess_floor_limits": limit_floors,
        "lambda0_ess_ceiling": ess_ceiling,
        "lambda0_trend": trend,
        "discrete_spectrum_indicator": limits.labels["K"] == DIVERGING,
        "all_verdicts_pass": all(v.passed for v in report.verdicts),
    }


#
# Orchestration
#

def _graph_metadata(g: MetricGraph, extremes) -> dict:
    spec = FamilySpec.from_dict(g.family) if g.family else None
    return {
        "num_vertices": g.num_vertices,
        "num_edges": g.num_edges,
        "depth": g.depth,
        "mes": g.mes,
        "family": g.family,
        "finite_volume": spec.finite_volume if spec is not None else None,
        "ell_star_upper": extremes.ell_star_upper,
        "ell_star_lower": extremes.ell_star_lower,
        "equilateral_unit": g.is_equilateral(1.0),
        "dirichlet_vertices": int(g.dirichlet.sum()),
    }


def build_report(g: MetricGraph, config: ReportConfig = ReportConfig(), verbose: bool = False) -> BoundsReport:
    """Compute all bounds for one truncation and check them against its computed lambda0."""
    k_max = min(config.k_max, g.depth - 1)
    extremes = length_extremes(g, range(k_max + 1))
    report = BoundsReport(_graph_metadata(g, extremes), config)
    spec = FamilySpec.from_dict(g.family) if g.family else None

    diagnostics = selfadjointness_diagnostics(g)
    report.diagnostics = {
        "inf_m": diagnostics.inf_m,
        "ell_star_lower": diagnostics.ell_star_lower,
        "verdicts": sorted(diagnostics.verdicts),
        "trend_exponents": diagnostics.trend_exponents,
        "label": diagnostics.label,
    }
    complete = RHO0_COMPLETE in diagnostics.verdicts

    if verbose:
        print(f"Curvature of {g!r}")
    profile = curvature_profile(g)
    limits = essential_curvature_limits(profile)
    curvature_bounds = curvature_alpha_bounds(profile, extremes, exclusion_radius=k_max)
    report.curvature = {
        "K_inf": profile.K_inf, "K_comb_inf": profile.K_comb_inf, "K_d_inf": profile.K_d_inf,
        "K_ess_seq": profile.K_ess_seq, "K_comb_ess_seq": profile.K_comb_ess_seq,
        "K_d_ess_seq": profile.K_d_ess_seq,
        "labels": limits.labels, "limits": limits.limits, "exponents": limits.exponents,
        "alpha_bounds": [b.to_dict() for b in curvature_bounds if b.target not in (LAMBDA0, LAMBDA0_ESS)],
    }
    report.lower_bounds.extend(b for b in curvature_bounds if b.target == LAMBDA0)
    report.essential_lower.extend(b for b in curvature_bounds if b.target == LAMBDA0_ESS)
    report.essential_lower.extend(_essential_floors_from_limits(limits))
    if g.dirichlet.any():
        report.lower_bounds.append(Bound("finite_volume_floor", 1.0 / (4.0 * g.mes ** 2),
                                         "alpha >= 1/mes on a truncation with Dirichlet vertices, then lambda0 >= alpha^2/4",
                                         APPLICABLE, LAMBDA0))
    report.lower_bounds.append(Bound("trivial", 0.0, "lambda0 >= 0", APPLICABLE, LAMBDA0))

    if verbose:
        print(f"Isoperimetric searches, cap {config.cap}, k up to {k_max}")
    iso = essential_iso_sequences(g, k_max, config.cap, config.vertex_cap, enumeration_radius=config.enumeration_radius,
                                  budget=config.iso_budget, strict=config.strict, verbose=verbose)
    report.isoperimetry = {kind: r.to_dict() for kind, r in iso.items()}
    connection = check_connection_inequalities(g, iso, extremes, curvature=profile.K)

    report.upper_bounds.extend(_edge_ceilings(g))
    metric = iso[ALPHA_METRIC]
    report.upper_bounds.append(_buser(metric.value_upper, extremes.ell_star_lower, "buser", LAMBDA0, APPLICABLE))
    report.essential_upper.append(Bound("longest_edge_ess", math.pi ** 2 / extremes.ell_ess_upper ** 2,
                                        f"pi^2/l*_ess^2 over edges outside B_{k_max}", HEURISTIC, LAMBDA0_ESS))
    if metric.essential_seq:
        report.essential_upper.append(_buser(metric.essential_seq[-1][1], extremes.ell_ess_lower, "buser_ess",
                                             LAMBDA0_ESS, HEURISTIC))

    if config.volume:
        if verbose:
            print("Volume growth")
        try:
            growth = mu_estimate(g)
            growth_d = mu_d_estimate(g)
            star = mu_star_estimate(g, config.mu_probe, config.mu_budget, verbose=verbose)
            report.volume = {"mu": growth.mu, "mu_d": growth_d.mu, "mu_star": star.mu_star,
                             "vol_star_probe": star.min_ratio,
                             "vol_star_witness": star.witness.label() if star.witness is not None else None,
                             "valid_radius": growth.table.valid_radius, "partial_sample": star.partial}
            report.essential_upper.extend(brooks_upper(growth.mu, star.mu_star, complete))
        except InsufficientRadiusError as error:
            report.volume = {"error": str(error)}

    if config.discrete:
        if verbose:
            print("Difference Laplacian")
        report.computed[DISCRETE] = truncation_lambda0(g, DISCRETE, tol=config.tol)
        report.upper_bounds.extend(discrete_to_quantum_ceiling(report.computed[DISCRETE].lambda0,
                                                               g.is_equilateral(1.0)))
    if config.quantum:
        if verbose:
            print("Kirchhoff Laplacian")
        report.computed[QUANTUM] = truncation_lambda0(g, QUANTUM, config.mesh, tol=config.tol,
                                                      node_budget=config.fem_node_budget)
        if config.depths and spec is not None:
            report.computed["quantum_history"] = lambda0_sequence(spec, config.depths, QUANTUM, config.mesh,
                                                                  config.tol, config.fem_node_budget, verbose)

    report.verdicts = verify_orderings(report) + connection
    report.conclusions = _conclusions(report, limits)
    if verbose:
        failed = [v.name for v in report.verdicts if not v.passed]
        print(f"{len(report.verdicts)} verdicts, {len(failed)} failed")
    return report


def recheck(report: BoundsReport) -> List[Verdict]:
    """The stored verdicts re-evaluated, followed by freshly derived ordering verdicts."""
    stored = [dataclasses.replace(v, passed=v.recheck()) for v in report.verdicts]
    return stored + verify_orderings(report)


def exit_code(verdicts: List[Verdict]) -> int:
    return PASS if all(v.passed for v in verdicts) else FAILED_VERDICTS


def bounds_csv(report: BoundsReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["section", "name", "value", "applicability", "target", "source"])
    sections = (("lower", report.lower_bounds), ("upper", report.upper_bounds),
                ("essential_lower", report.essential_lower), ("essential_upper", report.essential_upper))
    for section, bounds in sections:
        for b in bounds:
            writer.writerow([section, b.name, "" if b.value is None else repr(float(b.value)), b.applicability,
                             b.target, b.source])
    return buffer.getvalue()
