import argparse
import ntpath
import sys
from pathlib import Path
from typing import List, Optional

from prompt_toolkit import prompt
from prompt_toolkit.completion import WordCompleter
from prompt_toolkit.validation import Validator

from spectralbounds.curvature import curvature_csv, curvature_profile
from spectralbounds.generators import ANTITREE, BETHE, FAMILIES, GEOMETRIC_ANTITREE, LATTICE, SPARSE_TREE, FamilySpec
from spectralbounds.graph import MetricGraph
from spectralbounds.properties import DEFAULT_TRIALS, SUITES, run_suites
from spectralbounds.report import (EXECUTION_ERROR, FAILED_VERDICTS, PASS, ReportConfig, bounds_csv, build_report,
                                   exit_code, load_report, recheck, report_json)
from spectralbounds.serialize import dumps, load, save
from spectralbounds.spectra import (MODES, QUANTUM, SOLVER_TOLERANCE, assemble_discrete,
                                    assemble_quantum_fem, export_coo, lambda0_sequence, truncation_lambda0)
from spectralbounds.volume import Center, ball_volume_table, mu_estimate, volume_csv

JSON = "json"
CSV = "csv"


def banner(title: str):
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80, end="\n\n")


def select_family() -> str:
    """Interactive family selection with completion over the known families."""
    completer = WordCompleter(list(FAMILIES), ignore_case=True)
    validator = Validator.from_callable(
        lambda x: x in FAMILIES,
        error_message="Please select a family from the list.",
        move_cursor_to_end=True
    )
    return prompt("Select graph family: ", completer=completer, complete_while_typing=True, validator=validator)


def confirm_overwrite(path: Path, assume_yes: bool) -> bool:
    if assume_yes or not path.exists():
        return True
    choice = prompt(f"{path} exists. Overwrite it? (yes/no): ").lower().strip()
    return choice in ['yes', 'y']


def write_output(text: str, out: Optional[str], assume_yes: bool) -> bool:
    """Write to ``out`` (after confirmation) or to stdout. Returns False if the user declined."""
    if out is None:
        sys.stdout.write(text)
        return True
    path = Path(out)
    if not confirm_overwrite(path, assume_yes):
        print("\nResults not saved.")
        return False
    path.write_text(text)
    print(f"\nResults saved to: {ntpath.basename(out)}")
    return True


def load_metric_graph(path: str) -> MetricGraph:
    g = load(path)
    if not isinstance(g, MetricGraph):
        raise ValueError(f"{ntpath.basename(path)} holds a weighted graph; this command needs a metric graph.")
    return g


def family_from_args(args) -> FamilySpec:
    family = args.family or select_family()
    beta = args.beta
    if beta is None and family in (BETHE, GEOMETRIC_ANTITREE):
        beta = 3
    return FamilySpec(family, args.depth, beta=beta,
                      q=args.q if family == ANTITREE else None,
                      s=args.s if family == ANTITREE else None,
                      dim=args.dim if family == LATTICE else None,
                      length=args.length,
                      dirichlet_pendants=args.dirichlet_pendants if family == SPARSE_TREE else False)


def config_from_args(args, **overrides) -> ReportConfig:
    options = dict(cap=args.cap, vertex_cap=args.vertex_cap, k_max=args.k_max,
                   enumeration_radius=args.enumeration_radius, iso_budget=args.budget, strict=args.strict,
                   mesh=args.mesh, tol=args.tol, depths=tuple(args.depths or ()), mu_probe=args.mu_probe,
                   mu_budget=args.mu_budget, threads=args.threads)
    options.update(overrides)
    return ReportConfig(**options)


#### Subcommands

def run_generate(args) -> int:
    spec = family_from_args(args)
    g = spec.build()
    print(f"Built {spec.family} truncation at depth {spec.depth}: {g.num_vertices} vertices, {g.num_edges} edges")
    if args.out is None:
        sys.stdout.write(dumps({"family": spec.to_dict(), "vertices": g.num_vertices, "edges": g.num_edges}))
        return PASS
    path = Path(args.out)
    if not confirm_overwrite(path, args.yes):
        print("\nGraph not saved.")
        return PASS
    save(g, path)
    print(f"\nGraph saved to: {ntpath.basename(args.out)}")
    return PASS


def run_bounds(args) -> int:
    g = load_metric_graph(args.graph)
    banner(f"BOUNDS FOR {ntpath.basename(args.graph)}")
    report = build_report(g, config_from_args(args, quantum=False, discrete=False), verbose=args.verbose)
    if args.dump_curvature:
        Path(args.dump_curvature).write_text(curvature_csv(curvature_profile(g)))
        print(f"Curvature written to: {ntpath.basename(args.dump_curvature)}")
    text = bounds_csv(report) if args.format == CSV else report_json(report)
    write_output(text, args.out, args.yes)
    return exit_code(report.verdicts)


def run_spectrum(args) -> int:
    g = load_metric_graph(args.graph)
    banner(f"{args.mode.upper()} LAPLACIAN OF {ntpath.basename(args.graph)}")
    if args.depths:
        if not g.family:
            raise ValueError("--depths needs a graph generated from a family.")
        result = lambda0_sequence(FamilySpec.from_dict(g.family), args.depths, args.mode, args.mesh, args.tol,
                                  verbose=args.verbose)
    else:
        result = truncation_lambda0(g, args.mode, args.mesh, k=args.eigs, tol=args.tol)
    if args.export_coo:
        system = assemble_quantum_fem(g, args.mesh) if args.mode == QUANTUM else assemble_discrete(g)
        export_coo(system.stiffness, f"{args.export_coo}.stiffness")
        export_coo(system.mass, f"{args.export_coo}.mass")
    print(f"lambda0 = {result.lambda0!r} (residual {result.residual:.3g}, {result.size} unknowns)")
    if result.monotone is False:
        print("Warning: lambda0 increased between nested truncations")
    write_output(dumps(result.to_dict()), args.out, args.yes)
    return PASS if result.monotone is not False else FAILED_VERDICTS


def run_volume(args) -> int:
    g = load_metric_graph(args.graph)
    center = Center.parse(args.center, g)
    banner(f"BALL VOLUMES AROUND {center.label()}")
    estimate = mu_estimate(g, center, radius=args.growth_radius)
    table = ball_volume_table(g, center, args.radii) if args.radii else estimate.table
    print(f"mu estimate: {estimate.mu!r} (valid radius {table.valid_radius!r})")
    if estimate.at_radius is not None:
        print(f"log vol(r)/r at r = {args.growth_radius!r}: {estimate.at_radius!r}")
    if args.format == CSV:
        text = volume_csv(table)
    else:
        text = dumps({"table": table.to_dict(), "growth": estimate.to_dict()})
    write_output(text, args.out, args.yes)
    return PASS


def run_report(args) -> int:
    g = load_metric_graph(args.graph)
    banner(f"REPORT FOR {ntpath.basename(args.graph)}")
    report = build_report(g, config_from_args(args), verbose=args.verbose)
    failed = [v for v in report.verdicts if not v.passed]
    print(f"{len(report.verdicts)} verdicts checked, {len(failed)} failed")
    for verdict in failed:
        print(f"FAILED {verdict.name}: {verdict.lhs!r} <= {verdict.rhs!r} ({verdict.source})")
    print(f"lambda0 trend: {report.conclusions['lambda0_trend']}")
    text = bounds_csv(report) if args.format == CSV else report_json(report)
    write_output(text, args.out, args.yes)
    return exit_code(report.verdicts)


def run_verify(args) -> int:
    if args.suite:
        banner("PROPERTY SUITES")
        names = list(SUITES) if "all" in args.suite else args.suite
        results = run_suites(names, args.trials, args.seed, verbose=True)
        write_output(dumps({"suites": [r.to_dict() for r in results]}), args.out, args.yes)
        return PASS if all(r.passed for r in results) else FAILED_VERDICTS
    if args.report is None:
        raise ValueError("verify needs a stored report or --suite.")
    banner(f"VERIFYING {ntpath.basename(args.report)}")
    verdicts = recheck(load_report(args.report))
    for verdict in verdicts:
        if not verdict.passed:
            print(f"FAILED {verdict.name}: {verdict.lhs!r} <= {verdict.rhs!r} ({verdict.source})")
    print(f"{len(verdicts)} verdicts re-checked, {sum(not v.passed for v in verdicts)} failed")
    return exit_code(verdicts)


#### Argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", type=str, default=None, help="Output file (default: stdout)")
    common.add_argument("--format", choices=[JSON, CSV], default=JSON, help="Output format")
    common.add_argument("--seed", type=int, default=0, help="Seed for the randomized property suites")
    common.add_argument("--threads", type=int, default=1,
                        help="Recorded in the report only; every computation runs on one thread")
    common.add_argument("--verbose", "-v", action="store_true", help="Print progress")
    common.add_argument("--yes", "-y", action="store_true", help="Overwrite output files without asking")

    bounds_options = argparse.ArgumentParser(add_help=False)
    bounds_options.add_argument("graph", type=str, help="Path to a metric graph file")
    bounds_options.add_argument("--cap", type=int, default=8, help="Edge cap for subgraph enumeration")
    bounds_options.add_argument("--vertex-cap", type=int, default=None, help="Vertex cap for alpha_d/alpha_comb")
    bounds_options.add_argument("--k-max", type=int, default=2, help="Largest exclusion radius for essential sequences")
    bounds_options.add_argument("--enumeration-radius", type=int, default=None,
                                help="Only enumerate subsets seeded within this sphere distance")
    bounds_options.add_argument("--budget", type=int, default=5_000_000, help="Subset budget per search")
    bounds_options.add_argument("--strict", action="store_true", help="Fail when the subset budget is exhausted")
    bounds_options.add_argument("--mesh", type=float, default=None, help="FEM mesh size")
    bounds_options.add_argument("--tol", type=float, default=SOLVER_TOLERANCE, help="Eigensolver tolerance")
    bounds_options.add_argument("--depths", type=int, nargs="+", default=None, help="Depths for the lambda0 history")
    bounds_options.add_argument("--mu-probe", type=float, default=3.0, help="Probe radius for vol_*")
    bounds_options.add_argument("--mu-budget", type=int, default=2000, help="Number of sampled centers for vol_*")

    parser = argparse.ArgumentParser(prog="spectral-bounds",
                                     description="Bounds for the bottom of the spectrum of infinite metric graphs")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", parents=[common], help="Build a family truncation")
    generate.add_argument("--family", "-f", choices=FAMILIES, default=None, help="Graph family (prompted if omitted)")
    generate.add_argument("--depth", "-d", type=int, required=True, help="Truncation depth (lattice: radius)")
    generate.add_argument("--beta", type=int, default=None, help="Branching of Bethe lattices and geometric antitrees")
    generate.add_argument("--q", type=int, default=1, help="Antitree sphere size exponent")
    generate.add_argument("--s", type=float, default=0.0, help="Antitree length exponent")
    generate.add_argument("--dim", type=int, default=1, help="Lattice dimension")
    generate.add_argument("--length", type=float, default=1.0, help="Edge length")
    generate.add_argument("--dirichlet-pendants", action="store_true", help="Dirichlet loose ends on the sparse tree")
    generate.set_defaults(run=run_generate)

    bounds = commands.add_parser("bounds", parents=[common, bounds_options], help="Bounds without eigensolves")
    bounds.add_argument("--dump-curvature", type=str, default=None, help="Write per-vertex curvature CSV here")
    bounds.set_defaults(run=run_bounds)

    spectrum = commands.add_parser("spectrum", parents=[common], help="lambda0 of a truncation")
    spectrum.add_argument("graph", type=str, help="Path to a metric graph file")
    spectrum.add_argument("--mode", choices=MODES, default=QUANTUM, help="Kirchhoff (quantum) or difference Laplacian")
    spectrum.add_argument("--mesh", type=float, default=None, help="FEM mesh size")
    spectrum.add_argument("--tol", type=float, default=SOLVER_TOLERANCE, help="Eigensolver tolerance")
    spectrum.add_argument("--eigs", type=int, default=1, help="Number of smallest eigenvalues")
    spectrum.add_argument("--depths", type=int, nargs="+", default=None, help="Solve the family at these depths")
    spectrum.add_argument("--export-coo", type=str, default=None, help="Prefix for stiffness/mass COO files")
    spectrum.set_defaults(run=run_spectrum)

    volume = commands.add_parser("volume", parents=[common], help="Ball volumes and growth rate")
    volume.add_argument("graph", type=str, help="Path to a metric graph file")
    volume.add_argument("--center", type=str, default="root", help="root, vertex:ID, edge:ID or edge:ID:OFFSET")
    volume.add_argument("--radii", type=float, nargs="+", default=None, help="Radii to tabulate")
    volume.add_argument("--growth-radius", type=float, default=None,
                        help="End the growth grid at this radius, past the frontier if need be")
    volume.set_defaults(run=run_volume)

    report = commands.add_parser("report", parents=[common, bounds_options], help="Full consistency-checked report")
    report.set_defaults(run=run_report)

    verify = commands.add_parser("verify", parents=[common], help="Re-check a report or run property suites")
    verify.add_argument("report", type=str, nargs="?", default=None, help="Path to a stored report")
    verify.add_argument("--suite", choices=list(SUITES) + ["all"], action="append", default=None,
                        help="Property suite to run (repeatable)")
    verify.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Trials per suite")
    verify.set_defaults(run=run_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except Exception as error:
        print(f"Error: {type(error).__name__}: {error}", file=sys.stderr)
        return EXECUTION_ERROR


if __name__ == "__main__":
    sys.exit(main())
