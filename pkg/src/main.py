"""
Main CLI entry point for the GAD QEC simulator.
Supports fidelity sweeps, coefficient verification, entanglement-breaking
maps, correctable-set audits and code listings.
"""
import sys
import argparse
import logging
import time
from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.table import Table
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn

from .utils import (
    load_env,
    ensure_directory,
    get_timestamp,
    format_duration,
    parse_grid,
    parse_gamma_rule,
    write_table,
    safe_json_dump,
)
from .config import ConfigError, RunConfig, load_config
from .channel import GadParams, scan_entanglement_breaking
from .codes import CODE_NAMES, build_code, dump_codewords, is_self_complementary, verify_stabilizer
from .fidelity import SweepGrid, SweepRow, fidelity_no_qec, resolve_max_weight, run_sweep
from .series import (
    VERIFIED_CODES,
    GAMMA_BASIS,
    SampleBox,
    polynomial_checks,
    fit_expansion,
    scheme_evaluator,
    verify_coefficients,
)
from .audit import AuditEngine
from .report import ReportGenerator


console = Console()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

SWEEP_COLUMNS = ["code", "gamma", "epsilon", "max_weight", "fidelity", "remainder_bound", "estimator"]
ENTBREAK_COLUMNS = [
    "gamma", "p", "p_min", "p_max", "concurrence", "min_ppt_eigenvalue", "separable", "consistent",
]
DEFAULT_GAMMA_GRID = "0:0.1:11"
DEFAULT_TEMP_GRID = "0:0.01:11"
DEFAULT_ENTBREAK_GRID = "0:1:21"


def setup_logging(verbose: bool = False) -> logging.Logger:
    """
    Setup logging configuration.

    Args:
        verbose: Enable verbose logging

    Returns:
        Logger instance
    """
    log_dir = ensure_directory("logs")
    log_file = log_dir / f"gadqec_{get_timestamp()}.log"

    level = logging.DEBUG if verbose else logging.INFO

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler() if verbose else logging.NullHandler()
        ]
    )

    logger = logging.getLogger(__name__)
    logger.info(f"Logging initialized. Log file: {log_file}")

    return logger


def resolve_codes(config: RunConfig, allowed=CODE_NAMES) -> List[str]:
    """Validate requested code names; an empty list is a usage error."""
    if not config.codes:
        raise ConfigError("no code given (use --code NAME[,NAME...])")
    unknown = [c for c in config.codes if c not in allowed]
    if unknown:
        raise ConfigError(f"Unknown code: {', '.join(unknown)} (known: {', '.join(allowed)})")
    return list(config.codes)


def build_grid(config: RunConfig, gamma_given: bool) -> SweepGrid:
    """Sweep grid from --gamma, --eps-rule and the temperature flags."""
    try:
        if config.temp_sweep:
            values = parse_grid(config.gamma if gamma_given else DEFAULT_TEMP_GRID)
            return SweepGrid(values, gamma_factor=parse_gamma_rule(config.gamma_rule))
        return SweepGrid(parse_grid(config.gamma), eps_rule=config.eps_rule)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def cmd_sweep(config: RunConfig, logger: logging.Logger, gamma_given: bool = True) -> int:
    """
    Fidelity sweep over a grid for one or more codes.

    Args:
        config: Run configuration
        logger: Logger instance
        gamma_given: Whether the gamma grid was set explicitly

    Returns:
        Exit code
    """
    codes = resolve_codes(config)
    grid = build_grid(config, gamma_given)
    estimators = ["exact", "scheme"] if config.temp_sweep else [config.estimator]
    points = grid.points()
    try:
        max_weight = config.max_weight_value()
        for name in codes:
            resolve_max_weight(build_code(name), max_weight)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    console.print(f"\n[bold cyan]Fidelity sweep:[/bold cyan] {', '.join(codes)}")
    console.print(f"[cyan]Points:[/cyan] {len(points)}  [cyan]Estimators:[/cyan] {', '.join(estimators)}\n")

    rows: List[SweepRow] = []
    started = time.perf_counter()
    with Progress(console=console) as progress:
        task = progress.add_task("[cyan]Evaluating...", total=len(codes) * len(estimators) * len(points))
        for name in codes:
            code = build_code(name)
            for estimator in estimators:
                progress.update(task, description=f"[cyan]{name} ({estimator})...")
                rows += run_sweep(
                    code, grid, max_weight, estimator,
                    threads=config.threads, progress=lambda: progress.advance(task),
                )

    out = config.output_path(f"sweep_{get_timestamp()}.{config.format}")
    columns = SWEEP_COLUMNS if len(estimators) > 1 or config.estimator != "exact" else SWEEP_COLUMNS[:-1]
    try:
        path = write_table([vars(r) for r in rows], columns, str(out), config.format)
    except OSError as e:
        raise ConfigError(f"cannot write {out}: {e}") from e
    logger.info(f"Sweep table written to {path} ({len(rows)} rows)")

    display_sweep_summary(rows)
    console.print(f"\n[bold green]✓ Sweep written:[/bold green] {path} ({len(rows)} rows, {format_duration(time.perf_counter() - started)})")
    return EXIT_OK


def display_sweep_summary(rows: List[SweepRow]) -> None:
    """Per code and estimator: worst fidelity on the grid next to the unprotected qubit."""
    table = Table(show_header=True)
    table.add_column("Code", style="cyan")
    table.add_column("Estimator")
    table.add_column("Min F", justify="right")
    table.add_column("At gamma", justify="right")
    table.add_column("No-QEC baseline", justify="right")

    groups: Dict[tuple, List[SweepRow]] = {}
    for row in rows:
        groups.setdefault((row.code, row.estimator), []).append(row)
    for (code, estimator), group in groups.items():
        worst = min(group, key=lambda r: r.fidelity)
        baseline = fidelity_no_qec(GadParams(worst.gamma, worst.epsilon), 1)
        table.add_row(code, estimator, f"{worst.fidelity:.8f}", f"{worst.gamma:g}", f"{baseline:.8f}")
    console.print(table)


def cmd_verify(config: RunConfig, logger: logging.Logger, polynomials: bool = False) -> int:
    """
    Fit leading coefficients and compare them with the analytic estimates.

    Returns:
        EXIT_OK iff every check passes
    """
    codes = resolve_codes(config, allowed=VERIFIED_CODES)
    results: List[Dict[str, Any]] = []

    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
        task = progress.add_task("Fitting coefficients...", total=None)
        for name in codes:
            progress.update(task, description=f"Fitting {name}...")
            report = verify_coefficients(name, threads=config.threads)
            checks = report.checks()
            for coefficient, expected in report.expected.items():
                results.append({
                    "code": name,
                    "check": coefficient,
                    "fitted": report.coefficients.get(coefficient),
                    "expected": expected,
                    "relative_error": report.relative_errors[coefficient],
                    "passed": checks[coefficient],
                })

        if "eight_concat" in codes:
            progress.update(task, description="Comparing eight_concat with leung_four...")
            results.append(_leung_comparison(config.threads))

        if polynomials:
            for name in codes:
                progress.update(task, description=f"Summing exact fidelities of {name}...")
                for check in polynomial_checks(name, threads=config.threads):
                    results.append({
                        "code": name,
                        "check": check.name,
                        "fitted": check.signed_max_difference,
                        "expected": max(check.tolerances),
                        "relative_error": None,
                        "passed": check.passed,
                    })

    display_verify_table(results)
    failed = [r for r in results if not r["passed"]]
    summary = {
        "codes": len(codes),
        "checks": len(results),
        "passed": len(results) - len(failed),
        "failed": len(failed),
    }
    logger.info(f"Verification finished: {summary}")
    _write_report(config, "verify", summary, results, codes)
    return EXIT_OK if not failed else EXIT_FAILURE


def _leung_comparison(threads: int) -> Dict[str, Any]:
    """gamma^2 coefficient of eight_concat against leung_four at epsilon = 0."""
    fits = {
        name: fit_expansion(scheme_evaluator(name), GAMMA_BASIS, SampleBox(), code_name=name, threads=threads)
        for name in ("eight_concat", "leung_four")
    }
    eight = fits["eight_concat"].coefficients["gamma^2"]
    leung = fits["leung_four"].coefficients["gamma^2"]
    relative = abs(eight - leung) / abs(leung)
    return {
        "code": "eight_concat",
        "check": "gamma^2 equals leung_four",
        "fitted": eight,
        "expected": leung,
        "relative_error": relative,
        "passed": relative <= 0.05,
    }


def display_verify_table(results: List[Dict[str, Any]]) -> None:
    table = Table(show_header=True)
    table.add_column("Code", style="cyan")
    table.add_column("Check")
    table.add_column("Fitted", justify="right")
    table.add_column("Expected", justify="right")
    table.add_column("Rel. error", justify="right")
    table.add_column("Result")
    for r in results:
        rel = "" if r["relative_error"] is None else f"{r['relative_error']:.2%}"
        verdict = "[green]PASS[/green]" if r["passed"] else "[red]FAIL[/red]"
        table.add_row(r["code"], r["check"], f"{r['fitted']:.6g}", f"{r['expected']:.6g}", rel, verdict)
    console.print(table)


def cmd_entbreak(config: RunConfig, logger: logging.Logger, p_grid: str) -> int:
    """Concurrence and PPT map over a (gamma, p) grid."""
    try:
        gammas = parse_grid(config.gamma)
        ps = parse_grid(p_grid)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if any(not 0.0 <= v <= 1.0 for v in gammas + ps):
        raise ConfigError("gamma and p must lie in [0, 1]")

    rows = scan_entanglement_breaking(gammas, ps)
    out = config.output_path(f"entbreak_{get_timestamp()}.{config.format}")
    try:
        path = write_table(rows, ENTBREAK_COLUMNS, str(out), config.format)
    except OSError as e:
        raise ConfigError(f"cannot write {out}: {e}") from e

    table = Table(show_header=True)
    table.add_column("gamma", justify="right")
    table.add_column("p_min", justify="right")
    table.add_column("p_max", justify="right")
    table.add_column("Separable cells", justify="right")
    for gamma in gammas:
        cells = [r for r in rows if r["gamma"] == gamma]
        region = ("-", "-") if cells[0]["p_min"] is None else (f"{cells[0]['p_min']:.6f}", f"{cells[0]['p_max']:.6f}")
        separable = sum(1 for r in cells if r["separable"])
        table.add_row(f"{gamma:g}", *region, f"{separable}/{len(cells)}")
    console.print(table)

    inconsistent = sum(1 for r in rows if not r["consistent"])
    logger.info(f"Entanglement-breaking map: {len(rows)} cells, {inconsistent} inconsistent")
    console.print(f"\n[bold green]✓ Map written:[/bold green] {path} ({len(rows)} cells)")
    return EXIT_OK if inconsistent == 0 else EXIT_FAILURE


def cmd_audit(config: RunConfig, logger: logging.Logger) -> int:
    """Re-derive exclusion lists and diff them against the claimed ones."""
    codes = resolve_codes(config)
    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
        task = progress.add_task("Auditing...", total=None)
        audits = {}
        for name in codes:
            progress.update(task, description=f"Auditing {name}...")
            audits[name] = AuditEngine.audit(name)

    results: List[Dict[str, Any]] = []
    for name, audit in audits.items():
        console.print(f"\n[bold]{name}[/bold] ({audit.regime}, {audit.accepted_count} accepted errors)")
        derived = [f for f in audit.findings if f.derived is not None]
        if derived:
            console.print(f"  Derived exclusions ({len(derived)}):")
            for f in derived:
                console.print(f"    A{f.error}: {f.derived}" + (f" (with {f.partner})" if f.partner else ""))
        for f in audit.failures:
            diagnosis = AuditEngine.diagnose(f)
            console.print(Panel(
                f"[bold]Error:[/bold] A{f.error}\n[bold]Issue:[/bold] {diagnosis.issue}\n"
                f"[bold]Cause:[/bold] {diagnosis.cause}\n[bold]Suggestion:[/bold] {diagnosis.suggestion}",
                title="🔍 Diagnosis",
                border_style="red",
            ))
        if audit.kl:
            console.print(
                f"  KL at gamma={audit.kl.params.gamma:g}, eps={audit.kl.params.epsilon:g}: "
                f"max off-diagonal {audit.kl.max_off_diagonal:.3e}, max spread {audit.kl.max_spread:.3e}, "
                f"max residue {audit.kl.max_residue:.3e}"
            )
        results += [
            {
                "code": name,
                "error": f"A{f.error}",
                "claimed": f.claimed,
                "derived": f.derived,
                "partner": f.partner,
                "overlap": f.overlap,
                "status": f.status,
                "passed": not f.failed,
            }
            for f in audit.findings
        ]

    summary = AuditEngine.get_summary(audits)
    report_summary = {k: summary[k] for k in ("total_codes", "passed", "failed")}
    report_summary["failing_codes"] = ", ".join(summary["failing_codes"]) or "none"
    status = "[bold green]✓ All audits passed[/bold green]" if not summary["failed"] \
        else f"[bold red]✗ {summary['failed']} code(s) failed the audit[/bold red]"
    console.print(f"\n{status}")
    _write_report(config, "audit", report_summary, results, codes)
    return EXIT_OK if not summary["failed"] else EXIT_FAILURE


def cmd_codes(config: RunConfig, logger: logging.Logger, dump: bool = False) -> int:
    """List registered codes; optionally dump codewords as JSON."""
    names = resolve_codes(config) if config.codes else list(CODE_NAMES)

    table = Table(show_header=True)
    for column in ("Code", "n", "K", "k", "Additive", "Self-compl.", "Stabilizers"):
        table.add_column(column)
    for name in names:
        code = build_code(name)
        stabilizers = "-"
        if code.additive:
            stabilizers = "[green]OK[/green]" if verify_stabilizer(code).passed else "[red]FAIL[/red]"
        table.add_row(
            name, str(code.n), str(code.K), f"{code.k:g}",
            "yes" if code.additive else "no",
            "yes" if is_self_complementary(code) else "no",
            stabilizers,
        )
    console.print(table)

    if dump:
        out = config.output_path(f"codewords_{get_timestamp()}.json")
        try:
            ensure_directory(str(out.parent))
            out.write_text(safe_json_dump([dump_codewords(build_code(n)) for n in names]), encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot write {out}: {e}") from e
        console.print(f"\n[bold green]✓ Codewords written:[/bold green] {out}")
    return EXIT_OK


def _write_report(config: RunConfig, kind: str, summary: Dict[str, Any], results: List[Dict[str, Any]], codes: List[str]) -> None:
    if config.report == "none":
        return
    console.print("\n[bold cyan]Generating reports...[/bold cyan]")
    report_files = ReportGenerator().generate(kind, summary, results, codes, format=config.report)
    console.print("[bold green]✓ Reports generated:[/bold green]")
    for format_type, file_path in report_files.items():
        console.print(f"  • {format_type.upper()}: {file_path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gadqec",
        description="Approximate QEC under generalized amplitude damping",
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    subparsers = parser.add_subparsers(dest='command', help='Command to execute')

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument('--config', help='Run config file (key=value or YAML)')
        sub.add_argument('--threads', type=int, help='Worker threads (env: GADQEC_THREADS)')
        sub.add_argument('--verbose', action='store_true', default=None, help='Enable verbose logging')

    sweep_parser = subparsers.add_parser('sweep', help='Fidelity sweep over a gamma grid')
    sweep_parser.add_argument('--code', dest='codes', help='Comma-separated code names')
    sweep_parser.add_argument('--gamma', help='Grid start:end:count (epsilon values with --temp-sweep)')
    sweep_parser.add_argument('--eps-rule', help='fixed:<v> or prop:<c>')
    sweep_parser.add_argument('--temp-sweep', action='store_true', default=None,
                              help='Sweep epsilon with gamma tied by --gamma-rule; emits both estimators')
    sweep_parser.add_argument('--gamma-rule', help='Gamma as a multiple of epsilon, e.g. 10eps')
    sweep_parser.add_argument('--max-weight', help='Largest error weight summed, or "full"')
    sweep_parser.add_argument('--estimator', choices=['exact', 'scheme'], help='Fidelity estimator')
    sweep_parser.add_argument('--out', help='Output file')
    sweep_parser.add_argument('--format', choices=['csv', 'json'], help='Output format')
    common(sweep_parser)

    verify_parser = subparsers.add_parser('verify', help='Check leading coefficients against the analytic estimates')
    verify_parser.add_argument('--code', dest='codes', help='Comma-separated code names')
    verify_parser.add_argument('--all', action='store_true', help='Verify every code with an estimate')
    verify_parser.add_argument('--polynomials', action='store_true', help='Also compare against the exact polynomials')
    verify_parser.add_argument('--no-report', action='store_true', help='Skip report generation')
    common(verify_parser)

    entbreak_parser = subparsers.add_parser('entbreak', help='Entanglement-breaking map over (gamma, p)')
    entbreak_parser.add_argument('--gamma', help='Gamma grid start:end:count')
    entbreak_parser.add_argument('--p-grid', default=DEFAULT_ENTBREAK_GRID, help='p grid start:end:count')
    entbreak_parser.add_argument('--out', help='Output file')
    entbreak_parser.add_argument('--format', choices=['csv', 'json'], help='Output format')
    common(entbreak_parser)

    audit_parser = subparsers.add_parser('audit', help='Re-derive and diff correctable-set exclusions')
    audit_parser.add_argument('--code', dest='codes', help='Comma-separated code names')
    audit_parser.add_argument('--all', action='store_true', help='Audit every registered code')
    audit_parser.add_argument('--no-report', action='store_true', help='Skip report generation')
    common(audit_parser)

    codes_parser = subparsers.add_parser('codes', help='List registered codes')
    codes_parser.add_argument('--code', dest='codes', help='Comma-separated code names')
    codes_parser.add_argument('--dump', action='store_true', help='Write codewords as JSON')
    codes_parser.add_argument('--out', help='Output file for --dump')
    common(codes_parser)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, environment, --config and flags."""
    flags = {k: v for k, v in vars(args).items() if k not in ('config', 'all', 'polynomials', 'no_report', 'p_grid', 'dump')}
    if getattr(args, 'all', False):
        flags['codes'] = list(VERIFIED_CODES if args.command == 'verify' else CODE_NAMES)
    if getattr(args, 'no_report', False):
        flags['report'] = 'none'
    config = load_config(args.config, flags)
    if args.command == 'entbreak' and not getattr(args, 'gamma', None):
        config.gamma = DEFAULT_ENTBREAK_GRID
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    load_env()

    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(EXIT_FAILURE)

    try:
        config = config_from_args(args)
    except ConfigError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        sys.exit(EXIT_USAGE)

    logger = setup_logging(bool(config.verbose))

    try:
        if args.command == 'sweep':
            code = cmd_sweep(config, logger, gamma_given=args.gamma is not None or config.gamma != DEFAULT_GAMMA_GRID)
        elif args.command == 'verify':
            code = cmd_verify(config, logger, polynomials=args.polynomials)
        elif args.command == 'entbreak':
            code = cmd_entbreak(config, logger, args.p_grid)
        elif args.command == 'audit':
            code = cmd_audit(config, logger)
        else:
            code = cmd_codes(config, logger, dump=args.dump)

    except KeyboardInterrupt:
        console.print("\n[yellow]Operation cancelled by user[/yellow]")
        sys.exit(EXIT_OK)

    except ConfigError as e:
        console.print(f"\n[bold red]Error:[/bold red] {e}")
        logger.error(f"Usage error: {e}")
        sys.exit(EXIT_USAGE)

    except Exception as e:
        console.print(f"\n[bold red]Error:[/bold red] {str(e)}")
        logger.exception("Unexpected error occurred")
        sys.exit(EXIT_FAILURE)

    sys.exit(code)


if __name__ == "__main__":
    main()
