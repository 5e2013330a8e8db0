from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import typer

from .closed_form import (
    closed_form_norms,
    min_damping_ratio,
    regime_boundaries,
    resonant_peak_frequency,
    smib_modal_parameters,
    system_eigenvalues,
)
from .config import SwingBenchConfig
from .exceptions import SwingBenchError, ValidationError
from .network import NetworkSpec, laplacian_spectrum
from .oracles import bode_table, dense_poles, h2_gramian, hinf_search, match_poles, numeric_damping_ratios
from .report import (
    EigenAnalysis,
    InputEcho,
    ModeReport,
    NormReport,
    OutputReport,
    RunReport,
    dumps_json,
    dumps_report,
    is_discrepant,
    write_csv,
)
from .schema import parse_network
from .sweeps import (
    Grid,
    Metric,
    SweepParameter,
    SweepPlan,
    SweepTable,
    ShapeVerdict,
    combined_sweep,
    figure_shape_suite,
    norm_sweep,
    pole_rows,
    root_locus,
)
from .system import OutputKind, assemble
from .validation import run_validation

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
EXIT_INPUT_ERROR = 2
EXIT_DISCREPANCY = 3

BODE_COLUMNS = ("omega", "sigma_max")
ROOT_LOCUS_COLUMNS = ("M", "mode", "re1", "im1", "re2", "im2")
SWEEP_COLUMNS = (
    "param", "value", "h2_closed", "h2_oracle", "hinf_closed", "hinf_oracle", "regime", "zeta_min", "oracle_row",
)
COMBINED_COLUMNS = ("M", "h2_oracle", "hinf_oracle")

app = typer.Typer(help="Stability metrics of linearized swing networks (closed forms vs numerical oracles).")

_handlers: List[logging.Handler] = []


def _click_exceptions(name: str) -> Tuple[type, ...]:
    """
    ``name`` from the installed click and from the click typer builds its
    commands with.  Newer typer ships its own copy, whose classes are unrelated
    to the installed ones.
    """
    found = {getattr(click.exceptions, name)}
    for cls in typer.BadParameter.__mro__:
        module = sys.modules.get(cls.__module__)
        if module is not None and isinstance(getattr(module, name, None), type):
            found.add(getattr(module, name))
    return tuple(found)


USAGE_ERRORS = _click_exceptions("ClickException")
ABORTS = _click_exceptions("Abort")


class DiscrepancyFound(Exception):
    def __init__(self, names: Sequence[str]) -> None:
        super().__init__(f"closed form and oracle disagree for {', '.join(names)}")
        self.names = list(names)


# ------------------------------------------------------------------ options
def _net_option() -> Any:
    return typer.Option(None, "--net", help="Network JSON file or preset string such as complete:10.")


def _config_option() -> Any:
    return typer.Option(None, "--config", help="YAML file overriding the default configuration.")


def _verbose_option() -> Any:
    return typer.Option(False, "--verbose", "-v", help="Log debug detail to stderr.")


def _out_option(what: str) -> Any:
    return typer.Option(None, "--out", help=f"CSV file for the {what} table (embedded in the report if omitted).")


def _strict_option() -> Any:
    return typer.Option(False, "--strict", help="Exit 3 when a closed form and its oracle disagree.")


def _allow_known_option() -> Any:
    return typer.Option(
        False, "--allow-known-discrepancies", help="With --strict, ignore the documented phase H2 n vs n-1 gap."
    )


def _setup(config: Optional[Path], verbose: bool) -> SwingBenchConfig:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    package_logger = logging.getLogger("swingbench")
    package_logger.addHandler(handler)
    package_logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    _handlers.append(handler)
    return SwingBenchConfig.from_yaml(config) if config else SwingBenchConfig()


def _load_spec(
    cfg: SwingBenchConfig,
    net: Optional[str],
    inertia: Optional[float],
    damping: Optional[float],
    susceptance: Optional[float] = None,
    kappa: Optional[float] = None,
) -> NetworkSpec:
    if net is None:
        if susceptance is None:
            raise ValidationError("Give a network with --net, or --B for the single-machine infinite-bus system")
        spec = NetworkSpec.smib(
            inertia if inertia is not None else cfg.network["inertia"],
            damping if damping is not None else cfg.network["damping"],
            susceptance,
        )
        return spec.with_parameters(kappa=kappa)
    return parse_network(
        net,
        inertia=inertia,
        damping=damping,
        kappa=kappa,
        bus_susceptance=susceptance,
        defaults=cfg.network,
        connectivity_rtol=cfg.network["connectivity_rtol"],
    )


# ------------------------------------------------------------------ reports
def _input_echo(spec: NetworkSpec) -> InputEcho:
    return InputEcho(
        spec_hash=spec.spec_hash(),
        n=spec.n,
        edges=len(spec.edges),
        inertia=spec.inertia,
        damping=spec.damping,
        kappa=spec.kappa,
        bus_susceptance=spec.bus_susceptance,
    )


def _eigen_analysis(spec: NetworkSpec) -> EigenAnalysis:
    spectrum = laplacian_spectrum(spec)
    pairs = system_eigenvalues(spec.inertia, spec.damping, spectrum)
    modes = [
        ModeReport(
            index=pair.index,
            eigenvalue=pair.eigenvalue,
            poles=[[s.real, s.imag] for s in pair.poles],
            damping_ratio=pair.damping_ratio,
            natural_frequency=pair.natural_frequency,
        )
        for pair in pairs
    ]
    numeric = dense_poles(assemble(spec, OutputKind.FREQUENCY))
    ratios = numeric_damping_ratios(numeric)
    return EigenAnalysis(
        modes=modes,
        zeta_min=min_damping_ratio(spec.inertia, spec.damping, spectrum.lambda_max),
        zeta_min_numeric=float(ratios.min()) if ratios.size else None,
        pole_match_error=match_poles([s for pair in pairs for s in pair.poles], numeric),
    )


def _output_report(spec: NetworkSpec, output: OutputKind, cfg: SwingBenchConfig) -> OutputReport:
    oracle_cfg = cfg.oracle
    closed = closed_form_norms(spec, output)

    gramian = h2_gramian(spec, output)
    h2_tol = oracle_cfg["h2_rel_tol"] * gramian.h2
    rel_tol = oracle_cfg["hinf_rel_tol"]
    search = hinf_search(
        spec,
        output,
        rel_tol,
        grid_points=oracle_cfg["grid_points"],
        grid_span=oracle_cfg["grid_span"],
        omega_xtol=oracle_cfg["omega_xtol"],
    )
    hinf_tol = max(search.tolerance, rel_tol) * search.hinf

    h2 = NormReport(oracle=gramian.h2, oracle_tolerance=h2_tol)
    hinf = NormReport(
        oracle=search.hinf,
        oracle_tolerance=hinf_tol,
        argmax_omega=search.argmax_omega,
        governing_mode=search.governing_mode,
    )
    if closed is not None:
        closed_h2, closed_hinf = closed
        modal = closed_h2.annotations.get("modal_h2")
        h2_flag = is_discrepant(closed_h2.value, gramian.h2, h2_tol)
        h2 = h2.model_copy(
            update={
                "closed_form": closed_h2.value,
                "regime": closed_h2.regime.value,
                "source": closed_h2.source,
                "annotations": dict(closed_h2.annotations),
                "discrepancy": h2_flag,
                "known_discrepancy": h2_flag and modal is not None and not is_discrepant(modal, gramian.h2, h2_tol),
            }
        )
        hinf = hinf.model_copy(
            update={
                "closed_form": closed_hinf.value,
                "regime": closed_hinf.regime.value,
                "source": closed_hinf.source,
                "discrepancy": is_discrepant(closed_hinf.value, search.hinf, hinf_tol),
            }
        )
        if h2.known_discrepancy:
            logger.info(f"{output.value} H2: printed closed form differs from the modal value by the n vs n-1 gap")
        elif h2_flag:
            logger.warning(f"{output.value} H2: closed form {closed_h2.value:.12g} vs oracle {gramian.h2:.12g}")
    return OutputReport(output=output.value, h2=h2, hinf=hinf)


def _emit(report: RunReport, cfg: SwingBenchConfig) -> None:
    typer.echo(dumps_report(report, digits=int(cfg.output["significant_digits"])))


def _finish(report: RunReport, cfg: SwingBenchConfig, strict: bool, allow_known: bool) -> int:
    _emit(report, cfg)
    if strict:
        flagged = report.discrepancies(allow_known=allow_known)
        if flagged:
            raise DiscrepancyFound(flagged)
    return 0


def _table(
    cfg: SwingBenchConfig,
    report: RunReport,
    name: str,
    header: Sequence[str],
    rows: List[Sequence[Any]],
    out: Optional[Path],
) -> None:
    digits = int(cfg.output["significant_digits"])
    if out is not None:
        report.artifacts[name] = str(write_csv(out, header, rows, digits))
    else:
        report.details[name] = {"header": list(header), "rows": [list(row) for row in rows]}


def _verdicts(verdicts: Sequence[ShapeVerdict]) -> List[Dict[str, Any]]:
    return [
        {
            "column": v.column,
            "property": v.property.value,
            "interval": list(v.interval),
            "passed": v.passed,
            "max_violation": v.max_violation,
            "points": v.points,
        }
        for v in verdicts
    ]


# ----------------------------------------------------------------- commands
@app.command("analyze")
def analyze(
    net: Optional[str] = _net_option(),
    inertia: Optional[float] = typer.Option(None, "--M", help="Inertia M (overrides the network file)."),
    damping: Optional[float] = typer.Option(None, "--D", help="Damping D (overrides the network file)."),
    susceptance: Optional[float] = typer.Option(None, "--B", help="Infinite-bus tie susceptance on bus 0."),
    kappa: Optional[float] = typer.Option(None, "--kappa", help="Frequency weight of the combined output."),
    outputs: Optional[List[OutputKind]] = typer.Option(None, "--output", help="Output kind(s); default all."),
    strict: bool = _strict_option(),
    allow_known: bool = _allow_known_option(),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Eigenvalues, damping ratios and every norm of one network."""
    cfg = _setup(config, verbose)
    spec = _load_spec(cfg, net, inertia, damping, susceptance, kappa)
    kinds = outputs or list(OutputKind)
    report = RunReport(
        command="analyze",
        input=_input_echo(spec),
        eigen=_eigen_analysis(spec),
        norms=[_output_report(spec, kind, cfg) for kind in kinds],
    )
    return _finish(report, cfg, strict, allow_known)


@app.command("norms")
def norms(
    net: Optional[str] = _net_option(),
    inertia: Optional[float] = typer.Option(None, "--M", help="Inertia M (overrides the network file)."),
    damping: Optional[float] = typer.Option(None, "--D", help="Damping D (overrides the network file)."),
    susceptance: Optional[float] = typer.Option(None, "--B", help="Infinite-bus tie susceptance on bus 0."),
    kappa: Optional[float] = typer.Option(None, "--kappa", help="Frequency weight of the combined output."),
    output: OutputKind = typer.Option(OutputKind.PHASE, "--output", help="Output kind."),
    strict: bool = _strict_option(),
    allow_known: bool = _allow_known_option(),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Closed-form and oracle H2 / H-infinity norms for one output."""
    cfg = _setup(config, verbose)
    spec = _load_spec(cfg, net, inertia, damping, susceptance, kappa)
    report = RunReport(command="norms", input=_input_echo(spec), norms=[_output_report(spec, output, cfg)])
    return _finish(report, cfg, strict, allow_known)


@app.command("smib")
def smib(
    inertia: float = typer.Option(..., "--M", help="Inertia M."),
    damping: float = typer.Option(..., "--D", help="Damping D."),
    susceptance: float = typer.Option(..., "--B", help="Line susceptance to the infinite bus."),
    output: OutputKind = typer.Option(OutputKind.PHASE, "--output", help="Output kind."),
    strict: bool = _strict_option(),
    allow_known: bool = _allow_known_option(),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Single-machine infinite-bus norms, modal parameters and resonant peak."""
    cfg = _setup(config, verbose)
    spec = NetworkSpec.smib(inertia, damping, susceptance)
    omega_n, zeta = smib_modal_parameters(inertia, damping, susceptance)
    flat_until, convex_until = regime_boundaries(damping, susceptance)
    report = RunReport(
        command="smib",
        input=_input_echo(spec),
        eigen=_eigen_analysis(spec),
        norms=[_output_report(spec, output, cfg)],
        details={
            "omega_n": omega_n,
            "zeta": zeta,
            "omega_peak": resonant_peak_frequency(inertia, damping, susceptance),
            "hinf_flat_until_M": flat_until,
            "convexity_change_at_M": convex_until,
        },
    )
    return _finish(report, cfg, strict, allow_known)


@app.command("bode")
def bode(
    net: Optional[str] = _net_option(),
    inertia: Optional[float] = typer.Option(None, "--M", help="Inertia M."),
    damping: Optional[float] = typer.Option(None, "--D", help="Damping D."),
    susceptance: Optional[float] = typer.Option(None, "--B", help="Infinite-bus tie susceptance (SMIB without --net)."),
    kappa: Optional[float] = typer.Option(None, "--kappa", help="Frequency weight of the combined output."),
    output: OutputKind = typer.Option(OutputKind.PHASE, "--output", help="Output kind."),
    omega_min: float = typer.Option(0.01, "--omega-min", help="Lowest frequency (rad/s)."),
    omega_max: float = typer.Option(100.0, "--omega-max", help="Highest frequency (rad/s)."),
    points: int = typer.Option(1000, "--points", help="Log-spaced frequency points."),
    dense: bool = typer.Option(False, "--dense", help="Evaluate the dense 2n-state model instead of the modes."),
    out: Optional[Path] = _out_option("omega,sigma_max"),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Largest singular value of the frequency response on a log grid."""
    cfg = _setup(config, verbose)
    spec = _load_spec(cfg, net, inertia, damping, susceptance, kappa)
    rows = bode_table(spec, output, omega_min, omega_max, points, dense=dense)
    peak = max(rows, key=lambda row: row.sigma_max)
    report = RunReport(
        command="bode",
        input=_input_echo(spec),
        details={"output": output.value, "peak_omega": peak.omega, "peak_sigma_max": peak.sigma_max},
    )
    _table(cfg, report, "bode", BODE_COLUMNS, [(row.omega, row.sigma_max) for row in rows], out)
    _emit(report, cfg)
    return 0


@app.command("rootlocus")
def rootlocus(
    net: Optional[str] = _net_option(),
    damping: Optional[float] = typer.Option(None, "--D", help="Damping D."),
    susceptance: Optional[float] = typer.Option(None, "--B", help="SMIB susceptance (used without --net)."),
    m_min: float = typer.Option(0.01, "--M-min", help="Smallest inertia."),
    m_max: float = typer.Option(100.0, "--M-max", help="Largest inertia."),
    points: Optional[int] = typer.Option(None, "--points", help="Grid points (default from config)."),
    spacing: Optional[str] = typer.Option(None, "--spacing", help="log or linear (default from config)."),
    out: Optional[Path] = _out_option("M,mode,re1,im1,re2,im2"),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Closed-form poles as the inertia varies."""
    cfg = _setup(config, verbose)
    grid = Grid(m_min, m_max, points or cfg.sweep["points"], spacing or cfg.sweep["spacing"])
    D = damping if damping is not None else cfg.network["damping"]
    if net is not None:
        spec = _load_spec(cfg, net, None, D, susceptance)
        rows = root_locus(grid.values(), D, spec=spec)
        echo: Optional[InputEcho] = _input_echo(spec)
    else:
        if susceptance is None:
            raise ValidationError("Give a network with --net, or --B for the single-machine infinite-bus system")
        rows = root_locus(grid.values(), D, susceptance=susceptance)
        echo = None
    report = RunReport(command="rootlocus", input=echo)
    _table(
        cfg,
        report,
        "rootlocus",
        ROOT_LOCUS_COLUMNS,
        [(r.inertia, r.mode, r.re1, r.im1, r.re2, r.im2) for r in rows],
        out,
    )
    _emit(report, cfg)
    return 0


def _sweep_rows(table: SweepTable) -> List[Tuple[Any, ...]]:
    return [
        (
            table.parameter.value,
            row.value,
            row.h2_closed,
            row.h2_oracle,
            row.hinf_closed,
            row.hinf_oracle,
            row.regime,
            row.zeta_min,
            row.oracle_row,
        )
        for row in table.rows
    ]


@app.command("sweep")
def sweep(
    net: Optional[str] = _net_option(),
    inertia: Optional[float] = typer.Option(None, "--M", help="Inertia M held fixed when sweeping D."),
    damping: Optional[float] = typer.Option(None, "--D", help="Damping D held fixed when sweeping M."),
    susceptance: Optional[float] = typer.Option(None, "--B", help="Infinite-bus tie susceptance."),
    param: SweepParameter = typer.Option(SweepParameter.INERTIA, "--param", help="Swept parameter, M or D."),
    lo: float = typer.Option(..., "--min", help="Smallest parameter value."),
    hi: float = typer.Option(..., "--max", help="Largest parameter value."),
    points: Optional[int] = typer.Option(None, "--points", help="Grid points (default from config)."),
    spacing: Optional[str] = typer.Option(None, "--spacing", help="log or linear (default from config)."),
    output: OutputKind = typer.Option(OutputKind.PHASE, "--output", help="Output kind."),
    metrics: str = typer.Option(
        "h2-closed,h2-oracle,hinf-closed,hinf-oracle", "--metrics", help="Comma-separated metric names."
    ),
    oracle_stride: int = typer.Option(1, "--oracle-stride", help="Evaluate oracles on every k-th row."),
    out: Optional[Path] = _out_option("sweep"),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Norms against M or D, with the shape checks that apply."""
    cfg = _setup(config, verbose)
    spec = _load_spec(cfg, net, inertia, damping, susceptance)
    try:
        requested = frozenset(Metric(name.strip()) for name in metrics.split(",") if name.strip())
    except ValueError as e:
        raise ValidationError(f"Unknown metric in --metrics: {e}")
    plan = SweepPlan(
        spec=spec,
        parameter=param,
        grid=Grid(lo, hi, points or cfg.sweep["points"], spacing or cfg.sweep["spacing"]),
        output=output,
        metrics=requested,
        oracle_stride=oracle_stride,
        insert_kink=bool(cfg.sweep["insert_kink"]),
        hinf_rel_tol=cfg.oracle["hinf_rel_tol"],
    )
    table = norm_sweep(plan, threads=cfg.threads(), progress=bool(cfg.sweep["progress"]))
    report = RunReport(
        command="sweep",
        input=_input_echo(spec),
        details={
            "output": output.value,
            "parameter": param.value,
            "kink": table.kink,
            "shape_checks": _verdicts(figure_shape_suite(plan, table)),
        },
    )
    _table(cfg, report, "sweep", SWEEP_COLUMNS, _sweep_rows(table), out)
    if Metric.EIGENVALUES in requested:
        pole_out = out.with_name(f"{out.stem}_poles{out.suffix}") if out is not None else None
        rows = [(r.inertia, r.mode, r.re1, r.im1, r.re2, r.im2) for r in pole_rows(table)]
        _table(cfg, report, "poles", ("value",) + ROOT_LOCUS_COLUMNS[1:], rows, pole_out)
    _emit(report, cfg)
    return 0


@app.command("combined")
def combined(
    net: Optional[str] = _net_option(),
    damping: Optional[float] = typer.Option(None, "--D", help="Damping D."),
    kappa: Optional[float] = typer.Option(None, "--kappa", help="Frequency weight (default from config)."),
    m_min: float = typer.Option(0.1, "--M-min", help="Smallest inertia."),
    m_max: float = typer.Option(10.0, "--M-max", help="Largest inertia."),
    points: Optional[int] = typer.Option(None, "--points", help="Grid points (default from config)."),
    out: Optional[Path] = _out_option("M,h2_oracle,hinf_oracle"),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Oracle norms of the combined phase/frequency output against inertia."""
    cfg = _setup(config, verbose)
    spec = _load_spec(cfg, net, None, damping)
    k = kappa if kappa is not None else cfg.network["kappa"]
    grid = Grid(m_min, m_max, points or cfg.sweep["points"], cfg.sweep["spacing"])
    table = combined_sweep(
        spec,
        k,
        grid,
        threads=cfg.threads(),
        progress=bool(cfg.sweep["progress"]),
        hinf_rel_tol=cfg.oracle["hinf_rel_tol"],
    )
    plan = SweepPlan(spec=spec, parameter=SweepParameter.INERTIA, grid=grid, output=OutputKind.COMBINED)
    report = RunReport(
        command="combined",
        input=_input_echo(spec.with_parameters(kappa=k)),
        details={"kappa": k, "shape_checks": _verdicts(figure_shape_suite(plan, table))},
    )
    rows = [(row.value, row.h2_oracle, row.hinf_oracle) for row in table.rows]
    _table(cfg, report, "combined", COMBINED_COLUMNS, rows, out)
    _emit(report, cfg)
    return 0


@app.command("validate")
def validate(
    count: int = typer.Option(200, "--count", help="Number of random networks."),
    seed: int = typer.Option(0, "--seed", help="Seed of the network generator."),
    n_max: int = typer.Option(50, "--n-max", help="Largest network size."),
    impulse_every: int = typer.Option(10, "--impulse-every", help="Run the impulse-energy oracle every k-th case."),
    config: Optional[Path] = _config_option(),
    verbose: bool = _verbose_option(),
) -> int:
    """Check every closed form against its oracle on seeded random networks."""
    cfg = _setup(config, verbose)
    summary = run_validation(
        count,
        seed,
        n_max=n_max,
        hinf_rel_tol=cfg.oracle["hinf_rel_tol"],
        impulse_every=impulse_every,
        progress=bool(cfg.sweep["progress"]),
        oracle_options=cfg.oracle,
    )
    _emit(RunReport(command="validate", details=summary.to_dict()), cfg)
    if not summary.passed:
        raise DiscrepancyFound(summary.failures())
    return 0


# -------------------------------------------------------------------- entry
def _error_line(kind: str, message: str, **extra: Any) -> None:
    payload: Dict[str, Any] = {"error": kind, "message": message}
    payload.update(extra)
    typer.echo(dumps_json(payload, indent=None), err=True)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI on ``argv`` and return the exit code instead of exiting."""
    args = list(sys.argv[1:] if argv is None else argv)
    command = typer.main.get_command(app)
    try:
        result = command.main(args=args, prog_name="swingbench", standalone_mode=False)
    except SwingBenchError as e:
        logger.debug("Input error", exc_info=True)
        _error_line(type(e).__name__, str(e))
        return EXIT_INPUT_ERROR
    except DiscrepancyFound as e:
        _error_line("Discrepancy", str(e), flagged=e.names)
        return EXIT_DISCREPANCY
    except ABORTS:
        _error_line("Aborted", "interrupted")
        return 1
    except USAGE_ERRORS as e:
        _error_line(type(e).__name__, e.format_message())
        return EXIT_INPUT_ERROR
    except np.linalg.LinAlgError as e:
        _error_line("LinAlgError", str(e))
        return EXIT_INPUT_ERROR
    finally:
        package_logger = logging.getLogger("swingbench")
        while _handlers:
            package_logger.removeHandler(_handlers.pop())
    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
