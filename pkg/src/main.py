"""
Command line for the transiogram toolkit.

    python -m src.main scan data/fixtures/two_by_two.grid --lag 0 1 --maxlag 1
    python -m src.main fit output/scan.csv --kernel gaussian --lscv
    python -m src.main fit output/scan.csv --kernel epanechnikov --selector rule-of-thumb
    python -m src.main validate data/models/verdict_table.yaml --report output/validity.md
    python -m src.main shape map.grid --class 1 --nlags 2
    python -m src.main --seed 7 simulate --rows 256 --cols 256 --range 10 --cutoffs 0
    python -m src.main check

Exit status: 0 success, 1 failed check (`check`, `validate --strict`), 2 input error,
3 numerical infeasibility. Every subcommand that writes a file also writes
<output>.manifest.json.
"""

import functools
import logging
import math
import os
import sys
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
from pydantic import ValidationError
from rich.console import Console
from rich.live import Live
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .empirical import (
    EmpiricalTransiogram,
    directional_curve,
    omnidirectional_curve,
    read_curve_csv,
    scan_lag,
    write_curve_csv,
)
from .errors import (
    ConfigError,
    FractalBoundaryError,
    InfeasibleError,
    InputError,
    NotEvaluableError,
    TransiogramError,
)
from .fitting import (
    BandwidthSelector,
    KernelFamily,
    NonparametricModel,
    default_bandwidth_grid,
    fit_table,
    make_kernel,
    nugget_estimate,
    select_bandwidth,
)
from .grfsim import (
    METHOD_AUTO,
    SIMULATION_METHODS,
    CorrelogramFamily,
    CorrelogramSpec,
    ThresholdSet,
    simulate_grf,
    truncate,
    truncate_to_proportions,
)
from .grid import CategoricalGrid, LagVector, proportions, read_grid_file, write_grid_file
from .manifest import RunManifest
from .models import load_model_configs
from .progress_tracker import ProgressTracker
from .settings import Settings, load_settings
from .shape import (
    METHOD_RASTER,
    psi_directional,
    psi_isotropic,
    raster_perimeter_area,
    transition_rate,
)
from .system_check import SystemRequirements
from .template_renderer import TemplateRenderer
from .utils import default_output_path, prepare_output_path, save_json, save_yaml
from .validity import ValidityFailure, validate_model

logger = logging.getLogger(__name__)

EXIT_FAILED_CHECK = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3

# E, S, SE and SW unit steps (row index grows downward)
DEFAULT_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))

console = Console()
err_console = Console(stderr=True)


@dataclass
class RunContext:
    """Global options shared by every subcommand."""
    settings: Settings
    seed: Optional[int]
    output: Optional[str]
    config_path: Optional[str]
    started: float = field(default_factory=time.perf_counter)

    @property
    def workers(self) -> int:
        return self.settings.worker_count()

    def output_path(self, subcommand: str, extension: str) -> str:
        if self.output:
            return prepare_output_path(self.output)
        return default_output_path(self.settings.output.directory, subcommand, extension)

    def manifest(self, subcommand: str, parameters: Dict[str, Any], inputs: Sequence[str],
                 seed: Optional[int] = None) -> RunManifest:
        params = dict(parameters)
        params["threads"] = self.settings.threads
        return RunManifest(subcommand=subcommand, parameters=params, inputs=list(inputs),
                           seed=self.seed if seed is None else seed)

    def finish(self, manifest: RunManifest, output: str) -> None:
        path = manifest.write(output, started_at=self.started)
        logger.info("manifest written to %s", path)


def setup_logging(level: str, verbose: int) -> None:
    """Route library logging through rich on stderr."""
    if verbose >= 2:
        level = "DEBUG"
    elif verbose == 1:
        level = "INFO"
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False, rich_tracebacks=True)],
        force=True,
    )


def handle_errors(func):
    """Map the exception hierarchy onto exit codes."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except InfeasibleError as e:
            err_console.print(f"[red]✗ numerically infeasible:[/red] {e}")
            sys.exit(EXIT_INFEASIBLE)
        except ValidityFailure as e:
            err_console.print(f"[red]✗ {e}[/red]")
            sys.exit(EXIT_FAILED_CHECK)
        except (TransiogramError, ValueError, OSError) as e:
            err_console.print(f"[red]✗ {type(e).__name__}:[/red] {e}")
            sys.exit(EXIT_INPUT)
    return wrapper


def parse_floats(text: Optional[str], name: str) -> Optional[List[float]]:
    """
    Parse '0.5,1,1.5' or 'start:stop:step' (stop included) into floats.

    Examples:
        >>> parse_floats("0:1:0.25", "--hgrid")
        [0.0, 0.25, 0.5, 0.75, 1.0]
    """
    if text is None:
        return None
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("need start <= stop and step > 0")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(count)]
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise click.BadParameter(f"{text!r}: {e}", param_hint=name) from e


def _validated(model_cls, **kwargs):
    """Construct a pydantic record, turning validation failures into InputError."""
    try:
        return model_cls(**kwargs)
    except ValidationError as e:
        raise InputError(f"invalid {model_cls.__name__}: {e.errors()[0]['msg']}") from e


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="transiogram")
@click.option("--seed", type=int, default=None, help="Seed for every random choice of the run.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Output file (default: <output dir>/<subcommand>.<ext>).")
@click.option("--threads", type=click.IntRange(min=0), default=None,
              help="Worker threads; 0 = one per CPU. Never changes results.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="config.json to use instead of $TRANSIOGRAM_CONFIG / ./config.json.")
@click.option("--verbose", "-v", count=True, help="-v for INFO, -vv for DEBUG logging.")
@click.pass_context
def cli(ctx: click.Context, seed, output, threads, config_path, verbose):
    """Estimate, fit, validate and simulate transiograms of categorical raster maps."""
    try:
        if config_path and not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}")
        settings = load_settings(config_path)
    except ConfigError as e:
        err_console.print(f"[red]✗ {e}[/red]")
        ctx.exit(EXIT_INPUT)

    if threads is not None:
        settings.threads = threads
    setup_logging(settings.logging.level, verbose)
    ctx.obj = RunContext(settings=settings, seed=seed, output=output, config_path=config_path)

    if settings.system_requirements.check_on_startup and ctx.invoked_subcommand != "check":
        checker = SystemRequirements(config_path=config_path, console=err_console)
        if not checker.run_all_checks():
            err_console.print("\n❌ System requirements check failed.", style="bold red")
            ctx.exit(EXIT_FAILED_CHECK)


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def _zero_lag_curve(grid: CategoricalGrid) -> EmpiricalTransiogram:
    lag = LagVector.zero(grid.cellsize)
    result = scan_lag(grid, lag)
    return EmpiricalTransiogram.from_counts(result.counts[:, :, None], [0.0], [lag])


@cli.command()
@click.argument("gridfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--lag", nargs=2, type=int, default=None, metavar="DROW DCOL",
              help="Unit step of a directional scan (default 0 1).")
@click.option("--maxlag", type=click.IntRange(min=1), default=10, show_default=True,
              help="Number of multiples of the step.")
@click.option("--omni", "bins", default=None, metavar="EDGES",
              help="Omnidirectional bin edges: 'e0,e1,...' or 'start:stop:step'.")
@click.option("--reverse", is_flag=True, help="Scan the opposite direction -h.")
@click.pass_obj
@handle_errors
def scan(run: RunContext, gridfile, lag, maxlag, bins, reverse):
    """Exhaustive empirical transiogram of GRIDFILE, written as curve CSV."""
    if lag is not None and bins is not None:
        raise click.UsageError("--lag and --omni are mutually exclusive")

    grid = read_grid_file(gridfile)
    edges = parse_floats(bins, "--omni")
    if edges is not None:
        curve = omnidirectional_curve(grid, edges, workers=run.workers)
    else:
        drow, dcol = lag if lag is not None else (0, 1)
        if reverse:
            drow, dcol = -drow, -dcol
        if drow == 0 and dcol == 0:
            curve = _zero_lag_curve(grid)
        else:
            curve = directional_curve(grid, (drow, dcol), maxlag, workers=run.workers)

    output = run.output_path("scan", "csv")
    write_curve_csv(curve, output)

    manifest = run.manifest("scan", {
        "lag": list(lag) if lag is not None else None,
        "maxlag": maxlag, "omni": edges, "reverse": reverse, "kind": curve.kind,
    }, [gridfile])
    manifest.add_output(output)
    run.finish(manifest, output)

    console.print(f"✓ {curve.kind} curve: {grid.nclasses} classes x {curve.nlags} lags → {output}")


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _nugget_table(model: NonparametricModel) -> Table:
    table = Table(title="Nugget at the origin", show_header=True, header_style="bold magenta")
    table.add_column("Tail", style="cyan")
    table.add_column("Head", style="cyan")
    table.add_column("Nugget", justify="right")
    K = model.nclasses
    for k in range(1, K + 1):
        for kp in range(1, K + 1):
            try:
                value = f"{nugget_estimate(model, k, kp):.4g}"
            except NotEvaluableError:
                value = "[dim]n/a[/dim]"
            table.add_row(str(k), str(kp), value)
    return table


@cli.command()
@click.argument("curvecsv", type=click.Path(exists=True, dir_okay=False))
@click.option("--kernel", "family", default=None,
              type=click.Choice([f.value for f in KernelFamily], case_sensitive=False),
              help="Kernel family (default from config.json).")
@click.option("--bandwidth", type=float, default=None, help="Kernel bandwidth r in map units.")
@click.option("--selector", default=None,
              type=click.Choice([s.value for s in BandwidthSelector], case_sensitive=False),
              help="Select r automatically: least-squares CV, likelihood CV or normal-reference rule of thumb.")
@click.option("--lscv", is_flag=True, help="Shorthand for --selector lscv.")
@click.option("--candidates", default=None, metavar="GRID",
              help="Cross-validation candidate bandwidths (default: geometric grid over the lags).")
@click.option("--hgrid", default=None, metavar="GRID",
              help="Lags to evaluate: 'h0,h1,...' or 'start:stop:step' (default 0..max lag, 101 points).")
@click.option("--weight-by-pairs", is_flag=True, help="Weight samples by their pair counts.")
@click.pass_obj
@handle_errors
def fit(run: RunContext, curvecsv, family, bandwidth, selector, lscv, candidates, hgrid, weight_by_pairs):
    """Kernel-regress the curves of CURVECSV onto a lag grid."""
    if lscv:
        if selector not in (None, BandwidthSelector.LSCV.value):
            raise click.UsageError(f"--lscv conflicts with --selector {selector}")
        selector = BandwidthSelector.LSCV.value
    if (bandwidth is None) == (selector is None):
        raise click.UsageError("give exactly one of --bandwidth or --selector (--lscv)")
    selector = BandwidthSelector(selector.lower()) if selector else None
    if candidates is not None and selector in (None, BandwidthSelector.RULE_OF_THUMB):
        raise click.UsageError("--candidates only applies to the cross-validated selectors")

    settings = run.settings
    family = (family or settings.fitting.default_kernel).lower()
    samples = read_curve_csv(curvecsv, unit_sum_tol=settings.tolerances.unit_sum)

    candidate_grid = None
    if selector is not None:
        if selector is not BandwidthSelector.RULE_OF_THUMB:
            candidate_grid = parse_floats(candidates, "--candidates") or default_bandwidth_grid(
                samples, settings.fitting.lscv_grid_size)
        bandwidth = select_bandwidth(samples, family, selector, candidate_grid, workers=run.workers)
        scope = f" ({len(candidate_grid)} candidates)" if candidate_grid else ""
        console.print(f"✓ {selector.value} bandwidth r = {bandwidth:.6g}{scope}")

    model = NonparametricModel(samples=samples, kernel=make_kernel(family, bandwidth),
                               weight_by_pairs=weight_by_pairs)

    hvalues = parse_floats(hgrid, "--hgrid")
    if hvalues is None:
        hmax = float(np.nanmax(samples.distances))
        hvalues = list(np.linspace(0.0, hmax, 101))
    if any(h < 0 for h in hvalues):
        raise InputError("--hgrid lags must be >= 0")

    output = run.output_path("fit", "csv")
    fit_table(model, hvalues).to_csv(output, index=False, na_rep="")

    manifest = run.manifest("fit", {
        "kernel": family, "bandwidth": bandwidth, "selector": selector.value if selector else None,
        "lscv": selector is BandwidthSelector.LSCV, "candidates": candidate_grid,
        "hgrid": [float(h) for h in hvalues], "weight_by_pairs": weight_by_pairs,
    }, [curvecsv])
    manifest.add_output(output)
    run.finish(manifest, output)

    console.print(_nugget_table(model))
    console.print(f"✓ {family} kernel, r = {bandwidth:.6g}, {len(hvalues)} lags → {output}")


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

@cli.command()
@click.argument("modelconfig", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-points", type=click.IntRange(min=2), default=None,
              help="Largest configuration size of the Matheron search.")
@click.option("--random-configurations", type=click.IntRange(min=0), default=None,
              help="Number of seeded random planar configurations.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Also render a Markdown report.")
@click.option("--strict", is_flag=True, help="Exit with status 1 when any model fails.")
@click.pass_obj
@handle_errors
def validate(run: RunContext, modelconfig, max_points, random_configurations, report_path, strict):
    """Audit the parametric models of MODELCONFIG (JSON or YAML)."""
    settings = run.settings
    search = settings.validity_search
    if max_points is not None:
        search.max_points = max_points
    if random_configurations is not None:
        search.random_configurations = random_configurations
    seed = search.seed if run.seed is None else run.seed

    models = load_model_configs(modelconfig)
    tracker = ProgressTracker(total_models=len(models))
    ids = [str(i) for i in range(1, len(models) + 1)]
    for model_id, model in zip(ids, models):
        tracker.add_model(model_id, model.label)

    outer = max(1, min(run.workers, len(models)))
    inner = max(1, run.workers // outer)

    def audit(model_id, model):
        try:
            report = validate_model(model, settings, seed=seed, workers=inner,
                                    on_check=lambda check: tracker.record_check(model_id, check))
        except Exception as e:
            tracker.mark_failed(model_id, str(e))
            raise
        tracker.mark_completed(model_id)
        return report

    with Live(tracker.generate_table(), console=console, refresh_per_second=4) as live:
        with ThreadPoolExecutor(max_workers=outer) as pool:
            futures = [pool.submit(audit, mid, m) for mid, m in zip(ids, models)]
            pending = set(futures)
            while pending:
                _, pending = wait(pending, timeout=0.25, return_when=FIRST_EXCEPTION)
                live.update(tracker.generate_table())
                if any(f.done() and f.exception() is not None for f in futures):
                    break
            reports = [f.result() for f in futures]
        live.update(tracker.generate_table())

    console.print(tracker.get_summary())
    if not all(reports):
        console.print(tracker.generate_detailed_report())

    parameters = {
        "max_points": search.max_points,
        "random_configurations": search.random_configurations,
        "seed": seed,
        "excursion_max_points": search.excursion_max_points,
        "excursion_random_configurations": search.excursion_random_configurations,
        "tolerance_inequality": settings.tolerances.inequality,
        "tolerance_eigenvalue": settings.tolerances.eigenvalue,
    }
    payload = [r.to_dict() for r in reports]

    output = run.output_path("validate", "json")
    save_json(output, {"parameters": parameters, "reports": payload})
    manifest = run.manifest("validate", parameters, [modelconfig], seed=seed)
    manifest.add_output(output)

    if report_path:
        renderer = TemplateRenderer()
        with open(prepare_output_path(report_path), "w", encoding="utf-8") as f:
            f.write(renderer.render_validity_report(payload, parameters))
        manifest.add_output(report_path)
        console.print(f"✓ Markdown report → {report_path}")

    run.finish(manifest, output)
    console.print(f"✓ {sum(1 for r in reports if r)} of {len(reports)} model(s) passed → {output}")

    if strict:
        for report in reports:
            if not report:
                raise ValidityFailure(report)


# ---------------------------------------------------------------------------
# shape
# ---------------------------------------------------------------------------

def _unit_area(grid: CategoricalGrid) -> CategoricalGrid:
    return CategoricalGrid.from_array(grid.labels, cellsize=1.0 / math.sqrt(grid.ncells),
                                      nclasses=grid.nclasses)


@cli.command()
@click.argument("gridfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--class", "classlabel", type=int, required=True, help="Class label k.")
@click.option("--direction", "directions", nargs=2, type=int, multiple=True, metavar="DROW DCOL",
              help="Scan step; repeat for several directions (default: E, S, SE, SW).")
@click.option("--nlags", type=click.IntRange(min=1), default=None,
              help="Smallest lags used in each slope fit (default from config.json).")
@click.option("--native-units", is_flag=True,
              help="Keep the grid cellsize instead of rescaling the map to unit area.")
@click.option("--include-boundary", is_flag=True,
              help="Count map-boundary edges in the raster oracle.")
@click.pass_obj
@handle_errors
def shape(run: RunContext, gridfile, classlabel, directions, nlags, native_units, include_boundary):
    """Transition rates and perimeter-to-area ratio of one class of GRIDFILE."""
    settings = run.settings
    grid = read_grid_file(gridfile)
    grid.check_class(classlabel)
    if not np.any(grid.labels == classlabel):
        raise InputError(f"class {classlabel} is absent from {gridfile}")
    if not native_units:
        grid = _unit_area(grid)

    nlags = nlags or settings.shape.default_nlags
    threshold = settings.shape.fractal_exponent_threshold
    steps = list(directions) or list(DEFAULT_DIRECTIONS)

    rows = []
    rates = []
    for drow, dcol in steps:
        curve = directional_curve(grid, (drow, dcol), nlags, workers=run.workers)
        rate = transition_rate(curve, classlabel, nlags=nlags, fractal_threshold=threshold)
        rates.append(rate)
        rows.append({
            "class": classlabel, "kind": "rate", "drow": drow, "dcol": dcol,
            "direction": rate.direction, "rate": rate.rate, "stderr": rate.stderr,
            "nlags": rate.nlags, "exponent": rate.exponent, "fractal": rate.fractal,
        })

    try:
        metric = psi_isotropic(rates[0]) if len(rates) == 1 else psi_directional(rates)
        rows.append({"class": classlabel, "kind": metric.method, "psi": metric.psi})
        console.print(f"✓ Ψ({metric.method}) = {metric.psi:.6g}")
    except FractalBoundaryError as e:
        err_console.print(f"[yellow]⚠️  {e}; Ψ left empty[/yellow]")
        rows.append({"class": classlabel, "kind": "directional" if len(rates) > 1 else "isotropic",
                     "psi": float("nan")})

    oracle = raster_perimeter_area(grid, classlabel, include_boundary=include_boundary)
    rows.append({"class": classlabel, "kind": METHOD_RASTER, "psi": oracle.psi,
                 "perimeter": oracle.perimeter, "area": oracle.area})
    console.print(f"✓ Ψ({METHOD_RASTER}) = {oracle.psi:.6g}")

    columns = ["class", "kind", "drow", "dcol", "direction", "rate", "stderr", "nlags",
               "exponent", "fractal", "psi", "perimeter", "area"]
    frame = pd.DataFrame(rows, columns=columns).astype(
        {"drow": "Int64", "dcol": "Int64", "nlags": "Int64"})

    output = run.output_path("shape", "csv")
    frame.to_csv(output, index=False, na_rep="")
    manifest = run.manifest("shape", {
        "class": classlabel, "directions": [list(s) for s in steps], "nlags": nlags,
        "unit_area": not native_units, "include_boundary": include_boundary,
        "fractal_exponent_threshold": threshold,
    }, [gridfile])
    manifest.add_output(output)
    run.finish(manifest, output)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@cli.command()
@click.option("--rows", "nrows", type=click.IntRange(min=1), required=True)
@click.option("--cols", "ncols", type=click.IntRange(min=1), required=True)
@click.option("--cellsize", type=float, default=1.0, show_default=True)
@click.option("--family", default=CorrelogramFamily.EXPONENTIAL.value, show_default=True,
              type=click.Choice([f.value for f in CorrelogramFamily], case_sensitive=False))
@click.option("--range", "range_", type=float, required=True, help="Correlogram range in map units.")
@click.option("--cutoffs", default=None, metavar="Z", help="Increasing Gaussian cutoffs 'z1,z2,...'.")
@click.option("--proportions", "target", default=None, metavar="P",
              help="Target class proportions 'p1,p2,...' (cutoffs from the normal quantiles).")
@click.option("--exact-proportions", is_flag=True,
              help="Cut at empirical quantiles so the realised proportions match --proportions.")
@click.option("--method", default=METHOD_AUTO, show_default=True,
              type=click.Choice(list(SIMULATION_METHODS), case_sensitive=False))
@click.pass_obj
@handle_errors
def simulate(run: RunContext, nrows, ncols, cellsize, family, range_, cutoffs, target,
             exact_proportions, method):
    """Truncated Gaussian random field written as a grid file with a metadata sidecar."""
    if (cutoffs is None) == (target is None):
        raise click.UsageError("give exactly one of --cutoffs or --proportions")
    if exact_proportions and target is None:
        raise click.UsageError("--exact-proportions needs --proportions")

    seed = 0 if run.seed is None else run.seed
    spec = _validated(CorrelogramSpec, family=family, range=range_)
    target_props = parse_floats(target, "--proportions")
    if cutoffs is not None:
        thresholds = _validated(ThresholdSet, cutoffs=parse_floats(cutoffs, "--cutoffs"))
    else:
        thresholds = ThresholdSet.from_proportions(target_props)

    sim = run.settings.simulation
    field = simulate_grf(nrows, ncols, cellsize, spec, seed=seed, method=method.lower(),
                         dense_max_cells=sim.dense_max_cells,
                         max_embedding_factor=sim.max_embedding_factor)
    if exact_proportions:
        grid = truncate_to_proportions(field, target_props)
    else:
        grid = truncate(field, thresholds)

    output = run.output_path("simulate", "grid")
    write_grid_file(grid, output)

    metadata = {
        "grid": output,
        "nrows": nrows,
        "ncols": ncols,
        "cellsize": cellsize,
        "correlogram": {"family": spec.family.value, "range": spec.range},
        "method": field.method,
        "embedding": list(field.embedding) if field.embedding else None,
        "seed": seed,
        "cutoffs": None if exact_proportions else [float(z) for z in thresholds.cutoffs],
        "target_proportions": target_props,
        "realised_proportions": [round(float(p), 6) for p in proportions(grid)],
    }
    metadata["summary"] = TemplateRenderer().render_simulation_sidecar(metadata)
    sidecar = os.path.splitext(output)[0] + ".meta.yaml"
    save_yaml(sidecar, metadata)

    manifest = run.manifest("simulate", {
        "nrows": nrows, "ncols": ncols, "cellsize": cellsize, "family": spec.family.value,
        "range": spec.range, "cutoffs": metadata["cutoffs"], "proportions": target_props,
        "exact_proportions": exact_proportions, "method": field.method,
        "embedding": metadata["embedding"],
    }, [], seed=seed)
    manifest.add_output(output)
    manifest.add_output(sidecar)
    run.finish(manifest, output)

    console.print(metadata["summary"])
    console.print(f"✓ {nrows}x{ncols} grid → {output}")


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

@cli.command()
@click.pass_obj
def check(run: RunContext):
    """Verify interpreter, packages, configuration and templates."""
    checker = SystemRequirements(config_path=run.config_path,
                                 output_dir=run.settings.output.directory, console=console)
    if not checker.run_all_checks():
        sys.exit(EXIT_FAILED_CHECK)


def main():
    """Main entry point."""
    cli(prog_name="transiogram")


if __name__ == "__main__":
    main()
