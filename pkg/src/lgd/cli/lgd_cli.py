"""Typer app that runs the lgd stages from the command line."""

import logging
import sys
from typing import Callable, List, Optional

import click
import typer
from rich.box import HEAVY
from rich.console import Console
from rich.table import Table

import lgd

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_STAGE = 2

# Declare at top of file so decorators work as expected.
app = typer.Typer(add_completion=False, help="Learning-guided search for range specification bugs.")
console = Console()

OUT_DIR = typer.Option(None, "-o", "--out-dir", help="Output directory (LGD_OUT overrides).")
TABLE = typer.Option(None, "-t", "--table", help="Parameter table CSV (default: shipped table).")
MISSION = typer.Option(None, "-m", "--mission", help="Mission file (default: built-in mission).")
SEED = typer.Option(None, "-s", "--seed", help="Seed for every random stream.")
JOBS = typer.Option(None, "-j", "--jobs", help="Missions flown in parallel.")
RC = typer.Option(None, "--rc", help="Run-control file (.toml or .json).")
VERBOSE = typer.Option(False, "-v", "--verbose", help="Debug logging.")
PARAMS = typer.Option(None, "--params",
                      help="Comma separated parameters to search or narrow, or 'comparison' for the six-parameter set.")


def _context(out_dir, table, mission, seed, jobs, rc, verbose) -> lgd.RunContext:
    """Build the run context and start logging into <out_dir>/lgd_cli.log and stderr."""
    rc_obj = lgd.lgd_rc_factory(rc)
    out = lgd.resolve_out_dir(out_dir, rc_obj)
    out.mkdir(parents=True, exist_ok=True)
    lgd.lgd_setup_logging(level=logging.DEBUG if verbose else logging.INFO,
                          file_name=str(out / "lgd_cli.log"), stream_=sys.stderr)
    lgd.lgd_logger.debug("out_dir=%s table=%s mission=%s seed=%s jobs=%s rc=%s",
                         out, table, mission, seed, jobs, rc)
    return lgd.RunContext.create(out_dir=out, table=table, mission=mission, seed=seed, jobs=jobs, rc=rc_obj,
                                 progress=lgd.LgdLogProgress(result_level=logging.DEBUG, msg_level=logging.INFO))


def _run(stage: Callable[[], None]) -> None:
    """Map bad arguments to exit code 1 and stage failures to exit code 2."""
    try:
        stage()
    except (lgd.LgdValueError, lgd.LgdTypeError) as e:
        typer.echo(f"Usage error: {e}", err=True)
        raise typer.Exit(EXIT_USAGE)
    except lgd.LgdException as e:
        typer.echo(f"{type(e).__name__}: {e}", err=True)
        raise typer.Exit(EXIT_STAGE)
    finally:
        lgd.lgd_reset_logging()


def show_report(summary: lgd.ReportSummary) -> None:
    """Render the verdict tally as rich tables."""
    table = Table(title="Validation Report", show_header=True, header_style="magenta", box=HEAVY)
    table.add_column("Verdict", style="cyan")
    table.add_column("Count", justify="right")
    table.add_column("Ratio", justify="right", style="yellow")
    for row in summary.verdicts:
        table.add_row(row.verdict, str(row.count), f"{row.ratio:.3f}")
    console.print(table)
    console.print(f"Potential configurations: {summary.potential}  "
                  f"incorrect: {summary.incorrect}  true-positive ratio: {summary.tp_ratio:.3f}")

    if summary.examples:
        examples = Table(title="Example Guidelines", show_header=True, header_style="magenta", box=HEAVY)
        for col in ("Kind", "Guideline", "f1", "f2"):
            examples.add_column(col)
        for ex in summary.examples:
            examples.add_row(ex.kind, str(ex.guideline_id), f"{ex.f1:.3f}", str(ex.f2))
        console.print(examples)


@app.command()
def genlogs(flights: Optional[int] = typer.Option(None, "-n", "--flights", help="Missions in the campaign."),
            sigma: Optional[float] = typer.Option(None, "--sigma", help="Sampler sigma as a fraction of range."),
            out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
            seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
            verbose: bool = VERBOSE):
    """Fly a campaign of missions near the defaults and keep the stable flight logs."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        path = lgd.cmd_genlogs(ctx, n_flights=flights, sigma_fraction=sigma)
        typer.echo(f"LogSet written to {path}")

    _run(stage)


@app.command()
def train(h: Optional[int] = typer.Option(None, "--h", help="Contexts per prediction window."),
          hidden: Optional[int] = typer.Option(None, "--hidden", help="Recurrent hidden size."),
          epochs: Optional[int] = typer.Option(None, "--epochs", help="Maximum training epochs."),
          lr: Optional[float] = typer.Option(None, "--lr", help="Learning rate."),
          threshold_split: Optional[str] = typer.Option(None, "--threshold-split", help="'train' or 'val'."),
          out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
          seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
          verbose: bool = VERBOSE):
    """Train the state predictor on the LogSet and calibrate its deviation threshold."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        path = lgd.cmd_train(ctx, h=h, hidden_size=hidden, epochs=epochs, learning_rate=lr,
                             threshold_split=threshold_split)
        typer.echo(f"Model written to {path}")

    _run(stage)


@app.command()
def search(np_: Optional[int] = typer.Option(None, "--np", help="Population size."),
           f: Optional[float] = typer.Option(None, "--f", help="Scaling factor."),
           cr: Optional[float] = typer.Option(None, "--cr", help="Crossover rate."),
           gmax: Optional[int] = typer.Option(None, "--gmax", help="Maximum generations."),
           m: Optional[int] = typer.Option(None, "--m", help="Segments sampled per cluster."),
           bandwidth: Optional[float] = typer.Option(None, "--bandwidth", help="Mean shift bandwidth."),
           params: Optional[str] = PARAMS,
           out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
           seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
           verbose: bool = VERBOSE):
    """Search configurations the predictor expects to destabilize the vehicle."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        path = lgd.cmd_search(ctx, pop_size=np_, scale=f, crossover_rate=cr, g_max=gmax, m=m, bandwidth=bandwidth,
                               param_names=params)
        typer.echo(f"Potential set written to {path}")

    _run(stage)


@app.command()
def validate(injection_time: Optional[float] = typer.Option(None, "--injection-time",
                                                            help="Seconds after launch for injection runs."),
             out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
             seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
             verbose: bool = VERBOSE):
    """Fly every potential configuration and record its verdict."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        path = lgd.cmd_validate(ctx, injection_time=injection_time)
        typer.echo(f"Validation records written to {path}")

    _run(stage)


@app.command()
def guideline(pop: Optional[int] = typer.Option(None, "--pop", help="Population size."),
              generations: Optional[int] = typer.Option(None, "--generations", help="Generations."),
              grid: Optional[int] = typer.Option(None, "--grid", help="Snap bounds to a k-point grid."),
              params: Optional[str] = PARAMS,
              out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
              seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
              verbose: bool = VERBOSE):
    """Derive Pareto optimal range guidelines from the validation records."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        front = lgd.cmd_guideline(ctx, pop_size=pop, generations=generations, grid_points=grid, param_names=params)
        typer.echo(f"{len(front)} guidelines written to {ctx.path('guidelines')}")

    _run(stage)


@app.command()
def report(out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
           seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
           verbose: bool = VERBOSE):
    """Summarize the validation verdicts."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        show_report(lgd.cmd_report(ctx))

    _run(stage)


@app.command()
def evaluate(model: Optional[List[str]] = typer.Option(None, "--model", help="Model file, repeatable."),
             out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
             seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
             verbose: bool = VERBOSE):
    """Score predictors against the validated configurations."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        frame = lgd.cmd_evaluate(ctx, models=model or None)
        typer.echo(frame.to_string(index=False))

    _run(stage)


@app.command("run-all")
def run_all(flights: Optional[int] = typer.Option(None, "-n", "--flights", help="Missions in the campaign."),
            params: Optional[str] = PARAMS,
            out_dir: Optional[str] = OUT_DIR, table: Optional[str] = TABLE, mission: Optional[str] = MISSION,
            seed: Optional[int] = SEED, jobs: Optional[int] = JOBS, rc: Optional[str] = RC,
            verbose: bool = VERBOSE):
    """Run every stage from the log campaign to the report under one seed."""

    def stage():
        ctx = _context(out_dir, table, mission, seed, jobs, rc, verbose)
        show_report(lgd.run_all(ctx, n_flights=flights, param_names=params))

    _run(stage)


def main() -> None:
    """Console entry point.  Click reports its own usage errors with code 2, lgd uses 1."""
    try:
        code = app(standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    sys.exit(code if isinstance(code, int) else EXIT_OK)


if __name__ == '__main__':
    main()
