"""Command-line entry point: ``vendornet <subcommand> [options]``.

Exit codes: 0 success, 1 invalid input or configuration, 2 I/O failure.
"""
from __future__ import annotations

import logging
import sys

import click

from . import __version__, pipeline
from .ingest import ValidationError
from .measures import ConvergenceError
from .synthgen import SynthConfig, read_config, write_corpus

log = logging.getLogger("vendornet")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def run_options(fn):
    """Options shared by the analysis subcommands; each mirrors a config key."""
    options = [
        click.option("--config", type=click.Path(dir_okay=False), help="flat key = value config file"),
        click.option("--posts", help="posts CSV or JSONL file"),
        click.option("--sales", help="sales CSV file"),
        click.option("--out-dir", help="output directory (default: out)"),
        click.option("--months", help="YYYY-MM or YYYY-MM:YYYY-MM; clipped to the corpus span"),
        click.option("--measures", help="comma-separated measure names"),
        click.option("--fraction", help="rank-cut fraction in (0, 1] (default 0.2)"),
        click.option("--seed", help="accepted for symmetry; the analysis path is deterministic"),
        click.option("--delta-o", help="maximum ordinal distance (default 10)"),
        click.option("--delta-t", help="maximum time gap, e.g. 1mo, 30d (default 1mo)"),
        click.option("--omega-lower", help="decay floor weight (default 0.2)"),
        click.option("--t-lim", help="decay horizon, e.g. 7d (default 7d)"),
        click.option("--omega-first", help="initial-post edge weight (default 0.5)"),
        click.option("--damping", help="PageRank damping (default 0.85)"),
        click.option("--tolerance", help="PageRank L1 tolerance (default 1e-12)"),
        click.option("--max-iters", help="PageRank iteration cap (default 1000)"),
        click.option("--roc-step", help="ROC rank step, e.g. 0.05 or 5% (default 5%)"),
        click.option("--roc-kind", help="current or future sales for ROC groups"),
        click.option("--topk", help="top-k listing length (default 25)"),
        click.option("--activity-threshold", help="post count below which users are less active (default 100)"),
        click.option("--jobs", help="worker processes for scoring (default 1)"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def make_run(opts: dict, need_sales: bool = False) -> pipeline.Run:
    config_file = opts.pop("config", None)
    cfg = pipeline.build_config(config_file, **opts)
    return pipeline.Run(cfg, need_sales=need_sales)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="vendornet")
@click.option("-v", "--verbose", is_flag=True, help="log progress to stderr")
def cli(verbose):
    """Vendor-success analysis over cryptomarket forum communication networks."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)


@cli.command()
@run_options
def extract(**opts):
    """Write one cumulative graph per month to OUT_DIR/graphs."""
    run = make_run(opts)
    graphs = pipeline.extract_graphs(run)
    pipeline.write_manifest(run, "extract")
    click.echo(f"{len(graphs)} graphs written to {run.config.out_dir / 'graphs'}")


@cli.command()
@run_options
def measure(**opts):
    """Write one score table per (measure, month) to OUT_DIR/scores."""
    run = make_run(opts)
    tables = pipeline.compute_scores(run)
    pipeline.write_manifest(run, "measure")
    click.echo(f"{len(tables)} score tables written to {run.config.out_dir / 'scores'}")


@cli.command()
@run_options
def evaluate(**opts):
    """Difference scores, recalls, overlaps, top-k listings and trends."""
    run = make_run(opts, need_sales=True)
    rows = pipeline.evaluate(run, pipeline.compute_scores(run))
    pipeline.write_manifest(run, "evaluate")
    click.echo(f"{len(rows)} metric values written to {run.config.out_dir / 'metrics.csv'}")


@cli.command()
@run_options
def roc(**opts):
    """ROC points and AUC for four vendor-group definitions."""
    run = make_run(opts, need_sales=True)
    summary = pipeline.roc_curves(run, pipeline.compute_scores(run))
    pipeline.write_manifest(run, "roc")
    click.echo(f"{len(summary)} ROC curves written to {run.config.out_dir / 'roc'}")


@cli.command()
@run_options
@click.option("--grid", "grid_specs", multiple=True, metavar="PARAM=V1,V2",
              help="values for one extraction parameter; repeatable")
@click.option("--joint", is_flag=True, help="Cartesian product instead of one parameter at a time")
def sweep(grid_specs, joint, **opts):
    """Re-extract and re-evaluate over a grid of extraction parameters."""
    specs = pipeline.grid_from_config(opts.get("config")) + list(grid_specs)
    run = make_run(opts, need_sales=True)
    grid = pipeline.parse_grid(specs)
    rows = pipeline.sweep(run, grid, joint)
    points = pipeline.expand_grid(grid, run.config.params, joint)
    pipeline.write_manifest(run, "sweep", {"grid": ";".join(specs), "joint": str(joint).lower(),
                                           "points": str(len(points))})
    click.echo(f"{len(points)} grid points, {len(rows)} rows written to {run.config.out_dir / 'sweep.csv'}")


@cli.command()
@run_options
def report(**opts):
    """Run extract, measure, evaluate and roc, then summarise across months."""
    run = make_run(opts, need_sales=True)
    path = pipeline.report(run)
    pipeline.write_manifest(run, "report")
    click.echo(f"report written to {path}")


@cli.command()
@click.option("--config", type=click.Path(dir_okay=False), help="flat key = value generator config")
@click.option("--out-dir", default="synthetic", show_default=True)
@click.option("--seed", type=int)
@click.option("--n-users", type=int)
@click.option("--vendor-fraction", type=float)
@click.option("--n-months", "months", type=int, help="number of months to simulate")
@click.option("--start-month")
@click.option("--topic-start-rate", type=float)
@click.option("--reply-rate", type=float)
@click.option("--reply-delay-mean-hours", type=float)
@click.option("--reply-delay-sigma", type=float)
@click.option("--activity-sigma", type=float)
@click.option("--sales-coupling", type=float)
@click.option("--base-sales", type=float)
@click.option("--sales-noise", type=float)
def synth(config, out_dir, **overrides):
    """Generate a seeded synthetic posts.csv and sales.csv."""
    if config is not None:
        cfg = read_config(config, **overrides)
    else:
        cfg = SynthConfig(**{k: v for k, v in overrides.items() if v is not None})
    posts, sales = write_corpus(cfg, out_dir)
    click.echo(f"wrote {posts} and {sales}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="vendornet", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INVALID
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except (ValidationError, ConvergenceError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INVALID
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_IO
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
