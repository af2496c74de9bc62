"""
qfb CLI - Command-line interface for the feedback simulations.

Usage:
    qfb <experiment> --config <path> [--seed N] [--threads N] [--out-dir P]
    qfb --list

Exit codes: 0 success, 1 unexpected error, 2 unknown experiment or invalid
configuration, 3 numerical non-convergence, 130 interrupted.
"""

import logging
from pathlib import Path

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .config import QfbSettings, apply_overrides, load_config
from .experiments import (
    EXPERIMENTS,
    NonConvergenceError,
    RunManifest,
    UnknownExperimentError,
    experiment_names,
    get_experiment,
    run_experiment,
)
from .utils.logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NON_CONVERGENCE = 3
EXIT_INTERRUPTED = 130

app = typer.Typer(
    name="qfb",
    help="Digital feedback on dispersively measured qubits: reset, readout and entanglement",
    no_args_is_help=True,
    add_completion=False,
)

console = Console()


def _print_experiments() -> None:
    table = Table(title="Experiments")
    table.add_column("Name", style="cyan")
    table.add_column("Description")
    table.add_column("Blocks", style="dim")
    for name in experiment_names():
        experiment = EXPERIMENTS[name]
        table.add_row(name, experiment.description, ", ".join(experiment.blocks))
    console.print(table)


def _print_manifest(manifest: RunManifest, out_dir: Path) -> None:
    table = Table(title=f"{manifest.experiment} (seed {manifest.seed})")
    table.add_column("Artifact", style="cyan")
    table.add_column("SHA-256", style="dim")
    for entry in manifest.files:
        table.add_row(entry["path"], entry["sha256"][:16])
    console.print(table)
    console.print(f"[green]✓[/green] Results written to {out_dir}")


@app.command()
def run(
    experiment: str | None = typer.Argument(None, help="Experiment name (see --list)"),
    config: Path | None = typer.Option(None, "--config", "-c", help="Config file path"),
    seed: int | None = typer.Option(None, "--seed", "-s", help="Override the config seed"),
    threads: int | None = typer.Option(
        None, "--threads", "-t", help="Worker threads (default: hardware parallelism)"
    ),
    out_dir: Path | None = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    log_level: str | None = typer.Option(None, "--log-level", "-l", help="Log level"),
    list_experiments: bool = typer.Option(
        False, "--list", help="List the available experiments and exit"
    ),
) -> None:
    """
    Run one named experiment and write its CSV/JSON artifacts and manifest.

    Settings are merged with precedence flag > QFB_* environment > config file.

    Example:
        qfb reset-sweep --config configs/reset_sweep.toml
        qfb entangle-feedback -c configs/entangle_feedback.toml --seed 7 --threads 4
        qfb --list
    """
    if list_experiments:
        _print_experiments()
        return

    try:
        settings = QfbSettings()
    except ValidationError as e:
        console.print(f"[red]Error:[/red] Invalid environment settings: {escape(str(e))}")
        raise typer.Exit(EXIT_CONFIG) from e
    setup_logging(level=log_level or settings.log_level)

    if experiment is None:
        console.print("[red]Error:[/red] Missing experiment name")
        console.print(f"Valid experiments: {', '.join(experiment_names())}")
        raise typer.Exit(EXIT_CONFIG)
    if config is None:
        console.print("[red]Error:[/red] Missing --config")
        raise typer.Exit(EXIT_CONFIG)

    try:
        get_experiment(experiment)
        loaded = apply_overrides(
            load_config(config), settings, seed=seed, threads=threads, out_dir=out_dir
        )
    except UnknownExperimentError as e:
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        raise typer.Exit(EXIT_CONFIG) from e
    except (FileNotFoundError, ValueError) as e:
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        raise typer.Exit(EXIT_CONFIG) from e

    try:
        manifest = run_experiment(experiment, loaded)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        raise typer.Exit(EXIT_INTERRUPTED) from None
    except NonConvergenceError as e:
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        raise typer.Exit(EXIT_NON_CONVERGENCE) from e
    except ValueError as e:
        if str(e).startswith("Invalid configuration"):
            console.print(f"[red]Error:[/red] {escape(str(e))}")
            raise typer.Exit(EXIT_CONFIG) from e
        logger.exception("Experiment failed")
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        raise typer.Exit(1) from e
    except Exception as e:
        logger.exception("Experiment failed")
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        raise typer.Exit(1) from e

    _print_manifest(manifest, loaded.run.out_dir)


def main() -> None:
    """CLI entry point."""
    app()


if __name__ == "__main__":
    main()
