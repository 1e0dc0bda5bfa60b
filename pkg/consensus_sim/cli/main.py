"""Main CLI entry point for Async Consensus Sim."""

import logging
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional

import click
import numpy as np
import yaml
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from ..core.config import ConfigError, ConfigManager, SEED_ENV_VAR, ScenarioConfig
from ..core.graph import GraphError
from ..core.matrices import MatrixError
from ..core.models import RunSummary
from ..simulation.dynamics import run as run_scenario
from ..simulation.errors import SimulationError
from ..simulation.scenarios import ScenarioNotFoundError
from ..simulation.scheduler import ScheduleError, build_schedules
from ..simulation.topology import build_topology
from ..storage.writers import RunWriter, StorageError
from ..verification.analysis import AnalysisError, check_union_condition, summarize
from ..verification.augmented import AugmentationError, decompose_run
from ..verification.reproduction import reproduce as reproduce_builtin


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2

# Failures of the input rather than of the checked property.
VALIDATION_ERRORS = (
    ConfigError, ScheduleError, SimulationError, GraphError, MatrixError,
    AugmentationError, AnalysisError, StorageError,
)


class ConsensusGroup(click.Group):
    """Command group whose usage errors exit with status 1.

    Status 2 is reserved for failed conditions and criteria.
    """

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = EXIT_INVALID
            raise

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_INVALID
            raise


def _configure_logging(verbose: bool) -> None:
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    if verbose:
        handler: logging.Handler = RichHandler(console=Console(stderr=True), show_path=False)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.setLevel(logging.DEBUG)
    else:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        root.setLevel(logging.WARNING)
    root.addHandler(handler)


def _fail(ctx: click.Context, error: Exception) -> None:
    """Report a validation failure and exit with status 1."""
    if isinstance(error, ConfigError):
        click.echo("Configuration validation failed:", err=True)
        for message in error.errors:
            click.echo(f"  ✗ {message}", err=True)
    else:
        click.echo(f"Error: {error}", err=True)
    if ctx.obj.get('verbose'):
        click.echo(traceback.format_exc(), err=True)
    sys.exit(EXIT_INVALID)


def _config_file(ctx: click.Context, config_path: str) -> Path:
    path = Path(config_path)
    if not path.is_file():
        _fail(ctx, ConfigError([f"config file {path} does not exist"]))
    return path


def _load_scenario(ctx: click.Context, config_path: str) -> ScenarioConfig:
    config_manager: ConfigManager = ctx.obj['config_manager']
    path = _config_file(ctx, config_path)
    try:
        return config_manager.load_scenario(path)
    except ConfigError as e:
        _fail(ctx, e)
        raise


def _summary_table(title: str, summary: RunSummary) -> Table:
    table = Table(title=title, show_header=True, header_style="bold magenta", box=box.SIMPLE)
    table.add_column("Key", style="cyan")
    table.add_column("Value")
    for key, value in summary.as_items():
        table.add_row(key, value)
    return table


def _write_run(result, out_dir: Path, config_manager: ConfigManager) -> RunSummary:
    """Write the files of one run and return its summary."""
    summary = summarize(result)
    writer = RunWriter(out_dir)
    writer.write_trajectories(result)
    writer.write_events(result)
    writer.write_summary(summary)
    config_manager.save_config(result.scenario.to_dict(), out_dir / ConfigManager.DEFAULT_CONFIG_NAME)
    if result.scenario.dump_pi:
        writer.write_pi_dumps(decompose_run(result), compress=result.scenario.compress_pi)
    return summary


@click.group(cls=ConsensusGroup)
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose output')
@click.pass_context
def cli(ctx: click.Context, verbose: bool):
    """Async Consensus Sim - asynchronous consensus under switching topologies and delays."""
    ctx.ensure_object(dict)
    _configure_logging(verbose)
    ctx.obj['config_manager'] = ConfigManager()
    ctx.obj['console'] = Console()
    ctx.obj['verbose'] = verbose


@cli.command('run')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default='out', show_default=True,
              help='Output directory')
@click.pass_context
def run_command(ctx: click.Context, config_path: str, out_dir: str):
    """Simulate a scenario and write trajectories, events and a summary."""
    console: Console = ctx.obj['console']
    scenario = _load_scenario(ctx, config_path)
    try:
        result = run_scenario(scenario)
        summary = _write_run(result, Path(out_dir), ctx.obj['config_manager'])
    except VALIDATION_ERRORS as e:
        _fail(ctx, e)
        return

    console.print(_summary_table(f"Run of {config_path}", summary))
    for message in result.log.messages:
        console.print(f"[dim]{message}[/dim]")
    click.echo(f"✓ Wrote results to {out_dir}")


@cli.command()
@click.argument('name')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default='out', show_default=True,
              help='Output directory')
@click.option('--seed', type=int, default=0, envvar=SEED_ENV_VAR, show_default=True,
              help='Master seed of the first run')
@click.option('--statistics-seeds', type=click.IntRange(min=2), default=20, show_default=True,
              help='Seeds used by statistical checks')
@click.pass_context
def reproduce(ctx: click.Context, name: str, out_dir: str, seed: int, statistics_seeds: int):
    """Run a built-in scenario and print a PASS/FAIL line per check.

    NAME is one of: example-fixed, counterexample, example-delay,
    example-switching, synchronous-fixed.
    """
    console: Console = ctx.obj['console']
    config_manager: ConfigManager = ctx.obj['config_manager']
    try:
        rep = reproduce_builtin(name, seed=seed, statistics_seeds=statistics_seeds)
        root = Path(out_dir)
        for label, result in rep.runs:
            summary = _write_run(result, root / label, config_manager)
            console.print(_summary_table(label, summary))
        RunWriter(root).write_checks([check.as_tuple() for check in rep.checks])
    except (ScenarioNotFoundError,) + VALIDATION_ERRORS as e:
        _fail(ctx, e)
        return

    table = Table(title=f"Checks for {name}", show_header=True, header_style="bold magenta", box=box.SIMPLE)
    table.add_column("Result")
    table.add_column("Check", style="cyan")
    table.add_column("Detail")
    for check in rep.checks:
        table.add_row("[green]PASS[/green]" if check.passed else "[red]FAIL[/red]", check.name, check.detail)
    console.print(table)

    if not rep.passed:
        click.echo(f"✗ {sum(not c.passed for c in rep.checks)} checks failed", err=True)
        sys.exit(EXIT_FAILED)
    click.echo(f"✓ All {len(rep.checks)} checks passed")


@cli.command()
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--window', '-T', 'window', type=float,
              help='Union window T in seconds (defaults to analysis.union_window)')
@click.pass_context
def check(ctx: click.Context, config_path: str, window: Optional[float]):
    """Check that every window of length T unites to a graph with a spanning tree."""
    scenario = _load_scenario(ctx, config_path)
    T = window if window is not None else scenario.union_window
    if T is None:
        click.echo("Error: no window given; pass --window or set analysis.union_window", err=True)
        sys.exit(EXIT_INVALID)
    try:
        schedules = build_schedules(scenario)
        topology = build_topology(scenario)
        result = check_union_condition(topology, schedules, T, scenario.horizon)
    except VALIDATION_ERRORS as e:
        _fail(ctx, e)
        return

    if result.holds:
        click.echo(f"PASS union condition holds for T={T!r} ({result.windows_checked} windows)")
        return
    start, end = result.failing_window
    click.echo(f"FAIL union condition fails for T={T!r}")
    click.echo(f"  witness window: [{start!r}, {end!r}]")
    sys.exit(EXIT_FAILED)


def _parse_seeds(value: str) -> List[int]:
    try:
        first, last = (int(part) for part in value.split('..'))
    except ValueError:
        raise ConfigError([f"--seeds expects A..B, got {value!r}"]) from None
    if first < 0 or last < first:
        raise ConfigError([f"--seeds expects 0 <= A <= B, got {value!r}"])
    return list(range(first, last + 1))


@cli.command()
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--seeds', required=True, help='Inclusive seed range A..B')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default='out', show_default=True,
              help='Output directory')
@click.option('--workers', type=click.IntRange(min=1), default=4, show_default=True,
              help='Concurrent runs')
@click.option('--bins', type=click.IntRange(min=1), default=20, show_default=True,
              help='Histogram bins for final values')
@click.pass_context
def batch(ctx: click.Context, config_path: str, seeds: str, out_dir: str, workers: int, bins: int):
    """Run one scenario under a range of seeds and tabulate final values."""
    console: Console = ctx.obj['console']
    try:
        seed_list = _parse_seeds(seeds)
    except ConfigError as e:
        _fail(ctx, e)
        return
    scenario = _load_scenario(ctx, config_path)

    def run_seed(seed: int) -> RunSummary:
        return summarize(run_scenario(scenario.with_seed(seed)))

    collected: Dict[int, RunSummary] = {}
    try:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_seed, seed): seed for seed in seed_list}
            for future in as_completed(futures):
                collected[futures[future]] = future.result()
        summaries = [collected[seed] for seed in seed_list]
        writer = RunWriter(Path(out_dir))
        writer.write_batch(summaries)
        writer.write_histogram([s.final_value for s in summaries], bins=bins)
    except VALIDATION_ERRORS as e:
        _fail(ctx, e)
        return

    values = [s.final_value for s in summaries]
    table = Table(title=f"Batch of {len(values)} seeds", show_header=True, header_style="bold magenta",
                  box=box.SIMPLE)
    table.add_column("Statistic", style="cyan")
    table.add_column("Value")
    table.add_row("runs", str(len(values)))
    table.add_row("final value min", repr(min(values)))
    table.add_row("final value max", repr(max(values)))
    table.add_row("final value variance", repr(float(np.var(values, ddof=1))) if len(values) > 1 else "none")
    table.add_row("consensus reached", str(sum(s.consensus_time is not None for s in summaries)))
    console.print(table)
    click.echo(f"✓ Wrote batch results to {out_dir}")


@cli.command()
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.pass_context
def validate(ctx: click.Context, config_path: str):
    """Validate a scenario file."""
    config_manager: ConfigManager = ctx.obj['config_manager']
    try:
        config_data = config_manager.load_config(_config_file(ctx, config_path))
    except ConfigError as e:
        _fail(ctx, e)
        return

    validation_errors = config_manager.validate_config(config_data)
    if validation_errors:
        _fail(ctx, ConfigError(validation_errors))
    click.echo("✓ Configuration is valid")


@cli.command('show-config')
@click.argument('config_path', required=False, type=click.Path(dir_okay=False))
@click.pass_context
def show_config(ctx: click.Context, config_path: Optional[str]):
    """Show a scenario merged over the defaults (the defaults without a file)."""
    config_manager: ConfigManager = ctx.obj['config_manager']
    try:
        if config_path:
            config_data = config_manager.load_config(_config_file(ctx, config_path))
        else:
            config_data = config_manager.apply_environment(config_manager.get_default_config())
    except ConfigError as e:
        _fail(ctx, e)
        return
    click.echo(yaml.safe_dump(config_data, default_flow_style=None, sort_keys=False), nl=False)


def main():
    """Entry point for the consensus-sim command."""
    cli(obj={})


if __name__ == '__main__':
    main()
