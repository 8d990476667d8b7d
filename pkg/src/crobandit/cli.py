"""Command-line surface: run experiments, generate/enumerate tables, compare runs."""

from __future__ import annotations

import sys

import click

from .genome import SearchSpace
from .harness import (
    load_experiment_config,
    read_records_csv,
    run_experiment,
    write_records_csv,
    write_report_csv,
    write_winners_csv,
    compare as compare_records,
)
from .simulator import enumerate_designs, generate_table, load_table, save_table


def _fail(error: Exception) -> None:
    click.echo(f"error: {error}", err=True)
    sys.exit(1)


@click.group()
def main() -> None:
    """Bandit-allocated evolutionary conversion-rate optimization toolkit."""


@main.command(name="run")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_csv", type=click.Path(dir_okay=False, writable=True))
@click.option("--workers", default=1, show_default=True, help="Replication worker threads.")
@click.option(
    "--winners",
    "winners_csv",
    default=None,
    type=click.Path(dir_okay=False, writable=True),
    help="Also write per-run winner records (winner-selection modes only).",
)
def run_cmd(config_path: str, out_csv: str, workers: int, winners_csv: str | None) -> None:
    """Execute the experiment described by CONFIG_PATH; write records to OUT_CSV."""
    try:
        spec = load_experiment_config(config_path)
        result = run_experiment(
            spec.cfg, spec.table, spec.replications, spec.master_seed, workers=workers
        )
        write_records_csv(result.records, out_csv)
        if winners_csv is not None:
            write_winners_csv(result.winners, winners_csv)
    except Exception as error:  # noqa: BLE001 - one-line diagnostic, nonzero exit
        _fail(error)
    click.echo(f"wrote {len(result.records)} records to {out_csv}")


@main.command(name="gen-table")
@click.argument("out_path", type=click.Path(dir_okay=False, writable=True))
@click.option("--space", "space_text", required=True, help="Comma-separated choice counts, e.g. 5,4,2,3,4,3,3,4.")
@click.option("--base-rate", default=0.05, show_default=True)
@click.option("--low", default=-0.01, show_default=True, help="Lower bound of the effect range.")
@click.option("--high", default=0.01, show_default=True, help="Upper bound of the effect range.")
@click.option("--seed", default=0, show_default=True)
def gen_table_cmd(out_path: str, space_text: str, base_rate: float, low: float, high: float, seed: int) -> None:
    """Generate a ground-truth effect table and write it to OUT_PATH."""
    try:
        counts = tuple(int(part) for part in space_text.split(","))
        table = generate_table(SearchSpace(counts), base_rate, (low, high), rng=seed)
        save_table(table, out_path)
    except Exception as error:  # noqa: BLE001
        _fail(error)
    click.echo(f"wrote table with {table.space.design_count} designs to {out_path}")


@main.command(name="enumerate")
@click.argument("table_path", type=click.Path(exists=True, dir_okay=False))
def enumerate_cmd(table_path: str) -> None:
    """Exhaustively scan a table's design space and print the summary."""
    try:
        summary = enumerate_designs(load_table(table_path))
    except Exception as error:  # noqa: BLE001
        _fail(error)
    click.echo(f"designs: {summary.design_count}")
    click.echo(f"mean_rate: {summary.mean_rate!r}")
    click.echo(f"best_rate: {summary.best_rate!r}")
    click.echo(f"best_genome: {' '.join(map(str, summary.best_genome))}")


@main.command(name="compare")
@click.argument("csv_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("csv_b", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_csv", type=click.Path(dir_okay=False, writable=True))
def compare_cmd(csv_a: str, csv_b: str, out_csv: str) -> None:
    """Welch-test two record files generation by generation; write a report CSV."""
    try:
        report = compare_records(read_records_csv(csv_a), read_records_csv(csv_b))
        write_report_csv(report, out_csv)
    except Exception as error:  # noqa: BLE001
        _fail(error)
    flagged = sum(1 for row in report.rows if row.significant)
    click.echo(f"wrote {len(report.rows)} comparisons ({flagged} significant) to {out_csv}")


if __name__ == "__main__":
    main()
