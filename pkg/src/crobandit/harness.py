"""Experiment harness: seeded replications, metrics, significance tests, CSV.

An experiment is (config, effect table, replication count, master seed). Each
replication gets an independent child generator derived from the master seed
via a spawn key, so runs are reproducible machine to machine and identical
whether replications execute serially or across worker threads.

Three metrics are recorded per evaluated generation:

* ``best_true_cr``: ground-truth rate of the candidate the algorithm itself
  considers best (highest measured fitness) this generation,
* ``overall_cr``: conversions divided by visits within the generation,
* ``cumulative_cr``: conversions divided by visits over the run so far.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import betainc

from .evolution import EvolutionConfig, GenerationSnapshot, RunResult, run
from .genome import Genome, SearchSpace
from .simulator import EffectTable, SimulatedTraffic, generate_table, load_table

RECORD_COLUMNS = ("run_id", "generation", "best_true_cr", "overall_cr", "cumulative_cr")
METRICS = ("best_true_cr", "overall_cr", "cumulative_cr")


@dataclass(frozen=True)
class GenerationRecord:
    run_id: int
    generation: int
    best_true_cr: float
    overall_cr: float
    cumulative_cr: float


@dataclass(frozen=True)
class WinnerRecord:
    """Final winner of a run that ends with a winner-selection phase."""

    run_id: int
    genome: Genome
    measured_fitness: float
    true_rate: float


@dataclass(frozen=True)
class ExperimentResult:
    records: list[GenerationRecord]
    winners: list[WinnerRecord]  # empty unless the mode selects a winner


def best_true_cr(snapshot: GenerationSnapshot, table: EffectTable) -> float:
    """Ground-truth rate of the measured-best candidate (ties: lowest index)."""
    best = 0
    for i in range(1, len(snapshot.fitnesses)):
        if snapshot.fitnesses[i] > snapshot.fitnesses[best]:
            best = i
    return table.true_rate(snapshot.genomes[best])


def records_from_run(result: RunResult, table: EffectTable, run_id: int) -> list[GenerationRecord]:
    records = []
    conversions = 0
    visits = 0
    for snapshot in result.snapshots:
        conversions += snapshot.conversions
        visits += snapshot.visits
        records.append(
            GenerationRecord(
                run_id=run_id,
                generation=snapshot.generation,
                best_true_cr=best_true_cr(snapshot, table),
                overall_cr=snapshot.conversions / snapshot.visits,
                cumulative_cr=conversions / visits,
            )
        )
    return records


def child_rng(master_seed: int, replication: int) -> np.random.Generator:
    """Independent, reproducible generator for one replication."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(replication,))
    )


def run_experiment(
    cfg: EvolutionConfig,
    table: EffectTable,
    replications: int,
    master_seed: int,
    workers: int = 1,
) -> ExperimentResult:
    """Execute ``replications`` independent runs and collect their records.

    Output is identical for any ``workers`` value: each replication derives its
    own generator from the master seed and results merge in replication order.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    if cfg.population_size > table.space.design_count:
        raise ValueError(
            "population size exceeds the number of distinct designs in the table's space"
        )
    if cfg.mode == "bai" and cfg.elite_count * cfg.generations < 2:
        raise ValueError("the run would end with fewer than two winner candidates")

    env = SimulatedTraffic(table)

    def one(replication: int) -> tuple[list[GenerationRecord], WinnerRecord | None]:
        rng = child_rng(master_seed, replication)
        result = run(cfg, env, rng)
        records = records_from_run(result, table, run_id=replication)
        winner = None
        if result.winner is not None:
            assert result.winner_fitness is not None
            winner = WinnerRecord(
                run_id=replication,
                genome=result.winner,
                measured_fitness=result.winner_fitness,
                true_rate=table.true_rate(result.winner),
            )
        return records, winner

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(one, range(replications)))
    else:
        outputs = [one(i) for i in range(replications)]

    records: list[GenerationRecord] = []
    winners: list[WinnerRecord] = []
    for rec, winner in outputs:
        records.extend(rec)
        if winner is not None:
            winners.append(winner)
    return ExperimentResult(records=records, winners=winners)


def welch_t_test(sample_a, sample_b) -> tuple[float, float]:
    """Welch's unequal-variance t-test; returns (t, two-sided p).

    Degrees of freedom follow Welch-Satterthwaite; the p-value comes from the
    regularized incomplete beta form of the t distribution's tail.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("both samples need at least two values")
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    sa = var_a / a.size
    sb = var_b / b.size
    df_denominator = sa**2 / (a.size - 1) + sb**2 / (b.size - 1)
    if sa + sb == 0.0 or df_denominator == 0.0:
        raise ValueError("degenerate samples: no usable variance on either side")
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / df_denominator
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, p


@dataclass(frozen=True)
class ComparisonRow:
    generation: int
    metric: str
    mean_a: float
    se_a: float
    mean_b: float
    se_b: float
    t_stat: float
    p_value: float
    significant: bool  # p < 0.05


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[ComparisonRow]

    def row(self, generation: int, metric: str) -> ComparisonRow:
        for r in self.rows:
            if r.generation == generation and r.metric == metric:
                return r
        raise KeyError((generation, metric))


def _by_generation(records: list[GenerationRecord]) -> dict[int, list[GenerationRecord]]:
    out: dict[int, list[GenerationRecord]] = {}
    for record in records:
        out.setdefault(record.generation, []).append(record)
    return out


def _se(values: np.ndarray) -> float:
    return float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0


def compare(
    records_a: list[GenerationRecord],
    records_b: list[GenerationRecord],
    alpha: float = 0.05,
) -> ComparisonReport:
    """Per-generation Welch comparison of two experiments on every metric.

    Generations where both sides are exactly constant get t=0, p=1 on equal
    means (and p=0 otherwise) instead of an error, so degenerate configs still
    produce a full report.
    """
    groups_a = _by_generation(records_a)
    groups_b = _by_generation(records_b)
    if sorted(groups_a) != sorted(groups_b):
        raise ValueError("experiments cover different generations")
    rows = []
    for generation in sorted(groups_a):
        for metric in METRICS:
            a = np.array([getattr(r, metric) for r in groups_a[generation]])
            b = np.array([getattr(r, metric) for r in groups_b[generation]])
            try:
                t, p = welch_t_test(a, b)
            except ValueError:
                equal = float(a.mean()) == float(b.mean())
                t, p = (0.0, 1.0) if equal else (math.copysign(math.inf, a.mean() - b.mean()), 0.0)
            rows.append(
                ComparisonRow(
                    generation=generation,
                    metric=metric,
                    mean_a=float(a.mean()),
                    se_a=_se(a),
                    mean_b=float(b.mean()),
                    se_b=_se(b),
                    t_stat=t,
                    p_value=p,
                    significant=p < alpha,
                )
            )
    return ComparisonReport(rows=rows)


# ---------------------------------------------------------------------------
# CSV and config file surfaces


def write_records_csv(records: list[GenerationRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow(
                [r.run_id, r.generation, repr(r.best_true_cr), repr(r.overall_cr), repr(r.cumulative_cr)]
            )


def read_records_csv(path: str | Path) -> list[GenerationRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_COLUMNS:
            raise ValueError(f"unexpected CSV header {header!r}")
        return [
            GenerationRecord(
                run_id=int(row[0]),
                generation=int(row[1]),
                best_true_cr=float(row[2]),
                overall_cr=float(row[3]),
                cumulative_cr=float(row[4]),
            )
            for row in reader
        ]


def write_winners_csv(winners: list[WinnerRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "genome", "measured_fitness", "true_rate"])
        for w in winners:
            writer.writerow(
                [w.run_id, " ".join(map(str, w.genome)), repr(w.measured_fitness), repr(w.true_rate)]
            )


def write_report_csv(report: ComparisonReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["generation", "metric", "mean_a", "se_a", "mean_b", "se_b", "t_stat", "p_value", "significant"]
        )
        for r in report.rows:
            writer.writerow(
                [
                    r.generation,
                    r.metric,
                    repr(r.mean_a),
                    repr(r.se_a),
                    repr(r.mean_b),
                    repr(r.se_b),
                    repr(r.t_stat),
                    repr(r.p_value),
                    int(r.significant),
                ]
            )


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully parsed experiment config file."""

    cfg: EvolutionConfig
    table: EffectTable
    replications: int
    master_seed: int


CONFIG_FIELDS = (
    "population_size",
    "generations",
    "traffic_per_generation",
    "elite_percent",
    "parent_percent",
    "mutation_prob",
    "policy",
    "mode",
    "bai_elite_size",
    "bai_traffic",
    "neighborhood_size",
    "asynchronous",
)


def load_experiment_config(path: str | Path) -> ExperimentSpec:
    """Parse a JSON experiment config.

    The file names the mode, policy and control parameters, plus either
    ``table`` (path to a table file, relative paths resolve against the config
    file) or ``table_spec`` (inline generation recipe with ``choice_counts``,
    ``base_rate``, ``effect_range`` and ``seed``), and ``replications`` and
    ``master_seed``.
    """
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    cfg_kwargs = {key: payload[key] for key in CONFIG_FIELDS if key in payload}
    cfg = EvolutionConfig(**cfg_kwargs)

    if ("table" in payload) == ("table_spec" in payload):
        raise ValueError("config must name exactly one of 'table' or 'table_spec'")
    if "table" in payload:
        table_path = Path(payload["table"])
        if not table_path.is_absolute():
            table_path = path.parent / table_path
        table = load_table(table_path)
    else:
        spec = payload["table_spec"]
        table = generate_table(
            SearchSpace(tuple(spec["choice_counts"])),
            base_rate=float(spec.get("base_rate", 0.05)),
            effect_range=tuple(spec.get("effect_range", (-0.01, 0.01))),
            rng=int(spec["seed"]),
        )

    return ExperimentSpec(
        cfg=cfg,
        table=table,
        replications=int(payload["replications"]),
        master_seed=int(payload["master_seed"]),
    )
