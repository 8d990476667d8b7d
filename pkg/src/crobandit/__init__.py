"""Bandit-allocated evolutionary search for conversion-rate optimization."""

from .bandit import (
    ArmState,
    BanditSharedState,
    BernoulliSource,
    PolicyRunResult,
    RewardSource,
    SrResult,
    run_policy,
    sr_run,
    sr_schedule,
    ts_select,
    ucb1_select,
    uniform_allocate,
    update,
)
from .evolution import (
    Candidate,
    ElitePool,
    EvolutionConfig,
    GenerationSnapshot,
    RunResult,
    neighborhood_fitness,
    percentile_count,
    run,
    run_bai_mode,
    run_campaign,
    run_mab_ea,
)
from .genome import (
    Archive,
    Genome,
    SearchSpace,
    fitness_proportionate_select,
    mutate,
    random_genome,
    uniform_crossover,
)
from .harness import (
    ComparisonReport,
    ExperimentResult,
    GenerationRecord,
    WinnerRecord,
    best_true_cr,
    compare,
    run_experiment,
    welch_t_test,
)
from .simulator import (
    EffectTable,
    EnumerationSummary,
    SimulatedTraffic,
    enumerate_designs,
    generate_table,
    identity_table,
    load_table,
    save_table,
)

__all__ = [
    "Archive",
    "ArmState",
    "BanditSharedState",
    "BernoulliSource",
    "Candidate",
    "ComparisonReport",
    "EffectTable",
    "ElitePool",
    "EnumerationSummary",
    "EvolutionConfig",
    "ExperimentResult",
    "GenerationRecord",
    "GenerationSnapshot",
    "Genome",
    "PolicyRunResult",
    "RewardSource",
    "RunResult",
    "SearchSpace",
    "SimulatedTraffic",
    "SrResult",
    "WinnerRecord",
    "best_true_cr",
    "compare",
    "enumerate_designs",
    "fitness_proportionate_select",
    "generate_table",
    "identity_table",
    "load_table",
    "mutate",
    "neighborhood_fitness",
    "percentile_count",
    "random_genome",
    "run",
    "run_bai_mode",
    "run_campaign",
    "run_experiment",
    "run_mab_ea",
    "run_policy",
    "save_table",
    "sr_run",
    "sr_schedule",
    "ts_select",
    "ucb1_select",
    "uniform_allocate",
    "update",
    "welch_t_test",
]
