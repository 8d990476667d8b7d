"""The optimization drivers: bandit-allocated evolutionary search.

Three run modes share one generational skeleton:

* ``mab_ea``: per generation, a bandit policy spends the traffic budget on the
  population, measured conversion rates become fitnesses, elites survive and
  fitness-proportionate crossover plus mutation fill the rest, with an archive
  forbidding any design from ever re-entering the population.
* ``bai``: like ``mab_ea`` but nothing survives between generations; instead
  the best candidates of every generation feed a bounded elite pool, and after
  the last generation a Successive Rejects phase over that pool, with fresh
  counters and its own budget, picks the final winner.
* ``campaign``: optimizes conversion during the run instead of a final winner.
  Survivors keep their conversion/visit counters across generations
  (asynchronous statistics), only the worst slice of the population is
  replaced each generation, and duplicates are forbidden only within the
  current population.

A fourth mode, ``neighborhood``, is the ``mab_ea`` loop with ranking driven by
the mean measured fitness of each candidate's nearest evaluated neighbors
rather than by its own noisy measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .bandit import ArmState, BanditSharedState, RewardSource, run_policy
from .genome import (
    Archive,
    Genome,
    SearchSpace,
    fitness_proportionate_select,
    mutate,
    random_genome,
    uniform_crossover,
)

MODES = ("mab_ea", "bai", "campaign", "neighborhood")
# Offspring construction aborts after this many consecutive duplicate rejections
# per missing slot factor; tiny spaces then get padded with duplicates.
FILL_ATTEMPT_FACTOR = 100


class TrafficEnv(Protocol):
    """What the drivers need from an environment: a space and reward sources."""

    @property
    def space(self) -> SearchSpace: ...

    def source(self, genomes: Sequence[Genome], rng: np.random.Generator) -> RewardSource: ...


@dataclass
class EvolutionConfig:
    """Control parameters shared by all run modes."""

    population_size: int
    generations: int
    traffic_per_generation: int
    elite_percent: float = 20.0
    parent_percent: float = 20.0
    mutation_prob: float = 0.01
    policy: str = "ts"
    mode: str = "mab_ea"
    bai_elite_size: int = 20
    bai_traffic: int = 10_000
    neighborhood_size: int = 5
    asynchronous: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.policy not in ("uniform", "ucb1", "ts", "sr"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.population_size < 2:
            raise ValueError("population size must be at least 2")
        if self.generations < 1:
            raise ValueError("need at least one generation")
        if self.traffic_per_generation < self.population_size:
            raise ValueError("per-generation traffic must cover the population")
        if not 0.0 < self.elite_percent <= 100.0:
            raise ValueError("elite percent must be in (0, 100]")
        if not 0.0 < self.parent_percent <= 100.0:
            raise ValueError("parent percent must be in (0, 100]")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation probability must be in [0, 1]")
        if self.mode == "bai":
            if self.bai_elite_size < 2:
                raise ValueError("the winner-selection pool needs at least two slots")
            if self.bai_traffic < self.bai_elite_size:
                raise ValueError("winner-selection traffic must cover the pool")
        if self.neighborhood_size < 1:
            raise ValueError("neighborhood size must be at least 1")

    @property
    def elite_count(self) -> int:
        return percentile_count(self.population_size, self.elite_percent)

    @property
    def parent_count(self) -> int:
        return percentile_count(self.population_size, self.parent_percent)


def percentile_count(population_size: int, percent: float) -> int:
    """How many candidates "the best C percentile" means: ceil(K*C/100), at least 1."""
    if population_size < 1:
        raise ValueError("population size must be positive")
    if not 0.0 < percent <= 100.0:
        raise ValueError("percent must be in (0, 100]")
    return max(1, math.ceil(population_size * percent / 100.0 - 1e-9))


@dataclass
class Candidate:
    """One population member: a design plus its conversion counters."""

    genome: Genome
    arm: ArmState
    birth_generation: int

    @property
    def fitness(self) -> float:
        return self.arm.empirical_mean


@dataclass(frozen=True)
class EliteEntry:
    genome: Genome
    fitness: float
    generation: int


class ElitePool:
    """Bounded best-so-far collection feeding the winner-selection phase.

    Overflow trimming always evicts the lowest recorded fitness; among equals
    the latest insertion goes, so established entries are preserved.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.entries: list[EliteEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, genome: Genome, fitness: float, generation: int) -> None:
        self.entries.append(EliteEntry(genome, fitness, generation))
        while len(self.entries) > self.capacity:
            worst = 0
            for i, entry in enumerate(self.entries):
                if entry.fitness <= self.entries[worst].fitness:
                    worst = i
            del self.entries[worst]


@dataclass(frozen=True)
class GenerationSnapshot:
    """Everything the harness needs about one evaluated generation."""

    generation: int
    genomes: tuple[Genome, ...]
    fitnesses: tuple[float, ...]
    arms: tuple[ArmState, ...]
    conversions: int  # within this generation only
    visits: int
    padded: bool  # offspring construction ran out of fresh designs


@dataclass
class RunResult:
    """Full output of one optimization run."""

    snapshots: list[GenerationSnapshot]
    final_population: list[Genome]
    winner: Genome | None = None
    winner_fitness: float | None = None
    elite_pool: list[EliteEntry] = field(default_factory=list)
    winner_conversions: int = 0  # winner-selection phase totals (bai only)
    winner_visits: int = 0


def neighborhood_fitness(
    candidate: Genome,
    evaluated_genomes: Sequence[Genome] | np.ndarray,
    evaluated_fitnesses: Sequence[float] | np.ndarray,
    k: int,
) -> float:
    """Mean recorded fitness of the k evaluated designs nearest by Hamming distance.

    Distance ties resolve to the earlier evaluation. With fewer than k designs
    evaluated so far, all of them count.
    """
    if k < 1:
        raise ValueError("neighborhood size must be at least 1")
    genomes = np.asarray(evaluated_genomes, dtype=np.int64)
    fitnesses = np.asarray(evaluated_fitnesses, dtype=np.float64)
    if genomes.ndim != 2 or genomes.shape[0] == 0:
        raise ValueError("need at least one evaluated design")
    if genomes.shape[0] != fitnesses.shape[0]:
        raise ValueError("genomes and fitnesses disagree in length")
    distances = (genomes != np.asarray(candidate, dtype=np.int64)).sum(axis=1)
    order = np.argsort(distances, kind="stable")
    nearest = order[: min(k, len(order))]
    return float(np.mean(fitnesses[nearest]))


def _rank(fitnesses: Sequence[float]) -> list[int]:
    """Candidate positions sorted best-first; equal fitnesses keep the lower index first."""
    return sorted(range(len(fitnesses)), key=lambda i: (-fitnesses[i], i))


def _initial_population(space: SearchSpace, size: int, rng: np.random.Generator) -> list[Genome]:
    """Duplicate-free random population."""
    if size > space.design_count:
        raise ValueError(
            f"population of {size} cannot be duplicate-free in a space of "
            f"{space.design_count} designs"
        )
    population: list[Genome] = []
    seen: set[Genome] = set()
    while len(population) < size:
        g = random_genome(space, rng)
        if g in seen:
            continue
        seen.add(g)
        population.append(g)
    return population


def _spawn(
    parent_genomes: Sequence[Genome],
    parent_fitnesses: Sequence[float],
    space: SearchSpace,
    mutation_prob: float,
    rng: np.random.Generator,
) -> Genome:
    """Select two distinct parents, cross them uniformly, mutate the child."""
    a, b = fitness_proportionate_select(parent_fitnesses, rng)
    child = uniform_crossover(parent_genomes[a], parent_genomes[b], rng)
    return mutate(child, space, mutation_prob, rng)


def _fill_offspring(
    next_population: list[Genome],
    target_size: int,
    limit: int,
    is_fresh,
    parent_genomes: Sequence[Genome],
    parent_fitnesses: Sequence[float],
    space: SearchSpace,
    mutation_prob: float,
    rng: np.random.Generator,
) -> bool:
    """Append offspring until the population reaches ``target_size``.

    ``is_fresh(child)`` decides (and records) whether a child is acceptable.
    After ``limit`` consecutive rejections the space is treated as exhausted
    and the remaining slots are padded with duplicate offspring; returns True
    when that happened.
    """
    rejected = 0
    while len(next_population) < target_size:
        child = _spawn(parent_genomes, parent_fitnesses, space, mutation_prob, rng)
        if is_fresh(child):
            next_population.append(child)
            rejected = 0
        else:
            rejected += 1
            if rejected >= limit:
                while len(next_population) < target_size:
                    next_population.append(
                        _spawn(parent_genomes, parent_fitnesses, space, mutation_prob, rng)
                    )
                return True
    return False


def _run_generational(cfg: EvolutionConfig, env: TrafficEnv, rng: np.random.Generator) -> RunResult:
    """Shared loop for the synchronous modes (mab_ea, neighborhood, bai)."""
    space = env.space
    k = cfg.population_size
    use_neighborhood = cfg.mode == "neighborhood"
    is_bai = cfg.mode == "bai"
    if cfg.parent_count < 2:
        raise ValueError("parent percentile selects fewer than two candidates")

    archive = Archive()
    population = _initial_population(space, k, rng)
    for g in population:
        archive.add(g)
    pool = ElitePool(cfg.bai_elite_size) if is_bai else None
    seen_genomes: list[Genome] = []  # evaluation order, for neighborhood ranking
    seen_fitnesses: list[float] = []
    snapshots: list[GenerationSnapshot] = []

    for generation in range(1, cfg.generations + 1):
        arms = [ArmState() for _ in range(k)]
        shared = BanditSharedState()
        source = env.source(population, rng)
        run_policy(cfg.policy, arms, cfg.traffic_per_generation, source, rng, shared)
        measured = [arm.empirical_mean for arm in arms]

        if use_neighborhood:
            seen_genomes.extend(population)
            seen_fitnesses.extend(measured)
            matrix = np.asarray(seen_genomes, dtype=np.int64)
            values = np.asarray(seen_fitnesses, dtype=np.float64)
            fitnesses = [
                neighborhood_fitness(g, matrix, values, cfg.neighborhood_size)
                for g in population
            ]
        else:
            fitnesses = measured

        order = _rank(fitnesses)
        if pool is not None:
            for i in order[: cfg.elite_count]:
                pool.add(population[i], fitnesses[i], generation)
        parent_positions = order[: cfg.parent_count]
        parent_genomes = [population[i] for i in parent_positions]
        parent_fitnesses = [fitnesses[i] for i in parent_positions]

        next_population = [] if is_bai else [population[i] for i in order[: cfg.elite_count]]
        padded = _fill_offspring(
            next_population,
            k,
            FILL_ATTEMPT_FACTOR * k,
            archive.add,
            parent_genomes,
            parent_fitnesses,
            space,
            cfg.mutation_prob,
            rng,
        )

        snapshots.append(
            GenerationSnapshot(
                generation=generation,
                genomes=tuple(population),
                fitnesses=tuple(fitnesses),
                arms=tuple(arm.copy() for arm in arms),
                conversions=sum(arm.successes for arm in arms),
                visits=sum(arm.pulls for arm in arms),
                padded=padded,
            )
        )
        population = next_population

    result = RunResult(snapshots=snapshots, final_population=population)
    if pool is not None:
        result.elite_pool = list(pool.entries)
        if len(pool.entries) < 2:
            raise ValueError("winner-selection pool ended up smaller than two candidates")
        pool_genomes = [entry.genome for entry in pool.entries]
        pool_arms = [ArmState() for _ in pool_genomes]
        pool_source = env.source(pool_genomes, rng)
        outcome = run_policy("sr", pool_arms, cfg.bai_traffic, pool_source, rng)
        assert outcome.recommendation is not None
        result.winner = pool_genomes[outcome.recommendation]
        result.winner_fitness = pool_arms[outcome.recommendation].empirical_mean
        result.winner_conversions = sum(arm.successes for arm in pool_arms)
        result.winner_visits = sum(arm.pulls for arm in pool_arms)
    return result


def _run_campaign(cfg: EvolutionConfig, env: TrafficEnv, rng: np.random.Generator) -> RunResult:
    """Campaign mode: maximize conversions during the run, not a final winner.

    With ``cfg.asynchronous`` set, survivors keep their counters between
    generations (and UCB1 keeps its shared round counter); otherwise all
    statistics are zeroed each generation, which is the synchronous ablation.
    """
    space = env.space
    k = cfg.population_size
    if cfg.parent_count < 2:
        raise ValueError("parent percentile selects fewer than two candidates")
    replace_count = cfg.parent_count  # worst slice replaced == parent slice size

    population = [
        Candidate(genome=g, arm=ArmState(), birth_generation=1)
        for g in _initial_population(space, k, rng)
    ]
    shared = BanditSharedState()
    snapshots: list[GenerationSnapshot] = []

    for generation in range(1, cfg.generations + 1):
        if not cfg.asynchronous:
            for candidate in population:
                candidate.arm = ArmState()
            shared = BanditSharedState()
        arms = [c.arm for c in population]
        before = [(arm.successes, arm.pulls) for arm in arms]
        source = env.source([c.genome for c in population], rng)
        run_policy(cfg.policy, arms, cfg.traffic_per_generation, source, rng, shared)
        fitnesses = [c.fitness for c in population]  # cumulative when asynchronous

        order = _rank(fitnesses)
        parent_positions = order[: cfg.parent_count]
        parent_genomes = [population[i].genome for i in parent_positions]
        parent_fitnesses = [fitnesses[i] for i in parent_positions]

        # Drop the worst slice; ties evict the younger candidate, then the
        # higher position, so better-estimated incumbents stay.
        removal_order = sorted(
            range(k),
            key=lambda i: (fitnesses[i], -population[i].birth_generation, -i),
        )
        removed = set(removal_order[:replace_count])
        survivors = [c for i, c in enumerate(population) if i not in removed]

        current_genomes = {c.genome for c in survivors}

        def is_fresh(child: Genome) -> bool:
            if child in current_genomes:
                return False
            current_genomes.add(child)
            return True

        offspring: list[Genome] = []
        padded = _fill_offspring(
            offspring,
            k - len(survivors),
            FILL_ATTEMPT_FACTOR * k,
            is_fresh,
            parent_genomes,
            parent_fitnesses,
            space,
            cfg.mutation_prob,
            rng,
        )

        snapshots.append(
            GenerationSnapshot(
                generation=generation,
                genomes=tuple(c.genome for c in population),
                fitnesses=tuple(fitnesses),
                arms=tuple(c.arm.copy() for c in population),
                conversions=sum(a.successes for a in arms) - sum(s for s, _ in before),
                visits=sum(a.pulls for a in arms) - sum(n for _, n in before),
                padded=padded,
            )
        )
        population = survivors + [
            Candidate(genome=g, arm=ArmState(), birth_generation=generation + 1)
            for g in offspring
        ]

    return RunResult(
        snapshots=snapshots,
        final_population=[c.genome for c in population],
    )


def run_mab_ea(cfg: EvolutionConfig, env: TrafficEnv, rng: np.random.Generator) -> RunResult:
    if cfg.mode not in ("mab_ea", "neighborhood"):
        raise ValueError("config mode is not mab_ea or neighborhood")
    return _run_generational(cfg, env, rng)


def run_bai_mode(cfg: EvolutionConfig, env: TrafficEnv, rng: np.random.Generator) -> RunResult:
    if cfg.mode != "bai":
        raise ValueError("config mode is not bai")
    return _run_generational(cfg, env, rng)


def run_campaign(cfg: EvolutionConfig, env: TrafficEnv, rng: np.random.Generator) -> RunResult:
    if cfg.mode != "campaign":
        raise ValueError("config mode is not campaign")
    return _run_campaign(cfg, env, rng)


def run(cfg: EvolutionConfig, env: TrafficEnv, rng: np.random.Generator) -> RunResult:
    """Dispatch to the configured mode."""
    if cfg.mode == "campaign":
        return _run_campaign(cfg, env, rng)
    return _run_generational(cfg, env, rng)
