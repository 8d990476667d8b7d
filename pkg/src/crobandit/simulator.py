"""Synthetic website-traffic environment.

Ground truth is an EffectTable: a base conversion rate plus one additive delta
per element choice. A visit to a design is a Bernoulli trial at the design's
true rate. Tables can be generated from an envelope (uniform deltas in a
range), persisted to JSON with bit-exact round-trips, and enumerated
exhaustively to get the exact mean and best rate over the whole space.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bandit import BernoulliSource
from .genome import Genome, SearchSpace

ENUMERATION_GUARD = 10**7


@dataclass(frozen=True)
class EffectTable:
    """Additive conversion-rate ground truth for one search space."""

    space: SearchSpace
    base_rate: float
    effects: tuple[tuple[float, ...], ...]
    seed: int | None = None  # generation seed, kept so tables are replayable

    def __post_init__(self) -> None:
        if not 0.0 <= self.base_rate <= 1.0:
            raise ValueError("base rate must be a probability")
        if len(self.effects) != self.space.num_elements:
            raise ValueError("effects shape does not match the space")
        for row, count in zip(self.effects, self.space.choice_counts):
            if len(row) != count:
                raise ValueError("effects shape does not match the space")
        object.__setattr__(
            self, "effects", tuple(tuple(float(v) for v in row) for row in self.effects)
        )

    def true_rate(self, genome: Sequence[int]) -> float:
        """Ground-truth conversion rate of a design, clamped to [0, 1]."""
        if len(genome) != self.space.num_elements:
            raise ValueError("genome does not match the table's space")
        self.space.validate(genome)
        rate = self.base_rate + math.fsum(
            row[choice] for row, choice in zip(self.effects, genome)
        )
        return min(1.0, max(0.0, rate))

    def visit(self, genome: Sequence[int], rng: np.random.Generator) -> int:
        """One simulated visitor: 1 on conversion, 0 otherwise."""
        return int(rng.random() < self.true_rate(genome))


def identity_table(space: SearchSpace, base_rate: float = 0.05) -> EffectTable:
    """A table with all-zero effects: every design converts at the base rate."""
    return EffectTable(
        space=space,
        base_rate=base_rate,
        effects=tuple(tuple(0.0 for _ in range(c)) for c in space.choice_counts),
    )


def generate_table(
    space: SearchSpace,
    base_rate: float = 0.05,
    effect_range: tuple[float, float] = (-0.01, 0.01),
    rng: np.random.Generator | int = 0,
) -> EffectTable:
    """Draw every effect uniformly from ``effect_range``.

    Pass an int to have the seed recorded in the table for exact replay; a
    Generator is also accepted, in which case no seed is recorded.
    """
    lo, hi = float(effect_range[0]), float(effect_range[1])
    if lo > hi:
        raise ValueError("effect range must satisfy lo <= hi")
    if isinstance(rng, (int, np.integer)):
        seed: int | None = int(rng)
        gen = np.random.default_rng(seed)
    else:
        seed = None
        gen = rng
    effects = tuple(
        tuple(float(gen.uniform(lo, hi)) for _ in range(count))
        for count in space.choice_counts
    )
    return EffectTable(space=space, base_rate=base_rate, effects=effects, seed=seed)


@dataclass(frozen=True)
class EnumerationSummary:
    """Exact statistics of the full design space under one table."""

    design_count: int
    mean_rate: float
    best_rate: float
    best_genome: Genome


def enumerate_designs(table: EffectTable, guard: int = ENUMERATION_GUARD) -> EnumerationSummary:
    """Exhaustively scan every design; the brute-force oracle for any table.

    Ties for the best rate resolve to the lexicographically smallest genome,
    which falls out of the scan order. Refuses spaces larger than ``guard``.
    """
    count = table.space.design_count
    if count > guard:
        raise ValueError(
            f"space has {count} designs, beyond the enumeration guard {guard}; sample instead"
        )
    best_rate = -1.0
    best_genome: Genome = ()
    rates = []
    for genome in itertools.product(*(range(c) for c in table.space.choice_counts)):
        rate = table.true_rate(genome)
        rates.append(rate)
        if rate > best_rate:
            best_rate = rate
            best_genome = genome
    return EnumerationSummary(
        design_count=count,
        mean_rate=math.fsum(rates) / count,
        best_rate=best_rate,
        best_genome=best_genome,
    )


def save_table(table: EffectTable, path: str | Path) -> None:
    payload = {
        "choice_counts": list(table.space.choice_counts),
        "base_rate": table.base_rate,
        "effects": [list(row) for row in table.effects],
        "seed": table.seed,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_table(path: str | Path) -> EffectTable:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    space = SearchSpace(tuple(payload["choice_counts"]))
    return EffectTable(
        space=space,
        base_rate=float(payload["base_rate"]),
        effects=tuple(tuple(row) for row in payload["effects"]),
        seed=None if payload.get("seed") is None else int(payload["seed"]),
    )


class SimulatedTraffic:
    """Adapter making an EffectTable drive a bandit run over a population.

    Each generation's population becomes one reward source whose arm i is the
    i-th genome, pulled at that genome's true rate through the shared
    Generator.
    """

    def __init__(self, table: EffectTable) -> None:
        self.table = table

    @property
    def space(self) -> SearchSpace:
        return self.table.space

    def source(self, genomes: Sequence[Genome], rng: np.random.Generator) -> BernoulliSource:
        rates = [self.table.true_rate(g) for g in genomes]
        return BernoulliSource(rates, rng)
