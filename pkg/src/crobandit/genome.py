"""Categorical web-design encodings and the evolutionary operators over them.

A design is a genome: one choice index per page element. The operators here
(random sampling, uniform crossover, per-element mutation, fitness-proportionate
parent selection) are pure functions over an explicit numpy Generator, so runs
are reproducible from a single seed. The Archive tracks which genomes were
already evaluated so the search never spends traffic on a design twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# A genome is the tuple of choice indices, one per element. The tuple itself is
# the canonical encoding used for archive membership.
Genome = tuple[int, ...]


@dataclass(frozen=True)
class SearchSpace:
    """A categorical design space: one choice count per page element."""

    choice_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.choice_counts)
        if not counts:
            raise ValueError("search space needs at least one element")
        if any(c < 1 for c in counts):
            raise ValueError("every element needs at least one choice")
        object.__setattr__(self, "choice_counts", counts)

    @property
    def num_elements(self) -> int:
        return len(self.choice_counts)

    @property
    def design_count(self) -> int:
        """Total number of distinct designs (product of choice counts)."""
        return math.prod(self.choice_counts)

    def contains(self, genome: Sequence[int]) -> bool:
        return len(genome) == len(self.choice_counts) and all(
            0 <= v < c for v, c in zip(genome, self.choice_counts)
        )

    def validate(self, genome: Sequence[int]) -> None:
        if not self.contains(genome):
            raise ValueError(f"genome {genome!r} is not a member of this space")


def random_genome(space: SearchSpace, rng: np.random.Generator) -> Genome:
    """Draw each element's choice uniformly and independently."""
    return tuple(int(rng.integers(c)) for c in space.choice_counts)


def uniform_crossover(parent_a: Genome, parent_b: Genome, rng: np.random.Generator) -> Genome:
    """Copy each element from one of the two parents with probability 1/2."""
    if len(parent_a) != len(parent_b):
        raise ValueError("parents come from different spaces")
    return tuple(a if rng.random() < 0.5 else b for a, b in zip(parent_a, parent_b))


def mutate(
    genome: Genome,
    space: SearchSpace,
    mutation_prob: float,
    rng: np.random.Generator,
) -> Genome:
    """Replace each element, with probability ``mutation_prob``, by a different choice.

    An alteration always picks uniformly among the element's *other* values, so
    ``mutation_prob`` is exactly the per-element change probability. Elements
    with a single choice can never change.
    """
    if not 0.0 <= mutation_prob <= 1.0:
        raise ValueError("mutation probability must be in [0, 1]")
    space.validate(genome)
    out = []
    for value, count in zip(genome, space.choice_counts):
        if rng.random() < mutation_prob and count > 1:
            pick = int(rng.integers(count - 1))
            if pick >= value:
                pick += 1
            out.append(pick)
        else:
            out.append(value)
    return tuple(out)


def selection_probabilities(fitnesses: Sequence[float]) -> list[float]:
    """Normalized fitness-proportionate pick probabilities.

    Falls back to uniform when all fitnesses are zero, so selection stays
    well defined for populations that converted nobody.
    """
    if not fitnesses:
        raise ValueError("empty fitness pool")
    if any(f < 0 for f in fitnesses):
        raise ValueError("fitnesses must be non-negative")
    total = math.fsum(fitnesses)
    if total == 0.0:
        return [1.0 / len(fitnesses)] * len(fitnesses)
    return [f / total for f in fitnesses]


def _pick(probs: list[float], rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1  # guard against float round-off at the top end


def fitness_proportionate_select(
    fitnesses: Sequence[float], rng: np.random.Generator
) -> tuple[int, int]:
    """Pick two distinct pool positions, each proportionally to fitness.

    The second pick renormalizes over the remaining entries, so the same
    parent is never returned twice.
    """
    if len(fitnesses) < 2:
        raise ValueError("parent pool needs at least two candidates")
    first = _pick(selection_probabilities(fitnesses), rng)
    rest = [f for i, f in enumerate(fitnesses) if i != first]
    second = _pick(selection_probabilities(rest), rng)
    if second >= first:
        second += 1
    return first, second


class Archive:
    """Exact membership record of every genome that was ever evaluated."""

    def __init__(self) -> None:
        self._seen: set[Genome] = set()

    def __len__(self) -> int:
        return len(self._seen)

    def __contains__(self, genome: Sequence[int]) -> bool:
        return tuple(genome) in self._seen

    def add(self, genome: Sequence[int]) -> bool:
        """Check-and-insert: returns True (fresh) or False (duplicate, archive unchanged)."""
        key = tuple(int(v) for v in genome)
        if key in self._seen:
            return False
        self._seen.add(key)
        return True
