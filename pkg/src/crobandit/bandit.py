"""Bernoulli multi-armed bandit policies for visitor-traffic allocation.

Four policies share one interface: ``uniform`` (even split), ``ucb1``
(optimism via a Chernoff-Hoeffding confidence radius), ``ts`` (Thompson
Sampling from Beta posteriors) and ``sr`` (Successive Rejects, a fixed-budget
pure-exploration policy that recommends a single best arm).

Arms are plain conversion/visit counters. Policies run synchronously (counters
zeroed before a run) or asynchronously (counters carried in from earlier runs);
nothing here distinguishes the two, the caller just chooses what state to pass
in. All tie-breaks are deterministic: lowest index wins a selection, highest
index loses a rejection.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels


@dataclass
class ArmState:
    """Per-candidate conversion and visit counters."""

    successes: int = 0
    failures: int = 0

    @property
    def pulls(self) -> int:
        return self.successes + self.failures

    @property
    def empirical_mean(self) -> float:
        """Observed conversion rate; 0.0 for an arm that was never visited."""
        n = self.pulls
        return self.successes / n if n else 0.0

    def record(self, successes: int, failures: int) -> None:
        """Credit a block of pull outcomes to this arm."""
        if successes < 0 or failures < 0:
            raise ValueError("counts must be non-negative")
        self.successes += successes
        self.failures += failures

    def copy(self) -> "ArmState":
        return ArmState(self.successes, self.failures)


@dataclass
class BanditSharedState:
    """State shared across arms of one policy instance.

    Only UCB1 reads it: ``total_pulls`` is the round counter appearing inside
    the confidence radius. It accumulates across every pull charged to the
    policy instance, which is what makes asynchronous UCB1 share its round
    counter across generations.
    """

    total_pulls: int = 0


class RewardSource(ABC):
    """Anything that answers pull(arm) with an independent 0/1 reward."""

    @abstractmethod
    def pull(self, arm: int) -> int:
        """Draw one Bernoulli reward for ``arm``."""

    def pull_many(self, arm: int, count: int) -> int:
        """Draw ``count`` rewards for ``arm``; returns the number of successes."""
        return sum(self.pull(arm) for _ in range(count))


class BernoulliSource(RewardSource):
    """A reward source with fixed per-arm success rates, drawn from one Generator.

    This is the simulated-traffic backend: ``pull`` is a single visitor,
    ``pull_many`` draws a whole traffic block as one binomial sample. Policies
    that share this source's Generator are executed through the compiled
    kernels in :mod:`crobandit._kernels`.
    """

    def __init__(self, rates: Sequence[float], rng: np.random.Generator) -> None:
        self.rates = np.asarray(rates, dtype=np.float64)
        if self.rates.ndim != 1 or self.rates.size == 0:
            raise ValueError("rates must be a non-empty 1-d sequence")
        if np.any(self.rates < 0.0) or np.any(self.rates > 1.0):
            raise ValueError("rates must lie in [0, 1]")
        self.rng = rng

    def pull(self, arm: int) -> int:
        return int(self.rng.random() < self.rates[arm])

    def pull_many(self, arm: int, count: int) -> int:
        if count < 0:
            raise ValueError("count must be non-negative")
        if count == 0:
            return 0
        return int(self.rng.binomial(count, self.rates[arm]))


def update(arm: ArmState, shared: BanditSharedState, reward: int) -> None:
    """Apply one observed reward to an arm and charge the shared round counter."""
    if reward not in (0, 1):
        raise ValueError("reward must be 0 or 1")
    if reward:
        arm.successes += 1
    else:
        arm.failures += 1
    shared.total_pulls += 1


def ucb1_indices(arms: Sequence[ArmState], shared: BanditSharedState) -> np.ndarray:
    """UCB1 index of every arm: empirical mean plus sqrt(2 ln t / n).

    Unpulled arms get +inf, which reproduces the initialization sweep (they are
    selected first, lowest index first) without a separate code path.
    """
    if not arms:
        raise ValueError("no arms")
    log_t = math.log(max(shared.total_pulls, 1))
    out = np.empty(len(arms), dtype=np.float64)
    for i, arm in enumerate(arms):
        n = arm.pulls
        if n == 0:
            out[i] = math.inf
        else:
            out[i] = arm.successes / n + math.sqrt(2.0 * log_t / n)
    return out


def ucb1_select(arms: Sequence[ArmState], shared: BanditSharedState) -> int:
    """Arm with the highest UCB1 index; ties go to the lowest index."""
    return int(np.argmax(ucb1_indices(arms, shared)))


def ts_posterior_draws(arms: Sequence[ArmState], rng: np.random.Generator) -> np.ndarray:
    """One fresh draw from every arm's Beta posterior.

    After S successes and F failures the posterior is Beta(S+1, F+1); a fresh
    arm samples Beta(1, 1), i.e. uniformly on [0, 1].
    """
    if not arms:
        raise ValueError("no arms")
    alpha = np.array([a.successes + 1.0 for a in arms])
    beta = np.array([a.failures + 1.0 for a in arms])
    return rng.beta(alpha, beta)


def ts_select(arms: Sequence[ArmState], rng: np.random.Generator) -> int:
    """Thompson Sampling: argmax of posterior draws; ties go to the lowest index."""
    return int(np.argmax(ts_posterior_draws(arms, rng)))


def sr_schedule(num_arms: int, budget: int) -> list[int]:
    """Cumulative per-arm pull targets for the K-1 phases of Successive Rejects.

    Phase k's target is ceil((budget - K) / (logbar(K) * (K + 1 - k))) with
    logbar(K) = 1/2 + sum_{i=2..K} 1/i. The targets are non-decreasing and the
    implied total pull count never exceeds the budget.
    """
    if num_arms < 2:
        raise ValueError("successive rejects needs at least two arms")
    if budget < num_arms:
        raise ValueError("budget must allow at least one pull per arm")
    log_bar = 0.5 + math.fsum(1.0 / i for i in range(2, num_arms + 1))
    spend = budget - num_arms
    return [
        math.ceil(spend / (log_bar * (num_arms + 1 - k)))
        for k in range(1, num_arms)
    ]


@dataclass
class SrResult:
    """Outcome of one Successive Rejects run."""

    recommended: int
    pulls_used: int
    finalists: list[int]  # arms still alive during the last phase


def sr_run(arms: Sequence[ArmState], budget: int, source: RewardSource) -> SrResult:
    """Successive Rejects: pull in phases, drop the worst arm after each phase.

    After each phase the surviving arm with the lowest empirical mean is
    removed (ties remove the highest index); the last survivor is recommended.
    Arms may carry prior counts, in which case rejections compare the
    cumulative means. Consumes at most ``budget`` pulls.
    """
    targets = sr_schedule(len(arms), budget)
    active = list(range(len(arms)))
    previous = 0
    used = 0
    finalists = active.copy()
    for phase, target in enumerate(targets):
        step = target - previous
        if phase == len(targets) - 1:
            finalists = active.copy()
        if step > 0:
            for i in active:
                wins = source.pull_many(i, step)
                arms[i].record(wins, step - wins)
                used += step
        drop = min(active, key=lambda i: (arms[i].empirical_mean, -i))
        active.remove(drop)
        previous = target
    return SrResult(recommended=active[0], pulls_used=used, finalists=finalists)


def uniform_allocate(arms: Sequence[ArmState], budget: int, source: RewardSource) -> None:
    """Round-robin split: arm i gets budget//K pulls, plus one if i < budget % K."""
    if not arms:
        raise ValueError("no arms")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    base, extra = divmod(budget, len(arms))
    for i, arm in enumerate(arms):
        quota = base + (1 if i < extra else 0)
        if quota:
            wins = source.pull_many(i, quota)
            arm.record(wins, quota - wins)


POLICIES = ("uniform", "ucb1", "ts", "sr")


@dataclass
class PolicyRunResult:
    """What a full policy run reports back."""

    recommendation: int | None = None  # sr only
    sr_shortfall: int = 0  # pulls sr left over before redistribution


def _use_kernel(source: RewardSource, rng: np.random.Generator | None, n_arms: int) -> bool:
    return (
        isinstance(source, BernoulliSource)
        and rng is not None
        and source.rng is rng
        and source.rates.shape[0] == n_arms
    )


def _run_ts(arms, budget, source, rng, shared) -> None:
    if rng is None:
        raise ValueError("thompson sampling needs a random generator")
    if _use_kernel(source, rng, len(arms)):
        succ = np.array([a.successes for a in arms], dtype=np.int64)
        fail = np.array([a.failures for a in arms], dtype=np.int64)
        _kernels.ts_rounds(succ, fail, source.rates, budget, rng)
        for arm, s, f in zip(arms, succ, fail):
            arm.successes, arm.failures = int(s), int(f)
        shared.total_pulls += budget
        return
    for _ in range(budget):
        pick = ts_select(arms, rng)
        update(arms[pick], shared, source.pull(pick))


def _run_ucb1(arms, budget, source, rng, shared) -> None:
    if _use_kernel(source, rng, len(arms)):
        succ = np.array([a.successes for a in arms], dtype=np.int64)
        pulls = np.array([a.pulls for a in arms], dtype=np.int64)
        shared.total_pulls = int(
            _kernels.ucb1_rounds(succ, pulls, shared.total_pulls, source.rates, budget, rng)
        )
        for arm, s, n in zip(arms, succ, pulls):
            arm.successes, arm.failures = int(s), int(n - s)
        return
    for _ in range(budget):
        pick = ucb1_select(arms, shared)
        update(arms[pick], shared, source.pull(pick))


def run_policy(
    policy: str,
    arms: Sequence[ArmState],
    budget: int,
    source: RewardSource,
    rng: np.random.Generator | None = None,
    shared: BanditSharedState | None = None,
) -> PolicyRunResult:
    """Spend a traffic budget on the arms under the named policy.

    Every policy consumes exactly ``budget`` pulls. Successive Rejects may
    finish its schedule short of the budget; the leftover is then split
    round-robin over the arms that were still alive in its final phase, so a
    generation's traffic is never silently discarded.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {POLICIES}")
    if not arms:
        raise ValueError("no arms")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if shared is None:
        shared = BanditSharedState()

    if policy == "uniform":
        uniform_allocate(arms, budget, source)
        shared.total_pulls += budget
        return PolicyRunResult()

    if policy == "sr":
        result = sr_run(arms, budget, source)
        leftover = budget - result.pulls_used
        finalists = sorted(result.finalists)
        base, extra = divmod(leftover, len(finalists))
        for j, i in enumerate(finalists):
            quota = base + (1 if j < extra else 0)
            if quota:
                wins = source.pull_many(i, quota)
                arms[i].record(wins, quota - wins)
        shared.total_pulls += budget
        return PolicyRunResult(recommendation=result.recommended, sr_shortfall=leftover)

    if policy == "ts":
        _run_ts(arms, budget, source, rng, shared)
    else:
        _run_ucb1(arms, budget, source, rng, shared)
    return PolicyRunResult()
