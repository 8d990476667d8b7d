import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crobandit.bandit import (
    ArmState,
    BanditSharedState,
    BernoulliSource,
    RewardSource,
    run_policy,
    sr_run,
    sr_schedule,
    ts_posterior_draws,
    ts_select,
    ucb1_indices,
    ucb1_select,
    uniform_allocate,
    update,
)


class CountingSource(RewardSource):
    """Reward 0 forever; counts pulls per arm via the default pull_many."""

    def __init__(self, n_arms: int) -> None:
        self.counts = [0] * n_arms

    def pull(self, arm: int) -> int:
        self.counts[arm] += 1
        return 0


class FixedSource(RewardSource):
    """Deterministic per-arm reward."""

    def __init__(self, rewards) -> None:
        self.rewards = list(rewards)

    def pull(self, arm: int) -> int:
        return self.rewards[arm]


class PlainBernoulli(RewardSource):
    """Same draws as BernoulliSource.pull but not recognized by the fast path."""

    def __init__(self, rates, rng) -> None:
        self.rates = list(rates)
        self.rng = rng

    def pull(self, arm: int) -> int:
        return int(self.rng.random() < self.rates[arm])


def arms_of(*pairs):
    return [ArmState(successes=s, failures=f) for s, f in pairs]


class TestArmState:
    def test_counters_and_mean(self):
        arm = ArmState(successes=3, failures=1)
        assert arm.pulls == 4
        assert arm.empirical_mean == 0.75

    def test_unpulled_arm_has_zero_mean(self):
        assert ArmState().empirical_mean == 0.0

    def test_record_blocks(self):
        arm = ArmState()
        arm.record(2, 5)
        assert (arm.successes, arm.failures) == (2, 5)
        with pytest.raises(ValueError):
            arm.record(-1, 0)


class TestUpdate:
    def test_success_increments_successes(self):
        arm, shared = ArmState(), BanditSharedState()
        update(arm, shared, 1)
        assert (arm.successes, arm.failures, arm.pulls) == (1, 0, 1)
        assert arm.empirical_mean == 1.0
        assert shared.total_pulls == 1

    def test_failure_increments_failures(self):
        arm, shared = ArmState(successes=1, failures=1), BanditSharedState()
        update(arm, shared, 0)
        assert (arm.successes, arm.failures, arm.pulls) == (1, 2, 3)
        assert arm.empirical_mean == pytest.approx(1 / 3)

    def test_reward_sequence_gives_running_mean(self):
        arm, shared = ArmState(), BanditSharedState()
        for r in (1, 0, 1, 1):
            update(arm, shared, r)
        assert arm.empirical_mean == 0.75
        assert shared.total_pulls == 4

    def test_rejects_nonbinary_reward(self):
        with pytest.raises(ValueError):
            update(ArmState(), BanditSharedState(), 2)


class TestUcb1:
    def test_hand_evaluated_index_comparison(self):
        # x=0.5,n=2 vs x=0.2,n=5 at t=10: 2.0174 beats 1.1597.
        arms = arms_of((1, 1), (1, 4))
        shared = BanditSharedState(total_pulls=10)
        indices = ucb1_indices(arms, shared)
        assert indices[0] == pytest.approx(0.5 + math.sqrt(2 * math.log(10) / 2), abs=1e-12)
        assert indices[1] == pytest.approx(0.2 + math.sqrt(2 * math.log(10) / 5), abs=1e-12)
        assert indices[0] == pytest.approx(2.0174, abs=5e-5)
        assert indices[1] == pytest.approx(1.1597, abs=5e-5)
        assert ucb1_select(arms, shared) == 0

    def test_unpulled_arm_is_initialized_first(self):
        arms = arms_of((2, 1), (0, 0))
        assert ucb1_select(arms, BanditSharedState(total_pulls=3)) == 1

    def test_ties_break_to_lowest_index(self):
        arms = arms_of((1, 1), (1, 1))
        assert ucb1_select(arms, BanditSharedState(total_pulls=17)) == 0

    def test_empty_arms_rejected(self):
        with pytest.raises(ValueError):
            ucb1_select([], BanditSharedState())

    @given(
        st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=12),
        st.integers(1, 10_000),
        st.floats(-5, 5, allow_nan=False),
    )
    def test_adding_a_constant_to_every_index_keeps_the_choice(self, pairs, total, shift):
        arms = [ArmState(s, max(f, 1) if s == 0 and f == 0 else f) for s, f in pairs]
        shared = BanditSharedState(total_pulls=total)
        indices = ucb1_indices(arms, shared)
        assert int(np.argmax(indices)) == int(np.argmax(indices + shift))
        assert ucb1_select(arms, shared) == int(np.argmax(indices))


class TestThompson:
    def test_single_arm_is_always_chosen(self, rng):
        assert ts_select([ArmState(3, 4)], rng) == 0

    def test_posterior_mean_matches_beta_parameters(self, rng):
        # Empirical mean of 1e5 posterior draws vs (S+1)/(S+F+2), within 3 SE.
        for s, f in ((0, 0), (3, 7), (40, 2), (900, 100)):
            arm = ArmState(s, f)
            draws = np.array([ts_posterior_draws([arm], rng)[0] for _ in range(100_000)])
            alpha, beta = s + 1, f + 1
            mean = alpha / (alpha + beta)
            var = alpha * beta / ((alpha + beta) ** 2 * (alpha + beta + 1))
            assert abs(draws.mean() - mean) < 3 * math.sqrt(var / draws.size)

    def test_dominant_posterior_wins_almost_always(self, rng):
        # Monte Carlo oracle: P(Beta(901,101) > Beta(101,901)) is ~1.
        oracle = (rng.beta(901, 101, 10**6) > rng.beta(101, 901, 10**6)).mean()
        assert oracle > 0.999
        arms = arms_of((900, 100), (100, 900))
        wins = sum(ts_select(arms, rng) == 0 for _ in range(1000))
        assert wins > 990

    def test_empty_arms_rejected(self, rng):
        with pytest.raises(ValueError):
            ts_select([], rng)


class TestSrSchedule:
    def test_three_arms_hundred_pulls(self):
        # logbar(3) = 4/3; ceil(0.75*97/3)=25, ceil(0.75*97/2)=37.
        assert sr_schedule(3, 100) == [25, 37]

    def test_two_arms_ten_pulls(self):
        # logbar(2) = 1, single phase: ceil(8 / (1*2)) = 4 pulls per arm.
        assert sr_schedule(2, 10) == [4]

    def test_two_arms_two_pulls_degenerates_to_zero(self):
        assert sr_schedule(2, 2) == [0]

    def test_infeasible_inputs_rejected(self):
        with pytest.raises(ValueError):
            sr_schedule(1, 100)
        with pytest.raises(ValueError):
            sr_schedule(3, 2)

    @given(st.integers(2, 64), st.data())
    def test_targets_never_decrease(self, k, data):
        n = data.draw(st.integers(k, 10**6))
        targets = sr_schedule(k, n)
        assert len(targets) == k - 1
        assert all(a <= b for a, b in zip(targets, targets[1:]))

    @given(st.integers(2, 64), st.data())
    def test_implied_total_pulls_fit_the_budget(self, k, data):
        n = data.draw(st.integers(k, 10**6))
        targets = sr_schedule(k, n)
        consumed = sum(targets[:-1]) + 2 * targets[-1]
        assert consumed <= n


class TestSrRun:
    def test_dominant_arm_is_recommended(self):
        arms = arms_of((0, 0), (0, 0))
        result = sr_run(arms, 10, FixedSource([1, 0]))
        assert result.recommended == 0
        assert result.finalists == [0, 1]

    def test_all_zero_rewards_reject_highest_index_each_phase(self):
        arms = arms_of((0, 0), (0, 0), (0, 0))
        result = sr_run(arms, 100, FixedSource([0, 0, 0]))
        assert result.recommended == 0

    def test_respects_budget_and_leaves_one_survivor(self):
        source = CountingSource(6)
        arms = arms_of(*([(0, 0)] * 6))
        result = sr_run(arms, 500, source)
        assert sum(source.counts) == result.pulls_used <= 500
        assert 0 <= result.recommended < 6

    def test_identifies_best_arm_reliably(self):
        # Frozen regression floor from a 1000-replication measurement at
        # rates (0.08, 0.05 x4), budget 10k: the best arm wins ~99% of runs.
        rng = np.random.default_rng(777)
        rates = [0.08, 0.05, 0.05, 0.05, 0.05]
        wins = 0
        runs = 1000
        for _ in range(runs):
            arms = [ArmState() for _ in rates]
            result = sr_run(arms, 10_000, BernoulliSource(rates, rng))
            wins += result.recommended == 0
        assert wins / runs >= 0.95

    @given(st.integers(2, 12), st.data())
    @settings(max_examples=60)
    def test_budget_feasibility_and_uniqueness(self, k, data):
        n = data.draw(st.integers(k, 4000))
        source = CountingSource(k)
        arms = arms_of(*([(0, 0)] * k))
        result = sr_run(arms, n, source)
        assert sum(source.counts) <= n
        assert sum(source.counts) == result.pulls_used
        assert 0 <= result.recommended < k
        assert len(result.finalists) == 2 or k == 2


class TestUniformAllocate:
    def test_paper_scale_split_is_exact(self):
        source = CountingSource(20)
        arms = arms_of(*([(0, 0)] * 20))
        uniform_allocate(arms, 10_000, source)
        assert source.counts == [500] * 20
        assert all(arm.pulls == 500 for arm in arms)

    def test_remainder_goes_to_the_front(self):
        source = CountingSource(3)
        uniform_allocate(arms_of((0, 0), (0, 0), (0, 0)), 7, source)
        assert source.counts == [3, 2, 2]

    def test_single_arm_takes_everything(self):
        source = CountingSource(1)
        uniform_allocate(arms_of((0, 0)), 5, source)
        assert source.counts == [5]


class TestRunPolicy:
    def test_zero_budget_changes_nothing(self, rng):
        arms = arms_of((2, 3), (1, 1))
        run_policy("ts", arms, 0, FixedSource([1, 1]), rng)
        assert [(a.successes, a.failures) for a in arms] == [(2, 3), (1, 1)]

    def test_ucb1_budget_equal_to_arms_is_one_sweep(self, rng):
        source = CountingSource(4)
        arms = arms_of(*([(0, 0)] * 4))
        run_policy("ucb1", arms, 4, source, rng)
        assert source.counts == [1, 1, 1, 1]

    def test_ts_concentrates_on_the_good_arm(self):
        # Frozen floor from a 100-replication measurement at rates (0.9, 0.1):
        # the good arm takes ~97% of the 1000-pull budget on average.
        shares = []
        for rep in range(100):
            rng = np.random.default_rng(5000 + rep)
            arms = arms_of((0, 0), (0, 0))
            run_policy("ts", arms, 1000, BernoulliSource([0.9, 0.1], rng), rng)
            shares.append(arms[0].pulls / 1000)
        assert np.mean(shares) > 0.8

    def test_sr_redistributes_the_shortfall(self):
        source = CountingSource(3)
        arms = arms_of(*([(0, 0)] * 3))
        result = run_policy("sr", arms, 100, source)
        assert sum(source.counts) == 100
        assert result.sr_shortfall == 100 - (25 * 3 + (37 - 25) * 2)
        assert result.recommendation is not None

    def test_sr_with_tiny_budget_still_spends_everything(self):
        source = CountingSource(2)
        arms = arms_of((0, 0), (0, 0))
        result = run_policy("sr", arms, 2, source)
        assert source.counts == [1, 1]
        assert result.recommendation == 0

    def test_budget_below_arm_count_is_infeasible_for_sr(self, rng):
        with pytest.raises(ValueError):
            run_policy("sr", arms_of((0, 0), (0, 0), (0, 0)), 2, FixedSource([0, 0, 0]))

    def test_unknown_policy_rejected(self, rng):
        with pytest.raises(ValueError):
            run_policy("greedy", arms_of((0, 0)), 5, FixedSource([0]), rng)

    @pytest.mark.parametrize("policy", ["uniform", "ucb1", "ts", "sr"])
    @given(seed=st.integers(0, 2**32 - 1), k=st.integers(2, 8), budget=st.integers(0, 300))
    @settings(max_examples=40)
    def test_budget_conservation(self, policy, seed, k, budget):
        if policy == "sr":
            budget = max(budget, k)
        rng = np.random.default_rng(seed)
        source = CountingSource(k)
        arms = arms_of(*([(0, 0)] * k))
        run_policy(policy, arms, budget, source, rng)
        assert sum(source.counts) == budget
        assert sum(arm.pulls for arm in arms) == budget

    @pytest.mark.parametrize("policy", ["uniform", "ucb1", "ts", "sr"])
    def test_same_seed_same_outcome(self, policy):
        def one(seed):
            rng = np.random.default_rng(seed)
            arms = arms_of(*([(0, 0)] * 5))
            src = BernoulliSource([0.02, 0.04, 0.06, 0.08, 0.1], rng)
            run_policy(policy, arms, 400, src, rng)
            return [(a.successes, a.failures) for a in arms]

        assert one(99) == one(99)
        assert one(99) != one(100) or policy == "uniform"

    @pytest.mark.parametrize("policy", ["ts", "ucb1"])
    def test_kernel_path_matches_generic_loop_exactly(self, policy):
        rates = [0.1, 0.5, 0.3, 0.05]

        def final_states(fast: bool):
            rng = np.random.default_rng(4242)
            source = BernoulliSource(rates, rng) if fast else PlainBernoulli(rates, rng)
            arms = arms_of(*([(0, 0)] * len(rates)))
            shared = BanditSharedState()
            run_policy(policy, arms, 500, source, rng, shared)
            return [(a.successes, a.failures) for a in arms], shared.total_pulls, rng.random()

        assert final_states(True) == final_states(False)

    def test_carried_statistics_keep_accumulating(self, rng):
        # Asynchronous use: a second run starts from the first run's counters.
        arms = arms_of((50, 950), (0, 0))
        shared = BanditSharedState(total_pulls=1000)
        run_policy("ts", arms, 100, BernoulliSource([0.05, 0.05], rng), rng, shared)
        assert sum(a.pulls for a in arms) == 1100
        assert shared.total_pulls == 1100
