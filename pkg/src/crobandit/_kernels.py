"""Compiled inner loops for the adaptive bandit policies.

Thompson Sampling and UCB1 decide arm by arm, so a generation of 10,000 visits
is 10,000 sequential select/pull/update rounds. These kernels run that loop in
compiled code against a vector of true Bernoulli rates, drawing from the same
numpy Generator as the interpreted path, so both paths produce identical pull
sequences for a given seed. ``nogil`` lets replications overlap across threads.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def ts_rounds(
    successes: np.ndarray,
    failures: np.ndarray,
    rates: np.ndarray,
    rounds: int,
    rng: np.random.Generator,
) -> None:
    """Run Thompson Sampling for ``rounds`` visits, updating counts in place."""
    k = successes.shape[0]
    for _ in range(rounds):
        best = -1.0
        pick = 0
        for i in range(k):
            theta = rng.beta(successes[i] + 1.0, failures[i] + 1.0)
            if theta > best:
                best = theta
                pick = i
        if rng.random() < rates[pick]:
            successes[pick] += 1
        else:
            failures[pick] += 1


@njit(cache=True, nogil=True)
def ucb1_rounds(
    successes: np.ndarray,
    pulls: np.ndarray,
    total_pulls: int,
    rates: np.ndarray,
    rounds: int,
    rng: np.random.Generator,
) -> int:
    """Run UCB1 for ``rounds`` visits, updating counts in place.

    Unpulled arms are initialized first, lowest index first. Returns the new
    shared round counter.
    """
    k = successes.shape[0]
    t = total_pulls
    for _ in range(rounds):
        pick = -1
        for i in range(k):
            if pulls[i] == 0:
                pick = i
                break
        if pick < 0:
            log_t = math.log(t) if t > 1 else 0.0
            best = -math.inf
            for i in range(k):
                index = successes[i] / pulls[i] + math.sqrt(2.0 * log_t / pulls[i])
                if index > best:
                    best = index
                    pick = i
        if rng.random() < rates[pick]:
            successes[pick] += 1
        pulls[pick] += 1
        t += 1
    return t
