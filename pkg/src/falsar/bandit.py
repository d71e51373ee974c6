"""Multi-armed bandit bookkeeping, arm selection and the hill-climbing gain reward."""

from __future__ import annotations

import math

import numpy as np

DEFAULT_EPSILON = 0.1
DEFAULT_UCB_C = 1.0
STRATEGIES = ("ucb", "egreedy")

# Below this magnitude the largest robustness is treated as zero and the gain is 0.
GAIN_GUARD = 1e-12


class BanditHistory:
    """Play sequence plus per-arm rewards and robustness values.

    Arms are numbered ``0 .. n_arms - 1``.
    """

    def __init__(self, n_arms: int):
        if n_arms < 1:
            raise ValueError("need at least one arm")
        self.n_arms = n_arms
        self.plays: list[int] = []
        self.rewards: list[list[float]] = [[] for _ in range(n_arms)]
        self.robustness: list[list[float]] = [[] for _ in range(n_arms)]
        self._sums = [0.0] * n_arms

    def count(self, arm: int) -> int:
        return len(self.rewards[arm])

    @property
    def total(self) -> int:
        return len(self.plays)

    def record(self, arm: int, reward: float, robustness: float | None = None):
        self.plays.append(arm)
        self.rewards[arm].append(float(reward))
        self._sums[arm] += float(reward)
        if robustness is not None:
            self.robustness[arm].append(float(robustness))

    def record_robustness(self, arm: int, rb: float) -> float:
        """Record a play by its robustness; the reward is the arm's new gain."""
        self.robustness[arm].append(float(rb))
        reward = hill_climbing_gain(self, arm)
        self.plays.append(arm)
        self.rewards[arm].append(reward)
        self._sums[arm] += reward
        return reward

    def unplayed(self) -> int | None:
        for j in range(self.n_arms):
            if not self.rewards[j]:
                return j
        return None


def empirical_average(h: BanditHistory, arm: int) -> float:
    """Mean reward of ``arm`` over its plays (undefined for unplayed arms)."""
    n = h.count(arm)
    if n == 0:
        raise ValueError(f"arm {arm} has not been played")
    return h._sums[arm] / n


def _argmax_low(values) -> int:
    # first index among maxima
    best, arg = -math.inf, 0
    for j, v in enumerate(values):
        if v > best:
            best, arg = v, j
    return arg


def epsilon_greedy_distribution(h: BanditHistory, epsilon: float) -> np.ndarray:
    """Arm probabilities: ``1 - eps + eps/n`` on the empirical best, ``eps/n`` elsewhere."""
    n = h.n_arms
    best = _argmax_low(empirical_average(h, j) for j in range(n))
    p = np.full(n, epsilon / n)
    p[best] = (1 - epsilon) + epsilon / n
    return p


def select_epsilon_greedy(h: BanditHistory, epsilon: float, rng: np.random.Generator) -> int:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    first = h.unplayed()
    if first is not None:
        return first
    p = epsilon_greedy_distribution(h, epsilon)
    return int(rng.choice(h.n_arms, p=p))


def ucb1_scores(h: BanditHistory, c: float) -> list[float]:
    k = h.total
    return [
        empirical_average(h, j) + c * math.sqrt(2 * math.log(k) / h.count(j))
        for j in range(h.n_arms)
    ]


def select_ucb1(h: BanditHistory, c: float) -> int:
    """Deterministic UCB1 choice; unplayed arms go first, ties to the lowest index."""
    if c <= 0:
        raise ValueError("c must be positive")
    first = h.unplayed()
    if first is not None:
        return first
    return _argmax_low(ucb1_scores(h, c))


def hill_climbing_gain(h: BanditHistory, arm: int) -> float:
    """``(max_rb - last_rb) / max_rb`` over the arm's robustness list; 0 if unplayed."""
    rbs = h.robustness[arm]
    if not rbs:
        return 0.0
    top, last = max(rbs), rbs[-1]
    if abs(top) < GAIN_GUARD or math.isinf(top):
        return 0.0
    gain = (top - last) / top
    return gain if math.isfinite(gain) else 0.0


def select(h: BanditHistory, strategy: str, rng: np.random.Generator | None = None,
           epsilon: float = DEFAULT_EPSILON, c: float = DEFAULT_UCB_C) -> int:
    if strategy == "ucb":
        return select_ucb1(h, c)
    if strategy == "egreedy":
        if rng is None:
            raise ValueError("epsilon-greedy needs a random generator")
        return select_epsilon_greedy(h, epsilon, rng)
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
