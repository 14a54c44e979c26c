"""
Probability models over rankings of one candidate set.

Every model takes the rewards aligned to the ranking under consideration, i.e. rewards[0]
belongs to the candidate ranked first. Probabilities are accumulated in log space and
exponentiated only when returned.
"""
import itertools
import math
from typing import Sequence

import numpy as np

from rankalign import defaults
from rankalign.utils.exceptions import DomainError, ResourceLimitError
from rankalign.utils.numerics import FloatArray, sigmoid, suffix_logsumexp


def _as_ordering(rewards: Sequence[float] | FloatArray) -> FloatArray:
    arr = np.asarray(rewards, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DomainError('a reward ordering needs at least 2 entries')
    if not np.all(np.isfinite(arr)):
        raise DomainError('rewards have to be finite')
    return arr


def _check_k(k: int, m: int) -> None:
    if not 1 <= k <= m:
        raise DomainError(f'K = {k} is outside 1..{m}')


def bt_prob(r1: float, r2: float) -> float:
    """Bradley-Terry probability of preferring the candidate with reward r1 over the one with r2"""
    return sigmoid(r1 - r2)


def korder_log_prob(rewards: Sequence[float] | FloatArray, k: int) -> float:
    """Log-probability that the first k candidates come first, in this order, with the rest unordered below them

    Args:
        rewards (Sequence[float] | FloatArray): M rewards aligned to the ranking
        k (int): number of ordered head candidates, 1 <= k <= M

    Raises:
        DomainError: raised if k is out of range

    Returns:
        float: sum over i < k of rewards[i] - logsumexp(rewards[i:])
    """
    arr = _as_ordering(rewards)
    _check_k(k, arr.size)
    suffix = suffix_logsumexp(arr)
    return float(np.sum(arr[:k] - suffix[:k]))


def korder_prob(rewards: Sequence[float] | FloatArray, k: int) -> float:
    return math.exp(korder_log_prob(rewards, k))


def pl_full_log_prob(rewards: Sequence[float] | FloatArray) -> float:
    arr = _as_ordering(rewards)
    return korder_log_prob(arr, arr.size)


def pl_full_prob(rewards: Sequence[float] | FloatArray) -> float:
    """Plackett-Luce probability of the complete ranking the rewards are aligned to"""
    return math.exp(pl_full_log_prob(rewards))


def sdpo_prob(rewards: Sequence[float] | FloatArray) -> float:
    """Probability that the first candidate beats all others at once, the single-positive partial model"""
    return korder_prob(rewards, 1)


def korder_prob_bruteforce(rewards: Sequence[float] | FloatArray, k: int,
                           max_tail: int = defaults.max_bruteforce_tail) -> float:
    """Sums the full Plackett-Luce probability over every order of the unordered tail

    Args:
        rewards (Sequence[float] | FloatArray): M rewards aligned to the ranking
        k (int): number of ordered head candidates
        max_tail (int, optional): largest tail length that is enumerated. Defaults to 8.

    Raises:
        DomainError: raised if k is out of range
        ResourceLimitError: raised if the tail is longer than max_tail

    Returns:
        float: marginal probability of the K-order preference
    """
    arr = _as_ordering(rewards)
    _check_k(k, arr.size)
    tail_length = arr.size - k
    if tail_length > max_tail:
        raise ResourceLimitError(f'tail of {tail_length} candidates exceeds the enumeration guard of {max_tail}')
    head, tail = arr[:k], arr[k:]
    total = 0.0
    for permuted in itertools.permutations(tail):
        total += pl_full_prob(np.concatenate([head, permuted]))
    return total


def sum_over_full_orderings(scores: Sequence[float] | FloatArray) -> float:
    """Sums pl_full_prob over all M! orderings of the scores, 1 up to rounding"""
    arr = _as_ordering(scores)
    if arr.size > defaults.max_bruteforce_tail:
        raise ResourceLimitError(f'{arr.size}! orderings exceed the enumeration guard')
    return sum(pl_full_prob(arr[list(p)]) for p in itertools.permutations(range(arr.size)))
