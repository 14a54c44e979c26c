"""
Optimal top-K ranking accuracy of KPO and S-DPO under a ground-truth Plackett-Luce model.

Positions l, k are 1-based and refer to the ground-truth order of the candidates (descending
score, ties by candidate index). The optimal policy satisfies
pi*(y_l) / pi*(y_k) = (w_l / w_k) * pi_ref(y_l) / pi_ref(y_k), and an instance counts as
accurate when that ratio is strictly above 1 for every l <= K and k > l.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from rankalign import defaults
from rankalign.alignment.losses import kpo_loss
from rankalign.alignment.preference_models import korder_prob
from rankalign.utils.exceptions import DomainError, ResourceLimitError
from rankalign.utils.numerics import FloatArray, softmax_log_probs, suffix_logsumexp
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.reward_vector import RewardVector

logger = logging.getLogger(__name__)

METHODS = ('kpo', 'sdpo')
# log-ratios within this distance of 0 count as ties
TIE_TOLERANCE = 1e-12


def ground_truth_order(scores: Sequence[float] | FloatArray) -> List[int]:
    """Candidate indices sorted by score descending, ties by index ascending"""
    scores = np.asarray(scores, dtype=float)
    return [int(i) for i in np.lexsort((np.arange(scores.size), -scores))]


class AlphaProfile:

    def __init__(self, alphas: Sequence[float], order: Optional[Sequence[int]] = None, pl_consistent: bool = False) -> None:
        """Creates an AlphaProfile of sequential ranking probabilities alpha(x, y_i, y_>i) along the ground-truth order

        Args:
            alphas (Sequence[float]): M probabilities, alphas[i] in (0, 1] and alphas[-1] == 1
            order (Optional[Sequence[int]], optional): candidate index at each ground-truth position, identity if None. Defaults to None.
            pl_consistent (bool, optional): True if derived from a score vector. Defaults to False.

        Raises:
            DomainError: raised if an alpha is outside (0, 1] or the last alpha is not 1
        """
        alphas = np.asarray(alphas, dtype=float)
        if alphas.ndim != 1 or alphas.size < 2:
            raise DomainError('an alpha profile needs at least 2 positions')
        if np.any(alphas <= 0) or np.any(alphas > 1):
            raise DomainError('alphas have to lie in (0, 1]')
        if not np.isclose(alphas[-1], 1.0, rtol=0, atol=1e-12):
            raise DomainError('the last remaining candidate wins with certainty, alphas[-1] has to be 1')
        self.__alphas = alphas
        self.__order = tuple(range(alphas.size)) if order is None else tuple(int(i) for i in order)
        if sorted(self.__order) != list(range(alphas.size)):
            raise DomainError('order has to be a permutation of the candidate indices')
        self.__pl_consistent = pl_consistent
        if not pl_consistent:
            logger.warning('alpha profile given directly, its consistency with a Plackett-Luce model is not checked')

    def _get_alphas(self) -> FloatArray:
        return self.__alphas
    alphas = property(_get_alphas)

    def _get_order(self) -> Tuple[int, ...]:
        return self.__order
    order = property(_get_order)

    def _get_pl_consistent(self) -> bool:
        return self.__pl_consistent
    pl_consistent = property(_get_pl_consistent)

    @property
    def m(self) -> int:
        return self.__alphas.size


def alpha_from_scores(scores: Sequence[float] | FloatArray, order: Optional[Sequence[int]] = None) -> AlphaProfile:
    """alphas_i = exp(s_i) / sum_{n >= i} exp(s_n) along the ground-truth order

    Args:
        scores (Sequence[float] | FloatArray): ground-truth score per candidate
        order (Optional[Sequence[int]], optional): ground-truth order, descending score if None. Defaults to None.

    Returns:
        AlphaProfile: the PL-consistent profile
    """
    scores = np.asarray(scores, dtype=float)
    if scores.size < 2:
        raise DomainError('alpha needs at least 2 candidates')
    order = ground_truth_order(scores) if order is None else list(order)
    ordered = scores[order]
    alphas = np.exp(ordered - suffix_logsumexp(ordered))
    alphas[-1] = 1.0
    return AlphaProfile(alphas, order, pl_consistent=True)


def log_w_ratio(alpha: AlphaProfile, beta: float, l: int, k: int, method: str = 'kpo') -> float:
    if method not in METHODS:
        raise DomainError(f'method has to be one of {METHODS}')
    if not 1 <= l < k <= alpha.m:
        raise DomainError(f'positions need 1 <= l < k <= M, got l={l}, k={k}')
    if not beta > 0:
        raise DomainError('beta has to be positive')
    if method == 'sdpo' and l != 1:
        return 0.0
    a = alpha.alphas
    between = a[l - 1:k - 1]
    if np.any(between >= 1.0):
        raise DomainError(f'alpha = 1 before the last position (between {l} and {k - 1}) makes the ratio undefined')
    return float((np.log(a[l - 1]) - np.log(a[k - 1]) - np.sum(np.log1p(-between))) / beta)


def w_ratio(alpha: AlphaProfile, beta: float, l: int, k: int, method: str = 'kpo') -> float:
    """w_l / w_k = (alpha_l / alpha_k)^(1/beta) * prod_{i=l}^{k-1} (1 - alpha_i)^(-1/beta); S-DPO's ratio is 1 for l != 1

    Raises:
        DomainError: raised for positions out of order or range, and for alpha_i = 1 with l <= i < k
    """
    return float(np.exp(log_w_ratio(alpha, beta, l, k, method)))


def optimal_policy(reference: PolicyTable, scores: Dict[str, Sequence[float]], beta: float) -> PolicyTable:
    """pi*(y_i|x) proportional to pi_ref(y_i|x) * exp(s_i / beta) for every instance in scores

    Raises:
        MissingParameterError: raised if the reference has no row for an instance
    """
    if not beta > 0:
        raise DomainError('beta has to be positive')
    optimum = PolicyTable()
    for instance_id, s in scores.items():
        optimum.set_row(instance_id, reference.log_probs(instance_id) + np.asarray(s, dtype=float) / beta)
    return optimum


def instance_accurate(alpha: AlphaProfile, reference_probs: Sequence[float] | FloatArray, k: int, beta: float, method: str) -> bool:
    """True if the optimal policy orders every head position above every later position, strictly"""
    if not 1 <= k <= alpha.m:
        raise DomainError(f'K = {k} is outside 1..{alpha.m}')
    log_ref = np.log(np.asarray(reference_probs, dtype=float))[list(alpha.order)]
    for l in range(1, k + 1):
        for k_pos in range(l + 1, alpha.m + 1):
            if log_w_ratio(alpha, beta, l, k_pos, method) + log_ref[l - 1] - log_ref[k_pos - 1] <= TIE_TOLERANCE:
                return False
    return True


def optimal_accuracy(dataset: Sequence[Tuple[AlphaProfile | Sequence[float], Sequence[float], int]],
                     beta: float,
                     method: str = 'kpo',
                     workers: int = 1) -> float:
    """Mean over instances of the all-pairs indicator of the optimal policy's top-K ranking

    Args:
        dataset (Sequence[Tuple[AlphaProfile | Sequence[float], Sequence[float], int]]): (alpha profile or scores, reference probabilities, K)
        beta (float): reward scale
        method (str, optional): 'kpo' or 'sdpo'. Defaults to 'kpo'.
        workers (int, optional): threads to fan out over instances. Defaults to 1.

    Returns:
        float: accuracy in [0, 1], 0 for an empty dataset
    """
    if len(dataset) == 0:
        return 0.0

    def evaluate(entry) -> bool:
        profile, reference_probs, k = entry
        if not isinstance(profile, AlphaProfile):
            profile = alpha_from_scores(profile)
        return instance_accurate(profile, reference_probs, k, beta, method)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            hits = list(executor.map(evaluate, dataset))
    else:
        hits = [evaluate(entry) for entry in dataset]
    return float(np.mean(hits))


def accuracy_comparison(dataset: Sequence[Tuple[AlphaProfile | Sequence[float], Sequence[float], int]],
                        beta: float,
                        workers: int = 1) -> Dict[str, float]:
    kpo = optimal_accuracy(dataset, beta, 'kpo', workers)
    sdpo = optimal_accuracy(dataset, beta, 'sdpo', workers)
    return {'kpo': kpo, 'sdpo': sdpo, 'difference': kpo - sdpo}


def _korder_preferences(m: int, k: int):
    for head in itertools.permutations(range(m), k):
        chosen = set(head)
        yield PreferenceSample('expected', head, [i for i in range(m) if i not in chosen])


def expected_kpo_loss(params: FloatArray, reference_log_probs: FloatArray, scores: FloatArray, k: int, beta: float) -> Tuple[float, FloatArray]:
    """Exact expected KPO loss over all K-order preferences drawn from the ground-truth PL model

    Args:
        params (FloatArray): pre-softmax policy parameters of one instance
        reference_log_probs (FloatArray): log pi_ref of the instance
        scores (FloatArray): ground-truth scores per candidate
        k (int): K of every preference
        beta (float): reward scale

    Raises:
        ResourceLimitError: raised for more candidates than the enumeration guard

    Returns:
        Tuple[float, FloatArray]: expected loss and its gradient with respect to params
    """
    m = len(params)
    if m > defaults.max_expected_loss_candidates:
        raise ResourceLimitError(f'{m} candidates exceed the expected-loss enumeration guard')
    rewards = RewardVector(softmax_log_probs(params), reference_log_probs, beta)
    value, grad = 0.0, np.zeros(m)
    for sample in _korder_preferences(m, k):
        weight = korder_prob(np.asarray(scores)[list(sample.order)], k)
        result = kpo_loss(rewards, sample)
        value += weight * result.value
        grad += weight * result.grad
    return value, grad


def fit_expected_kpo_policy(reference_log_probs: Sequence[float] | FloatArray,
                            scores: Sequence[float] | FloatArray,
                            k: int,
                            beta: float) -> FloatArray:
    """Minimizes the exact expected KPO loss with L-BFGS, starting from the reference

    Returns:
        FloatArray: log-probabilities of the fitted policy
    """
    reference_log_probs = np.asarray(reference_log_probs, dtype=float)
    scores = np.asarray(scores, dtype=float)
    result = optimize.minimize(expected_kpo_loss, reference_log_probs.copy(), jac=True, method='L-BFGS-B',
                               args=(reference_log_probs, scores, k, beta),
                               options={'gtol': 1e-12, 'ftol': 1e-15, 'maxiter': 2000})
    if not result.success:
        logger.warning('expected-loss minimization stopped early: %s', result.message)
    return softmax_log_probs(result.x)
