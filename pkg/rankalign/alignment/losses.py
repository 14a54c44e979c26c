"""
The preference-loss zoo: KPO and its list-wise relatives (S-DPO, DPO_PL, KPO_CUT), the pair-wise
DPO, cDPO and SimPO, and the point-wise KTO.

Every loss is a per-sample minimization loss. Gradients are first taken with respect to the
policy log-probabilities log pi_theta(y_i|x) and then chained through the log-softmax, so
LossValueGrad.grad is the gradient with respect to the pre-softmax policy parameters.
"""
import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from rankalign import defaults
from rankalign.utils.exceptions import ConfigurationError, DomainError
from rankalign.utils.numerics import FloatArray, log_sigmoid, sigmoid, suffix_logsumexp
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.ranking_instance import RankingInstance
from rankalign.utils.reward_vector import RewardVector
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)


class LossKind(str, Enum):
    KTO = 'kto'
    DPO = 'dpo'
    SIMPO = 'simpo'
    CDPO = 'cdpo'
    SDPO = 'sdpo'
    DPO_PL = 'dpo_pl'
    KPO_CUT = 'kpo_cut'
    KPO = 'kpo'


LISTWISE_KINDS = (LossKind.SDPO, LossKind.DPO_PL, LossKind.KPO_CUT)
PAIRWISE_KINDS = (LossKind.DPO, LossKind.SIMPO, LossKind.CDPO)
Z0_MODES = ('zero', 'batch_estimate')


@dataclass(frozen=True)
class LossConfig:
    beta: float = defaults.beta
    epsilon: float = defaults.cdpo_epsilon
    gamma: float = defaults.simpo_gamma
    lambda_desirable: float = defaults.kto_lambda_desirable
    lambda_undesirable: float = defaults.kto_lambda_undesirable
    lambda_y: float = defaults.kto_lambda_y
    kto_z0_mode: str = defaults.kto_z0_mode

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ConfigurationError('beta has to be positive')
        if not 0 <= self.epsilon < 0.5:
            raise ConfigurationError('epsilon has to lie in [0, 0.5)')
        if self.gamma < 0:
            raise ConfigurationError('gamma has to be non-negative')
        if min(self.lambda_desirable, self.lambda_undesirable, self.lambda_y) <= 0:
            raise ConfigurationError('KTO lambdas have to be positive')
        if self.kto_z0_mode not in Z0_MODES:
            raise ConfigurationError(f'kto_z0_mode has to be one of {Z0_MODES}')

    def to_dict(self) -> dict:
        return asdict(self)


class LossValueGrad:

    def __init__(self, value: float, grad: FloatArray) -> None:
        """Creates a LossValueGrad with the loss value and its gradient with respect to the policy parameters of one instance

        Args:
            value (float): loss value
            grad (FloatArray): d loss / d u_i for every candidate index i

        Raises:
            DomainError: raised if value or gradient are not finite
        """
        grad = np.asarray(grad, dtype=float)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise DomainError('loss value and gradient have to be finite')
        self.__value = float(value)
        self.__grad = grad

    def _get_value(self) -> float:
        return self.__value
    value = property(_get_value)

    def _get_grad(self) -> FloatArray:
        return self.__grad
    grad = property(_get_grad)

    def __repr__(self) -> str:
        return f'LossValueGrad(value={self.value:.6f})'


def compute_rewards(policy: PolicyTable, reference: PolicyTable, instance: RankingInstance, beta: float) -> RewardVector:
    """Computes r_i = beta * (log pi_theta(y_i|x) - log pi_ref(y_i|x)) for every candidate of the instance

    Raises:
        MissingParameterError: raised if either table has no row for the instance
    """
    policy.row_for(instance)
    reference.row_for(instance)
    return RewardVector(policy.log_probs(instance.instance_id), reference.log_probs(instance.instance_id), beta)


def _parameter_grad(log_prob_grad: FloatArray, policy_log_probs: FloatArray) -> FloatArray:
    # chain through log pi_i = u_i - logsumexp(u)
    return log_prob_grad - np.exp(policy_log_probs) * np.sum(log_prob_grad)


def _korder_nll(ordered_rewards: FloatArray, k: int) -> Tuple[float, FloatArray]:
    """Negative log-likelihood of the K-order model and its gradient, both along the given order

    Note:
        -log sigmoid(-log sum_{j>i} exp(r_j - r_i)) = logsumexp(r[i:]) - r_i, so the loss is a sum of
        suffix log-sum-exps; the term of the last position is exactly 0.
    """
    suffix = suffix_logsumexp(ordered_rewards)
    value = float(np.sum(suffix[:k] - ordered_rewards[:k]))
    # d/dr_j sum_{i<=min(j,k-1)} logsumexp(r[i:]) = exp(r_j + log sum_{i<=min(j,k-1)} exp(-suffix_i))
    prefix = np.logaddexp.accumulate(-suffix[:k])
    positions = np.minimum(np.arange(ordered_rewards.size), k - 1)
    grad = np.exp(ordered_rewards + prefix[positions])
    grad[:k] -= 1.0
    return value, grad


def _check_alignment(rewards: RewardVector, sample: PreferenceSample) -> None:
    if rewards.m != sample.m:
        raise DomainError(f'sample of {sample.instance_id!r} has {sample.m} candidates, rewards have {rewards.m}')


def kpo_loss(rewards: RewardVector, sample: PreferenceSample, k: Optional[int] = None) -> LossValueGrad:
    """KPO loss -sum_{i<=K} log sigmoid(-log sum_{j>i} exp(r_j - r_i)) over the order head followed by tail

    Args:
        rewards (RewardVector): rewards indexed by candidate
        sample (PreferenceSample): the K-order preference
        k (Optional[int], optional): overrides the sample's K. Defaults to None.

    Raises:
        DomainError: raised if K is outside 1..M

    Returns:
        LossValueGrad: loss value and gradient with respect to the policy parameters
    """
    _check_alignment(rewards, sample)
    k = sample.kappa if k is None else k
    if not 1 <= k <= sample.m:
        raise DomainError(f'K = {k} is outside 1..{sample.m}')
    order = np.asarray(sample.order)
    value, ordered_grad = _korder_nll(rewards.rewards[order], k)
    reward_grad = np.empty(sample.m)
    reward_grad[order] = ordered_grad
    return LossValueGrad(value, _parameter_grad(rewards.beta * reward_grad, rewards.policy_log_probs))


def listwise_baseline_loss(kind: LossKind | str, rewards: RewardVector, sample: PreferenceSample) -> LossValueGrad:
    """S-DPO (K forced to 1), DPO_PL (K forced to M) or KPO_CUT (full order over the head, tail discarded)

    Raises:
        DomainError: raised for kpo_cut with K = 1, whose objective is empty
    """
    kind = LossKind(kind)
    if kind == LossKind.SDPO:
        return kpo_loss(rewards, sample, k=1)
    if kind == LossKind.DPO_PL:
        return kpo_loss(rewards, sample, k=sample.m)
    if kind != LossKind.KPO_CUT:
        raise DomainError(f'{kind.value} is not a list-wise baseline')
    _check_alignment(rewards, sample)
    if sample.kappa < 2:
        raise DomainError('kpo_cut needs K >= 2, the objective over a single head candidate is empty')
    head = np.asarray(sample.head)
    value, head_grad = _korder_nll(rewards.rewards[head], sample.kappa)
    reward_grad = np.zeros(sample.m)
    reward_grad[head] = head_grad
    return LossValueGrad(value, _parameter_grad(rewards.beta * reward_grad, rewards.policy_log_probs))


def pairwise_loss(kind: LossKind | str,
                  rewards: RewardVector,
                  winner: int,
                  loser: int,
                  config: LossConfig,
                  lengths: Sequence[int] | None = None) -> LossValueGrad:
    """DPO, cDPO or the reference-free SimPO on one (winner, loser) pair

    Args:
        kind (LossKind | str): dpo, cdpo or simpo
        rewards (RewardVector): rewards and log-probabilities indexed by candidate
        winner (int): candidate index of y_1
        loser (int): candidate index of y_2
        config (LossConfig): beta, epsilon and gamma
        lengths (Sequence[int] | None, optional): candidate lengths |y| for SimPO, all 1 if None. Defaults to None.

    Raises:
        DomainError: raised if winner equals loser or an index is out of range

    Returns:
        LossValueGrad: loss value and gradient with respect to the policy parameters
    """
    kind = LossKind(kind)
    if winner == loser or not (0 <= winner < rewards.m and 0 <= loser < rewards.m):
        raise DomainError('a pair needs two distinct candidates of the instance')
    log_prob_grad = np.zeros(rewards.m)
    if kind == LossKind.SIMPO:
        lengths = [1] * rewards.m if lengths is None else lengths
        lp = rewards.policy_log_probs
        scale_w, scale_l = config.beta / lengths[winner], config.beta / lengths[loser]
        z = scale_w * lp[winner] - scale_l * lp[loser] - config.gamma
        value = -log_sigmoid(z)
        d_z = -sigmoid(-z)
        log_prob_grad[winner] = d_z * scale_w
        log_prob_grad[loser] = -d_z * scale_l
    elif kind in (LossKind.DPO, LossKind.CDPO):
        epsilon = config.epsilon if kind == LossKind.CDPO else 0.0
        z = rewards.rewards[winner] - rewards.rewards[loser]
        value = -(1 - epsilon) * log_sigmoid(z) - epsilon * log_sigmoid(-z)
        d_z = -(1 - epsilon) * sigmoid(-z) + epsilon * sigmoid(z)
        log_prob_grad[winner] = rewards.beta * d_z
        log_prob_grad[loser] = -rewards.beta * d_z
    else:
        raise DomainError(f'{kind.value} is not a pair-wise loss')
    return LossValueGrad(value, _parameter_grad(log_prob_grad, rewards.policy_log_probs))


def kto_loss(rewards: RewardVector, index: int, desirable: bool, config: LossConfig, z0: float = 0.0) -> LossValueGrad:
    """Point-wise KTO loss lambda_y - v(x, y) of one candidate

    Args:
        rewards (RewardVector): rewards and log-probabilities indexed by candidate
        index (int): candidate index of y
        desirable (bool): True if y is desirable, False if undesirable
        config (LossConfig): beta and the lambdas
        z0 (float, optional): reference point, treated as a constant. Defaults to 0.0.

    Returns:
        LossValueGrad: loss value and gradient with respect to the policy parameters
    """
    r_theta = rewards.log_ratios[index]
    log_prob_grad = np.zeros(rewards.m)
    if desirable:
        s = sigmoid(config.beta * (r_theta - z0))
        value = config.lambda_y - config.lambda_desirable * s
        log_prob_grad[index] = -config.lambda_desirable * config.beta * s * (1 - s)
    else:
        s = sigmoid(config.beta * (z0 - r_theta))
        value = config.lambda_y - config.lambda_undesirable * s
        log_prob_grad[index] = config.lambda_undesirable * config.beta * s * (1 - s)
    return LossValueGrad(value, _parameter_grad(log_prob_grad, rewards.policy_log_probs))


def draw_pair(sample: PreferenceSample, seed: Seed) -> Tuple[int, int]:
    """Returns (winner, loser): the top-1 candidate and a uniformly drawn tail candidate

    Note:
        If the tail is empty (K = M) the loser is drawn from the rest of the head.
    """
    pool = sample.tail if len(sample.tail) > 0 else sample.head[1:]
    loser = pool[int(seed.generator().integers(len(pool)))]
    return sample.head[0], loser


def estimate_kto_z0(rewards: Sequence[RewardVector], pairs: Sequence[Tuple[int, int]]) -> float:
    """Batch estimate of the KTO reference point from mismatched pairs

    Each instance b is paired with the winner of instance b+1 (cyclically), the candidate index taken
    modulo the size of instance b. The mean log-ratio r_theta over these mismatched pairs is clamped at 0.

    Raises:
        ConfigurationError: raised for batches of a single sample
    """
    if len(rewards) < 2:
        raise ConfigurationError('the batch estimate of z0 needs at least 2 samples per batch')
    shifted = []
    for b, reward_vector in enumerate(rewards):
        mismatched = pairs[(b + 1) % len(pairs)][0] % reward_vector.m
        shifted.append(reward_vector.log_ratios[mismatched])
    return max(0.0, float(np.mean(shifted)))


def compute_sample_loss(kind: LossKind | str,
                        rewards: RewardVector,
                        sample: PreferenceSample,
                        config: LossConfig,
                        pair: Optional[Tuple[int, int]] = None,
                        lengths: Sequence[int] | None = None,
                        z0: float = 0.0) -> LossValueGrad:
    """Dispatches one preference sample to the loss of the given kind

    Note:
        Pair-wise losses and KTO need a (winner, loser) pair from draw_pair. KTO scores the
        winner as desirable and the loser as undesirable and averages both points.
    """
    kind = LossKind(kind)
    if kind == LossKind.KPO:
        return kpo_loss(rewards, sample)
    if kind in LISTWISE_KINDS:
        return listwise_baseline_loss(kind, rewards, sample)
    if pair is None:
        raise ConfigurationError(f'{kind.value} needs a (winner, loser) pair')
    winner, loser = pair
    if kind in PAIRWISE_KINDS:
        return pairwise_loss(kind, rewards, winner, loser, config, lengths)
    desirable = kto_loss(rewards, winner, True, config, z0)
    undesirable = kto_loss(rewards, loser, False, config, z0)
    return LossValueGrad((desirable.value + undesirable.value) / 2, (desirable.grad + undesirable.grad) / 2)


def needs_pairs(kind: LossKind | str) -> bool:
    kind = LossKind(kind)
    return kind in PAIRWISE_KINDS or kind == LossKind.KTO


def batch_loss(kind: LossKind | str,
               rewards: Sequence[RewardVector],
               samples: Sequence[PreferenceSample],
               config: LossConfig,
               pairs: Optional[Sequence[Tuple[int, int]]] = None,
               lengths: Optional[Sequence[Sequence[int]]] = None) -> Tuple[float, List[FloatArray]]:
    """Mean loss over a batch and the per-sample parameter gradients of that mean

    Returns:
        Tuple[float, List[FloatArray]]: batch mean loss and one gradient row per sample, already divided by the batch size
    """
    kind = LossKind(kind)
    z0 = 0.0
    if kind == LossKind.KTO and config.kto_z0_mode == 'batch_estimate':
        # single-sample batches keep z0 = 0, the trainer counts them
        if len(rewards) > 1:
            z0 = estimate_kto_z0(rewards, pairs)
    n = len(samples)
    values, grads = [], []
    for b, (reward_vector, sample) in enumerate(zip(rewards, samples)):
        result = compute_sample_loss(kind, reward_vector, sample, config,
                                     pair=pairs[b] if pairs is not None else None,
                                     lengths=lengths[b] if lengths is not None else None,
                                     z0=z0)
        values.append(result.value)
        grads.append(result.grad / n)
    return float(np.mean(values)), grads
