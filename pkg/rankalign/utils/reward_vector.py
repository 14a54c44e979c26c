import numpy as np

from rankalign.utils.exceptions import DomainError
from rankalign.utils.numerics import FloatArray


class RewardVector:

    def __init__(self, policy_log_probs: FloatArray, reference_log_probs: FloatArray, beta: float) -> None:
        """Creates the per-candidate rewards r_i = beta * (log pi_theta(y_i|x) - log pi_ref(y_i|x)) of one instance

        Args:
            policy_log_probs (FloatArray): log pi_theta over the candidate set
            reference_log_probs (FloatArray): log pi_ref over the candidate set
            beta (float): positive reward scale

        Raises:
            DomainError: raised if beta is not positive, the vectors differ in length or a reward is not finite

        Note:
            The beta * log Z(x) term is never materialized, every loss depends on reward differences only.
        """
        if not beta > 0:
            raise DomainError('beta has to be positive')
        policy_log_probs = np.asarray(policy_log_probs, dtype=float)
        reference_log_probs = np.asarray(reference_log_probs, dtype=float)
        if policy_log_probs.shape != reference_log_probs.shape:
            raise DomainError('policy and reference log-probabilities differ in length')
        rewards = beta * (policy_log_probs - reference_log_probs)
        if not np.all(np.isfinite(rewards)):
            raise DomainError('rewards have to be finite')
        self.__beta = float(beta)
        self.__policy_log_probs = policy_log_probs
        self.__reference_log_probs = reference_log_probs
        self.__rewards = rewards

    @classmethod
    def from_rewards(cls, rewards: FloatArray, beta: float = 1.0) -> 'RewardVector':
        """Builds a RewardVector with a uniform reference whose policy reproduces the given rewards up to a constant"""
        rewards = np.asarray(rewards, dtype=float)
        reference = np.full(rewards.size, -np.log(rewards.size))
        logits = reference + rewards / beta
        policy = logits - np.logaddexp.reduce(logits)
        return cls(policy, reference, beta)

    def _get_rewards(self) -> FloatArray:
        return self.__rewards
    rewards = property(_get_rewards)

    def _get_beta(self) -> float:
        return self.__beta
    beta = property(_get_beta)

    def _get_policy_log_probs(self) -> FloatArray:
        return self.__policy_log_probs
    policy_log_probs = property(_get_policy_log_probs)

    def _get_reference_log_probs(self) -> FloatArray:
        return self.__reference_log_probs
    reference_log_probs = property(_get_reference_log_probs)

    @property
    def log_ratios(self) -> FloatArray:
        """r_theta(x, y) = log pi_theta(y|x) - log pi_ref(y|x), unscaled by beta"""
        return self.__policy_log_probs - self.__reference_log_probs

    @property
    def m(self) -> int:
        return self.__rewards.size
