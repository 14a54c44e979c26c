import numpy as np

from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.reward_vector import RewardVector


def rewards_of(values, beta=1.0) -> RewardVector:
    """RewardVector whose rewards equal values up to an additive constant"""
    return RewardVector.from_rewards(np.asarray(values, dtype=float), beta)


def identity_sample(m: int, k: int, instance_id: str = 'x') -> PreferenceSample:
    return PreferenceSample(instance_id, list(range(k)), list(range(k, m)))
