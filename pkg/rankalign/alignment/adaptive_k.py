import dataclasses
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from rankalign import defaults
from rankalign.utils.exceptions import ConfigurationError, DataError
from rankalign.utils.numerics import FloatArray
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.ranking_instance import RankingInstance
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)

TAU_MODES = ('absolute', 'quantile')


@dataclass(frozen=True)
class AdaptiveKConfig:
    """Threshold and clamp of the query-adaptive K

    Attributes:
        tau_mode (str): 'absolute' uses tau_value as threshold, 'quantile' the tau_value quantile of all training logits
        tau_value (float): threshold or quantile in (0, 1)
        k_min (int): lower clamp of K, at least 1
        k_max (Optional[int]): upper clamp of K, None means M
        frozen_tau (Optional[float]): threshold resolved from the training logits in quantile mode
    """
    tau_mode: str = defaults.tau_mode
    tau_value: float = defaults.tau_quantile
    k_min: int = defaults.k_min
    k_max: Optional[int] = defaults.k_max
    frozen_tau: Optional[float] = None

    def __post_init__(self) -> None:
        if self.tau_mode not in TAU_MODES:
            raise ConfigurationError(f'tau_mode has to be one of {TAU_MODES}')
        if self.tau_mode == 'quantile' and not 0 < self.tau_value < 1:
            raise ConfigurationError('the tau quantile has to lie strictly inside (0, 1)')
        if self.k_min < 1:
            raise ConfigurationError('k_min has to be at least 1')
        if self.k_max is not None and self.k_max < self.k_min:
            raise ConfigurationError('k_max has to be at least k_min')

    @classmethod
    def fixed(cls, k: int) -> 'AdaptiveKConfig':
        """Config that yields K = k for every instance with at least k candidates"""
        return cls(tau_mode='absolute', tau_value=np.inf, k_min=k, k_max=k)

    @property
    def threshold(self) -> float:
        if self.tau_mode == 'absolute':
            return float(self.tau_value)
        if self.frozen_tau is None:
            raise ConfigurationError('quantile threshold has not been frozen on the training logits yet')
        return self.frozen_tau

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def freeze_threshold(instances: Iterable[RankingInstance], config: AdaptiveKConfig) -> AdaptiveKConfig:
    """Resolves the quantile threshold once over all training-split logits and returns the frozen config

    Raises:
        DataError: raised if no training instance carries ref_logits
    """
    if config.tau_mode == 'absolute' or config.frozen_tau is not None:
        return config
    logits = [logit for instance in instances if instance.split == 'train' and instance.ref_logits is not None
              for logit in instance.ref_logits]
    if not logits:
        raise DataError('no training instance carries ref_logits to fit the quantile threshold on', 'ref_logits')
    tau = float(np.quantile(np.asarray(logits), config.tau_value))
    logger.info('Frozen tau at the %.3f quantile of %d training logits: %.6f', config.tau_value, len(logits), tau)
    return dataclasses.replace(config, frozen_tau=tau)


def compute_k(ref_logits: Sequence[float] | FloatArray, config: AdaptiveKConfig) -> int:
    """Counts the logits above the threshold and clamps the count into [k_min, k_max]

    Args:
        ref_logits (Sequence[float] | FloatArray): the M reference logits of one instance
        config (AdaptiveKConfig): threshold and clamps

    Returns:
        int: K for the instance
    """
    logits = np.asarray(ref_logits, dtype=float)
    k = int(np.sum(logits > config.threshold))
    k_max = logits.size if config.k_max is None else min(config.k_max, logits.size)
    return max(min(k, k_max), min(config.k_min, logits.size))


def top_k_by_logits(ref_logits: Sequence[float] | FloatArray, k: int) -> List[int]:
    logits = np.asarray(ref_logits, dtype=float)
    order = np.lexsort((np.arange(logits.size), -logits))
    return [int(i) for i in order[:k]]


def build_preference_sample(instance: RankingInstance,
                            config: AdaptiveKConfig,
                            ref_logits: Optional[Sequence[float]] = None) -> PreferenceSample:
    """Selects the K highest-logit candidates and re-ranks them by their ground-truth labels

    Args:
        instance (RankingInstance): instance with labels and ref_logits
        config (AdaptiveKConfig): threshold and clamps
        ref_logits (Optional[Sequence[float]], optional): logits overriding the instance's own, e.g. after noise injection. Defaults to None.

    Raises:
        DataError: raised if no ref_logits are available

    Returns:
        PreferenceSample: head ordered by label descending, then logit descending, then index ascending
    """
    logits = ref_logits if ref_logits is not None else instance.ref_logits
    if logits is None:
        raise DataError(f'instance {instance.instance_id!r} has no ref_logits to derive K from', 'ref_logits')
    logits = np.asarray(logits, dtype=float)
    k = compute_k(logits, config)
    selected = top_k_by_logits(logits, k)
    head = sorted(selected, key=lambda i: (-instance.labels[i], -logits[i], i))
    chosen = set(selected)
    tail = [i for i in range(instance.m) if i not in chosen]
    return PreferenceSample(instance.instance_id, head, tail)


def inject_logit_noise(ref_logits: Sequence[float] | FloatArray, n_swaps: int, seed: Seed) -> FloatArray:
    """Applies n_swaps uniformly random transpositions of logit values, preserving their multiset

    Raises:
        ValueError: raised if n_swaps is negative
    """
    if n_swaps < 0:
        raise ValueError('n_swaps has to be non-negative')
    noisy = np.array(ref_logits, dtype=float)
    rng = seed.generator()
    for _ in range(n_swaps):
        i, j = rng.choice(noisy.size, size=2, replace=False)
        noisy[[i, j]] = noisy[[j, i]]
    return noisy


def build_preference_samples(instances: Sequence[RankingInstance],
                             config: AdaptiveKConfig,
                             n_swaps: int = 0,
                             seed: Seed | None = None) -> List[PreferenceSample]:
    """Derives one preference sample per instance, optionally after logit noise under per-instance derived seeds

    Note:
        Noise is applied to the raw logits, then K and the sample are recomputed. The threshold is
        frozen on the clean training logits.
    """
    config = freeze_threshold(instances, config)
    if n_swaps > 0 and seed is None:
        raise ConfigurationError('logit noise needs a seed')
    samples = []
    clamped = 0
    for position, instance in enumerate(instances):
        logits = instance.ref_logits
        if logits is None:
            raise DataError(f'instance {instance.instance_id!r} has no ref_logits to derive K from', 'ref_logits')
        if n_swaps > 0:
            logits = inject_logit_noise(logits, n_swaps, seed.derive('noise', position))
        if int(np.sum(np.asarray(logits) > config.threshold)) < config.k_min:
            clamped += 1
        samples.append(build_preference_sample(instance, config, ref_logits=logits))
    if clamped > 0:
        logger.info('%d of %d instances had fewer than k_min logits above tau, K was clamped to k_min', clamped, len(instances))
    return samples
