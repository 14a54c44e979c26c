"""
Synthetic ranking data with a known Plackett-Luce ground truth.
"""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from rankalign import defaults
from rankalign.utils.exceptions import ConfigurationError, DomainError
from rankalign.utils.helpers import split_counts
from rankalign.utils.numerics import FloatArray, softmax_log_probs
from rankalign.utils.ranking_instance import SPLITS, RankingInstance
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticConfig:
    """Recipe of a synthetic dataset

    Attributes:
        n_queries (int): number of queries, at least 1
        m_candidates (int): candidates per query, at least 2
        score_scale (float): standard deviation of the ground-truth scores, non-negative
        label_thresholds (Optional[Tuple[float, float, float]]): cutpoints between the grades 0|1|2|3, the label_quantiles of Normal(0, score_scale) if None
        reference_noise (float): standard deviation of the perturbation turning scores into ref_logits
        split_ratios (Tuple[int, int, int]): train, valid, test proportions over queries
        seed (int): root seed of the dataset
    """
    n_queries: int = defaults.n_queries
    m_candidates: int = defaults.m_candidates
    score_scale: float = defaults.score_scale
    label_thresholds: Optional[Tuple[float, float, float]] = None
    reference_noise: float = defaults.reference_noise
    split_ratios: Tuple[int, int, int] = defaults.split_ratios
    seed: int = defaults.seed

    def __post_init__(self) -> None:
        if self.n_queries < 1:
            raise ConfigurationError('n_queries has to be at least 1')
        if self.m_candidates < 2:
            raise ConfigurationError('m_candidates has to be at least 2')
        if self.score_scale < 0 or self.reference_noise < 0:
            raise ConfigurationError('score_scale and reference_noise have to be non-negative')
        if self.label_thresholds is not None:
            cutpoints = tuple(float(c) for c in self.label_thresholds)
            if len(cutpoints) != 3 or not cutpoints[0] < cutpoints[1] < cutpoints[2]:
                raise ConfigurationError('label_thresholds needs 3 strictly increasing cutpoints')
            object.__setattr__(self, 'label_thresholds', cutpoints)
        if len(self.split_ratios) != len(SPLITS) or min(self.split_ratios) < 0 or sum(self.split_ratios) <= 0:
            raise ConfigurationError('split_ratios needs one non-negative proportion per split')
        object.__setattr__(self, 'split_ratios', tuple(self.split_ratios))

    @property
    def cutpoints(self) -> FloatArray:
        if self.label_thresholds is not None:
            return np.asarray(self.label_thresholds)
        return self.score_scale * stats.norm.ppf(defaults.label_quantiles)

    def to_dict(self) -> dict:
        record = dataclasses.asdict(self)
        record['label_thresholds'] = list(self.label_thresholds) if self.label_thresholds is not None else None
        record['split_ratios'] = list(self.split_ratios)
        return record


def grade(scores: Sequence[float] | FloatArray, cutpoints: Sequence[float] | FloatArray) -> List[int]:
    """Maps scores to grades 0..3, a score equal to a cutpoint gets the higher grade"""
    return [int(g) for g in np.searchsorted(np.asarray(cutpoints), np.asarray(scores), side='right')]


def assign_splits(n: int, ratios: Sequence[int], seed: Seed) -> List[str]:
    """Assigns n queries to train/valid/test in the given proportions under a seeded shuffle"""
    counts = split_counts(n, ratios)
    labels = [split for split, count in zip(SPLITS, counts) for _ in range(count)]
    order = seed.generator().permutation(n)
    assigned = [''] * n
    for position, query in enumerate(order):
        assigned[int(query)] = labels[position]
    return assigned


def _generate_query(index: int, split: str, config: SyntheticConfig, seed: Seed) -> RankingInstance:
    rng = seed.derive('query', index).generator()
    scores = rng.normal(0.0, config.score_scale, size=config.m_candidates)
    ref_logits = scores + rng.normal(0.0, config.reference_noise, size=config.m_candidates)
    return RankingInstance(instance_id=f'q{index:06d}',
                           candidate_ids=[f'item{j:03d}' for j in range(config.m_candidates)],
                           labels=grade(scores, config.cutpoints),
                           split=split,
                           ref_logits=ref_logits,
                           scores=scores)


def gen_synthetic(config: SyntheticConfig, workers: int = 1) -> List[RankingInstance]:
    """Generates n_queries instances with Normal(0, score_scale) ground-truth scores, graded labels and noisy ref_logits

    Args:
        config (SyntheticConfig): dataset recipe
        workers (int, optional): threads generating queries, each query draws from its own derived seed. Defaults to 1.

    Returns:
        List[RankingInstance]: instances in query order, each carrying its ground-truth scores
    """
    seed = Seed(config.seed)
    splits = assign_splits(config.n_queries, config.split_ratios, seed.derive('split'))

    def generate(index: int) -> RankingInstance:
        return _generate_query(index, splits[index], config, seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            instances = list(executor.map(generate, range(config.n_queries)))
    else:
        instances = [generate(index) for index in range(config.n_queries)]
    histogram = np.bincount([label for instance in instances for label in instance.labels], minlength=4)
    logger.info('Generated %d queries of %d candidates, grade histogram %s', config.n_queries, config.m_candidates, histogram.tolist())
    return instances


def sample_pl_ranking(scores: Sequence[float] | FloatArray, seed: Seed) -> List[int]:
    """Draws a full ranking from the Plackett-Luce model: picks the next position with softmax over the remaining scores

    Raises:
        DomainError: raised for fewer than 2 scores or non-finite scores

    Returns:
        List[int]: candidate indices, first drawn first
    """
    scores = np.asarray(scores, dtype=float)
    if scores.size < 2:
        raise DomainError('a ranking needs at least 2 candidates')
    if not np.all(np.isfinite(scores)):
        raise DomainError('scores have to be finite')
    rng = seed.generator()
    remaining = list(range(scores.size))
    ranking = []
    while remaining:
        probs = np.exp(softmax_log_probs(scores[remaining]))
        pick = int(rng.choice(len(remaining), p=probs / probs.sum()))
        ranking.append(remaining.pop(pick))
    return ranking
