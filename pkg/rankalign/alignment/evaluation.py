import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from rankalign import defaults
from rankalign.utils.exceptions import MetricError
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.ranking_instance import RankingInstance

logger = logging.getLogger(__name__)

GAINS = ('exponential', 'linear')


@dataclass
class MetricReport:
    """Dataset-level ranking metrics of one split

    Attributes:
        metrics (Dict[str, float]): metric name (HR@k, N@k) -> mean value
        n_instances (int): instances evaluated for NDCG
        n_hr_instances (int): instances with a unique maximal label, the ones HR is averaged over
        n_vacuous (int): instances with all-zero labels whose NDCG is defined as 1
    """
    metrics: Dict[str, float] = field(default_factory=dict)
    n_instances: int = 0
    n_hr_instances: int = 0
    n_vacuous: int = 0

    def to_rows(self, step: int, split: str) -> List[dict]:
        return [{'step': step, 'split': split, 'metric': name, 'value': value} for name, value in self.metrics.items()]


def rank_candidates(policy: PolicyTable, instance: RankingInstance) -> List[int]:
    """Candidate indices sorted by log pi_theta(y|x) descending, ties by candidate index ascending

    Raises:
        MissingParameterError: raised if the policy has no row for the instance
    """
    policy.row_for(instance)
    log_probs = policy.log_probs(instance.instance_id)
    return [int(i) for i in np.lexsort((np.arange(log_probs.size), -log_probs))]


def ground_truth_index(labels: Sequence[int]) -> int:
    """Index of the unique candidate with the maximal label

    Raises:
        MetricError: raised if the maximal label is shared, HR is undefined then and NDCG should be used
    """
    labels = np.asarray(labels)
    top = np.flatnonzero(labels == labels.max())
    if top.size != 1:
        raise MetricError(f'{top.size} candidates share the maximal label, HR needs a unique ground truth; use NDCG')
    return int(top[0])


def hr_at_k(ranking: Sequence[int], labels: Sequence[int], k: int) -> int:
    """1 if the ground-truth candidate appears within the first k positions of the ranking, else 0"""
    if k < 1:
        raise MetricError('k has to be at least 1')
    return int(ground_truth_index(labels) in list(ranking)[:k])


def _gains(labels: np.ndarray, gain: str) -> np.ndarray:
    if gain == 'exponential':
        return np.power(2.0, labels) - 1.0
    if gain == 'linear':
        return labels.astype(float)
    raise MetricError(f'gain has to be one of {GAINS}')


def ndcg_at_k(ranking: Sequence[int], labels: Sequence[int], k: int, gain: str = defaults.ndcg_gain) -> float:
    """Normalized discounted cumulative gain of the first k positions

    Args:
        ranking (Sequence[int]): candidate indices, best first
        labels (Sequence[int]): relevance grade per candidate index
        k (int): cutoff, at least 1
        gain (str, optional): 'exponential' (2^label - 1) or 'linear' (label). Defaults to 'exponential'.

    Returns:
        float: DCG / IDCG, 1 if IDCG is 0
    """
    if k < 1:
        raise MetricError('k has to be at least 1')
    labels = np.asarray(labels)
    gains = _gains(labels, gain)
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    ranked = gains[list(ranking)][:k]
    ideal = np.sort(gains)[::-1][:k]
    idcg = float(np.sum(ideal * discounts[:ideal.size]))
    if idcg == 0:
        return 1.0
    return float(np.sum(ranked * discounts[:ranked.size])) / idcg


def evaluate(policy: PolicyTable,
             instances: Iterable[RankingInstance],
             split: Optional[str] = None,
             hr_cutoffs: Sequence[int] = defaults.hr_cutoffs,
             ndcg_cutoffs: Sequence[int] = defaults.ndcg_cutoffs,
             gain: str = defaults.ndcg_gain) -> MetricReport:
    """Aggregates HR@k and N@k over the instances of one split (all instances if split is None)

    Note:
        HR is averaged over instances with a unique maximal label only, NDCG over all instances.
        Metrics without any contributing instance are omitted from the report.
    """
    hits = {k: [] for k in hr_cutoffs}
    ndcgs = {k: [] for k in ndcg_cutoffs}
    report = MetricReport()
    for instance in instances:
        if split is not None and instance.split != split:
            continue
        ranking = rank_candidates(policy, instance)
        report.n_instances += 1
        if max(instance.labels) == 0:
            report.n_vacuous += 1
        for k in ndcg_cutoffs:
            ndcgs[k].append(ndcg_at_k(ranking, instance.labels, k, gain))
        if instance.labels.count(max(instance.labels)) == 1:
            report.n_hr_instances += 1
            for k in hr_cutoffs:
                hits[k].append(hr_at_k(ranking, instance.labels, k))
    for k in hr_cutoffs:
        if hits[k]:
            report.metrics[f'HR@{k}'] = float(np.mean(hits[k]))
    for k in ndcg_cutoffs:
        if ndcgs[k]:
            report.metrics[f'N@{k}'] = float(np.mean(ndcgs[k]))
    if report.n_vacuous > 0:
        logger.info('%d of %d instances have all-zero labels, their NDCG counts as 1', report.n_vacuous, report.n_instances)
    return report
