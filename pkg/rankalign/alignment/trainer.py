"""
Two-stage optimization of a tabular policy: SFT of the reference on the top-labeled candidate,
then preference alignment with any loss of the zoo.

Every alignment step runs three timed phases: (1) compute the M rewards of every batch instance,
(2) compute the loss and its gradient, (3) apply the optimizer update.
"""
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from rankalign import defaults
from rankalign.alignment.curriculum import CurriculumMode, CurriculumScheduler
from rankalign.alignment.evaluation import GAINS, evaluate
from rankalign.alignment.losses import (
    LossConfig,
    LossKind,
    batch_loss,
    compute_rewards,
    draw_pair,
    needs_pairs,
)
from rankalign.alignment.lr_schedule import lr_schedule
from rankalign.alignment.optimizers import OPTIMIZERS, make_optimizer
from rankalign.utils.exceptions import ConfigurationError, DataError, DomainError, TrainingAbortedError
from rankalign.utils.numerics import softmax_log_probs
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.ranking_instance import SPLITS, RankingInstance
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)

STEP_COLUMNS = ['step', 'loss', 'reward_top1', 'lr', 't1', 't2', 't3']
METRIC_COLUMNS = ['step', 'split', 'metric', 'value']


@dataclass(frozen=True)
class TrainConfig:
    loss_kind: str = 'kpo'
    epochs: int = defaults.epochs
    batch_size: int = defaults.batch_size
    lr_max: float = defaults.lr_max
    warmup_fraction: float = defaults.warmup_fraction
    warmup_start_factor: float = defaults.warmup_start_factor
    optimizer: str = defaults.optimizer
    adam_beta1: float = defaults.adam_beta1
    adam_beta2: float = defaults.adam_beta2
    adam_eps: float = defaults.adam_eps
    curriculum: str = defaults.curriculum
    shuffle_within_blocks: bool = False
    seed: int = defaults.seed
    eval_every: int = defaults.eval_every
    select_split: str = defaults.select_split
    select_metric: str = defaults.select_metric
    ndcg_gain: str = defaults.ndcg_gain
    record_timings: bool = True
    sft_epochs: int = defaults.sft_epochs
    sft_lr: float = defaults.sft_lr

    def __post_init__(self) -> None:
        try:
            LossKind(self.loss_kind)
            CurriculumMode(self.curriculum)
        except ValueError as error:
            raise ConfigurationError(str(error)) from error
        if self.epochs < 1 or self.batch_size < 1 or self.eval_every < 1:
            raise ConfigurationError('epochs, batch_size and eval_every have to be at least 1')
        if self.lr_max < 0 or self.sft_lr < 0 or self.sft_epochs < 0:
            raise ConfigurationError('learning rates and sft_epochs have to be non-negative')
        if not 0 <= self.warmup_fraction < 1:
            raise ConfigurationError('warmup_fraction has to lie in [0, 1)')
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f'optimizer has to be one of {OPTIMIZERS}')
        if self.select_split not in SPLITS:
            raise ConfigurationError(f'select_split has to be one of {SPLITS}')
        if self.ndcg_gain not in GAINS:
            raise ConfigurationError(f'ndcg_gain has to be one of {GAINS}')

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TrainTrace:
    """Per-step records (step, loss, reward_top1, lr, t1, t2, t3) and per-evaluation metric records (step, split, metric, value)"""
    steps: List[dict] = field(default_factory=list)
    evals: List[dict] = field(default_factory=list)
    selected_step: Optional[int] = None
    selected_value: Optional[float] = None

    def step_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.steps, columns=STEP_COLUMNS)

    def metric_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.evals, columns=METRIC_COLUMNS)

    def phase_totals(self) -> Dict[str, float]:
        return {phase: float(sum(record[phase] for record in self.steps)) for phase in ('t1', 't2', 't3')}

    def metric(self, step: int, split: str, name: str) -> Optional[float]:
        for record in self.evals:
            if (record['step'], record['split'], record['metric']) == (step, split, name):
                return record['value']
        return None


def sft(instances: Sequence[RankingInstance],
        epochs: int = defaults.sft_epochs,
        lr: float = defaults.sft_lr,
        init: Optional[PolicyTable] = None) -> PolicyTable:
    """Fits the reference policy to the top-labeled candidate of every training instance by gradient ascent on log pi(y_gt|x)

    Args:
        instances (Sequence[RankingInstance]): dataset, only the train split is fitted
        epochs (int, optional): passes over the training instances. Defaults to 5.
        lr (float, optional): step size. Defaults to 1.0.
        init (Optional[PolicyTable], optional): starting table, ref_logits (or zeros) of every instance if None. Defaults to None.

    Returns:
        PolicyTable: reference table covering every instance, valid and test rows keep their initialization

    Note:
        The target is the candidate with the maximal label, the lowest index on ties.
    """
    table = init.copy() if init is not None else PolicyTable.from_instances(instances)
    train_instances = [instance for instance in instances if instance.split == 'train']
    for epoch in range(epochs):
        nll = []
        for instance in train_instances:
            log_probs = softmax_log_probs(table.row_for(instance))
            target = int(np.argmax(instance.labels))
            nll.append(-log_probs[target])
            grad = -np.exp(log_probs)
            grad[target] += 1.0
            table.add_to_row(instance.instance_id, lr * grad)
        logger.info('SFT epoch %d: mean NLL of the target %.6f', epoch + 1, float(np.mean(nll)) if nll else 0.0)
    return table


def _top1_reward(policy: PolicyTable, reference: PolicyTable, sample: PreferenceSample, beta: float) -> float:
    top = sample.head[0]
    return beta * float(policy.log_probs(sample.instance_id)[top] - reference.log_probs(sample.instance_id)[top])


def _training_samples(instances: Sequence[RankingInstance], samples: Sequence[PreferenceSample]) -> List[PreferenceSample]:
    by_id = {instance.instance_id: instance for instance in instances}
    selected = []
    for sample in samples:
        if sample.instance_id not in by_id:
            raise DataError(f'sample refers to unknown instance {sample.instance_id!r}', 'instance_id')
        if by_id[sample.instance_id].m != sample.m:
            raise DataError(f'sample of {sample.instance_id!r} does not match the instance size', 'head')
        if by_id[sample.instance_id].split == 'train':
            selected.append(sample)
    if not selected:
        raise DataError('no preference sample belongs to a training instance')
    if len(selected) < len(samples):
        logger.info('Training on %d of %d samples, the rest belong to valid or test instances', len(selected), len(samples))
    return selected


def _drop_single_head_samples(samples: List[PreferenceSample]) -> List[PreferenceSample]:
    # the tail-discarding objective of a K = 1 sample is empty
    kept = [sample for sample in samples if sample.kappa >= 2]
    if not kept:
        raise DomainError('kpo_cut needs at least one sample with K >= 2')
    if len(kept) < len(samples):
        logger.info('kpo_cut: dropped %d of %d samples with K = 1, their rows keep the reference', len(samples) - len(kept), len(samples))
    return kept


class _CheckpointSelector:

    def __init__(self, instances: Sequence[RankingInstance], config: TrainConfig) -> None:
        self.split = config.select_split
        if not any(instance.split == self.split for instance in instances):
            logger.warning('no %s instances to select the checkpoint on, selecting on train', self.split)
            self.split = 'train'
        self.metric = config.select_metric
        self.best: Optional[PolicyTable] = None
        self.best_step: Optional[int] = None
        self.best_value: Optional[float] = None

    def offer(self, step: int, trace: TrainTrace, policy: PolicyTable) -> None:
        value = trace.metric(step, self.split, self.metric)
        if value is None:
            raise ConfigurationError(f'metric {self.metric} is not computed on split {self.split}')
        # later steps win ties
        if self.best_value is None or value >= self.best_value:
            self.best, self.best_step, self.best_value = policy.copy(), step, value


def _evaluate_splits(policy: PolicyTable, instances: Sequence[RankingInstance], step: int, trace: TrainTrace, gain: str) -> None:
    for split in SPLITS:
        report = evaluate(policy, instances, split, gain=gain)
        if report.n_instances > 0:
            trace.evals.extend(report.to_rows(step, split))


def train(instances: Sequence[RankingInstance],
          samples: Sequence[PreferenceSample],
          reference: PolicyTable,
          config: TrainConfig,
          loss_config: LossConfig = LossConfig(),
          init: Optional[PolicyTable] = None) -> Tuple[PolicyTable, TrainTrace]:
    """Aligns a policy to the preference samples of the training instances and returns the selected checkpoint

    Args:
        instances (Sequence[RankingInstance]): dataset of every split, valid and test are evaluated only
        samples (Sequence[PreferenceSample]): one preference sample per instance, adaptive or fixed K
        reference (PolicyTable): frozen reference policy covering every instance
        config (TrainConfig): schedule, optimizer, curriculum and selection settings
        loss_config (LossConfig, optional): loss hyperparameters. Defaults to LossConfig().
        init (Optional[PolicyTable], optional): starting policy, a copy of the reference if None. Defaults to None.

    Raises:
        DataError: raised if no sample belongs to a training instance
        DomainError: raised for kpo_cut when no training sample has K >= 2; K = 1 samples are dropped otherwise
        TrainingAbortedError: raised with the step index if a loss, gradient or parameter becomes non-finite

    Returns:
        Tuple[PolicyTable, TrainTrace]: the checkpoint with the best select_metric on select_split (later step on ties) and the trace
    """
    kind = LossKind(config.loss_kind)
    by_id = {instance.instance_id: instance for instance in instances}
    train_samples = _training_samples(instances, samples)
    if kind == LossKind.KPO_CUT:
        train_samples = _drop_single_head_samples(train_samples)
    if kind == LossKind.KTO and loss_config.kto_z0_mode == 'batch_estimate' and config.batch_size < 2:
        raise ConfigurationError('the batch estimate of z0 needs batch_size >= 2')

    policy = (init if init is not None else reference).copy()
    seed = Seed(config.seed)
    scheduler = CurriculumScheduler(train_samples, config.curriculum, config.batch_size,
                                    seed.derive('curriculum'), config.shuffle_within_blocks)
    total_steps = config.epochs * scheduler.steps_per_epoch()
    optimizer = make_optimizer(config.optimizer, config.adam_beta1, config.adam_beta2, config.adam_eps)
    beta = loss_config.beta
    clock = time.perf_counter if config.record_timings else (lambda: 0.0)

    trace = TrainTrace()
    selector = _CheckpointSelector(instances, config)
    top1 = np.array([_top1_reward(policy, reference, sample, beta) for sample in train_samples])
    _evaluate_splits(policy, instances, 0, trace, config.ndcg_gain)
    selector.offer(0, trace, policy)
    logger.info('Aligning with %s on %d samples: %d epochs of %d steps',
                kind.value, len(train_samples), config.epochs, scheduler.steps_per_epoch())

    step = 0
    estimate_z0 = kind == LossKind.KTO and loss_config.kto_z0_mode == 'batch_estimate'
    single_batches = 0
    for epoch in range(config.epochs):
        for batch in scheduler.batches_for_epoch(epoch):
            lr = lr_schedule(step, total_steps, config.lr_max, config.warmup_fraction, config.warmup_start_factor)
            step += 1
            batch_samples = [train_samples[i] for i in batch]
            batch_instances = [by_id[sample.instance_id] for sample in batch_samples]
            if estimate_z0 and len(batch) == 1:
                single_batches += 1
            start = clock()
            try:
                rewards = [compute_rewards(policy, reference, instance, beta) for instance in batch_instances]
                end_rewards = clock()
                pairs = None
                if needs_pairs(kind):
                    pairs = [draw_pair(sample, seed.derive('pair', epoch, i)) for sample, i in zip(batch_samples, batch)]
                lengths = [instance.lengths for instance in batch_instances] if kind == LossKind.SIMPO else None
                value, grads = batch_loss(kind, rewards, batch_samples, loss_config, pairs, lengths)
            except DomainError as error:
                raise TrainingAbortedError(step, str(error)) from error
            end_loss = clock()
            for instance, grad in zip(batch_instances, grads):
                optimizer.update(policy, instance.instance_id, grad, lr)
            end_update = clock()
            for i, instance in zip(batch, batch_instances):
                if not np.all(np.isfinite(policy.row(instance.instance_id))):
                    raise TrainingAbortedError(step, f'parameters of {instance.instance_id!r} are not finite')
                top1[i] = _top1_reward(policy, reference, train_samples[i], beta)
            trace.steps.append({'step': step, 'loss': value, 'reward_top1': float(top1.mean()), 'lr': lr,
                                't1': end_rewards - start, 't2': end_loss - end_rewards, 't3': end_update - end_loss})
            if step % config.eval_every == 0 or step == total_steps:
                _evaluate_splits(policy, instances, step, trace, config.ndcg_gain)
                selector.offer(step, trace, policy)
        logger.info('Epoch %d done: loss %.6f, mean top-1 reward %.6f', epoch + 1, trace.steps[-1]['loss'], trace.steps[-1]['reward_top1'])

    if single_batches > 0:
        logger.info('%d single-sample batches kept z0 = 0, the batch estimate needs two samples', single_batches)
    trace.selected_step, trace.selected_value = selector.best_step, selector.best_value
    logger.info('Selected the checkpoint of step %d with %s %s = %.6f',
                selector.best_step, selector.split, selector.metric, selector.best_value)
    return selector.best, trace
