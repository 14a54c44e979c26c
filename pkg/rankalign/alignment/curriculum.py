import itertools
import logging
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from rankalign.utils.exceptions import ConfigurationError, DataError
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)


class CurriculumMode(str, Enum):
    ASCENDING = 'ascending'
    DESCENDING = 'descending'
    RANDOM = 'random'


def _shuffle_within_blocks(order: List[int], kappas: np.ndarray, seed: Seed) -> List[int]:
    rng = seed.generator()
    shuffled = []
    for _, block in itertools.groupby(order, key=lambda i: kappas[i]):
        block = list(block)
        shuffled.extend(block[j] for j in rng.permutation(len(block)))
    return shuffled


def order_dataset(samples: Sequence[PreferenceSample],
                  mode: CurriculumMode | str,
                  seed: Seed,
                  shuffle_within_blocks: bool = False) -> List[int]:
    """Returns the training order of the samples as a permutation of their indices

    Args:
        samples (Sequence[PreferenceSample]): non-empty sequence of samples
        mode (CurriculumMode | str): ascending or descending stable sort by K, or a uniform shuffle
        seed (Seed): seed of the random mode and of the within-block shuffle
        shuffle_within_blocks (bool, optional): shuffle samples of equal K in the sorted modes. Defaults to False.

    Raises:
        DataError: raised if samples is empty

    Returns:
        List[int]: permutation of range(len(samples))
    """
    if len(samples) == 0:
        raise DataError('cannot order an empty dataset')
    mode = CurriculumMode(mode)
    kappas = np.array([s.kappa for s in samples])
    if mode == CurriculumMode.RANDOM:
        return [int(i) for i in seed.generator().permutation(len(samples))]
    keys = kappas if mode == CurriculumMode.ASCENDING else -kappas
    order = [int(i) for i in np.argsort(keys, kind='stable')]
    if shuffle_within_blocks:
        order = _shuffle_within_blocks(order, kappas, seed.derive('blocks'))
    return order


def batch_by_k(samples: Sequence[PreferenceSample], batch_size: int, order: Optional[Sequence[int]] = None) -> List[List[int]]:
    """Chunks consecutive runs of equal K along order into batches of at most batch_size

    Args:
        samples (Sequence[PreferenceSample]): the dataset
        batch_size (int): maximum batch size, at least 1
        order (Optional[Sequence[int]], optional): visiting order of sample indices, identity if None. Defaults to None.

    Raises:
        ConfigurationError: raised if batch_size is smaller than 1

    Returns:
        List[List[int]]: batches of sample indices, never mixing two K values
    """
    if batch_size < 1:
        raise ConfigurationError('batch_size has to be at least 1')
    order = range(len(samples)) if order is None else order
    batches = []
    for _, run in itertools.groupby(order, key=lambda i: samples[i].kappa):
        run = list(run)
        batches.extend(run[start:start + batch_size] for start in range(0, len(run), batch_size))
    return batches


class CurriculumScheduler:

    def __init__(self,
                 samples: Sequence[PreferenceSample],
                 mode: CurriculumMode | str,
                 batch_size: int,
                 seed: Seed,
                 shuffle_within_blocks: bool = False) -> None:
        """Creates a CurriculumScheduler emitting K-homogeneous batches per epoch

        Args:
            samples (Sequence[PreferenceSample]): training samples
            mode (CurriculumMode | str): training order
            batch_size (int): maximum batch size
            seed (Seed): seed of every random choice of the schedule
            shuffle_within_blocks (bool, optional): reshuffle equal-K blocks each epoch in the sorted modes. Defaults to False.

        Note:
            The sorted orders are fixed across epochs unless shuffle_within_blocks is set. The random order
            is redrawn per epoch, grouped into K-homogeneous batches and the batch order shuffled, so every
            mode sees the same number of steps per epoch.
        """
        self.samples = samples
        self.mode = CurriculumMode(mode)
        self.batch_size = batch_size
        self.seed = seed
        self.shuffle_within_blocks = shuffle_within_blocks
        self.__fixed_batches = None
        if self.mode != CurriculumMode.RANDOM and not shuffle_within_blocks:
            self.__fixed_batches = batch_by_k(samples, batch_size, order_dataset(samples, self.mode, seed))

    def batches_for_epoch(self, epoch: int) -> List[List[int]]:
        if self.__fixed_batches is not None:
            return [list(b) for b in self.__fixed_batches]
        epoch_seed = self.seed.derive('epoch', epoch)
        if self.mode != CurriculumMode.RANDOM:
            order = order_dataset(self.samples, self.mode, epoch_seed, shuffle_within_blocks=True)
            return batch_by_k(self.samples, self.batch_size, order)
        shuffled = order_dataset(self.samples, CurriculumMode.RANDOM, epoch_seed)
        grouped = sorted(shuffled, key=lambda i: self.samples[i].kappa)
        batches = batch_by_k(self.samples, self.batch_size, grouped)
        rng = epoch_seed.derive('batches').generator()
        return [batches[j] for j in rng.permutation(len(batches))]

    def steps_per_epoch(self) -> int:
        return len(self.batches_for_epoch(0))
