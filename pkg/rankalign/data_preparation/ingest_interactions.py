import logging
from typing import List

import numpy as np
import pandas as pd

from rankalign import defaults
from rankalign.utils.exceptions import DataError, ParseError
from rankalign.utils.helpers import split_counts
from rankalign.utils.ranking_instance import SPLITS, RankingInstance
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)

LOG_COLUMNS = ('user', 'item', 'timestamp')


class InteractionLog:

    def __init__(self, records: pd.DataFrame) -> None:
        """Creates an InteractionLog of (user, item, timestamp) records sorted chronologically per user

        Args:
            records (pd.DataFrame): one row per interaction with the columns user, item and timestamp

        Raises:
            DataError: raised if a column is missing or a timestamp is not numeric

        Note:
            Equal timestamps of one user keep their input order.
        """
        for column in LOG_COLUMNS:
            if column not in records.columns:
                raise DataError(f'interaction log lacks the column {column!r}', column)
        frame = records.loc[:, list(LOG_COLUMNS)].copy()
        frame['user'] = frame['user'].astype(str)
        frame['item'] = frame['item'].astype(str)
        try:
            frame['timestamp'] = pd.to_numeric(frame['timestamp'])
        except (TypeError, ValueError) as error:
            raise DataError(f'timestamps have to be numeric: {error}', 'timestamp')
        frame['position'] = np.arange(len(frame))
        self.__records = frame.sort_values(['user', 'timestamp', 'position'], kind='mergesort').reset_index(drop=True)

    @classmethod
    def from_csv(cls, filepath: str) -> 'InteractionLog':
        """Reads a comma-separated log with the header row user,item,timestamp

        Raises:
            ParseError: raised if the header lacks a column or a row cannot be parsed
        """
        try:
            records = pd.read_csv(filepath, dtype={'user': str, 'item': str})
        except pd.errors.EmptyDataError:
            records = pd.DataFrame(columns=list(LOG_COLUMNS))
        except pd.errors.ParserError as error:
            raise ParseError(str(error))
        try:
            return cls(records)
        except DataError as error:
            raise ParseError(error.message, line_number=1 if error.field != 'timestamp' else None, field=error.field)

    def _get_records(self) -> pd.DataFrame:
        return self.__records
    records = property(_get_records)

    @property
    def catalog(self) -> List[str]:
        return sorted(self.__records['item'].unique())

    def sequences(self) -> dict:
        """user -> chronologically ordered item list, users in sorted order"""
        return {user: list(group['item']) for user, group in self.__records.groupby('user', sort=True)}


def ingest_interactions(log: InteractionLog,
                        n_negatives: int = defaults.n_negatives,
                        seed: Seed = Seed(defaults.seed),
                        exclude_history: bool = defaults.exclude_history) -> List[RankingInstance]:
    """Turns every user's chronological sequence into next-item ranking instances

    For each position t >= 1 of a user's sequence the candidate set is the item at t (label 3) plus
    n_negatives items drawn uniformly without replacement from the catalog (label 0), shuffled
    under a seed derived from (user, t). The context is the history before t. The n - 1 targets of
    a user are split chronologically 8:1:1.

    Args:
        log (InteractionLog): interactions
        n_negatives (int, optional): sampled negatives per instance. Defaults to 19.
        seed (Seed, optional): root seed of the negative draws. Defaults to Seed(0).
        exclude_history (bool, optional): never draw negatives from the user's own interactions. Defaults to True.

    Raises:
        DataError: raised if the catalog is smaller than n_negatives + 1, a user has fewer than 2 interactions or a user's negative pool runs dry

    Returns:
        List[RankingInstance]: instances ordered by user, then position
    """
    catalog = log.catalog
    if n_negatives < 1:
        raise DataError('n_negatives has to be at least 1', 'n_negatives')
    if len(catalog) < n_negatives + 1:
        raise DataError(f'catalog of {len(catalog)} items is smaller than n_negatives + 1 = {n_negatives + 1}', 'item')
    instances = []
    for user, items in log.sequences().items():
        if len(items) < 2:
            raise DataError(f'user {user!r} has fewer than 2 interactions', 'user')
        excluded = set(items) if exclude_history else set()
        counts = split_counts(len(items) - 1, defaults.split_ratios)
        splits = [split for split, count in zip(SPLITS, counts) for _ in range(count)]
        for t in range(1, len(items)):
            target = items[t]
            pool = [item for item in catalog if item not in excluded and item != target]
            if len(pool) < n_negatives:
                raise DataError(f'only {len(pool)} negatives available for user {user!r}, {n_negatives} needed', 'item')
            rng = seed.derive('user', user, t).generator()
            negatives = [pool[int(j)] for j in rng.choice(len(pool), size=n_negatives, replace=False)]
            candidates = [target] + negatives
            permutation = rng.permutation(len(candidates))
            candidate_ids = [candidates[int(j)] for j in permutation]
            labels = [3 if int(j) == 0 else 0 for j in permutation]
            instances.append(RankingInstance(instance_id=f'{user}:{t}',
                                             candidate_ids=candidate_ids,
                                             labels=labels,
                                             split=splits[t - 1],
                                             context=items[:t]))
    logger.info('Ingested %d instances from %d users over a catalog of %d items', len(instances), len(log.sequences()), len(catalog))
    return instances
