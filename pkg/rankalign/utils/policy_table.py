from typing import Dict, Iterable, Iterator, Mapping, Sequence

import numpy as np

from rankalign.utils.exceptions import DataError, MissingParameterError
from rankalign.utils.numerics import FloatArray, softmax_log_probs
from rankalign.utils.ranking_instance import RankingInstance


class PolicyTable:

    def __init__(self, rows: Mapping[str, Sequence[float]] | None = None) -> None:
        """Creates a PolicyTable of unconstrained pre-softmax parameters u[x][i], one row per instance

        Args:
            rows (Mapping[str, Sequence[float]] | None, optional): instance_id -> M parameters. Defaults to None.

        Raises:
            DataError: raised if a row has fewer than 2 entries or non-finite entries
        """
        self.__rows: Dict[str, FloatArray] = {}
        for instance_id, row in (rows or {}).items():
            self.set_row(instance_id, row)

    @classmethod
    def from_instances(cls, instances: Iterable[RankingInstance], use_ref_logits: bool = True) -> 'PolicyTable':
        """Initializes one row per instance from its ref_logits, or zeros (uniform policy) if it has none"""
        table = cls()
        for instance in instances:
            if use_ref_logits and instance.ref_logits is not None:
                table.set_row(instance.instance_id, instance.ref_logits)
            else:
                table.set_row(instance.instance_id, np.zeros(instance.m))
        return table

    def set_row(self, instance_id: str, row: Sequence[float]) -> None:
        arr = np.array(row, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise DataError(f'parameter row of {instance_id!r} needs at least 2 entries', 'params')
        if not np.all(np.isfinite(arr)):
            raise DataError(f'parameter row of {instance_id!r} is not finite', 'params')
        self.__rows[instance_id] = arr

    def row(self, instance_id: str) -> FloatArray:
        """Returns a read-only view of the parameters of one instance

        Raises:
            MissingParameterError: raised if the table has no row for instance_id
        """
        try:
            view = self.__rows[instance_id].view()
        except KeyError:
            raise MissingParameterError(f'no policy parameters for instance {instance_id!r}')
        view.flags.writeable = False
        return view

    def row_for(self, instance: RankingInstance) -> FloatArray:
        row = self.row(instance.instance_id)
        if row.size != instance.m:
            raise MissingParameterError(f'policy row of {instance.instance_id!r} has {row.size} entries, instance has {instance.m} candidates')
        return row

    def log_probs(self, instance_id: str) -> FloatArray:
        return softmax_log_probs(self.row(instance_id))

    def probs(self, instance_id: str) -> FloatArray:
        return np.exp(self.log_probs(instance_id))

    def add_to_row(self, instance_id: str, delta: FloatArray) -> None:
        if instance_id not in self.__rows:
            raise MissingParameterError(f'no policy parameters for instance {instance_id!r}')
        self.__rows[instance_id] = self.__rows[instance_id] + delta

    def copy(self) -> 'PolicyTable':
        return PolicyTable({i: row.copy() for i, row in self.__rows.items()})

    def instance_ids(self) -> Iterator[str]:
        return iter(self.__rows)

    def __contains__(self, instance_id: object) -> bool:
        return instance_id in self.__rows

    def __len__(self) -> int:
        return len(self.__rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolicyTable) or set(self.__rows) != set(other.instance_ids()):
            return False
        return all(np.array_equal(self.__rows[i], other.row(i)) for i in self.__rows)

    def to_records(self) -> list[dict]:
        return [{'instance_id': i, 'params': row.tolist()} for i, row in self.__rows.items()]
