from typing import Iterable, Sequence, Tuple

from rankalign.utils.exceptions import DataError


class PreferenceSample:

    def __init__(self, instance_id: str, head: Sequence[int], tail: Iterable[int], m: int | None = None) -> None:
        """Creates a K-order preference y_head[0] > ... > y_head[K-1] > {tail}

        Args:
            instance_id (str): identifier of the RankingInstance the sample belongs to
            head (Sequence[int]): ordered candidate indices of the top-K
            tail (Iterable[int]): unordered remaining candidate indices, stored sorted ascending
            m (int | None, optional): number of candidates, inferred from head and tail if None. Defaults to None.

        Raises:
            DataError: raised if head and tail do not partition 0..M-1 or head is empty
        """
        self.__instance_id = instance_id
        head = tuple(int(i) for i in head)
        tail = tuple(sorted(int(i) for i in tail))
        if len(head) < 1:
            raise DataError('head needs at least one candidate', 'head')
        if m is None:
            m = len(head) + len(tail)
        if sorted(head + tail) != list(range(m)):
            raise DataError(f'head and tail have to partition the candidate indices 0..{m - 1}', 'head')
        self.__head = head
        self.__tail = tail

    def _get_instance_id(self) -> str:
        return self.__instance_id
    instance_id = property(_get_instance_id)

    def _get_head(self) -> Tuple[int, ...]:
        return self.__head
    head = property(_get_head)

    def _get_tail(self) -> Tuple[int, ...]:
        return self.__tail
    tail = property(_get_tail)

    @property
    def kappa(self) -> int:
        return len(self.__head)

    @property
    def m(self) -> int:
        return len(self.__head) + len(self.__tail)

    @property
    def order(self) -> Tuple[int, ...]:
        """candidate indices as head followed by tail, the alignment every list-wise loss expects"""
        return self.__head + self.__tail

    def to_record(self) -> dict:
        return {'instance_id': self.instance_id, 'head': list(self.head), 'tail': list(self.tail), 'kappa': self.kappa}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PreferenceSample) and self.to_record() == other.to_record()

    def __repr__(self) -> str:
        return f'PreferenceSample({self.instance_id!r}, head={self.head}, kappa={self.kappa})'
