import math
import numbers
from typing import Optional, Sequence, Tuple

from rankalign.utils.exceptions import DataError

SPLITS = ('train', 'valid', 'test')
MIN_LABEL, MAX_LABEL = 0, 3


class RankingInstance:

    def __init__(self,
                 instance_id: str,
                 candidate_ids: Sequence[str],
                 labels: Sequence[int],
                 split: str = 'train',
                 ref_logits: Optional[Sequence[float]] = None,
                 lengths: Optional[Sequence[int]] = None,
                 scores: Optional[Sequence[float]] = None,
                 context: Optional[Sequence[str]] = None) -> None:
        """Creates an immutable RankingInstance: one query with its M candidates and their relevance labels

        Args:
            instance_id (str): opaque identifier of the query
            candidate_ids (Sequence[str]): M pairwise distinct item identifiers
            labels (Sequence[int]): M relevance grades in 0..3
            split (str, optional): one of train, valid, test. Defaults to 'train'.
            ref_logits (Optional[Sequence[float]], optional): M finite reference logits. Defaults to None.
            lengths (Optional[Sequence[int]], optional): M positive candidate lengths |y|, all 1 if None. Defaults to None.
            scores (Optional[Sequence[float]], optional): M ground-truth Plackett-Luce scores, if known. Defaults to None.
            context (Optional[Sequence[str]], optional): item history the query was built from. Defaults to None.

        Raises:
            DataError: raised with the offending field if any invariant is violated
        """
        self._set_instance_id(instance_id)
        self._set_candidate_ids(candidate_ids)
        self._set_labels(labels)
        self._set_split(split)
        self.__ref_logits = self._validate_reals(ref_logits, 'ref_logits')
        self.__scores = self._validate_reals(scores, 'scores')
        self._set_lengths(lengths)
        self.__context = tuple(str(c) for c in context) if context is not None else None

    def _get_instance_id(self) -> str:
        return self.__instance_id

    def _set_instance_id(self, i: str) -> None:
        if not isinstance(i, str) or i == '':
            raise DataError('instance_id has to be a non-empty string', 'instance_id')
        self.__instance_id = i
    instance_id = property(_get_instance_id)

    def _get_candidate_ids(self) -> Tuple[str, ...]:
        return self.__candidate_ids

    def _set_candidate_ids(self, ids: Sequence[str]) -> None:
        if isinstance(ids, str) or not all(isinstance(c, str) for c in ids):
            raise DataError('candidate_ids has to be a sequence of strings', 'candidate_ids')
        ids = tuple(ids)
        if len(ids) < 2:
            raise DataError('an instance needs at least 2 candidates', 'candidate_ids')
        if len(set(ids)) != len(ids):
            raise DataError('duplicate candidate ids', 'candidate_ids')
        self.__candidate_ids = ids
    candidate_ids = property(_get_candidate_ids)

    def _get_labels(self) -> Tuple[int, ...]:
        return self.__labels

    def _set_labels(self, labels: Sequence[int]) -> None:
        if isinstance(labels, str) or len(labels) != self.m:
            raise DataError(f'labels has to have one entry per candidate ({self.m})', 'labels')
        for label in labels:
            if isinstance(label, bool) or not isinstance(label, numbers.Real) or not float(label).is_integer():
                raise DataError(f'label {label!r} is not an integer', 'labels')
            if not MIN_LABEL <= int(label) <= MAX_LABEL:
                raise DataError(f'label {label} out of range {MIN_LABEL}..{MAX_LABEL}', 'labels')
        self.__labels = tuple(int(label) for label in labels)
    labels = property(_get_labels)

    def _get_split(self) -> str:
        return self.__split

    def _set_split(self, split: str) -> None:
        if split not in SPLITS:
            raise DataError(f'split {split!r} is not one of {SPLITS}', 'split')
        self.__split = split
    split = property(_get_split)

    def _get_lengths(self) -> Tuple[int, ...]:
        return self.__lengths

    def _set_lengths(self, lengths: Optional[Sequence[int]]) -> None:
        if lengths is None:
            self.__lengths = tuple(1 for _ in range(self.m))
            self.__has_lengths = False
            return
        if len(lengths) != self.m or any(not isinstance(x, numbers.Integral) or isinstance(x, bool) or x < 1 for x in lengths):
            raise DataError('lengths has to hold one positive integer per candidate', 'lengths')
        self.__lengths = tuple(int(x) for x in lengths)
        self.__has_lengths = True
    lengths = property(_get_lengths)

    def _get_ref_logits(self) -> Optional[Tuple[float, ...]]:
        return self.__ref_logits
    ref_logits = property(_get_ref_logits)

    def _get_scores(self) -> Optional[Tuple[float, ...]]:
        return self.__scores
    scores = property(_get_scores)

    def _get_context(self) -> Optional[Tuple[str, ...]]:
        return self.__context
    context = property(_get_context)

    @property
    def m(self) -> int:
        return len(self.__candidate_ids)

    @property
    def has_lengths(self) -> bool:
        return self.__has_lengths

    def _validate_reals(self, values: Optional[Sequence[float]], field: str) -> Optional[Tuple[float, ...]]:
        if values is None:
            return None
        if isinstance(values, str) or len(values) != self.m:
            raise DataError(f'{field} has to have one entry per candidate ({self.m})', field)
        try:
            values = tuple(float(v) for v in values)
        except (TypeError, ValueError):
            raise DataError(f'{field} has to hold numbers', field)
        if not all(math.isfinite(v) for v in values):
            raise DataError(f'{field} has to be finite', field)
        return values

    def with_ref_logits(self, ref_logits: Sequence[float]) -> 'RankingInstance':
        """Returns a copy of the instance carrying the given reference logits"""
        return RankingInstance(self.instance_id, self.candidate_ids, self.labels, self.split,
                               ref_logits=ref_logits,
                               lengths=self.lengths if self.has_lengths else None,
                               scores=self.scores,
                               context=self.context)

    def to_record(self) -> dict:
        record = {'instance_id': self.instance_id,
                  'candidate_ids': list(self.candidate_ids),
                  'labels': list(self.labels),
                  'split': self.split}
        if self.ref_logits is not None:
            record['ref_logits'] = list(self.ref_logits)
        if self.has_lengths:
            record['lengths'] = list(self.lengths)
        if self.scores is not None:
            record['scores'] = list(self.scores)
        if self.context is not None:
            record['context'] = list(self.context)
        return record

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RankingInstance) and self.to_record() == other.to_record()

    def __repr__(self) -> str:
        return f'RankingInstance({self.instance_id!r}, m={self.m}, split={self.split!r})'
