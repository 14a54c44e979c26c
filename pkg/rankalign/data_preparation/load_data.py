import json
import logging
from typing import Callable, Dict, Iterator, List, Sequence, Tuple, TypeVar

from rankalign.utils.exceptions import DataError, ParseError
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.ranking_instance import RankingInstance

logger = logging.getLogger(__name__)

T = TypeVar('T')

INSTANCE_FIELDS = {'instance_id', 'candidate_ids', 'labels', 'split', 'ref_logits', 'lengths', 'scores', 'context'}
INSTANCE_REQUIRED = ('instance_id', 'candidate_ids', 'labels')
SAMPLE_FIELDS = {'instance_id', 'head', 'tail', 'kappa'}
SAMPLE_REQUIRED = ('instance_id', 'head', 'tail')
POLICY_FIELDS = {'instance_id', 'params'}


def _records(filepath: str) -> Iterator[Tuple[int, dict]]:
    with open(filepath, encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            if line.strip() == '':
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as error:
                raise ParseError(f'malformed record: {error.msg}', line_number)
            if not isinstance(record, dict):
                raise ParseError('a record has to be an object', line_number)
            yield line_number, record


def _check_fields(record: dict, line_number: int, allowed: set, required: Sequence[str]) -> None:
    for name in required:
        if name not in record:
            raise ParseError('required field is missing', line_number, name)
    unknown = sorted(set(record) - allowed)
    if unknown:
        raise ParseError('unknown field', line_number, unknown[0])


def _load(filepath: str, allowed: set, required: Sequence[str], build: Callable[[dict], T]) -> List[T]:
    items, seen = [], set()
    for line_number, record in _records(filepath):
        _check_fields(record, line_number, allowed, required)
        if not isinstance(record['instance_id'], str):
            raise ParseError('instance_id has to be a string', line_number, 'instance_id')
        if record['instance_id'] in seen:
            raise ParseError(f"duplicate instance_id {record['instance_id']!r}", line_number, 'instance_id')
        seen.add(record['instance_id'])
        try:
            items.append(build(record))
        except DataError as error:
            raise ParseError(error.message, line_number, error.field)
        except (TypeError, ValueError) as error:
            raise ParseError(str(error), line_number)
    return items


def read_dataset(filepath: str) -> List[RankingInstance]:
    """Loads ranking instances from a JSONL file, one instance per line

    Args:
        filepath (str): path of the dataset file

    Raises:
        ParseError: raised with line number and field for malformed lines, missing or unknown fields and invalid values

    Returns:
        List[RankingInstance]: instances in file order, empty for an empty file
    """
    instances = _load(filepath, INSTANCE_FIELDS, INSTANCE_REQUIRED, lambda record: RankingInstance(**record))
    logger.info('Loaded %d instances from %s', len(instances), filepath)
    return instances


def read_samples(filepath: str) -> List[PreferenceSample]:
    def build(record: dict) -> PreferenceSample:
        sample = PreferenceSample(record['instance_id'], record['head'], record['tail'])
        if 'kappa' in record and record['kappa'] != sample.kappa:
            raise DataError('kappa does not match the head length', 'kappa')
        return sample
    return _load(filepath, SAMPLE_FIELDS, SAMPLE_REQUIRED, build)


def read_policy(filepath: str) -> PolicyTable:
    """Loads a policy checkpoint written by export_data.write_policy"""
    rows: Dict[str, list] = {}

    def build(record: dict) -> None:
        if not isinstance(record['params'], list):
            raise DataError('params has to be an array of numbers', 'params')
        rows[record['instance_id']] = record['params']
    _load(filepath, POLICY_FIELDS, ('instance_id', 'params'), build)
    try:
        return PolicyTable(rows)
    except DataError as error:
        raise ParseError(error.message, field=error.field)


def attach_reference_logits(instances: Sequence[RankingInstance], reference: PolicyTable, overwrite: bool = False) -> List[RankingInstance]:
    """Fills missing ref_logits with the reference table's pre-softmax parameters

    Args:
        instances (Sequence[RankingInstance]): dataset
        reference (PolicyTable): table covering the instances without ref_logits
        overwrite (bool, optional): replace existing ref_logits too. Defaults to False.

    Raises:
        MissingParameterError: raised if the table lacks a row that is needed

    Returns:
        List[RankingInstance]: instances carrying ref_logits
    """
    attached = []
    for instance in instances:
        if instance.ref_logits is None or overwrite:
            instance = instance.with_ref_logits(reference.row_for(instance))
        attached.append(instance)
    return attached
