import json
import logging
import os
from typing import Iterable, Sequence

import pandas as pd

from rankalign.alignment.trainer import TrainTrace
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.ranking_instance import RankingInstance

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def _write_records(records: Iterable[dict], filepath: str) -> None:
    # repr of a float is its shortest round-trip representation, so reading back is exact
    with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, allow_nan=False))
            f.write('\n')


def write_dataset(instances: Sequence[RankingInstance], filepath: str) -> None:
    """Writes one JSON record per instance; optional fields only where the instance carries them"""
    _write_records((instance.to_record() for instance in instances), filepath)
    logger.info('Wrote %d instances to %s', len(instances), filepath)


def write_samples(samples: Sequence[PreferenceSample], filepath: str) -> None:
    _write_records((sample.to_record() for sample in samples), filepath)


def write_policy(table: PolicyTable, filepath: str) -> None:
    _write_records(table.to_records(), filepath)


def _write_frame(frame: pd.DataFrame, filepath: str) -> None:
    frame.to_csv(filepath, index=False, lineterminator='\n')


def write_trace(trace: TrainTrace, filepath: str) -> None:
    """step,loss,reward_top1,lr,t1,t2,t3"""
    _write_frame(trace.step_frame(), filepath)


def write_metrics(trace: TrainTrace, filepath: str) -> None:
    """step,split,metric,value"""
    _write_frame(trace.metric_frame(), filepath)


def write_table(frame: pd.DataFrame, filepath: str) -> None:
    _write_frame(frame, filepath)


def write_manifest(manifest: dict, directory: str) -> str:
    """Writes the fully resolved run configuration as manifest.json into directory and returns its path"""
    os.makedirs(directory, exist_ok=True)
    filepath = os.path.join(directory, MANIFEST_NAME)
    with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    return filepath
