import json
import math
from collections import Counter

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from rankalign.alignment.adaptive_k import AdaptiveKConfig, build_preference_samples
from rankalign.data_preparation.export_data import write_dataset, write_manifest, write_policy, write_samples
from rankalign.data_preparation.ingest_interactions import InteractionLog, ingest_interactions
from rankalign.data_preparation.load_data import attach_reference_logits, read_dataset, read_policy, read_samples
from rankalign.data_preparation.synthetic import SyntheticConfig, assign_splits, gen_synthetic, grade, sample_pl_ranking
from rankalign.utils.exceptions import ConfigurationError, DataError, ParseError
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.ranking_instance import RankingInstance
from rankalign.utils.seed import Seed


class TestSynthetic:

    def test_deterministic(self):
        config = SyntheticConfig(n_queries=20, m_candidates=6, seed=3)
        assert gen_synthetic(config) == gen_synthetic(config)

    def test_parallel_generation_matches_sequential(self):
        config = SyntheticConfig(n_queries=20, m_candidates=6, seed=3)
        assert gen_synthetic(config, workers=4) == gen_synthetic(config)

    def test_seeds_differ(self):
        first = gen_synthetic(SyntheticConfig(n_queries=5, seed=1))
        second = gen_synthetic(SyntheticConfig(n_queries=5, seed=2))
        assert first != second

    def test_split_sizes(self):
        instances = gen_synthetic(SyntheticConfig(n_queries=100, m_candidates=4))
        assert Counter(i.split for i in instances) == {'train': 80, 'valid': 10, 'test': 10}

    def test_instances_carry_scores_and_logits(self, small_dataset):
        instance = small_dataset[0]
        assert instance.m == 8
        assert instance.scores is not None and instance.ref_logits is not None
        assert instance.instance_id == 'q000000'
        assert instance.labels == tuple(grade(instance.scores, SyntheticConfig().cutpoints))

    def test_zero_scale_gives_equal_labels(self):
        instances = gen_synthetic(SyntheticConfig(n_queries=10, m_candidates=5, score_scale=0.0))
        assert all(len(set(i.labels)) == 1 for i in instances)
        assert all(set(i.scores) == {0.0} for i in instances)

    def test_grade_boundaries(self):
        assert grade([-1.0, 0.0, 0.5, 1.0, 2.0], [0.0, 1.0, 1.5]) == [0, 1, 1, 2, 3]

    def test_assign_splits_is_a_permutation_of_counts(self):
        splits = assign_splits(30, (8, 1, 1), Seed(0))
        assert Counter(splits) == {'train': 24, 'valid': 3, 'test': 3}

    @pytest.mark.parametrize('kwargs', [
        {'n_queries': 0},
        {'m_candidates': 1},
        {'score_scale': -1.0},
        {'label_thresholds': (1.0, 0.0, 2.0)},
        {'split_ratios': (1, 1)},
    ])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigurationError):
            SyntheticConfig(**kwargs)


class TestSamplePLRanking:

    def _first_counts(self, scores, n=10000):
        counts = np.zeros(len(scores))
        for i in range(n):
            counts[sample_pl_ranking(scores, Seed(17).derive(i))[0]] += 1
        return counts

    def test_returns_permutation(self):
        assert sorted(sample_pl_ranking([0.3, 1.0, -2.0, 0.0], Seed(1))) == [0, 1, 2, 3]

    def test_equal_scores_are_uniform(self):
        counts = self._first_counts([0.0, 0.0, 0.0])
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_bradley_terry_frequency(self):
        counts = self._first_counts([math.log(4), 0.0])
        assert abs(counts[0] / 10000 - 0.8) <= 3 * math.sqrt(0.8 * 0.2 / 10000)

    def test_dominant_score_always_first(self):
        assert all(sample_pl_ranking([60.0, 0.0, 0.0], Seed(0).derive(i))[0] == 0 for i in range(200))


def _log_frame(n_users=3, n_items=11, catalog=40):
    rows = []
    for u in range(n_users):
        for t in range(n_items):
            rows.append({'user': f'user_{u:04d}', 'item': f'i{(7 * u + 3 * t) % catalog:03d}', 'timestamp': 100 * t + u})
    return pd.DataFrame(rows)


class TestIngest:

    def test_candidate_sets(self):
        log = InteractionLog(_log_frame())
        instances = ingest_interactions(log, n_negatives=19, seed=Seed(2))
        assert len(instances) == 3 * 10
        for instance in instances:
            assert instance.m == 20
            assert sorted(instance.labels) == [0] * 19 + [3]
        first = instances[0]
        assert first.instance_id == 'user_0000:1'
        assert first.context == ('i000',)
        assert first.candidate_ids[first.labels.index(3)] == 'i003'

    def test_negatives_exclude_history(self):
        log = InteractionLog(_log_frame())
        history = log.sequences()
        for instance in ingest_interactions(log, seed=Seed(2)):
            user = instance.instance_id.split(':')[0]
            negatives = [c for c, label in zip(instance.candidate_ids, instance.labels) if label == 0]
            assert not set(negatives) & set(history[user])

    def test_chronological_splits(self):
        instances = ingest_interactions(InteractionLog(_log_frame()), seed=Seed(2))
        user_splits = [i.split for i in instances if i.instance_id.startswith('user_0001:')]
        assert user_splits == ['train'] * 8 + ['valid', 'test']

    def test_deterministic(self):
        log = InteractionLog(_log_frame())
        assert ingest_interactions(log, seed=Seed(5)) == ingest_interactions(log, seed=Seed(5))

    def test_out_of_order_log_is_sorted(self):
        frame = _log_frame()
        shuffled = frame.sample(frac=1.0, random_state=0)
        assert ingest_interactions(InteractionLog(shuffled), seed=Seed(1)) == ingest_interactions(InteractionLog(frame), seed=Seed(1))

    def test_small_catalog(self):
        with pytest.raises(DataError):
            ingest_interactions(InteractionLog(_log_frame(catalog=12)), n_negatives=19)

    def test_single_interaction_user(self):
        frame = pd.concat([_log_frame(), pd.DataFrame([{'user': 'lonely', 'item': 'i001', 'timestamp': 0}])])
        with pytest.raises(DataError):
            ingest_interactions(InteractionLog(frame))

    def test_csv_missing_column(self, tmp_path):
        path = tmp_path / 'log.csv'
        path.write_text('user,item\nu,i\n')
        with pytest.raises(ParseError) as error:
            InteractionLog.from_csv(str(path))
        assert error.value.field == 'timestamp'

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / 'log.csv'
        _log_frame().to_csv(path, index=False)
        assert InteractionLog.from_csv(str(path)).sequences() == InteractionLog(_log_frame()).sequences()


class TestFiles:

    def test_dataset_round_trip(self, tmp_path, small_dataset):
        path = str(tmp_path / 'data.jsonl')
        write_dataset(small_dataset, path)
        assert read_dataset(path) == small_dataset

    def test_samples_and_policy_round_trip(self, tmp_path, small_dataset):
        samples = build_preference_samples(small_dataset, AdaptiveKConfig())
        write_samples(samples, str(tmp_path / 'samples.jsonl'))
        assert read_samples(str(tmp_path / 'samples.jsonl')) == samples
        table = PolicyTable.from_instances(small_dataset)
        write_policy(table, str(tmp_path / 'policy.jsonl'))
        assert read_policy(str(tmp_path / 'policy.jsonl')) == table

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'empty.jsonl'
        path.write_text('')
        assert read_dataset(str(path)) == []

    def test_missing_labels_names_the_line(self, tmp_path):
        path = tmp_path / 'data.jsonl'
        good = {'instance_id': 'a', 'candidate_ids': ['x', 'y'], 'labels': [1, 0]}
        bad = {'instance_id': 'b', 'candidate_ids': ['x', 'y']}
        path.write_text(json.dumps(good) + '\n' + json.dumps(bad) + '\n')
        with pytest.raises(ParseError) as error:
            read_dataset(str(path))
        assert error.value.line_number == 2
        assert error.value.field == 'labels'

    @pytest.mark.parametrize('record, field', [
        ({'instance_id': 'a', 'candidate_ids': ['x', 'y'], 'labels': [1, 0], 'colour': 'red'}, 'colour'),
        ({'instance_id': 'a', 'candidate_ids': ['x', 'x'], 'labels': [1, 0]}, 'candidate_ids'),
        ({'instance_id': 'a', 'candidate_ids': ['x', 'y'], 'labels': [1, 7]}, 'labels'),
        ({'instance_id': 3, 'candidate_ids': ['x', 'y'], 'labels': [1, 0]}, 'instance_id'),
    ])
    def test_invalid_records_name_the_field(self, tmp_path, record, field):
        path = tmp_path / 'data.jsonl'
        path.write_text(json.dumps(record) + '\n')
        with pytest.raises(ParseError) as error:
            read_dataset(str(path))
        assert error.value.field == field
        assert error.value.line_number == 1

    def test_malformed_json(self, tmp_path):
        path = tmp_path / 'data.jsonl'
        path.write_text('{"instance_id": \n')
        with pytest.raises(ParseError):
            read_dataset(str(path))

    def test_duplicate_instance_ids(self, tmp_path):
        path = tmp_path / 'data.jsonl'
        record = json.dumps({'instance_id': 'a', 'candidate_ids': ['x', 'y'], 'labels': [1, 0]})
        path.write_text(record + '\n' + record + '\n')
        with pytest.raises(ParseError) as error:
            read_dataset(str(path))
        assert error.value.line_number == 2

    def test_kappa_mismatch(self, tmp_path):
        path = tmp_path / 'samples.jsonl'
        path.write_text(json.dumps({'instance_id': 'a', 'head': [0], 'tail': [1], 'kappa': 2}) + '\n')
        with pytest.raises(ParseError):
            read_samples(str(path))

    def test_attach_reference_logits(self):
        instances = [RankingInstance('a', ['x', 'y'], [1, 0]), RankingInstance('b', ['x', 'y'], [1, 0], ref_logits=[5.0, 6.0])]
        attached = attach_reference_logits(instances, PolicyTable({'a': [1.0, 2.0], 'b': [3.0, 4.0]}))
        assert attached[0].ref_logits == (1.0, 2.0)
        assert attached[1].ref_logits == (5.0, 6.0)

    def test_manifest_is_sorted_json(self, tmp_path):
        path = write_manifest({'b': 1, 'a': {'z': 2, 'y': 3}}, str(tmp_path / 'run'))
        with open(path) as f:
            text = f.read()
        assert json.loads(text) == {'a': {'y': 3, 'z': 2}, 'b': 1}
        assert text.index('"a"') < text.index('"b"')
