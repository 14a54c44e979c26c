import numpy as np
import pandas as pd
import pytest

from rankalign.alignment.ablation import ablate, expand_grid, noise_curve
from rankalign.alignment.adaptive_k import AdaptiveKConfig, build_preference_samples
from rankalign.alignment.evaluation import evaluate
from rankalign.alignment.trainer import TrainConfig, train
from rankalign.data_preparation.synthetic import SyntheticConfig, gen_synthetic
from rankalign.utils.exceptions import ConfigurationError
from rankalign.utils.policy_table import PolicyTable

BASE = TrainConfig(epochs=1, batch_size=8, record_timings=False)


@pytest.fixture(scope='module')
def reference(small_dataset):
    return PolicyTable.from_instances(small_dataset)


def test_expand_grid_order():
    cells = expand_grid({'beta': [0.5, 1.0], 'curriculum': ['ascending', 'random']})
    assert cells == [
        {'beta': 0.5, 'curriculum': 'ascending'},
        {'beta': 0.5, 'curriculum': 'random'},
        {'beta': 1.0, 'curriculum': 'ascending'},
        {'beta': 1.0, 'curriculum': 'random'},
    ]


def test_empty_grid_is_the_base_config():
    assert expand_grid({}) == [{}]


@pytest.mark.parametrize('grid', [{'learning_rate': [0.1]}, {'beta': []}, {'loss_kind': 'kpo'}])
def test_invalid_grid(grid):
    with pytest.raises(ConfigurationError):
        expand_grid(grid)


def test_single_cell_matches_a_plain_run(small_dataset, reference):
    results = ablate(small_dataset, reference, {'seed': [3]}, train_config=BASE, progress=False)
    samples = build_preference_samples(small_dataset, AdaptiveKConfig())
    _, trace = train(small_dataset, samples, reference, TrainConfig(epochs=1, batch_size=8, record_timings=False, seed=3))
    assert len(results) == 1
    assert results.loc[0, 'selected_step'] == trace.selected_step
    assert results.loc[0, 'test_N@5'] == trace.metric(trace.selected_step, 'test', 'N@5')
    assert results.loc[0, 'final_reward_top1'] == trace.steps[-1]['reward_top1']


def test_seed_cells_share_configuration(small_dataset, reference):
    results = ablate(small_dataset, reference, {'curriculum': ['random'], 'seed': [1, 2]}, train_config=BASE, progress=False)
    assert results['curriculum'].tolist() == ['random', 'random']
    assert results['mean_k'].nunique() == 1


def test_fixed_k_column(small_dataset, reference):
    results = ablate(small_dataset, reference, {'fixed_k': [1, 3, 5, 7]}, train_config=BASE, progress=False)
    assert results['mean_k'].tolist() == [1.0, 3.0, 5.0, 7.0]


def test_parallel_cells_match_sequential(small_dataset, reference):
    grid = {'loss_kind': ['kpo', 'sdpo'], 'beta': [0.5, 1.0]}
    sequential = ablate(small_dataset, reference, grid, train_config=BASE, progress=False)
    parallel = ablate(small_dataset, reference, grid, train_config=BASE, workers=3, progress=False)
    pd.testing.assert_frame_equal(sequential, parallel)


def test_noise_curve(small_dataset, reference):
    results = ablate(small_dataset, reference, {'n_swaps': [0, 2]}, train_config=BASE, progress=False)
    curve = noise_curve(results)
    assert curve['n_swaps'].tolist() == [0, 2]
    assert curve['train_N@5'].between(0, 1).all()
    assert noise_curve(results, 'test_N@5')['test_N@5'].between(0, 1).all()


def test_noise_curve_needs_swaps():
    with pytest.raises(ConfigurationError):
        noise_curve(pd.DataFrame({'beta': [1.0], 'test_N@5': [0.5]}))


def test_rows_carry_train_metrics(small_dataset, reference):
    results = ablate(small_dataset, reference, {'seed': [3]}, train_config=BASE, progress=False)
    assert {'train_N@5', 'valid_N@5', 'test_N@5', 'train_HR@1'} <= set(results.columns)


def test_kpo_cut_runs_next_to_kpo_on_adaptive_k():
    data = gen_synthetic(SyntheticConfig())
    results = ablate(data, PolicyTable.from_instances(data), {'loss_kind': ['kpo', 'kpo_cut']}, progress=False)
    assert results['loss_kind'].tolist() == ['kpo', 'kpo_cut']
    assert results['train_N@5'].notna().all()


@pytest.fixture(scope='module')
def seeded_datasets():
    datasets = []
    for seed in (0, 1, 2):
        data = gen_synthetic(SyntheticConfig(n_queries=200, m_candidates=20, seed=seed))
        datasets.append((data, PolicyTable.from_instances(data)))
    return datasets


ON_TRAIN = TrainConfig(epochs=5, batch_size=16, select_split='train', record_timings=False)


def _seed_mean(seeded_datasets, grid, key):
    frames = [ablate(data, reference, grid, train_config=ON_TRAIN, progress=False) for data, reference in seeded_datasets]
    return pd.concat(frames).groupby(key)['train_N@5'].mean()


@pytest.mark.slow
def test_kpo_leads_the_listwise_and_pairwise_baselines(seeded_datasets):
    means = _seed_mean(seeded_datasets, {'loss_kind': ['kpo', 'sdpo', 'dpo', 'kpo_cut']}, 'loss_kind')
    for baseline in ('sdpo', 'dpo', 'kpo_cut'):
        assert means['kpo'] >= means[baseline] - 0.005


@pytest.mark.slow
def test_every_curriculum_improves_on_the_reference(seeded_datasets):
    means = _seed_mean(seeded_datasets, {'curriculum': ['ascending', 'random', 'descending']}, 'curriculum')
    baseline = np.mean([evaluate(reference, data, 'train').metrics['N@5'] for data, reference in seeded_datasets])
    for curriculum in ('ascending', 'random', 'descending'):
        assert means[curriculum] > baseline
