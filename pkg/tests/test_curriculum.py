import pytest

from rankalign.alignment.curriculum import CurriculumScheduler, batch_by_k, order_dataset
from rankalign.utils.exceptions import ConfigurationError, DataError
from rankalign.utils.preference_sample import PreferenceSample
from rankalign.utils.seed import Seed


def _samples(kappas, m=10):
    return [PreferenceSample(f's{i}', range(k), range(k, m)) for i, k in enumerate(kappas)]


@pytest.mark.parametrize('mode, expected', [('ascending', [1, 3, 2, 0]), ('descending', [0, 2, 1, 3])])
def test_order_dataset_is_stable(mode, expected):
    assert order_dataset(_samples([3, 1, 2, 1]), mode, Seed(0)) == expected


def test_random_order_is_deterministic():
    samples = _samples([3, 1, 2, 1, 4, 4, 2])
    first = order_dataset(samples, 'random', Seed(8))
    assert first == order_dataset(samples, 'random', Seed(8))
    assert sorted(first) == list(range(7))


def test_order_empty_dataset():
    with pytest.raises(DataError):
        order_dataset([], 'ascending', Seed(0))


def test_shuffle_within_blocks_keeps_k_order():
    samples = _samples([2, 1, 2, 1, 2, 1, 3])
    order = order_dataset(samples, 'ascending', Seed(1), shuffle_within_blocks=True)
    assert [samples[i].kappa for i in order] == [1, 1, 1, 2, 2, 2, 3]
    assert sorted(order) == list(range(7))


@pytest.mark.parametrize('kappas, batch_size, expected', [
    ([1, 1, 1, 2, 2], 2, [[0, 1], [2], [3, 4]]),
    ([2, 2, 2], 10, [[0, 1, 2]]),
    ([1, 2], 2, [[0], [1]]),
])
def test_batch_by_k(kappas, batch_size, expected):
    assert batch_by_k(_samples(kappas), batch_size) == expected


def test_batch_by_k_needs_positive_batch_size():
    with pytest.raises(ConfigurationError):
        batch_by_k(_samples([1]), 0)


KAPPAS = [3, 1, 2, 1, 5, 2, 2, 1, 3, 3, 4, 1, 2]


@pytest.mark.parametrize('mode', ['ascending', 'descending', 'random'])
@pytest.mark.parametrize('shuffle', [False, True])
def test_scheduler_batches_are_homogeneous_partitions(mode, shuffle):
    samples = _samples(KAPPAS)
    scheduler = CurriculumScheduler(samples, mode, 2, Seed(5), shuffle_within_blocks=shuffle)
    for epoch in range(3):
        batches = scheduler.batches_for_epoch(epoch)
        assert all(len({samples[i].kappa for i in batch}) == 1 for batch in batches)
        assert all(1 <= len(batch) <= 2 for batch in batches)
        assert sorted(i for batch in batches for i in batch) == list(range(len(samples)))


@pytest.mark.parametrize('mode, sign', [('ascending', 1), ('descending', -1)])
def test_scheduler_is_monotone_in_k(mode, sign):
    samples = _samples(KAPPAS)
    batches = CurriculumScheduler(samples, mode, 2, Seed(5)).batches_for_epoch(0)
    kappas = [sign * samples[batch[0]].kappa for batch in batches]
    assert kappas == sorted(kappas)


def test_every_mode_has_the_same_steps_per_epoch():
    samples = _samples(KAPPAS)
    steps = {CurriculumScheduler(samples, mode, 2, Seed(5)).steps_per_epoch() for mode in ('ascending', 'descending', 'random')}
    assert len(steps) == 1


def test_sorted_modes_repeat_across_epochs():
    scheduler = CurriculumScheduler(_samples(KAPPAS), 'ascending', 3, Seed(5))
    assert scheduler.batches_for_epoch(0) == scheduler.batches_for_epoch(4)


def test_random_mode_reshuffles_per_epoch_deterministically():
    samples = _samples(KAPPAS * 4)
    first = CurriculumScheduler(samples, 'random', 2, Seed(5))
    second = CurriculumScheduler(samples, 'random', 2, Seed(5))
    assert first.batches_for_epoch(1) == second.batches_for_epoch(1)
    assert first.batches_for_epoch(0) != first.batches_for_epoch(1)
