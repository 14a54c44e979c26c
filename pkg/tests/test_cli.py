import json
import logging

import pandas as pd
import pytest

from rankalign.cli import main

CONFIG = {
    'synthetic': {'n_queries': 40, 'm_candidates': 6, 'seed': 4},
    'train': {'epochs': 1, 'batch_size': 8, 'sft_epochs': 2},
}


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def workspace(tmp_path):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps(CONFIG))
    data, ref = tmp_path / 'data.jsonl', tmp_path / 'ref.jsonl'
    assert main(['--quiet', 'gen-data', '--config', str(config), '--out', str(data)]) == 0
    assert main(['--quiet', 'sft', '--data', str(data), '--out', str(ref), '--config', str(config)]) == 0
    return tmp_path, str(config), str(data), str(ref)


def _fields(line):
    return dict(token.split('=', 1) for token in line.split())


def test_train_then_eval(workspace, capsys):
    tmp_path, config, data, ref = workspace
    run = tmp_path / 'run'
    assert main(['--quiet', 'train', '--data', data, '--ref', ref, '--loss', 'kpo', '--config', config, '--out', str(run)]) == 0
    for name in ('trace.csv', 'metrics.csv', 'checkpoint.jsonl', 'manifest.json'):
        assert (run / name).exists()
    manifest = json.loads((run / 'manifest.json').read_text())
    assert manifest['train']['loss_kind'] == 'kpo'
    assert manifest['train']['epochs'] == 1
    assert list(pd.read_csv(run / 'trace.csv').columns) == ['step', 'loss', 'reward_top1', 'lr', 't1', 't2', 't3']
    metrics = pd.read_csv(run / 'metrics.csv')
    assert ((metrics['split'] == 'test') & (metrics['metric'] == 'N@5')).any()

    capsys.readouterr()
    assert main(['--quiet', 'eval', '--data', data, '--policy', str(run / 'checkpoint.jsonl'), '--split', 'test']) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == 'step,split,metric,value'
    assert any(line.startswith('0,test,N@5,') for line in out.splitlines())


def test_train_is_reproducible(workspace):
    tmp_path, config, data, ref = workspace
    outputs = []
    for name in ('a', 'b'):
        run = tmp_path / name
        assert main(['--quiet', 'train', '--data', data, '--ref', ref, '--config', config, '--out', str(run), '--no-timings']) == 0
        outputs.append([(run / f).read_bytes() for f in ('trace.csv', 'metrics.csv', 'checkpoint.jsonl')])
    assert outputs[0] == outputs[1]


def test_derive_k_without_swaps_is_identical(workspace):
    tmp_path, _, data, _ = workspace
    plain, zero = tmp_path / 'plain.jsonl', tmp_path / 'zero.jsonl'
    assert main(['--quiet', 'derive-k', '--data', data, '--out', str(plain)]) == 0
    assert main(['--quiet', 'derive-k', '--data', data, '--out', str(zero), '--swaps', '0', '--seed', '5']) == 0
    assert plain.read_bytes() == zero.read_bytes()


def test_derive_k_fixed(workspace):
    tmp_path, _, data, _ = workspace
    out = tmp_path / 'fixed.jsonl'
    assert main(['--quiet', 'derive-k', '--data', data, '--out', str(out), '--fixed-k', '3']) == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert {record['kappa'] for record in records} == {3}


def test_theory_difference_is_non_negative(workspace, capsys):
    _, _, data, ref = workspace
    capsys.readouterr()
    assert main(['--quiet', 'theory', '--data', data, '--ref', ref, '--beta', '1.0', '--method', 'both', '--k', '3']) == 0
    fields = _fields(capsys.readouterr().out)
    assert fields['instances'] == '40'
    assert float(fields['difference']) >= 0
    assert float(fields['kpo']) - float(fields['sdpo']) == pytest.approx(float(fields['difference']), abs=1e-5)


def test_ingest(tmp_path):
    log = tmp_path / 'log.csv'
    rows = ['user,item,timestamp'] + [f'u{u},i{(5 * u + t) % 30},{t}' for u in range(3) for t in range(6)]
    log.write_text('\n'.join(rows) + '\n')
    out = tmp_path / 'data.jsonl'
    assert main(['--quiet', 'ingest', '--log', str(log), '--out', str(out), '--negatives', '5']) == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 3 * 5
    assert all(len(record['candidate_ids']) == 6 for record in records)


def test_ablate(workspace):
    tmp_path, config, data, ref = workspace
    grid = tmp_path / 'grid.json'
    grid.write_text(json.dumps({'n_swaps': [0, 1], 'loss_kind': ['kpo', 'sdpo']}))
    out = tmp_path / 'ablation'
    assert main(['--quiet', 'ablate', '--grid', str(grid), '--config', config, '--data', data, '--ref', ref,
                 '--out', str(out), '--no-timings']) == 0
    results = pd.read_csv(out / 'results.csv')
    assert len(results) == 4
    assert list(pd.read_csv(out / 'noise_curve.csv')['n_swaps']) == [0, 1]
    assert json.loads((out / 'manifest.json').read_text())['grid'] == {'n_swaps': [0, 1], 'loss_kind': ['kpo', 'sdpo']}


def test_ablate_curve_metric(workspace):
    tmp_path, config, data, ref = workspace
    grid = tmp_path / 'grid.json'
    grid.write_text(json.dumps({'n_swaps': [0, 1]}))
    out = tmp_path / 'curve'
    assert main(['--quiet', 'ablate', '--grid', str(grid), '--config', config, '--data', data, '--ref', ref,
                 '--out', str(out), '--no-timings', '--curve-metric', 'test_N@5']) == 0
    assert list(pd.read_csv(out / 'noise_curve.csv').columns) == ['n_swaps', 'test_N@5']
    assert 'train_N@5' in pd.read_csv(out / 'results.csv').columns


@pytest.mark.parametrize('argv, kind', [
    ([], 'UsageError'),
    (['train', '--data', 'x'], 'UsageError'),
    (['eval', '--data', 'missing.jsonl', '--policy', 'missing.jsonl'], 'FileNotFoundError'),
    (['gen-data', '--out', 'x', '--queries', 'many'], 'UsageError'),
])
def test_usage_errors_exit_with_2(tmp_path, capsys, argv, kind):
    assert main(argv) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1].startswith(f'error kind={kind} message=')


def test_invalid_loss_kind(workspace, capsys):
    tmp_path, _, data, ref = workspace
    assert main(['train', '--data', data, '--ref', ref, '--out', str(tmp_path / 'r'), '--loss', 'ipo']) == 2


def test_malformed_dataset(tmp_path, capsys):
    data = tmp_path / 'bad.jsonl'
    data.write_text('{"instance_id": "a"}\n')
    assert main(['--quiet', 'sft', '--data', str(data), '--out', str(tmp_path / 'ref.jsonl')]) == 2
    assert 'kind=ParseError' in capsys.readouterr().err


def test_runtime_failure_exits_with_1(workspace, capsys):
    _, _, data, ref = workspace
    capsys.readouterr()
    assert main(['--quiet', 'theory', '--data', data, '--ref', ref, '--k', '0']) == 1
    assert 'kind=DomainError' in capsys.readouterr().err
