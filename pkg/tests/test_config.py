import json

import pytest

from rankalign.alignment.adaptive_k import AdaptiveKConfig
from rankalign.config import RunConfig, load_run_config
from rankalign.utils.exceptions import ConfigurationError, ParseError


def test_defaults_when_no_file():
    assert load_run_config(None) == RunConfig()


def test_round_trip_through_dict():
    config = RunConfig.from_dict({'train': {'epochs': 2, 'loss_kind': 'sdpo'}, 'synthetic': {'split_ratios': [6, 2, 2]}, 'n_swaps': 1})
    assert RunConfig.from_dict(config.to_dict()) == config
    assert config.synthetic.split_ratios == (6, 2, 2)


def test_materialized_defaults_are_json():
    document = RunConfig().to_dict()
    assert set(document) == {'synthetic', 'adaptive_k', 'loss', 'train', 'paths', 'n_swaps', 'fixed_k'}
    assert json.loads(json.dumps(document)) == document


@pytest.mark.parametrize('document', [
    {'colour': 1},
    {'train': {'epochz': 2}},
    {'train': {'loss_kind': 'ipo'}},
    {'loss': []},
    {'adaptive_k': {'frozen_tau': 3.0}},
    {'n_swaps': -1},
    {'fixed_k': 0},
])
def test_invalid_documents(document):
    with pytest.raises(ConfigurationError):
        RunConfig.from_dict(document)


def test_absolute_tau_defaults_to_logit_threshold():
    config = RunConfig.from_dict({'adaptive_k': {'tau_mode': 'absolute'}})
    assert config.adaptive_k.threshold == 24.0


def test_fixed_k_overrides_adaptive_k():
    assert RunConfig(fixed_k=3).k_config == AdaptiveKConfig.fixed(3)
    assert RunConfig().k_config == AdaptiveKConfig()


def test_with_seed():
    config = RunConfig().with_seed(9)
    assert config.synthetic.seed == 9 and config.train.seed == 9


def test_malformed_file(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('{"train": ')
    with pytest.raises(ParseError):
        load_run_config(str(path))


def test_file(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps({'loss': {'beta': 0.5}}))
    assert load_run_config(str(path)).loss.beta == 0.5
