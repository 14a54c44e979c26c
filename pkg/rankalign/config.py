"""
Run configuration: one JSON document with a section per stage. Precedence is
command-line flags > config document > the defaults in rankalign.defaults.
"""
import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

from rankalign import defaults
from rankalign.alignment.adaptive_k import AdaptiveKConfig
from rankalign.alignment.losses import LossConfig
from rankalign.alignment.trainer import TrainConfig
from rankalign.data_preparation.synthetic import SyntheticConfig
from rankalign.utils.exceptions import ConfigurationError, ParseError


@dataclass(frozen=True)
class PathsConfig:
    data: Optional[str] = None
    ref: Optional[str] = None
    samples: Optional[str] = None
    out: Optional[str] = None


SECTIONS = {
    'synthetic': SyntheticConfig,
    'adaptive_k': AdaptiveKConfig,
    'loss': LossConfig,
    'train': TrainConfig,
    'paths': PathsConfig,
}


def _section_from_dict(name: str, values: dict):
    cls = SECTIONS[name]
    if not isinstance(values, dict):
        raise ConfigurationError(f'config section {name!r} has to be an object')
    allowed = {f.name for f in dataclasses.fields(cls)}
    for key in values:
        if key not in allowed:
            raise ConfigurationError(f'unknown config key {name}.{key}')
    values = dict(values)
    if name == 'adaptive_k':
        if values.get('tau_mode') == 'absolute' and 'tau_value' not in values:
            values['tau_value'] = defaults.tau_absolute
        if values.get('frozen_tau') is not None:
            raise ConfigurationError('adaptive_k.frozen_tau is resolved from the data and cannot be configured')
    if name == 'synthetic':
        for key in ('label_thresholds', 'split_ratios'):
            if values.get(key) is not None:
                values[key] = tuple(values[key])
    try:
        return cls(**values)
    except TypeError as error:
        raise ConfigurationError(f'config section {name!r}: {error}')


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of a run

    Attributes:
        synthetic (SyntheticConfig): synthetic data recipe
        adaptive_k (AdaptiveKConfig): query-adaptive K derivation
        loss (LossConfig): loss hyperparameters
        train (TrainConfig): SFT and alignment schedule
        paths (PathsConfig): default input and output paths
        n_swaps (int): logit swaps injected before deriving K
        fixed_k (Optional[int]): fixed K for every instance instead of the adaptive K
    """
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    adaptive_k: AdaptiveKConfig = field(default_factory=AdaptiveKConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    n_swaps: int = 0
    fixed_k: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n_swaps < 0:
            raise ConfigurationError('n_swaps has to be non-negative')
        if self.fixed_k is not None and self.fixed_k < 1:
            raise ConfigurationError('fixed_k has to be at least 1')

    @property
    def k_config(self) -> AdaptiveKConfig:
        return AdaptiveKConfig.fixed(self.fixed_k) if self.fixed_k is not None else self.adaptive_k

    @classmethod
    def from_dict(cls, document: dict) -> 'RunConfig':
        """Builds a RunConfig from a config document, keys left out keep their defaults

        Raises:
            ConfigurationError: raised for unknown keys at any level and for invalid values
        """
        if not isinstance(document, dict):
            raise ConfigurationError('a config document has to be an object')
        values = {}
        for key, value in document.items():
            if key in SECTIONS:
                values[key] = _section_from_dict(key, value)
            elif key in ('n_swaps', 'fixed_k'):
                values[key] = value
            else:
                raise ConfigurationError(f'unknown config key {key}')
        return cls(**values)

    def to_dict(self) -> dict:
        return {
            'synthetic': self.synthetic.to_dict(),
            'adaptive_k': self.adaptive_k.to_dict(),
            'loss': self.loss.to_dict(),
            'train': self.train.to_dict(),
            'paths': dataclasses.asdict(self.paths),
            'n_swaps': self.n_swaps,
            'fixed_k': self.fixed_k,
        }

    def with_seed(self, seed: int) -> 'RunConfig':
        """Copy with every section seeded by seed"""
        return dataclasses.replace(self,
                                   synthetic=dataclasses.replace(self.synthetic, seed=seed),
                                   train=dataclasses.replace(self.train, seed=seed))


def load_run_config(filepath: Optional[str]) -> RunConfig:
    """Reads a JSON config document, the defaults if filepath is None

    Raises:
        ParseError: raised if the file is not valid JSON
        ConfigurationError: raised for unknown keys or invalid values
    """
    if filepath is None:
        return RunConfig()
    with open(filepath, encoding='utf-8') as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as error:
            raise ParseError(f'malformed config: {error.msg}', error.lineno)
    return RunConfig.from_dict(document)
