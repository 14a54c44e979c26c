import dataclasses
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from rankalign import defaults
from rankalign.alignment.adaptive_k import AdaptiveKConfig, build_preference_samples
from rankalign.alignment.losses import LossConfig
from rankalign.alignment.trainer import TrainConfig, train
from rankalign.utils.exceptions import ConfigurationError
from rankalign.utils.policy_table import PolicyTable
from rankalign.utils.ranking_instance import RankingInstance
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)

GRID_KEYS = ('beta', 'tau', 'curriculum', 'n_swaps', 'fixed_k', 'loss_kind', 'seed')
REPORTED_SPLITS = ('train', 'valid', 'test')


def expand_grid(grid: Dict[str, Sequence]) -> List[dict]:
    """Cartesian product of the grid values, keys in the order given

    Raises:
        ConfigurationError: raised for unknown keys or empty value lists
    """
    for key, values in grid.items():
        if key not in GRID_KEYS:
            raise ConfigurationError(f'unknown grid key {key!r}, expected one of {GRID_KEYS}')
        if isinstance(values, (str, bytes)) or len(values) == 0:
            raise ConfigurationError(f'grid key {key!r} needs a non-empty list of values')
    keys = list(grid)
    return [dict(zip(keys, combination)) for combination in itertools.product(*(grid[k] for k in keys))]


def run_cell(cell: dict,
             instances: Sequence[RankingInstance],
             reference: PolicyTable,
             adaptive_k: AdaptiveKConfig,
             train_config: TrainConfig,
             loss_config: LossConfig,
             n_swaps: int = 0) -> dict:
    """Derives samples, trains and evaluates one grid cell; returns a flat result row keyed by the cell values"""
    k_config = adaptive_k
    if 'tau' in cell:
        k_config = dataclasses.replace(k_config, tau_value=float(cell['tau']), frozen_tau=None)
    if cell.get('fixed_k') is not None:
        k_config = AdaptiveKConfig.fixed(int(cell['fixed_k']))
    seed = int(cell.get('seed', train_config.seed))
    swaps = int(cell.get('n_swaps', n_swaps))
    samples = build_preference_samples(instances, k_config, swaps, Seed(seed).derive('noise'))

    overrides = {key: cell[key] for key in ('curriculum', 'loss_kind') if key in cell}
    cell_train = dataclasses.replace(train_config, seed=seed, **overrides)
    cell_loss = dataclasses.replace(loss_config, beta=float(cell['beta'])) if 'beta' in cell else loss_config
    policy, trace = train(instances, samples, reference, cell_train, cell_loss)

    row = dict(cell)
    row['mean_k'] = float(np.mean([sample.kappa for sample in samples]))
    row['selected_step'] = trace.selected_step
    for record in trace.evals:
        if record['step'] == trace.selected_step and record['split'] in REPORTED_SPLITS:
            row[f"{record['split']}_{record['metric']}"] = record['value']
    row['final_reward_top1'] = trace.steps[-1]['reward_top1'] if trace.steps else 0.0
    row.update(trace.phase_totals())
    return row


def ablate(instances: Sequence[RankingInstance],
           reference: PolicyTable,
           grid: Dict[str, Sequence],
           adaptive_k: AdaptiveKConfig = AdaptiveKConfig(),
           train_config: TrainConfig = TrainConfig(),
           loss_config: LossConfig = LossConfig(),
           n_swaps: int = 0,
           workers: int = 1,
           progress: bool = True) -> pd.DataFrame:
    """Runs train + evaluate for every cell of the grid on shared data and reference

    Args:
        instances (Sequence[RankingInstance]): dataset with ref_logits
        reference (PolicyTable): frozen reference covering every instance
        grid (Dict[str, Sequence]): values per key of beta, tau, curriculum, n_swaps, fixed_k, loss_kind, seed
        adaptive_k (AdaptiveKConfig, optional): base K derivation. Defaults to AdaptiveKConfig().
        train_config (TrainConfig, optional): base training config. Defaults to TrainConfig().
        loss_config (LossConfig, optional): base loss config. Defaults to LossConfig().
        n_swaps (int, optional): logit noise of cells without an n_swaps key. Defaults to 0.
        workers (int, optional): cells trained concurrently, each on its own policy copy. Defaults to 1.
        progress (bool, optional): show a progress bar. Defaults to True.

    Returns:
        pd.DataFrame: one row per cell in grid order, the metrics of the selected checkpoint on train, valid and test
    """
    cells = expand_grid(grid)
    logger.info('Ablating %d cells over %s', len(cells), ', '.join(grid) or 'the base config')

    def run(cell: dict) -> dict:
        return run_cell(cell, instances, reference, adaptive_k, train_config, loss_config, n_swaps)

    with tqdm(total=len(cells), disable=not progress, desc='ablation') as bar:
        if workers > 1:
            rows = []
            with ThreadPoolExecutor(max_workers=workers) as executor:
                for row in executor.map(run, cells):
                    rows.append(row)
                    bar.update(1)
        else:
            rows = []
            for cell in cells:
                rows.append(run(cell))
                bar.update(1)
    return pd.DataFrame(rows)


def noise_curve(results: pd.DataFrame, metric: str = defaults.noise_curve_metric) -> pd.DataFrame:
    """Mean metric per number of logit swaps, averaged over every other grid key"""
    if 'n_swaps' not in results.columns or metric not in results.columns:
        raise ConfigurationError(f'the noise curve needs n_swaps and {metric} columns')
    return results.groupby('n_swaps', as_index=False)[metric].mean()
