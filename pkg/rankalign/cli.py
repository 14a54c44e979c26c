"""
Command-line entry point: rankalign <subcommand> [options]

Exit codes: 0 on success, 2 for usage errors, missing files and invalid data or configuration,
1 for any other failure. Errors are reported as one line on stderr:
error kind=<ClassName> message=<text>
"""
import argparse
import dataclasses
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

from rankalign import defaults
from rankalign.alignment import ablation, adaptive_k, evaluation, theory, trainer
from rankalign.alignment.losses import LossKind
from rankalign.config import RunConfig, load_run_config
from rankalign.data_preparation import export_data, ingest_interactions, load_data, synthetic
from rankalign.utils.exceptions import (
    ConfigurationError,
    DataError,
    MissingParameterError,
    ParseError,
    RankAlignError,
)
from rankalign.utils.helpers import max_workers
from rankalign.utils.ranking_instance import SPLITS, RankingInstance
from rankalign.utils.seed import Seed

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV_VAR = 'RANKALIGN_LOG_LEVEL'
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'
USAGE_EXIT_CODE = 2
FAILURE_EXIT_CODE = 1


class UsageError(RankAlignError):
    """Invalid combination of command-line arguments"""


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message: str) -> None:
        raise UsageError(message)


def configure_logging(quiet: bool = False, verbose: bool = False) -> None:
    level = os.environ.get(LOG_LEVEL_ENV_VAR, 'INFO').upper()
    if quiet:
        level = 'WARNING'
    if verbose:
        level = 'DEBUG'
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(getattr(args, 'config', None))
    if getattr(args, 'seed', None) is not None:
        config = config.with_seed(args.seed)
    return config


def _load_reference_instances(args: argparse.Namespace) -> tuple:
    instances = load_data.read_dataset(args.data)
    reference = load_data.read_policy(args.ref)
    return load_data.attach_reference_logits(instances, reference), reference


def cmd_gen_data(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    recipe = config.synthetic
    if args.queries is not None:
        recipe = dataclasses.replace(recipe, n_queries=args.queries)
    logger.info('Generating synthetic data')
    instances = synthetic.gen_synthetic(recipe, workers=max_workers() if args.parallel else 1)
    export_data.write_dataset(instances, args.out)
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    logger.info('Ingesting interactions from %s', args.log)
    log = ingest_interactions.InteractionLog.from_csv(args.log)
    instances = ingest_interactions.ingest_interactions(log, args.negatives, Seed(args.seed),
                                                        exclude_history=not args.include_history)
    export_data.write_dataset(instances, args.out)
    return 0


def _k_config(args: argparse.Namespace, base: adaptive_k.AdaptiveKConfig) -> adaptive_k.AdaptiveKConfig:
    if getattr(args, 'fixed_k', None) is not None:
        return adaptive_k.AdaptiveKConfig.fixed(args.fixed_k)
    overrides = {}
    if getattr(args, 'tau_mode', None) is not None:
        overrides['tau_mode'] = args.tau_mode
        if args.tau is None:
            overrides['tau_value'] = defaults.tau_absolute if args.tau_mode == 'absolute' else defaults.tau_quantile
    if getattr(args, 'tau', None) is not None:
        overrides['tau_value'] = args.tau
    if getattr(args, 'k_min', None) is not None:
        overrides['k_min'] = args.k_min
    if getattr(args, 'k_max', None) is not None:
        overrides['k_max'] = args.k_max
    return dataclasses.replace(base, **overrides) if overrides else base


def cmd_derive_k(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    instances = load_data.read_dataset(args.data)
    if args.ref is not None:
        instances = load_data.attach_reference_logits(instances, load_data.read_policy(args.ref))
    logger.info('Deriving preference samples')
    seed = args.seed if args.seed is not None else config.train.seed
    samples = adaptive_k.build_preference_samples(instances, _k_config(args, config.k_config),
                                                  args.swaps, Seed(seed).derive('noise'))
    export_data.write_samples(samples, args.out)
    return 0


def cmd_sft(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    instances = load_data.read_dataset(args.data)
    epochs = args.epochs if args.epochs is not None else config.train.sft_epochs
    lr = args.lr if args.lr is not None else config.train.sft_lr
    logger.info('Running SFT')
    reference = trainer.sft(instances, epochs, lr)
    export_data.write_policy(reference, args.out)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    overrides = {key: value for key, value in (('loss_kind', args.loss), ('epochs', args.epochs),
                                                ('curriculum', args.curriculum), ('lr_max', args.lr_max))
                 if value is not None}
    if args.no_timings:
        overrides['record_timings'] = False
    train_config = dataclasses.replace(config.train, **overrides)
    loss_config = dataclasses.replace(config.loss, beta=args.beta) if args.beta is not None else config.loss
    config = dataclasses.replace(config, train=train_config, loss=loss_config)

    instances, reference = _load_reference_instances(args)
    if args.samples is not None:
        samples = load_data.read_samples(args.samples)
    else:
        logger.info('Deriving preference samples')
        samples = adaptive_k.build_preference_samples(instances, config.k_config, config.n_swaps,
                                                      Seed(train_config.seed).derive('noise'))
    logger.info('Training')
    policy, trace = trainer.train(instances, samples, reference, train_config, loss_config)

    os.makedirs(args.out, exist_ok=True)
    export_data.write_trace(trace, os.path.join(args.out, 'trace.csv'))
    export_data.write_metrics(trace, os.path.join(args.out, 'metrics.csv'))
    export_data.write_policy(policy, os.path.join(args.out, 'checkpoint.jsonl'))
    manifest = config.to_dict()
    manifest['paths'] = {'data': args.data, 'ref': args.ref, 'samples': args.samples, 'out': args.out}
    manifest['selected_step'] = trace.selected_step
    export_data.write_manifest(manifest, args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    instances = load_data.read_dataset(args.data)
    policy = load_data.read_policy(args.policy)
    report = evaluation.evaluate(policy, instances, args.split, gain=args.gain)
    if report.n_instances == 0:
        raise DataError(f'no instances in split {args.split!r}', 'split')
    frame = trainer.TrainTrace(evals=report.to_rows(0, args.split)).metric_frame()
    if args.out is not None:
        export_data.write_table(frame, args.out)
    sys.stdout.write(frame.to_csv(index=False, lineterminator='\n'))
    return 0


def _theory_dataset(instances: Sequence[RankingInstance], reference, samples, k: Optional[int]) -> List[tuple]:
    kappas = {sample.instance_id: sample.kappa for sample in samples} if samples is not None else {}
    dataset = []
    for instance in instances:
        scores = instance.scores if instance.scores is not None else [float(label) for label in instance.labels]
        if instance.instance_id in kappas:
            instance_k = kappas[instance.instance_id]
        elif k is not None:
            instance_k = min(k, instance.m)
        else:
            instance_k = min(max(1, sum(1 for label in instance.labels if label > 0)), instance.m)
        reference.row_for(instance)
        dataset.append((scores, reference.probs(instance.instance_id), instance_k))
    return dataset


def cmd_theory(args: argparse.Namespace) -> int:
    instances = load_data.read_dataset(args.data)
    reference = load_data.read_policy(args.ref)
    samples = load_data.read_samples(args.samples) if args.samples is not None else None
    dataset = _theory_dataset(instances, reference, samples, args.k)
    workers = max_workers() if args.parallel else 1
    if args.method == 'both':
        result = theory.accuracy_comparison(dataset, args.beta, workers)
    else:
        result = {args.method: theory.optimal_accuracy(dataset, args.beta, args.method, workers)}
    fields = ' '.join(f'{name}={value:.6f}' for name, value in result.items())
    sys.stdout.write(f'instances={len(dataset)} beta={args.beta} {fields} ties=failure degenerate_alpha=error\n')
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    grid = load_run_config_grid(args.grid)
    if args.data is not None:
        instances = load_data.read_dataset(args.data)
    else:
        logger.info('Generating synthetic data')
        instances = synthetic.gen_synthetic(config.synthetic)
    if args.ref is not None:
        reference = load_data.read_policy(args.ref)
    else:
        logger.info('Running SFT')
        reference = trainer.sft(instances, config.train.sft_epochs, config.train.sft_lr)
    instances = load_data.attach_reference_logits(instances, reference)
    train_config = dataclasses.replace(config.train, record_timings=not args.no_timings)
    workers = max_workers() if args.parallel else 1
    results = ablation.ablate(instances, reference, grid, config.k_config, train_config, config.loss,
                              config.n_swaps, workers=workers, progress=not args.quiet)
    os.makedirs(args.out, exist_ok=True)
    export_data.write_table(results, os.path.join(args.out, 'results.csv'))
    if 'n_swaps' in grid:
        export_data.write_table(ablation.noise_curve(results, args.curve_metric), os.path.join(args.out, 'noise_curve.csv'))
    manifest = dataclasses.replace(config, train=train_config).to_dict()
    manifest['grid'] = grid
    manifest['paths'] = {'data': args.data, 'ref': args.ref, 'out': args.out}
    export_data.write_manifest(manifest, args.out)
    return 0


def load_run_config_grid(filepath: str) -> dict:
    with open(filepath, encoding='utf-8') as f:
        try:
            grid = json.load(f)
        except json.JSONDecodeError as error:
            raise ParseError(f"malformed grid: {error.msg}", error.lineno)
    ablation.expand_grid(grid)
    return grid


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='rankalign', description='K-order ranking preference optimization on tabular policies')
    parser.add_argument('--quiet', action='store_true', help='log warnings and errors only')
    parser.add_argument('--verbose', action='store_true', help='log debug messages')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)

    p = subparsers.add_parser('gen-data', help='generate a synthetic dataset with Plackett-Luce ground truth')
    p.add_argument('--config')
    p.add_argument('--out', required=True)
    p.add_argument('--seed', type=int)
    p.add_argument('--queries', type=int)
    p.add_argument('--parallel', action='store_true')
    p.set_defaults(func=cmd_gen_data)

    p = subparsers.add_parser('ingest', help='build ranking instances from a user,item,timestamp log')
    p.add_argument('--log', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--negatives', type=int, default=defaults.n_negatives)
    p.add_argument('--seed', type=int, default=defaults.seed)
    p.add_argument('--include-history', action='store_true', help='allow negatives from the user history')
    p.set_defaults(func=cmd_ingest)

    p = subparsers.add_parser('derive-k', help='derive query-adaptive K-order preference samples')
    p.add_argument('--data', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--config')
    p.add_argument('--ref', help='policy table filling missing ref_logits')
    p.add_argument('--tau-mode', choices=adaptive_k.TAU_MODES)
    p.add_argument('--tau', type=float)
    p.add_argument('--k-min', type=int)
    p.add_argument('--k-max', type=int)
    p.add_argument('--fixed-k', type=int)
    p.add_argument('--swaps', type=int, default=0)
    p.add_argument('--seed', type=int)
    p.set_defaults(func=cmd_derive_k)

    p = subparsers.add_parser('sft', help='fit the reference policy to the top-labeled candidates')
    p.add_argument('--data', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--config')
    p.add_argument('--epochs', type=int)
    p.add_argument('--lr', type=float)
    p.set_defaults(func=cmd_sft)

    p = subparsers.add_parser('train', help='align a policy with a preference loss')
    p.add_argument('--data', required=True)
    p.add_argument('--ref', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--config')
    p.add_argument('--loss', choices=[kind.value for kind in LossKind])
    p.add_argument('--samples')
    p.add_argument('--seed', type=int)
    p.add_argument('--epochs', type=int)
    p.add_argument('--beta', type=float)
    p.add_argument('--lr-max', type=float)
    p.add_argument('--curriculum', choices=['ascending', 'descending', 'random'])
    p.add_argument('--no-timings', action='store_true', help='write 0 phase timings for byte-identical traces')
    p.set_defaults(func=cmd_train)

    p = subparsers.add_parser('eval', help='compute HR@k and N@k of a policy checkpoint')
    p.add_argument('--data', required=True)
    p.add_argument('--policy', required=True)
    p.add_argument('--split', choices=SPLITS, default='test')
    p.add_argument('--gain', choices=evaluation.GAINS, default=defaults.ndcg_gain)
    p.add_argument('--out')
    p.set_defaults(func=cmd_eval)

    p = subparsers.add_parser('theory', help='optimal top-K ranking accuracy of KPO and S-DPO')
    p.add_argument('--data', required=True)
    p.add_argument('--ref', required=True)
    p.add_argument('--beta', type=float, default=defaults.beta)
    p.add_argument('--method', choices=['kpo', 'sdpo', 'both'], default='both')
    p.add_argument('--samples')
    p.add_argument('--k', type=int)
    p.add_argument('--parallel', action='store_true')
    p.set_defaults(func=cmd_theory)

    p = subparsers.add_parser('ablate', help='train and evaluate every cell of a parameter grid')
    p.add_argument('--grid', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--config')
    p.add_argument('--data')
    p.add_argument('--ref')
    p.add_argument('--seed', type=int)
    p.add_argument('--parallel', action='store_true')
    p.add_argument('--curve-metric', default=defaults.noise_curve_metric, help='results column averaged by the noise curve')
    p.add_argument('--no-timings', action='store_true')
    p.set_defaults(func=cmd_ablate)
    return parser


def _exit_code(error: BaseException) -> int:
    usage_errors = (UsageError, FileNotFoundError, IsADirectoryError, DataError, ConfigurationError, MissingParameterError)
    return USAGE_EXIT_CODE if isinstance(error, usage_errors) else FAILURE_EXIT_CODE


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs one subcommand and returns its exit code"""
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        configure_logging(args.quiet, args.verbose)
        return args.func(args)
    except Exception as error:
        message = str(error).replace('\n', ' ')
        sys.stderr.write(f'error kind={type(error).__name__} message={message}\n')
        return _exit_code(error)
