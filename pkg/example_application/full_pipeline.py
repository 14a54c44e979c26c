import dataclasses
import os

from rankalign.alignment import ablation, adaptive_k, evaluation, theory, trainer
from rankalign.config import load_run_config
from rankalign.data_preparation import export_data, ingest_interactions, load_data, synthetic
from rankalign.utils.seed import Seed

# PARAMETERS TO SET #
config_filepath = "example_application/sample_config.json"
interactions_filepath = "example_application/sample_interactions.csv"
target_directory = "example_application/output"
losses_to_compare = ['kpo', 'sdpo', 'dpo', 'kpo_cut']
print_status = True  # Should the current pipeline step be printed to the terminal?

config = load_run_config(config_filepath)
os.makedirs(target_directory, exist_ok=True)

# PREPARING DATA #
if print_status:
    print('Generating synthetic data with', config.synthetic.n_queries, 'queries of', config.synthetic.m_candidates, 'candidates')
dataset = synthetic.gen_synthetic(config.synthetic)
export_data.write_dataset(dataset, os.path.join(target_directory, 'synthetic.jsonl'))

if print_status:
    print('Ingesting interactions from', interactions_filepath)
log = ingest_interactions.InteractionLog.from_csv(interactions_filepath)
interaction_dataset = ingest_interactions.ingest_interactions(log, n_negatives=9, seed=Seed(config.synthetic.seed))
export_data.write_dataset(interaction_dataset, os.path.join(target_directory, 'interactions.jsonl'))

# REFERENCE POLICY #
if print_status:
    print('Running SFT')
reference = trainer.sft(dataset, config.train.sft_epochs, config.train.sft_lr)
dataset = load_data.attach_reference_logits(dataset, reference)
export_data.write_policy(reference, os.path.join(target_directory, 'reference.jsonl'))

# PREFERENCE SAMPLES #
if print_status:
    print('Deriving preference samples')
samples = adaptive_k.build_preference_samples(dataset, config.k_config, config.n_swaps, Seed(config.train.seed).derive('noise'))
export_data.write_samples(samples, os.path.join(target_directory, 'samples.jsonl'))

# THEORY CHECK #
if print_status:
    print('Comparing optimal ranking accuracy of KPO and S-DPO')
kappas = {sample.instance_id: sample.kappa for sample in samples}
theory_dataset = [(instance.scores, reference.probs(instance.instance_id), kappas[instance.instance_id]) for instance in dataset]
comparison = theory.accuracy_comparison(theory_dataset, config.loss.beta)
print('Optimal accuracy: kpo', comparison['kpo'], 'sdpo', comparison['sdpo'], 'difference', comparison['difference'])

# ALIGNMENT #
for loss_kind in losses_to_compare:
    if print_status:
        print('Training with', loss_kind)
    train_config = dataclasses.replace(config.train, loss_kind=loss_kind)
    policy, trace = trainer.train(dataset, samples, reference, train_config, config.loss)
    run_directory = os.path.join(target_directory, loss_kind)
    os.makedirs(run_directory, exist_ok=True)
    export_data.write_trace(trace, os.path.join(run_directory, 'trace.csv'))
    export_data.write_metrics(trace, os.path.join(run_directory, 'metrics.csv'))
    export_data.write_policy(policy, os.path.join(run_directory, 'checkpoint.jsonl'))
    report = evaluation.evaluate(policy, dataset, 'test')
    print(loss_kind, 'test metrics of the selected step', trace.selected_step, report.metrics)

# NOISE ROBUSTNESS #
if print_status:
    print('Sweeping logit noise')
results = ablation.ablate(dataset, reference, {'n_swaps': [0, 1, 2, 3, 4]}, config.k_config, config.train, config.loss)
export_data.write_table(results, os.path.join(target_directory, 'noise_results.csv'))
export_data.write_table(ablation.noise_curve(results), os.path.join(target_directory, 'noise_curve.csv'))
export_data.write_manifest(config.to_dict(), target_directory)
