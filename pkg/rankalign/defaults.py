# synthetic data #

# 20 candidates per query as in the recommendation protocol (1 ground truth + 19 sampled items)
m_candidates = 20
n_queries = 500
score_scale = 1.0
# quantiles of the score distribution that separate the grades 0|1|2|3, giving a skewed grade histogram
label_quantiles = (0.5, 0.75, 0.9)
# standard deviation of the noise added to the ground-truth scores to emulate an imperfect reference model
reference_noise = 0.5
split_ratios = (8, 1, 1)  # train, valid, test
seed = 0

# interaction logs #

n_negatives = 19
exclude_history = True  # negatives are never drawn from the user's own history

# preference losses #

beta = 1.0  # best value of the beta sweep
cdpo_epsilon = 0.1
simpo_gamma = 0.0
kto_lambda_desirable = 1.0
kto_lambda_undesirable = 1.0
kto_lambda_y = 1.0
kto_z0_mode = 'zero'

# query-adaptive K #

tau_mode = 'quantile'
tau_quantile = 0.9  # scale-free threshold for tabular logits
tau_absolute = 24.0  # tuned threshold on LLM logits
k_min = 1
k_max = None  # None means M
fixed_k_sweep = (1, 3, 5, 7, 10)
beta_sweep = (0.1, 0.5, 1.0, 3.0, 5.0)
tau_sweep = (18.0, 20.0, 22.0, 24.0, 26.0)
noise_swaps = (0, 1, 2, 3, 4)
# tabular rows of valid and test are never trained, so the curve follows the train split by default
noise_curve_metric = 'train_N@5'

# training #

sft_epochs = 5
sft_lr = 1.0
epochs = 3
batch_size = 128
# per-parameter step size; tabular rows are only touched once per epoch, so far above LLM learning rates
lr_max = 0.5
warmup_fraction = 0.1
warmup_start_factor = 0.01  # learning rate starts at 1/100 of its maximum
optimizer = 'adam'
adam_beta1 = 0.9
adam_beta2 = 0.999
adam_eps = 1e-8
curriculum = 'ascending'
eval_every = 1
select_split = 'valid'
select_metric = 'N@5'

# evaluation #

hr_cutoffs = (1, 5, 10)
ndcg_cutoffs = (5, 10)
ndcg_gain = 'exponential'

# brute-force enumeration guards #

max_bruteforce_tail = 8
max_expected_loss_candidates = 6
