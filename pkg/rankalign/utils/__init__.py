__all__ = ['exceptions', 'gradient_check', 'helpers', 'numerics', 'policy_table', 'preference_sample', 'ranking_instance', 'reward_vector', 'seed']
