__all__ = ['ablation', 'adaptive_k', 'curriculum', 'evaluation', 'losses', 'lr_schedule', 'optimizers', 'preference_models', 'theory', 'trainer']
