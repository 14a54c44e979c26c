import math

from rankalign import defaults


def warmup_steps(total_steps: int, warmup_fraction: float) -> int:
    """Number of warm-up steps, at least 1 whenever warmup_fraction is positive"""
    if warmup_fraction <= 0:
        return 0
    # rounding first keeps products like 0.1 * 30 from ceiling to 4
    return max(1, math.ceil(round(warmup_fraction * total_steps, 9)))


def lr_schedule(step: int,
                total_steps: int,
                lr_max: float,
                warmup_fraction: float = defaults.warmup_fraction,
                warmup_start_factor: float = defaults.warmup_start_factor) -> float:
    """Learning rate of a 0-based step: linear warm-up from lr_max * warmup_start_factor, then cosine decay to 0

    Args:
        step (int): 0 <= step < total_steps
        total_steps (int): number of optimizer steps of the run
        lr_max (float): peak learning rate, reached at the end of the warm-up
        warmup_fraction (float, optional): share of steps spent warming up, in [0, 1). Defaults to 0.1.
        warmup_start_factor (float, optional): learning rate at step 0 relative to lr_max. Defaults to 0.01.

    Raises:
        ValueError: raised if step lies outside 0..total_steps-1 or warmup_fraction outside [0, 1)

    Returns:
        float: learning rate of the step
    """
    if not 0 <= step < total_steps:
        raise ValueError(f'step {step} is outside 0..{total_steps - 1}')
    if not 0 <= warmup_fraction < 1:
        raise ValueError('warmup_fraction has to lie in [0, 1)')
    warmup = warmup_steps(total_steps, warmup_fraction)
    if step < warmup:
        return lr_max * (warmup_start_factor + (1 - warmup_start_factor) * step / warmup)
    progress = (step - warmup) / (total_steps - warmup)
    return lr_max * 0.5 * (1 + math.cos(math.pi * progress))
