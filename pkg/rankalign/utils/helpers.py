import math
import os
from typing import List, Sequence

THREADS_ENV_VAR = 'RANKALIGN_THREADS'


def split_counts(n: int, ratios: Sequence[float] = (8, 1, 1)) -> List[int]:
    """Splits n items into len(ratios) parts proportional to ratios by the largest remainder method

    Args:
        n (int): number of items
        ratios (Sequence[float], optional): relative part sizes. Defaults to (8, 1, 1).

    Returns:
        List[int]: part sizes summing to n, each within 1 of its exact share

    Note:
        Leftover items go to the parts with the largest fractional share, earlier parts first on ties.
    """
    total = float(sum(ratios))
    exact = [n * r / total for r in ratios]
    counts = [math.floor(e) for e in exact]
    leftover = n - sum(counts)
    by_remainder = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def max_workers() -> int:
    """Returns the parallel fan-out cap from RANKALIGN_THREADS, defaulting to the number of cores"""
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None or value.strip() == '':
        return os.cpu_count() or 1
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f'{THREADS_ENV_VAR} has to be a positive integer, got {value!r}')
    if workers < 1:
        raise ValueError(f'{THREADS_ENV_VAR} has to be a positive integer, got {value!r}')
    return workers
