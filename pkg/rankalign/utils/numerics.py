from typing import Sequence

import numpy as np
import numpy.typing as npt
from scipy import special

from rankalign.utils.exceptions import DomainError

FloatArray = npt.NDArray[np.float64]


def logsumexp(values: Sequence[float] | FloatArray) -> float:
    """Returns log(sum(exp(values))) computed with a max shift

    Args:
        values (Sequence[float] | FloatArray): non-empty sequence of reals, -inf entries allowed

    Raises:
        DomainError: raised if values is empty or every entry is -inf

    Returns:
        float: the log-sum-exp of values
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DomainError('logsumexp of an empty sequence is undefined')
    if np.all(np.isneginf(arr)):
        raise DomainError('logsumexp needs at least one entry that is not -inf')
    return float(special.logsumexp(arr))


def log_sigmoid(z: float) -> float:
    """Returns log(sigmoid(z)) = -log(1 + exp(-z)) without overflow for either sign of z"""
    return float(special.log_expit(z))


def sigmoid(z: float) -> float:
    return float(special.expit(z))


def suffix_logsumexp(values: FloatArray) -> FloatArray:
    """Returns the array whose i-th entry is logsumexp(values[i:])

    Args:
        values (FloatArray): 1-d array of reals

    Returns:
        FloatArray: suffix log-sum-exp, same length as values
    """
    arr = np.asarray(values, dtype=float)
    return np.logaddexp.accumulate(arr[::-1])[::-1]


def softmax_log_probs(params: FloatArray) -> FloatArray:
    """Log-probabilities of a softmax over a single candidate set"""
    arr = np.asarray(params, dtype=float)
    return arr - special.logsumexp(arr)
