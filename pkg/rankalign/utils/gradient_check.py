"""
Central finite-difference gradients, used to check the analytic gradients of the loss zoo.
"""
import logging
from typing import Callable

import numpy as np

from rankalign.utils.numerics import FloatArray

logger = logging.getLogger(__name__)


def finite_difference(func: Callable[[FloatArray], float], x0: FloatArray, eps: float = 1e-5) -> FloatArray:
    """Returns the centered-difference gradient of func at x0 with step eps"""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros(x0.size)
    for j in range(x0.size):
        x = np.copy(x0)
        x[j] = x0[j] + eps
        f_plus = func(x)
        x[j] = x0[j] - eps
        f_minus = func(x)
        grad[j] = (f_plus - f_minus) / (2 * eps)
    return grad


def gradient_error(analytic: FloatArray, numeric: FloatArray, small: float = 1e-3) -> float:
    """Returns the worst relative error between two gradients, using the absolute error for entries smaller than small

    Args:
        analytic (FloatArray): analytic gradient
        numeric (FloatArray): finite-difference gradient
        small (float, optional): magnitude below which the absolute error is used. Defaults to 1e-3.

    Returns:
        float: maximum error over all entries
    """
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    diff = np.abs(analytic - numeric)
    errors = np.where(scale < small, diff, diff / np.where(scale < small, 1.0, scale))
    worst = float(errors.max()) if errors.size else 0.0
    logger.debug('gradient check: worst error %.3e over %d entries', worst, errors.size)
    return worst
