"""
Row-wise optimizers over a PolicyTable. Only the rows of the instances in the current batch
are touched; untouched rows keep their parameters and optimizer state.
"""
from typing import Dict

import numpy as np

from rankalign import defaults
from rankalign.utils.exceptions import ConfigurationError
from rankalign.utils.numerics import FloatArray
from rankalign.utils.policy_table import PolicyTable

OPTIMIZERS = ('adam', 'sgd')


class SGD:

    def update(self, table: PolicyTable, instance_id: str, grad: FloatArray, lr: float) -> None:
        table.add_to_row(instance_id, -lr * np.asarray(grad, dtype=float))


class LazyAdam:

    def __init__(self,
                 beta1: float = defaults.adam_beta1,
                 beta2: float = defaults.adam_beta2,
                 eps: float = defaults.adam_eps) -> None:
        """Creates an Adam optimizer with moment estimates and step counts kept per row

        Args:
            beta1 (float, optional): decay of the first moment. Defaults to 0.9.
            beta2 (float, optional): decay of the second moment. Defaults to 0.999.
            eps (float, optional): denominator offset. Defaults to 1e-8.

        Note:
            Bias correction uses the number of updates the row has received, not the global step,
            so a row updated once per epoch gets the same first step as a densely updated one.
        """
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1) or eps <= 0:
            raise ConfigurationError('adam needs 0 <= beta1, beta2 < 1 and eps > 0')
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.__first: Dict[str, FloatArray] = {}
        self.__second: Dict[str, FloatArray] = {}
        self.__steps: Dict[str, int] = {}

    def update(self, table: PolicyTable, instance_id: str, grad: FloatArray, lr: float) -> None:
        grad = np.asarray(grad, dtype=float)
        m = self.__first.get(instance_id, np.zeros_like(grad))
        v = self.__second.get(instance_id, np.zeros_like(grad))
        t = self.__steps.get(instance_id, 0) + 1
        m = self.beta1 * m + (1 - self.beta1) * grad
        v = self.beta2 * v + (1 - self.beta2) * grad ** 2
        self.__first[instance_id], self.__second[instance_id], self.__steps[instance_id] = m, v, t
        m_hat = m / (1 - self.beta1 ** t)
        v_hat = v / (1 - self.beta2 ** t)
        table.add_to_row(instance_id, -lr * m_hat / (np.sqrt(v_hat) + self.eps))

    def row_steps(self, instance_id: str) -> int:
        return self.__steps.get(instance_id, 0)


def make_optimizer(name: str,
                   beta1: float = defaults.adam_beta1,
                   beta2: float = defaults.adam_beta2,
                   eps: float = defaults.adam_eps) -> SGD | LazyAdam:
    if name == 'sgd':
        return SGD()
    if name == 'adam':
        return LazyAdam(beta1, beta2, eps)
    raise ConfigurationError(f'optimizer has to be one of {OPTIMIZERS}')
