import math

import numpy as np
import pytest

from rankalign.utils.exceptions import DomainError
from rankalign.utils.numerics import log_sigmoid, logsumexp, sigmoid, softmax_log_probs, suffix_logsumexp


@pytest.mark.parametrize('values, expected', [
    ([0.0, 0.0], math.log(2)),
    ([1000.0, 1000.0], 1000 + math.log(2)),
    ([-math.inf, 0.0], 0.0),
])
def test_logsumexp_examples(values, expected):
    assert logsumexp(values) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize('values', [[], [-math.inf, -math.inf]])
def test_logsumexp_rejects_undefined_inputs(values):
    with pytest.raises(DomainError):
        logsumexp(values)


def test_logsumexp_shift_invariance(rng):
    for _ in range(50):
        v = rng.normal(0, 10, size=rng.integers(1, 20))
        c = rng.normal(0, 100)
        assert logsumexp(v + c) == pytest.approx(logsumexp(v) + c, abs=1e-10)


@pytest.mark.parametrize('z, expected', [(0.0, -math.log(2)), (math.inf, 0.0), (1.0, -0.313262)])
def test_log_sigmoid_examples(z, expected):
    assert log_sigmoid(z) == pytest.approx(expected, abs=1e-6)


def test_log_sigmoid_odd_identity(rng):
    for z in rng.normal(0, 20, size=100):
        assert log_sigmoid(z) - log_sigmoid(-z) == pytest.approx(z, abs=1e-12)


def test_log_sigmoid_no_overflow():
    assert log_sigmoid(-1000.0) == pytest.approx(-1000.0)
    assert sigmoid(-1000.0) == 0.0


def test_suffix_logsumexp_matches_direct_evaluation(rng):
    v = rng.normal(size=7)
    expected = [logsumexp(v[i:]) for i in range(v.size)]
    np.testing.assert_allclose(suffix_logsumexp(v), expected, rtol=0, atol=1e-12)


def test_softmax_log_probs_normalized(rng):
    u = rng.normal(0, 5, size=20)
    assert np.exp(softmax_log_probs(u)).sum() == pytest.approx(1.0, abs=1e-12)
