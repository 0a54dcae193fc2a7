import numpy as np
import pytest

from formopt.forms import Form

SQRT_HALF = 2**-0.5


def quartic():
    """x1^4 + x2^4."""
    return Form.from_terms({(4, 0): 1.0, (0, 4): 1.0})


def negative_quartic():
    """x1^4 - 2 x2^4."""
    return Form.from_terms({(4, 0): 1.0, (0, 4): -2.0})


def perturbed_quartic():
    """x1^4 + x2^4 + 0.3 x1^3 x2."""
    return Form.from_terms({(4, 0): 1.0, (0, 4): 1.0, (3, 1): 0.3})


@pytest.fixture
def f_quartic():
    return quartic()


@pytest.fixture
def f_negative():
    return negative_quartic()


@pytest.fixture
def f_perturbed():
    return perturbed_quartic()


def random_unit(rng, n, size=None):
    x = rng.standard_normal((n,) if size is None else (size, n))
    return x / np.linalg.norm(x, axis=-1, keepdims=True)
