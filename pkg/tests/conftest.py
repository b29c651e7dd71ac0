"""Shared reference oracles for the test suite.

These deliberately avoid the library's own code paths: the exponential
integral oracle uses an fsum'd power series (small x) and a high-order
Laguerre sum of 1/(t+x) (large x); incomplete-Gamma style checks go through
brute-force quadrature where needed.
"""

import math

import numpy as np
import pytest

EULER_GAMMA = 0.5772156649015328606


def e1_series(x: float) -> float:
    """E1(x) by the alternating series, exact summation via fsum (x <= 5)."""
    terms = [-EULER_GAMMA, -math.log(x)]
    t = 1.0
    for k in range(1, 80):
        t *= -x / k
        terms.append(-t / k)
    return math.fsum(terms)


def ref_exp_e1_scaled(x: float) -> float:
    """Reference e^x E1(x): series below 5, 64-node Laguerre sum above."""
    if x <= 5.0:
        return math.exp(x) * e1_series(x)
    from airsnet.mathkit import gauss_laguerre

    rule = gauss_laguerre(64)
    return float(rule.weights @ (1.0 / (rule.nodes + x)))


def rel_err(got: float, expected: float) -> float:
    return abs(got - expected) / abs(expected)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
