"""Shared fixtures: the two worked examples used across the suite.

Both examples run the same plant
    P(s) = ((s+3) + 2(s-1) e^{-0.4s}) / (s^2 + s e^{-0.2s} + 5 e^{-0.5s})
with sensitivity weight W1 = (1+0.1s)/(0.4+s); the first uses the constant
complementary weight W2 = 0.5, the second the improper W2 = 0.01s + 0.5.
Pipeline stages are session-scoped because several test modules share them.
"""

import numpy as np
import pytest

from delayhinf import plantmodel, synthesis
from delayhinf.quasipoly import QuasiPolynomial, RationalFunction, RealPolynomial


@pytest.fixture(scope="session")
def plant_raw():
    num = QuasiPolynomial((("0", [3.0, 1.0]), ("2/5", [-2.0, 2.0])))
    den = QuasiPolynomial((("0", [0.0, 0.0, 1.0]), ("1/5", [0.0, 1.0]), ("1/2", [5.0])))
    return plantmodel.RawPlant(num, den)


@pytest.fixture(scope="session")
def plant_norm(plant_raw):
    return plantmodel.normalize(plant_raw)


@pytest.fixture(scope="session")
def plant_factored(plant_norm):
    return plantmodel.factorize(plant_norm)


@pytest.fixture(scope="session")
def w1():
    return RationalFunction(RealPolynomial([1.0, 0.1]), RealPolynomial([0.4, 1.0]))


@pytest.fixture(scope="session")
def weights_const(w1):
    return synthesis.Weights(W1=w1, W2=RationalFunction(RealPolynomial([0.5]),
                                                        RealPolynomial([1.0])))


@pytest.fixture(scope="session")
def weights_improper(w1):
    return synthesis.Weights(W1=w1, W2=RationalFunction(RealPolynomial([0.5, 0.01]),
                                                        RealPolynomial([1.0])))


@pytest.fixture(scope="session")
def gamma_bracket():
    return (0.3, 1.2)


@pytest.fixture(scope="session")
def gamma_opt_const(plant_factored, weights_const, gamma_bracket):
    return synthesis.gamma_opt(plant_factored, weights_const, gamma_bracket)


@pytest.fixture(scope="session")
def gamma_opt_improper(plant_factored, weights_improper, gamma_bracket):
    return synthesis.gamma_opt(plant_factored, weights_improper, gamma_bracket)


@pytest.fixture(scope="session")
def gd_const(plant_factored, weights_const):
    """Synthesis data for the constant-weight example at level 0.67."""
    return synthesis.gamma_data(0.67, weights_const, plant_factored)


@pytest.fixture(scope="session")
def gd_improper(plant_factored, weights_improper):
    """Synthesis data for the improper-weight example at level 0.60."""
    return synthesis.gamma_data(0.60, weights_improper, plant_factored)


@pytest.fixture(scope="session")
def interp_const(plant_factored, gd_const):
    return synthesis.solve_L(0.67, plant_factored, gd_const, mode="SUBOPTIMAL", a=2.0)


@pytest.fixture(scope="session")
def interp_improper(plant_factored, gd_improper):
    return synthesis.solve_L(0.60, plant_factored, gd_improper, mode="SUBOPTIMAL", a=2.0)


def grid_omega(lo=-2, hi=3, n=200):
    return np.logspace(lo, hi, n)
