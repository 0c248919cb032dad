import numpy as np
import pytest
from scipy.linalg import expm

import ratecorr as rc
from ratecorr.neuron import effective_matrix
from ratecorr.propagator import build_propagator


@pytest.fixture(scope="session")
def table1():
    return rc.NetworkParams(1.0, 1.0, 0.0, rc.SigmoidParams(1.0, 1.0, 0.0))


@pytest.fixture(scope="session")
def mu1(table1):
    (mu,) = rc.stationary_state(table1)
    return mu


@pytest.fixture(scope="session")
def cl10():
    return rc.GraphProduct("cartesian", (rc.Cycle(10), rc.Path(2)))


@pytest.fixture(scope="session")
def cl10_handle(cl10, table1, mu1):
    return build_propagator(cl10, table1, mu1)


def dense_phi(spec, params, mu, t):
    """Independent oracle: scaling-and-squaring matrix exponential of A t."""
    adj = rc.realize(spec, params.lam)
    a, _ = effective_matrix(adj, mu, params)
    return expm(a * t)


def sorted_eigs(values):
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag.round(9), values.real.round(9)))
    return values[order]


def eig_multiset_gap(analytic, numeric):
    return float(np.abs(sorted_eigs(analytic) - sorted_eigs(numeric)).max())
