import numpy as np
import pytest

from tracechain import (
    ScaleFunction,
    SpeedMeasure,
    build_fat_cantor_scale,
    build_partition,
    build_trace_chain,
)


@pytest.fixture(scope="session")
def lebesgue():
    return SpeedMeasure.lebesgue()


@pytest.fixture(scope="session")
def flat_chain_16(lebesgue):
    part = build_partition("uniform", n=16)
    return build_trace_chain(part, ScaleFunction.identity(), lebesgue)


@pytest.fixture(scope="session")
def flat_chain_4(lebesgue):
    part = build_partition("uniform", n=4)
    return build_trace_chain(part, ScaleFunction.identity(), lebesgue)


@pytest.fixture(scope="session")
def fat_scale_8():
    return build_fat_cantor_scale(8)


@pytest.fixture(scope="session")
def atom_speed():
    return SpeedMeasure.piecewise([0.0, 0.3, 1.0], [1.0, 0.7],
                                  atoms=[(0.5, 0.2), (1.0, 0.1)])


def dense_generator(chain):
    """Independent dense assembly of the generator for oracle solves."""
    n = chain.n_states
    dense = np.zeros((n, n))
    for i in range(n - 1):
        c = chain.conductances[i]
        dense[i, i + 1] = c / chain.masses[i]
        dense[i + 1, i] = c / chain.masses[i + 1]
    for i in range(n):
        dense[i, i] = -dense[i].sum()
    return dense
