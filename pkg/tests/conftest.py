import numpy as np
import pytest

from ddstab import benchmarks as bm
from ddstab.batching import build_output_batch, build_state_batch
from ddstab.lti_sim import build_exosystem, plant_block, simulate_cascade
from ddstab.realization import run_chi, run_output_filter, run_state_filter

H_STATE = bm.REACTOR_TS / 100
H_OUTPUT = bm.SISO_TS / 100


@pytest.fixture(scope="session")
def reactor():
    return bm.reactor_plant()


@pytest.fixture(scope="session")
def siso():
    return bm.siso_plant()


@pytest.fixture(scope="session")
def reactor_traj(reactor):
    exo = build_exosystem(bm.REACTOR_SIGNAL)
    traj = simulate_cascade([plant_block(reactor, bm.REACTOR_X0)], exo, bm.REACTOR_T, H_STATE)
    return run_state_filter(traj, bm.REACTOR_FILTER)


@pytest.fixture(scope="session")
def reactor_batch(reactor_traj):
    N = round(bm.REACTOR_T / bm.REACTOR_TS)
    return build_state_batch(reactor_traj, bm.REACTOR_FILTER, bm.REACTOR_TS, N)


@pytest.fixture(scope="session")
def siso_traj(siso):
    exo = build_exosystem(bm.SISO_SIGNAL)
    traj = simulate_cascade([plant_block(siso, bm.SISO_X0)], exo, bm.SISO_T, H_OUTPUT)
    return run_output_filter(traj, bm.SISO_FILTER)


@pytest.fixture(scope="session")
def siso_chi():
    return run_chi(bm.SISO_FILTER, bm.SISO_T, H_OUTPUT)


@pytest.fixture(scope="session")
def siso_batch(siso_traj, siso_chi):
    N = round(bm.SISO_T / bm.SISO_TS)
    return build_output_batch(siso_traj, siso_chi, bm.SISO_FILTER, bm.SISO_TS, N)


def random_stable(rng, n, shift=0.5):
    A = rng.standard_normal((n, n))
    return A - (np.max(np.linalg.eigvals(A).real) + shift) * np.eye(n)
