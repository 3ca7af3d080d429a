import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from ddstab import benchmarks as bm
from ddstab.errors import AlignmentError, DimensionError, StructuralError
from ddstab.lti_sim import (
    Block,
    Exosystem,
    OutputPlant,
    SignalSpec,
    SineTerm,
    StatePlant,
    build_exosystem,
    plant_block,
    sample,
    simulate_cascade,
)


def test_exosystem_reproduces_signal():
    spec = SignalSpec(((SineTerm(1.5, 2.0, 0.3), SineTerm(-0.5, 7.0)), (SineTerm(2.0, 0.0, 1.0),)),
                      offsets=(0.25, -1.0))
    traj = simulate_cascade([], build_exosystem(spec), 3.0, 0.01)
    np.testing.assert_allclose(traj.inputs, spec.evaluate(traj.times), atol=1e-12)


def test_zero_signal_has_empty_exosystem():
    exo = build_exosystem(SignalSpec.zero(2))
    assert exo.dim == 0 and exo.m == 2
    assert SignalSpec.sines([[1, 3, 5, 7], [2, 4, 6, 8]]).distinct_frequencies == 8
    assert SignalSpec.sines([[1, 2], [2]]).distinct_frequencies == 2


def test_scalar_step_response():
    # x' = -x + u, u = 1 (constant offset), x(0) = 0
    plant = StatePlant([[-1.0]], [[1.0]])
    traj = simulate_cascade([plant_block(plant, [0.0])], build_exosystem(SignalSpec(((),), (1.0,))), 5.0, 0.01)
    np.testing.assert_allclose(traj.state("plant")[0], 1 - np.exp(-traj.times), atol=1e-13)
    np.testing.assert_allclose(traj.deriv("plant")[0], np.exp(-traj.times), atol=1e-13)


def test_reactor_matches_reference_integrator(reactor):
    exo = build_exosystem(bm.REACTOR_SIGNAL)
    traj = simulate_cascade([plant_block(reactor, bm.REACTOR_X0)], exo, 1.5, 0.01)

    def rhs(t, x):
        return reactor.A @ x + reactor.B @ bm.REACTOR_SIGNAL.evaluate(t)[:, 0]

    ref = solve_ivp(rhs, (0, 1.5), bm.REACTOR_X0, t_eval=traj.times, rtol=1e-12, atol=1e-12, method="DOP853")
    np.testing.assert_allclose(traj.state("plant"), ref.y, atol=1e-8)


def test_grid_refinement_is_exact(reactor):
    exo = build_exosystem(bm.REACTOR_SIGNAL)
    coarse = simulate_cascade([plant_block(reactor, bm.REACTOR_X0)], exo, 1.5, 0.01)
    fine = simulate_cascade([plant_block(reactor, bm.REACTOR_X0)], exo, 1.5, 0.005)
    np.testing.assert_allclose(fine.states[:, ::2], coarse.states, rtol=1e-10, atol=1e-11)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_superposition(a, b):
    plant = StatePlant([[0.0, 1.0], [-2.0, -0.3]], [[0.0], [1.0]])
    s1 = SignalSpec.sines([[1.0, 2.0]])
    s2 = SignalSpec(((SineTerm(1.0, 0.5, 0.2),),))
    x1, x2 = np.array([1.0, 0.0]), np.array([0.0, -1.0])

    def run(spec, x0):
        return simulate_cascade([plant_block(plant, x0)], build_exosystem(spec), 2.0, 0.05).state("plant")

    combined = SignalSpec(tuple(c1 + c2 for c1, c2 in zip(s1.scaled(a).channels, s2.scaled(b).channels)))
    lhs = run(combined, a * x1 + b * x2)
    np.testing.assert_allclose(lhs, a * run(s1, x1) + b * run(s2, x2), atol=1e-10)


def test_transfer_function_realization():
    p = bm.siso_plant()
    np.testing.assert_array_equal(p.A, [[0, 1, 0], [0, 0, 1], [0, -4, 0]])
    np.testing.assert_array_equal(p.b, [0, 0, 1])
    np.testing.assert_array_equal(p.c, [-1, 1, 0])
    assert p.is_controllable() and p.is_observable()
    # G(s) = c (sI - A)^{-1} b at s = 2: (2 - 1) / (2 (4 + 4)) = 1/16
    s = 2.0
    val = p.c @ np.linalg.solve(s * np.eye(3) - p.A, p.b)
    assert val == pytest.approx(1 / 16)
    q = OutputPlant.from_transfer_function([2.0, -2.0], [2.0, 0.0, 8.0, 0.0])
    np.testing.assert_array_equal(q.A, p.A)
    np.testing.assert_array_equal(q.c, p.c)
    with pytest.raises(DimensionError):
        OutputPlant.from_transfer_function([1.0, 0.0, 0.0], [1.0, 1.0, 1.0])


def test_plant_validation():
    with pytest.raises(DimensionError):
        StatePlant(np.eye(3), np.ones((2, 1)))
    with pytest.raises(DimensionError):
        OutputPlant(np.eye(2), [1.0], [1.0, 0.0])
    assert bm.reactor_plant().is_controllable()


def test_cascade_structure_checks():
    a = Block("a", -np.eye(1), np.zeros(1), {"b": np.ones((1, 1))})
    b = Block("b", -np.eye(1), np.zeros(1))
    with pytest.raises(StructuralError):
        simulate_cascade([a, b], Exosystem.empty(1), 1.0, 0.1)
    loop = Block("a", -np.eye(1), np.zeros(1), {"a": np.ones((1, 1))})
    with pytest.raises(StructuralError):
        simulate_cascade([loop], Exosystem.empty(1), 1.0, 0.1)
    with pytest.raises(StructuralError):
        simulate_cascade([b, Block("c", -np.eye(1), np.zeros(1), {"b.y": np.ones((1, 1))})],
                         Exosystem.empty(1), 1.0, 0.1)


def test_sampling_alignment(reactor_traj):
    U = sample(reactor_traj, 0.1, 15, "u")
    assert U.shape == (2, 15)
    np.testing.assert_allclose(U, bm.REACTOR_SIGNAL.evaluate(0.1 * np.arange(15)), atol=1e-12)
    with pytest.raises(AlignmentError):
        sample(reactor_traj, 0.1005, 5, "u")
    with pytest.raises(AlignmentError):
        sample(reactor_traj, 0.1, 17, "u")
    with pytest.raises(AlignmentError):
        simulate_cascade([], Exosystem.empty(1), 1.0, 0.3)


def test_trajectory_csv(tmp_path, reactor_traj):
    path = tmp_path / "traj.csv"
    reactor_traj.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    assert header[0] == "t" and "u1" in header and "d_x1" in header
    data = np.array(rows[1:], dtype=float)
    col = header.index("x3")
    np.testing.assert_array_equal(data[:, col], reactor_traj.state("plant")[2])
