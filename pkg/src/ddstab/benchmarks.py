"""Canned plants, printed gains and reference values for the two worked examples."""
import numpy as np

from .lti_sim import OutputPlant, SignalSpec, StatePlant
from .realization import OutputFilterParams, StateFilterParams

# Linearized unstable batch reactor (4 states, 2 inputs).
REACTOR_A = np.array([
    [1.38, -0.2077, 6.715, -5.676],
    [-0.5814, -4.29, 0.0, 0.675],
    [1.067, 4.273, -6.654, 5.893],
    [0.048, 4.273, 1.343, -2.104],
])
REACTOR_B = np.array([
    [0.0, 0.0],
    [5.679, 0.0],
    [1.136, -3.146],
    [1.136, 0.0],
])
REACTOR_OPEN_LOOP_EIGS = np.array([-8.67, -5.06, 0.0635, 1.99])
REACTOR_X0 = np.array([0.311, -0.6576, 0.4121, -0.9363])
REACTOR_K = np.array([
    [-1.507, -18.69, 0.155, -0.681, 2.925, 0.79],
    [17.45, 0.224, 44.06, -36.37, 1.09, -3.518],
])
REACTOR_K_EIGS = np.array([-5.107 + 10.729j, -5.107 - 10.729j, -1.238,
                           -1.024 + 9.654j, -1.024 - 9.654j, -0.759])
REACTOR_FILTER = StateFilterParams(lam=1.0, gamma=1.0)
REACTOR_T, REACTOR_TS = 1.5, 0.1
# 4 unit sinusoids per channel, 8 distinct frequencies overall
REACTOR_SIGNAL = SignalSpec.sines([[1.0, 3.0, 5.0, 7.0], [2.0, 4.0, 6.0, 8.0]])

# Non-minimum-phase SISO plant (s - 1) / (s (s^2 + 4)).
SISO_NUM = [1.0, -1.0]
SISO_DEN = [1.0, 0.0, 4.0, 0.0]
SISO_X0 = np.array([-3.9223, 4.0631, 3.7965])
SISO_K = np.array([[-0.508, 3.208, -2.392, 0.001, -0.577, 1.055]])
SISO_K_EIGS = np.array([-2.028, -0.723 + 0.647j, -0.723 - 0.647j, -0.22,
                        -0.147 + 2.09j, -0.147 - 2.09j])
SISO_FILTER = OutputFilterParams(lambdas=(1.0, 2.0, 3.0), gammas=(1.0, 2.0, 3.0))
SISO_T, SISO_TS = 2.0, 0.1
SISO_SIGNAL = SignalSpec.sines([[1.0, 2.5, 4.0, 5.5]])


def reactor_plant() -> StatePlant:
    return StatePlant(REACTOR_A, REACTOR_B)


def siso_plant() -> OutputPlant:
    return OutputPlant.from_transfer_function(SISO_NUM, SISO_DEN)
