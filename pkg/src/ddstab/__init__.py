"""Stabilizing controllers designed directly from filtered input-state or input-output data."""
from .errors import DdstabError
from .lti_sim import OutputPlant, SignalSpec, SineTerm, StatePlant
from .pipeline import (
    ExperimentConfig,
    OutputController,
    StateController,
    closed_loop_simulate,
    reproduce_paper,
    run_algorithm1,
    run_algorithm2,
)
from .realization import OutputFilterParams, StateFilterParams

__all__ = [
    "DdstabError", "ExperimentConfig", "OutputController", "OutputFilterParams", "OutputPlant",
    "SignalSpec", "SineTerm", "StateController", "StateFilterParams", "StatePlant",
    "closed_loop_simulate", "reproduce_paper", "run_algorithm1", "run_algorithm2",
]
