"""Exception hierarchy shared by all ddstab modules."""


class DdstabError(Exception):
    pass


class DimensionError(DdstabError, ValueError):
    pass


class NumericalError(DdstabError):
    """A numerical routine failed to converge or produced unusable output."""


class SingularMatrixError(NumericalError):
    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class InconsistentSystemError(NumericalError):
    """A linear system that should be consistent has a non-negligible residual."""


class AssumptionViolation(DdstabError):
    """A structural assumption (controllability, observability, similarity...) fails."""


class AlignmentError(DdstabError, ValueError):
    """A sampling period or horizon is not aligned with the simulation grid."""


class StructuralError(DdstabError):
    """Block interconnection is not a well-posed cascade."""


class IdentificationError(DdstabError):
    pass


class SolverError(DdstabError):
    """The SDP backend failed for reasons other than infeasibility."""


class SolverInconsistencyError(SolverError):
    """The backend reported success but the recomputed residuals violate the contract."""


class StageError(DdstabError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
