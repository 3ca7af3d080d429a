"""Stabilization LMIs, their conic encoding, SDP backends and gain extraction.

All three designs (derivative baseline, state filter, output filter) share one
template: find ``Q`` (N x d) with

    W Q + Q^T W^T <= -delta I,    Z Q = (Z Q)^T >= I,

and read off ``K = U Q (Z Q)^{-1}``. Strict inequalities are handled by
homogeneity: ``Q`` can be scaled freely, so the normalized margins above are
feasibility-equivalent to the strict version.

The conic encoding uses ``q = vec_row(Q)``, i.e. ``Q[k, j]`` is variable
``k * d + j``. For solving, ``Q`` is first restricted to ``Q = T Y`` where the
columns of ``T`` span the row space of the stacked data ``[Z; U; W]``, scaled
by the inverse singular values. Components of ``Q`` outside that space do not
enter any constraint or the gain, so the reduction is exact; it removes the
huge, flat directions that otherwise stall interior-point solvers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np
import scipy.linalg as sla

from .batching import BaselineBatch, OutputBatch, StateBatch
from .errors import IdentificationError, SingularMatrixError, SolverError, SolverInconsistencyError
from .lti_sim import OutputPlant, StatePlant
from .numkit import is_hurwitz, numerical_rank, spectrum
from .realization import oracle_theta, output_fg, state_realization

DEFAULT_DELTA = 1e-3
CERT_MARGIN = 1e-9
SYM_RTOL = 1e-7
PSD_RTOL = 1e-6
NEG_RTOL = 1e-3


@dataclass(frozen=True, eq=False)
class ConicForm:
    """``min c^T q  s.t.  A_eq q = b_eq,  C_i + mat(G_i q) >= 0`` (row-major ``mat``)."""

    n_vars: int
    A_eq: np.ndarray
    b_eq: np.ndarray
    blocks: tuple[tuple[np.ndarray, np.ndarray], ...]  # (C_i: s x s, G_i: s*s x n_vars)
    c: np.ndarray | None = None

    def block_values(self, q: np.ndarray) -> list[np.ndarray]:
        return [C + (G @ q).reshape(C.shape) for C, G in self.blocks]

    def to_dict(self) -> dict[str, Any]:
        def trip(M):
            r, k = np.nonzero(M)
            return [[int(i), int(j), float(M[i, j])] for i, j in zip(r, k)]

        blocks = []
        for C, G in self.blocks:
            s = C.shape[0]
            lin = [[i // s, i % s, j, v] for i, j, v in trip(G)]
            blocks.append({"size": s, "constant": trip(C), "linear": lin})
        return {
            "n_vars": self.n_vars,
            "equalities": {"rows": int(self.A_eq.shape[0]), "triplets": trip(self.A_eq),
                           "rhs": self.b_eq.tolist()},
            "psd_blocks": blocks,
            "objective": None if self.c is None else self.c.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ConicForm":
        nv = int(d["n_vars"])
        eq = d["equalities"]
        A_eq = np.zeros((int(eq["rows"]), nv))
        for i, j, v in eq["triplets"]:
            A_eq[i, j] = v
        blocks = []
        for b in d["psd_blocks"]:
            s = int(b["size"])
            C = np.zeros((s, s))
            G = np.zeros((s * s, nv))
            for i, j, v in b["constant"]:
                C[i, j] = v
            for r, cc, j, v in b["linear"]:
                G[r * s + cc, j] = v
            blocks.append((C, G))
        c = None if d.get("objective") is None else np.asarray(d["objective"], dtype=float)
        return cls(nv, A_eq, np.asarray(eq["rhs"], dtype=float), tuple(blocks), c)


@dataclass(frozen=True, eq=False)
class LmiProblem:
    Z: np.ndarray
    W: np.ndarray
    delta: float = DEFAULT_DELTA
    U: np.ndarray | None = None
    kind: str = "state"
    minimize_trace: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.Z.shape != self.W.shape:
            raise ValueError(f"Z{self.Z.shape} and W{self.W.shape} must have equal shapes")

    @property
    def shape(self) -> tuple[int, int]:
        """Shape ``(N, d)`` of the decision matrix Q."""
        d, N = self.Z.shape
        return N, d

    @staticmethod
    def _product_operator(M: np.ndarray) -> np.ndarray:
        """Tensor T with ``(M Y)[r, c] = T[r, c] @ vec_row(Y)``."""
        d, N = M.shape
        T = np.zeros((d, d, N * d))
        for c in range(d):
            T[:, c, np.arange(N) * d + c] = M
        return T

    def reduction_basis(self) -> np.ndarray:
        """``T`` (N x r) with ``Q = T Y`` spanning everything the constraints can see."""
        data = [self.Z, self.W] + ([] if self.U is None else [self.U])
        S = np.vstack(data)
        _, s, Vt = np.linalg.svd(S, full_matrices=False)
        r = numerical_rank(S).rank
        return Vt[:r].T / s[:r]

    def conic(self, basis: np.ndarray | None = None) -> ConicForm:
        """Conic form in ``vec_row(Q)``, or in ``vec_row(Y)`` with ``Q = basis @ Y``."""
        N, d = self.shape
        Z, W = self.Z, self.W
        if basis is not None:
            Z, W = Z @ basis, W @ basis
            N = basis.shape[1]
        nv = N * d
        TZ = self._product_operator(Z)
        TW = self._product_operator(W)
        iu = np.triu_indices(d, 1)
        A_eq = (TZ - TZ.transpose(1, 0, 2))[iu]
        b_eq = np.zeros(A_eq.shape[0])
        # sym-half of ZQ minus I; symmetric by construction
        G1 = 0.5 * (TZ + TZ.transpose(1, 0, 2))
        G2 = -(TW + TW.transpose(1, 0, 2))
        blocks = (
            (-np.eye(d), G1.reshape(d * d, nv)),
            (-self.delta * np.eye(d), G2.reshape(d * d, nv)),
        )
        c = G1.reshape(d * d, nv)[:: d + 1].sum(axis=0) if self.minimize_trace else None
        return ConicForm(nv, A_eq, b_eq, blocks, c)

    def to_dict(self) -> dict[str, Any]:
        N, d = self.shape
        out = {"kind": self.kind, "variable_shape": [N, d], "vec_order": "row-major",
               "delta": self.delta}
        out.update(self.conic().to_dict())
        return out

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    def residuals(self, Q: np.ndarray) -> dict[str, float]:
        ZQ = self.Z @ Q
        WQ = self.W @ Q
        return {
            "symmetry": float(np.abs(ZQ - ZQ.T).max()),
            "zq_norm": float(np.linalg.norm(ZQ, 2)),
            "zq_min_eig": float(np.linalg.eigvalsh((ZQ + ZQ.T) / 2)[0]),
            "wq_max_eig": float(np.linalg.eigvalsh(WQ + WQ.T)[-1]),
        }

    def contract_violations(self, res: dict[str, float]) -> list[str]:
        bad = []
        if res["symmetry"] > SYM_RTOL * max(res["zq_norm"], 1.0):
            bad.append(f"ZQ asymmetry {res['symmetry']:.2e}")
        if res["zq_min_eig"] < 1 - PSD_RTOL:
            bad.append(f"min eig(ZQ) = {res['zq_min_eig']:.6g} < 1")
        if res["wq_max_eig"] > -self.delta * (1 - NEG_RTOL):
            bad.append(f"max eig(sym(WQ)) = {res['wq_max_eig']:.6g} > -delta")
        return bad


def encode_baseline_lmi(batch: BaselineBatch, delta: float = DEFAULT_DELTA) -> LmiProblem:
    return LmiProblem(batch.X, batch.Xdot, delta, batch.U, "baseline")


def encode_state_lmi(batch: StateBatch, delta: float = DEFAULT_DELTA) -> LmiProblem:
    return LmiProblem(batch.Z, batch.W, delta, batch.U, "state")


def encode_output_lmi(batch: OutputBatch, delta: float = DEFAULT_DELTA) -> LmiProblem:
    return LmiProblem(batch.Za, batch.Zadot, delta, batch.U, "output")


# --- backends ---------------------------------------------------------------------------------

@dataclass
class BackendResult:
    status: str  # "feasible" | "infeasible"
    q: np.ndarray | None
    message: str = ""


class Backend(Protocol):
    name: str

    def __call__(self, form: ConicForm) -> BackendResult: ...


@dataclass
class CvxpyBackend:
    solver: str = "CLARABEL"
    options: dict[str, Any] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return f"cvxpy/{self.solver}"

    def __call__(self, form: ConicForm) -> BackendResult:
        """Eliminate ``A_eq q = b_eq`` through ``q = q_p + N z`` and solve a pure LMI in ``z``."""
        import cvxpy as cp

        if form.A_eq.shape[0]:
            q_p = np.linalg.lstsq(form.A_eq, form.b_eq, rcond=None)[0]
            if np.linalg.norm(form.A_eq @ q_p - form.b_eq) > 1e-9 * (1 + np.linalg.norm(form.b_eq)):
                return BackendResult("infeasible", None, "equality constraints inconsistent")
            Nsp = sla.null_space(form.A_eq)
        else:
            q_p, Nsp = np.zeros(form.n_vars), np.eye(form.n_vars)
        z = cp.Variable(Nsp.shape[1])
        cons = []
        for C, G in form.blocks:
            s = C.shape[0]
            S = cp.Variable((s, s), symmetric=True)
            # upper triangle only: the lower one would duplicate rows
            r, c = np.triu_indices(s)
            idx = r * s + c
            cons += [cp.vec(S, order="C")[idx] == C[r, c] + G[idx] @ q_p + (G[idx] @ Nsp) @ z, S >> 0]
        obj = cp.Minimize(0) if form.c is None else cp.Minimize((form.c @ Nsp) @ z)
        prob = cp.Problem(obj, cons)
        try:
            prob.solve(solver=self.solver, **self.options)
        except cp.error.SolverError as exc:
            raise SolverError(f"{self.name} failed: {exc}") from exc
        status = prob.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return BackendResult("infeasible", None, status)
        if status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and z.value is not None:
            return BackendResult("feasible", q_p + Nsp @ np.asarray(z.value, dtype=float), status)
        raise SolverError(f"{self.name} returned status {status!r}")


def default_backend() -> Backend:
    return CvxpyBackend()


@dataclass(frozen=True, eq=False)
class LmiSolution:
    status: str
    Q: np.ndarray | None
    residuals: dict[str, float] = field(default_factory=dict)
    backend: str = ""
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_dict(self) -> dict[str, Any]:
        return {"status": self.status, "backend": self.backend, "message": self.message,
                "residuals": self.residuals}


def solve(problem: LmiProblem, backend: Backend | None = None, reduce: bool = True) -> LmiSolution:
    """Solve and independently re-verify the residual contract.

    A rank-deficient ``Z`` is declared infeasible without calling the backend
    (``Z Q >= I`` needs rank d).
    """
    backend = backend or default_backend()
    N, d = problem.shape
    rk = numerical_rank(problem.Z).rank
    if rk < d:
        return LmiSolution("infeasible", None, {}, backend.name,
                           f"rank(Z) = {rk} < {d}: ZQ >= I is impossible")
    basis = problem.reduction_basis() if reduce else None
    res = backend(problem.conic(basis))
    if res.status == "infeasible":
        return LmiSolution("infeasible", None, {}, backend.name, res.message)
    Q = res.q.reshape(-1, d)
    if basis is not None:
        Q = basis @ Q
    residuals = problem.residuals(Q)
    bad = problem.contract_violations(residuals)
    if bad:
        raise SolverInconsistencyError(f"{backend.name} reported success but: " + "; ".join(bad))
    return LmiSolution("feasible", Q, residuals, backend.name, res.message)


# --- gains ------------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GainResult:
    K: np.ndarray
    closed_loop: np.ndarray | None = None
    abscissa: float | None = None
    eigenvalues: np.ndarray | None = None
    certified: bool | None = None
    K_full: np.ndarray | None = None

    def to_dict(self) -> dict[str, Any]:
        eig = None if self.eigenvalues is None else [[float(z.real), float(z.imag)] for z in self.eigenvalues]
        return {"K": self.K.tolist(), "certified": self.certified, "abscissa": self.abscissa,
                "eigenvalues": eig,
                "K_full": None if self.K_full is None else self.K_full.tolist()}


def _gain(U: np.ndarray, Z: np.ndarray, Q: np.ndarray) -> np.ndarray:
    ZQ = Z @ Q
    cond = np.linalg.cond(ZQ)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularMatrixError("ZQ is singular", cond)
    return np.linalg.solve(ZQ.T, (U @ Q).T).T


def certify(closed_loop: np.ndarray, K: np.ndarray, margin: float = CERT_MARGIN, **kw) -> GainResult:
    ok, alpha = is_hurwitz(closed_loop, margin)
    return GainResult(K, closed_loop, alpha, spectrum(closed_loop).eigenvalues, ok, **kw)


def gain_baseline(batch: BaselineBatch, Q: np.ndarray, plant: StatePlant | None = None) -> GainResult:
    K = _gain(batch.U, batch.X, Q)
    if plant is None:
        return GainResult(K)
    return certify(plant.A + plant.B @ K, K)


def state_closed_loop(plant: StatePlant, params, K) -> np.ndarray:
    real = state_realization(plant, params)
    return real.F + real.G @ K


def output_closed_loop(plant: OutputPlant, params, K) -> np.ndarray:
    F, g = output_fg(params, *oracle_theta(plant, params))
    return F + np.outer(g, K)


def gain_state(batch: StateBatch, Q: np.ndarray, plant: StatePlant | None = None) -> GainResult:
    """``K = U Q (Z Q)^{-1}``; certified on ``F + G K`` when the true plant is supplied."""
    K = _gain(batch.U, batch.Z, Q)
    if plant is None:
        return GainResult(K)
    return certify(state_closed_loop(plant, batch.params, K), K)


def gain_output(batch: OutputBatch, Q: np.ndarray, plant: OutputPlant | None = None) -> GainResult:
    """``[K_chi K] = U Q (Z_a Q)^{-1}``, keeping only the filter part ``K``."""
    K_full = _gain(batch.U, batch.Za, Q)
    K = K_full[:, batch.n:]
    if plant is None:
        return GainResult(K, K_full=K_full)
    return certify(output_closed_loop(plant, batch.params, K), K, K_full=K_full)


def augmented_output_closed_loop(params, real, K_full: np.ndarray) -> np.ndarray:
    """``[[Lam, 0], [D L + g K_chi, F + g K]]`` for the unprojected gain."""
    n = params.n
    K_full = np.atleast_2d(K_full)
    K_chi, K = K_full[:, :n], K_full[:, n:]
    g = real.g[:, None]
    return np.block([[params.Lam, np.zeros((n, 2 * n))],
                     [real.D @ real.L + g @ K_chi, real.F + g @ K]])


def identify_fg(batch: StateBatch) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares ``[F G] = (Zdot - D E) pinv([Z; U])``; an independent model-based check."""
    R = np.vstack([batch.Z, batch.U])
    rr = numerical_rank(R)
    need = batch.n + 2 * batch.m
    if rr.rank < need:
        raise IdentificationError(f"regressor rank {rr.rank} < {need}: F, G not identifiable")
    FG = batch.W @ np.linalg.pinv(R)
    d = batch.n + batch.m
    return FG[:, :d], FG[:, d:]
