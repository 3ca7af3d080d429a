"""Low-pass filters, the non-minimal realizations they reconstruct, and ground-truth oracles.

The design path only ever touches :func:`run_state_filter`,
:func:`run_output_filter`, :func:`run_chi` and :func:`error_batch`; these use
the tuning parameters and the measured signals, nothing else. Everything named
``oracle_*`` or ``*_realization`` needs the true plant and exists for
verification.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, DimensionError, SingularMatrixError
from .lti_sim import Block, Exosystem, OutputPlant, StatePlant, Trajectory, simulate_cascade
from .numkit import as_matrix, solve_linear, solve_stacked, spectrum_distance


@dataclass(frozen=True)
class StateFilterParams:
    lam: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.gamma == 0:
            raise ValueError("gamma must be nonzero")


@dataclass(frozen=True)
class OutputFilterParams:
    """``Lambda = diag(-lambdas)`` with ``0 < lambda_1 < ... < lambda_n``, ``ell = gammas``."""

    lambdas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __post_init__(self):
        lams = tuple(float(v) for v in self.lambdas)
        gams = tuple(float(v) for v in self.gammas)
        if len(lams) != len(gams) or not lams:
            raise ValueError("lambdas and gammas must be nonempty and of equal length")
        if lams[0] <= 0 or any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError(f"need 0 < lambda_1 < ... < lambda_n, got {lams}")
        if any(g == 0 for g in gams):
            raise ValueError("all gammas must be nonzero")
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "gammas", gams)

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def Lam(self) -> np.ndarray:
        return -np.diag(self.lambdas)

    @property
    def ell(self) -> np.ndarray:
        return np.array(self.gammas)


@dataclass(frozen=True)
class StateRealization:
    F: np.ndarray
    G: np.ndarray
    D: np.ndarray
    xi_map: np.ndarray  # gamma^{-1} [A + lam I, B]


@dataclass(frozen=True)
class OutputRealization:
    F: np.ndarray
    g: np.ndarray
    D: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    Pi: np.ndarray
    H: np.ndarray
    L: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.theta1, self.theta2])


# --- filters used by the design path -------------------------------------------------------

def state_filter_block(n: int, m: int, params: StateFilterParams, source: str = "plant",
                       name: str = "filter") -> Block:
    gam = params.gamma
    Gx = gam * np.vstack([np.eye(n), np.zeros((m, n))])
    Gu = gam * np.vstack([np.zeros((n, m)), np.eye(m)])
    return Block(name, -params.lam * np.eye(n + m), np.zeros(n + m), {source: Gx, "u": Gu})


def run_state_filter(traj: Trajectory, params: StateFilterParams, source: str = "plant",
                     name: str = "filter") -> Trajectory:
    """Append ``zeta' = -lam zeta + gamma [x; u]``, ``zeta(0) = 0``, to the simulated experiment."""
    n = traj.state(source).shape[0]
    return traj.extend(state_filter_block(n, traj.exo.m, params, source, name))


def output_filter_block(params: OutputFilterParams, source: str = "plant.y",
                        name: str = "filter") -> Block:
    n = params.n
    Lam, ell = params.Lam, params.ell[:, None]
    A = np.block([[Lam, np.zeros((n, n))], [np.zeros((n, n)), Lam]])
    Gy = np.vstack([ell, np.zeros((n, 1))])
    Gu = np.vstack([np.zeros((n, 1)), ell])
    return Block(name, A, np.zeros(2 * n), {source: Gy, "u": Gu})


def run_output_filter(traj: Trajectory, params: OutputFilterParams, source: str = "plant.y",
                      name: str = "filter") -> Trajectory:
    """Append ``zeta' = diag(Lam, Lam) zeta + [ell y; ell u]``, ``zeta(0) = 0``."""
    if traj.exo.m != 1:
        raise DimensionError("output-feedback filters are single-input")
    return traj.extend(output_filter_block(params, source, name))


def run_chi(params: OutputFilterParams, T: float, h: float) -> Trajectory:
    """``chi' = Lam chi``, ``chi(0) = 1``; exactly ``chi_i(t) = exp(-lambda_i t)``."""
    blk = Block("chi", params.Lam, np.ones(params.n))
    return simulate_cascade([blk], Exosystem.empty(1), T, h)


def error_batch(x0, lam: float, Ts: float, N: int) -> np.ndarray:
    """Columns ``exp(-lam k Ts) x0`` for ``k = 0..N-1``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(-1, 1)
    return x0 * np.exp(-lam * Ts * np.arange(N))[None, :]


# --- ground truth ------------------------------------------------------------------------------

def state_realization(plant: StatePlant, params: StateFilterParams) -> StateRealization:
    n, m = plant.n, plant.m
    lam, gam = params.lam, params.gamma
    F = np.block([[plant.A, plant.B], [np.zeros((m, n)), -lam * np.eye(m)]])
    G = np.vstack([np.zeros((n, m)), gam * np.eye(m)])
    D = np.vstack([gam * np.eye(n), np.zeros((m, n))])
    xi = np.hstack([plant.A + lam * np.eye(n), plant.B]) / gam
    return StateRealization(F, G, D, xi)


def state_mismatch(traj: Trajectory, plant: StatePlant, params: StateFilterParams,
                   source: str = "plant", name: str = "filter") -> np.ndarray:
    """``x - gamma^{-1} [A + lam I, B] zeta_hat`` along the grid."""
    real = state_realization(plant, params)
    return traj.state(source) - real.xi_map @ traj.state(name)


def charpoly_adjugate(M) -> tuple[np.ndarray, list[np.ndarray]]:
    """Faddeev-LeVerrier: ``det(sI - M)`` coefficients and matrices ``N_k`` with
    ``adj(sI - M) = sum_{k=1}^{n} N_k s^{n-k}``.

    Coefficients are highest degree first (monic, length n+1).
    """
    M = as_matrix(M)
    n = M.shape[0]
    coeffs = [1.0]
    mats = []
    Mk = np.zeros_like(M)
    for k in range(1, n + 1):
        Mk = M @ Mk + coeffs[-1] * np.eye(n)
        mats.append(Mk)
        coeffs.append(-np.trace(M @ Mk) / k)
    return np.array(coeffs), mats


def _adj_vec_coeffs(M, v) -> np.ndarray:
    """Coefficient matrix (rows: powers s^{n-1}..s^0) of ``adj(sI - M) v``."""
    _, mats = charpoly_adjugate(M)
    return np.array([Nk @ v for Nk in mats])


def theta_matching_matrix(params: OutputFilterParams) -> np.ndarray:
    """Column i holds the coefficients of ``[adj(sI - Lam) ell]_i``."""
    return _adj_vec_coeffs(params.Lam, params.ell)


def oracle_theta(plant: OutputPlant, params: OutputFilterParams) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient matching against the plant's transfer function.

    ``theta1`` solves ``det(sI - Lam) - theta1^T adj(sI - Lam) ell = det(sI - A)`` and
    ``theta2`` solves ``theta2^T adj(sI - Lam) ell = c^T adj(sI - A) b``.
    """
    if plant.n != params.n:
        raise DimensionError(f"filter order {params.n} differs from plant order {plant.n}")
    Mcoef = theta_matching_matrix(params)
    det_lam, _ = charpoly_adjugate(params.Lam)
    det_a, _ = charpoly_adjugate(plant.A)
    num = plant.c @ _adj_vec_coeffs(plant.A, plant.b).T
    try:
        theta1 = solve_linear(Mcoef, det_lam[1:] - det_a[1:])
        theta2 = solve_linear(Mcoef, num)
    except SingularMatrixError as exc:
        raise AssumptionViolation(f"coefficient matching is singular: {exc}") from exc
    return theta1, theta2


def output_fg(params: OutputFilterParams, theta1, theta2) -> tuple[np.ndarray, np.ndarray]:
    n = params.n
    Lam, ell = params.Lam, params.ell
    F = np.block([[Lam + np.outer(ell, theta1), np.outer(ell, theta2)], [np.zeros((n, n)), Lam]])
    g = np.concatenate([np.zeros(n), ell])
    return F, g


def oracle_pi_h_l(plant: OutputPlant, params: OutputFilterParams, theta1, theta2,
                  x0) -> OutputRealization:
    n = plant.n
    F, g = output_fg(params, theta1, theta2)
    theta = np.concatenate([theta1, theta2])
    In, I2n = np.eye(n), np.eye(2 * n)
    Pi = solve_stacked(
        (n, 2 * n),
        [
            ([(In, F), (-plant.A, I2n)], np.zeros((n, 2 * n))),
            ([(In, g[:, None])], plant.b[:, None]),
            ([(plant.c[None, :], I2n)], theta[None, :]),
        ],
    )
    ell = params.ell
    Acl = plant.A - np.outer(Pi[:, :n] @ ell, plant.c)
    w, V = np.linalg.eig(Acl)
    target = np.diag(params.Lam)
    dist = spectrum_distance(w, target)
    if dist > 1e-6 * max(1.0, np.abs(target).max()):
        raise AssumptionViolation(f"A - Pi_1 ell c^T is not similar to Lambda (spectral mismatch {dist:.2e})")
    order = [int(np.argmin(np.abs(w - lam_i))) for lam_i in target]
    H = np.real_if_close(V[:, order], tol=1e6)
    if np.iscomplexobj(H):
        raise AssumptionViolation("eigenvectors of A - Pi_1 ell c^T are not real")
    H = H / np.linalg.norm(H, axis=0)
    D = np.vstack([np.outer(ell, plant.c), np.zeros((n, n))])
    L = H @ np.diag(solve_linear(H, np.asarray(x0, dtype=float)))
    return OutputRealization(F, g, D, np.asarray(theta1), np.asarray(theta2), Pi, H, L)


def output_realization(plant: OutputPlant, params: OutputFilterParams, x0=None) -> OutputRealization:
    theta1, theta2 = oracle_theta(plant, params)
    x0 = np.zeros(plant.n) if x0 is None else x0
    return oracle_pi_h_l(plant, params, theta1, theta2, x0)


def kron_l(H: np.ndarray, x0) -> np.ndarray:
    """``((H^{-1} x0)^T kron H) diag(e_1, ..., e_n)`` evaluated literally."""
    n = H.shape[0]
    a = solve_linear(H, np.asarray(x0, dtype=float))
    big = np.kron(a[None, :], H)  # n x n^2
    E = np.zeros((n * n, n))
    for i in range(n):
        E[i * n:(i + 1) * n, i] = np.eye(n)[:, i]
    return big @ E
