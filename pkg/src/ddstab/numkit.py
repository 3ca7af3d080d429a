"""Small dense linear-algebra kernel.

Everything here works on plain ``numpy`` arrays. The heavy lifting is done by
LAPACK through numpy/scipy; this module adds dimension checks, residual-based
post-conditions and the handful of control-flavoured helpers (rank with an
explicit tolerance, Hurwitz test, controllability matrix) used everywhere else.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import (
    DimensionError,
    InconsistentSystemError,
    NumericalError,
    SingularMatrixError,
)

RANK_RTOL = 1e-12
COND_LIMIT = 1e12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residual_bound: float

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real)) if len(self) else -np.inf


@dataclass(frozen=True)
class RankResult:
    rank: int
    singular_values: np.ndarray
    tolerance_used: float

    @property
    def smallest(self) -> float:
        """Smallest singular value (0.0 for an empty matrix)."""
        return float(self.singular_values[-1]) if self.singular_values.size else 0.0


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError(f"{name} has non-finite entries")
    return M


def _square(M, name: str = "matrix") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def expm(M) -> np.ndarray:
    # scipy implements Al-Mohy/Higham scaling-and-squaring with Pade-13
    return sla.expm(_square(M))


def spectrum(M) -> Spectrum:
    """Eigenvalues of ``M`` with conjugate pairs adjacent (sorted by real, then imaginary part).

    ``residual_bound`` is the largest ``||M v - lambda v||`` over the computed
    unit eigenvectors.
    """
    M = _square(M)
    if M.size == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0.0)
    try:
        w, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    V = V / np.linalg.norm(V, axis=0)
    res = np.linalg.norm(M @ V - V * w, axis=0)
    order = np.lexsort((w.imag, np.round(w.real, 12)))
    return Spectrum(w[order].astype(complex), float(res.max()))


def is_hurwitz(M, margin: float = 0.0) -> tuple[bool, float]:
    """Return ``(max Re(eig) < -margin, spectral abscissa)``."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    alpha = spectrum(M).abscissa
    return bool(alpha < -margin), alpha


def numerical_rank(M, tol: float | None = None) -> RankResult:
    M = as_matrix(M)
    if M.size == 0:
        return RankResult(0, np.zeros(0), 0.0 if tol is None else tol)
    s = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = max(M.shape) * (s[0] if s.size else 0.0) * RANK_RTOL
    return RankResult(int(np.sum(s > tol)), s, float(tol))


def solve_linear(A, B, *, lstsq: bool = False) -> np.ndarray:
    """Solve ``A X = B``.

    In the default mode ``A`` must be square and well conditioned; otherwise a
    :class:`SingularMatrixError` carrying the condition estimate is raised.
    ``lstsq=True`` returns the minimum-norm least-squares solution instead.
    """
    A = as_matrix(A, "A")
    B = np.asarray(B, dtype=float)
    vector = B.ndim == 1
    B = B.reshape(A.shape[0], -1)
    if lstsq:
        X = np.linalg.lstsq(A, B, rcond=None)[0]
    else:
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularMatrixError("coefficient matrix is singular or ill-conditioned", cond)
        X = np.linalg.solve(A, B)
    return X.ravel() if vector else X


def solve_stacked(
    shape: tuple[int, int],
    equations: Iterable[tuple[Sequence[tuple[np.ndarray, np.ndarray]], np.ndarray]],
    rtol: float = 1e-8,
) -> np.ndarray:
    """Solve a set of generalized Sylvester relations ``sum_k L_k X R_k = C`` for X.

    Each equation is ``(terms, C)`` with ``terms`` a list of ``(L, R)`` pairs.
    All relations are vectorized with ``vec(L X R) = (R^T kron L) vec(X)``
    (column-major vec), stacked, and solved in the least-squares sense. The
    system is expected to be consistent; a relative residual above ``rtol``
    raises :class:`InconsistentSystemError`.
    """
    rows, cols = shape
    blocks, rhs, scales = [], [], []
    eqs = [(list(terms), np.atleast_2d(np.asarray(C, dtype=float))) for terms, C in equations]
    for terms, C in eqs:
        op = sum(np.kron(np.atleast_2d(R).T, np.atleast_2d(L)) for L, R in terms)
        blocks.append(op)
        rhs.append(C.reshape(-1, order="F"))
    Kmat = np.vstack(blocks)
    c = np.concatenate(rhs)
    x = np.linalg.lstsq(Kmat, c, rcond=None)[0]
    X = x.reshape((rows, cols), order="F")

    for terms, C in eqs:
        lhs = sum(np.atleast_2d(L) @ X @ np.atleast_2d(R) for L, R in terms)
        scale = sum(np.linalg.norm(L) * np.linalg.norm(X) * np.linalg.norm(R) for L, R in terms)
        scales.append(np.linalg.norm(lhs - C) / max(1.0, scale + np.linalg.norm(C)))
    worst = max(scales) if scales else 0.0
    if worst > rtol:
        raise InconsistentSystemError(f"stacked system inconsistent: relative residual {worst:.3e}")
    return X


def controllability_matrix(A, B) -> np.ndarray:
    A = _square(A, "A")
    B = as_matrix(B, "B").reshape(A.shape[0], -1)
    cols = [B]
    for _ in range(A.shape[0] - 1):
        cols.append(A @ cols[-1])
    return np.hstack(cols)


def is_controllable(A, B) -> bool:
    A = _square(A, "A")
    return numerical_rank(controllability_matrix(A, B), tol=None).rank == A.shape[0]


def sym(M: np.ndarray) -> np.ndarray:
    """``M + M^T`` (not halved)."""
    return M + M.T


def spectrum_distance(computed, reference) -> float:
    """Largest distance between two eigenvalue multisets under the best one-to-one matching."""
    a = np.asarray(computed, dtype=complex).ravel()
    b = np.asarray(reference, dtype=complex).ravel()
    if a.size != b.size:
        raise DimensionError(f"spectra have different sizes: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
