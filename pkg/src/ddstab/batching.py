"""Sampled data batches and excitation diagnostics."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .lti_sim import Trajectory, sample
from .numkit import numerical_rank
from .realization import OutputFilterParams, StateFilterParams, error_batch


@dataclass(frozen=True, eq=False)
class BaselineBatch:
    U: np.ndarray
    X: np.ndarray
    Xdot: np.ndarray
    Ts: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def N(self) -> int:
        return self.U.shape[1]


@dataclass(frozen=True, eq=False)
class StateBatch:
    U: np.ndarray
    Z: np.ndarray
    Zdot: np.ndarray
    E: np.ndarray
    Ts: float
    params: StateFilterParams
    x0: np.ndarray

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def N(self) -> int:
        return self.U.shape[1]

    @property
    def D(self) -> np.ndarray:
        """Injection matrix ``[gamma I_n; 0]`` of the mismatch term; known from tuning alone."""
        return np.vstack([self.params.gamma * np.eye(self.n), np.zeros((self.m, self.n))])

    @property
    def W(self) -> np.ndarray:
        """Compensated derivative batch ``Zdot - D E``."""
        return self.Zdot - self.D @ self.E

    def scaled(self, factor: float) -> "StateBatch":
        return StateBatch(factor * self.U, factor * self.Z, factor * self.Zdot, factor * self.E,
                          self.Ts, self.params, factor * self.x0)


@dataclass(frozen=True, eq=False)
class OutputBatch:
    U: np.ndarray
    Za: np.ndarray
    Zadot: np.ndarray
    Ts: float
    params: OutputFilterParams

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def N(self) -> int:
        return self.U.shape[1]

    @property
    def V(self) -> np.ndarray:
        return self.Za[: self.n]

    @property
    def Z(self) -> np.ndarray:
        return self.Za[self.n:]


@dataclass(frozen=True)
class ExcitationReport:
    required_rank: int
    achieved_rank: int
    smallest_singular_value: float
    gramian_mu: float | None = None
    recommended_N: int | None = None
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def exciting(self) -> bool:
        return self.achieved_rank == self.required_rank

    def to_dict(self) -> dict[str, Any]:
        return {
            "required_rank": self.required_rank,
            "achieved_rank": self.achieved_rank,
            "exciting": self.exciting,
            "smallest_singular_value": self.smallest_singular_value,
            "gramian_mu": self.gramian_mu,
            "recommended_N": self.recommended_N,
            **self.notes,
        }


def build_baseline_batch(traj: Trajectory, Ts: float, N: int, source: str = "plant") -> BaselineBatch:
    return BaselineBatch(
        U=sample(traj, Ts, N, "u"),
        X=sample(traj, Ts, N, source),
        Xdot=sample(traj, Ts, N, f"{source}.dot"),
        Ts=float(Ts),
    )


def build_state_batch(traj: Trajectory, params: StateFilterParams, Ts: float, N: int, x0=None,
                      source: str = "plant", filt: str = "filter") -> StateBatch:
    """Sample ``U, Z, Zdot`` from a filtered experiment and add the mismatch batch ``E``.

    ``x0`` defaults to the measured initial state ``x(0)`` of ``source``.
    """
    if x0 is None:
        x0 = traj.state(source)[:, 0]
    x0 = np.asarray(x0, dtype=float).copy()
    return StateBatch(
        U=sample(traj, Ts, N, "u"),
        Z=sample(traj, Ts, N, filt),
        Zdot=sample(traj, Ts, N, f"{filt}.dot"),
        E=error_batch(x0, params.lam, Ts, N),
        Ts=float(Ts),
        params=params,
        x0=x0,
    )


def build_output_batch(traj: Trajectory, chi_traj: Trajectory, params: OutputFilterParams,
                       Ts: float, N: int, filt: str = "filter") -> OutputBatch:
    """Stack ``chi`` above ``zeta_hat`` (and their exact derivatives)."""
    V = sample(chi_traj, Ts, N, "chi")
    Vdot = sample(chi_traj, Ts, N, "chi.dot")
    return OutputBatch(
        U=sample(traj, Ts, N, "u"),
        Za=np.vstack([V, sample(traj, Ts, N, filt)]),
        Zadot=np.vstack([Vdot, sample(traj, Ts, N, f"{filt}.dot")]),
        Ts=float(Ts),
        params=params,
    )


def _report(stack: np.ndarray, required: int, **kw) -> ExcitationReport:
    rr = numerical_rank(stack)
    sv = rr.singular_values
    relevant = float(sv[required - 1]) if sv.size >= required else 0.0
    return ExcitationReport(required, min(rr.rank, required), relevant, **kw)


def check_excitation_baseline(batch: BaselineBatch) -> ExcitationReport:
    return _report(np.vstack([batch.X, batch.U]), batch.n + batch.m)


def check_excitation_state(batch: StateBatch, gramian: float | None = None) -> ExcitationReport:
    return _report(np.vstack([batch.Z, batch.U]), batch.n + 2 * batch.m, gramian_mu=gramian)


def check_excitation_output(batch: OutputBatch, p: int | None = None,
                            gramian: float | None = None) -> ExcitationReport:
    """``p`` is the number of distinct sinusoids in the input; ``recommended_N = n + 2p``."""
    n = batch.n
    rec = n + 2 * p if p is not None else None
    chi_rank = numerical_rank(batch.V).rank
    return _report(np.vstack([batch.Za, batch.U]), 3 * n + 1, gramian_mu=gramian, recommended_N=rec,
                   notes={"chi_rank": chi_rank, "chi_recommended_N": n})


def gramian_mu(traj: Trajectory, filt: str = "filter") -> float:
    """Smallest eigenvalue of the trapezoidal integral of ``[zeta; u][zeta; u]^T`` over the grid."""
    S = np.vstack([traj.state(filt), traj.inputs])
    w = np.full(S.shape[1], traj.h)
    w[0] = w[-1] = traj.h / 2
    G = (S * w) @ S.T
    return float(max(0.0, np.linalg.eigvalsh((G + G.T) / 2)[0]))


# --- on-disk format --------------------------------------------------------------------------

def _write_csv(path: Path, M: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.atleast_2d(M):
            w.writerow([f"{v:.17g}" for v in row])


def _read_csv(path: Path, rows: int, cols: int) -> np.ndarray:
    with open(path, newline="") as fh:
        data = [[float(v) for v in row] for row in csv.reader(fh) if row]
    M = np.array(data, dtype=float).reshape(rows, cols)
    return M


def save_batch(batch: StateBatch | OutputBatch, directory: str | Path) -> Path:
    """One CSV per matrix plus ``meta.json``; values written with 17 significant digits."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if isinstance(batch, StateBatch):
        meta = {"kind": "state", "n": batch.n, "m": batch.m, "N": batch.N, "Ts": batch.Ts,
                "lambda": batch.params.lam, "gamma": batch.params.gamma, "x0": batch.x0.tolist()}
        mats = {"U": batch.U, "Z": batch.Z, "Zdot": batch.Zdot, "E": batch.E}
    else:
        meta = {"kind": "output", "n": batch.n, "m": 1, "N": batch.N, "Ts": batch.Ts,
                "Lambda": [-v for v in batch.params.lambdas], "ell": list(batch.params.gammas)}
        mats = {"U": batch.U, "Za": batch.Za, "Zadot": batch.Zadot}
    for name, M in mats.items():
        _write_csv(d / f"{name}.csv", M)
    (d / "meta.json").write_text(json.dumps(meta, indent=2))
    return d


def load_batch(directory: str | Path) -> StateBatch | OutputBatch:
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    n, m, N = int(meta["n"]), int(meta["m"]), int(meta["N"])
    if meta["kind"] == "state":
        params = StateFilterParams(float(meta["lambda"]), float(meta["gamma"]))
        return StateBatch(
            U=_read_csv(d / "U.csv", m, N),
            Z=_read_csv(d / "Z.csv", n + m, N),
            Zdot=_read_csv(d / "Zdot.csv", n + m, N),
            E=_read_csv(d / "E.csv", n, N),
            Ts=float(meta["Ts"]),
            params=params,
            x0=np.asarray(meta["x0"], dtype=float),
        )
    if meta["kind"] == "output":
        params = OutputFilterParams(tuple(-float(v) for v in meta["Lambda"]), tuple(meta["ell"]))
        return OutputBatch(
            U=_read_csv(d / "U.csv", 1, N),
            Za=_read_csv(d / "Za.csv", 3 * n, N),
            Zadot=_read_csv(d / "Zadot.csv", 3 * n, N),
            Ts=float(meta["Ts"]),
            params=params,
        )
    raise ValueError(f"unknown batch kind {meta['kind']!r}")
