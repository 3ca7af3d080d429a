"""Exact simulation of LTI cascades driven by sums of sinusoids.

Inputs are generated by an autonomous exosystem ``w' = S w, u = C_u w``, so
the exosystem together with every downstream LTI block forms one autonomous
linear system ``z' = M z``. Its solution on a uniform grid is obtained by
repeated multiplication with the constant propagator ``expm(M h)``; there is no
integration error to speak of, only roundoff.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import AlignmentError, DimensionError, StructuralError
from .numkit import as_matrix, expm, is_controllable

GRID_RTOL = 1e-9


@dataclass(frozen=True)
class StatePlant:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise DimensionError(f"inconsistent plant shapes A{A.shape}, B{B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def is_controllable(self) -> bool:
        return is_controllable(self.A, self.B)


@dataclass(frozen=True)
class OutputPlant:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        n = A.shape[0]
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.shape != (n, n) or b.shape != (n,) or c.shape != (n,):
            raise DimensionError(f"inconsistent SISO plant shapes A{A.shape}, b{b.shape}, c{c.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def is_controllable(self) -> bool:
        return is_controllable(self.A, self.b[:, None])

    def is_observable(self) -> bool:
        return is_controllable(self.A.T, self.c[:, None])

    @classmethod
    def from_transfer_function(cls, num: Sequence[float], den: Sequence[float]) -> "OutputPlant":
        """Controllability canonical form of ``num(s)/den(s)`` (coefficients, highest degree first).

        ``A`` is the companion matrix with ones on the superdiagonal and the
        negated monic denominator coefficients in the last row; ``b = e_n``.
        """
        den = np.trim_zeros(np.asarray(den, dtype=float), "f")
        num = np.trim_zeros(np.asarray(num, dtype=float), "f")
        n = den.size - 1
        if n < 1 or num.size > n:
            raise DimensionError("transfer function must be strictly proper with degree >= 1")
        lead = den[0]
        den, num = den / lead, num / lead
        A = np.zeros((n, n))
        A[:-1, 1:] = np.eye(n - 1)
        A[-1, :] = 0.0 - den[1:][::-1]
        b = np.zeros(n)
        b[-1] = 1.0
        c = np.zeros(n)
        c[: num.size] = num[::-1]
        return cls(A, b, c)


@dataclass(frozen=True)
class SineTerm:
    amplitude: float
    omega: float
    phase: float = 0.0


@dataclass(frozen=True)
class SignalSpec:
    """Per-channel sums ``sum_k a_k sin(w_k t + phi_k) + offset``."""

    channels: tuple[tuple[SineTerm, ...], ...]
    offsets: tuple[float, ...] | None = None

    def __post_init__(self):
        chans = tuple(tuple(t if isinstance(t, SineTerm) else SineTerm(*t) for t in ch) for ch in self.channels)
        for ch in chans:
            for t in ch:
                if t.omega < 0:
                    raise ValueError("frequencies must be nonnegative")
        object.__setattr__(self, "channels", chans)
        offs = tuple(float(o) for o in (self.offsets or (0.0,) * len(chans)))
        if len(offs) != len(chans):
            raise DimensionError("one offset per channel required")
        object.__setattr__(self, "offsets", offs)

    @property
    def m(self) -> int:
        return len(self.channels)

    @property
    def distinct_frequencies(self) -> int:
        """Number ``p`` of distinct positive frequencies across all channels."""
        return len({t.omega for ch in self.channels for t in ch if t.omega > 0 and t.amplitude != 0})

    def evaluate(self, t) -> np.ndarray:
        """Direct trigonometric evaluation, shape ``(m, len(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((self.m, t.size))
        for i, ch in enumerate(self.channels):
            out[i] = self.offsets[i]
            for term in ch:
                out[i] += term.amplitude * np.sin(term.omega * t + term.phase)
        return out

    def scaled(self, factor: float) -> "SignalSpec":
        return SignalSpec(
            tuple(tuple(SineTerm(factor * t.amplitude, t.omega, t.phase) for t in ch) for ch in self.channels),
            tuple(factor * o for o in self.offsets),
        )

    @classmethod
    def zero(cls, m: int) -> "SignalSpec":
        return cls(tuple(() for _ in range(m)))

    @classmethod
    def sines(cls, freqs_per_channel: Sequence[Sequence[float]], amplitude: float = 1.0) -> "SignalSpec":
        return cls(tuple(tuple(SineTerm(amplitude, float(w)) for w in ch) for ch in freqs_per_channel))


@dataclass(frozen=True)
class Exosystem:
    S: np.ndarray
    w0: np.ndarray
    C_u: np.ndarray

    @property
    def m(self) -> int:
        return self.C_u.shape[0]

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    @classmethod
    def empty(cls, m: int = 0) -> "Exosystem":
        """Exosystem producing ``u = 0`` with ``m`` channels and no state."""
        return cls(np.zeros((0, 0)), np.zeros(0), np.zeros((m, 0)))


def build_exosystem(spec: SignalSpec) -> Exosystem:
    """One 2x2 rotation block per sinusoid, one 1x1 zero block per nonzero constant."""
    S_blocks, w0, picks = [], [], []
    for i, ch in enumerate(spec.channels):
        const = spec.offsets[i]
        for term in ch:
            if term.omega == 0.0:
                const += term.amplitude * math.sin(term.phase)
                continue
            w = term.omega
            S_blocks.append(np.array([[0.0, w], [-w, 0.0]]))
            # (sin, cos) of (w t + phase)
            w0.extend([math.sin(term.phase), math.cos(term.phase)])
            picks.append((i, term.amplitude, 2))
        if const != 0.0:
            S_blocks.append(np.zeros((1, 1)))
            w0.append(const)
            picks.append((i, 1.0, 1))
    dim = len(w0)
    S = sla.block_diag(*S_blocks) if S_blocks else np.zeros((0, 0))
    C_u = np.zeros((spec.m, dim))
    col = 0
    for ch, gain, size in picks:
        C_u[ch, col] = gain
        col += size
    return Exosystem(S, np.asarray(w0, dtype=float), C_u)


@dataclass(frozen=True, eq=False)
class Block:
    """LTI block ``x' = A x + sum_src gain_src * src``.

    A source is ``"u"`` (the exosystem output), the name of an earlier block
    (its full state), or ``"<block>.y"`` for that block's measured output
    ``C_out x``.
    """

    name: str
    A: np.ndarray
    x0: np.ndarray
    inputs: Mapping[str, np.ndarray] = field(default_factory=dict)
    labels: tuple[str, ...] | None = None
    C_out: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def state_labels(self) -> tuple[str, ...]:
        return self.labels or tuple(f"{self.name}{i + 1}" for i in range(self.dim))


def plant_block(plant: StatePlant | OutputPlant, x0, name: str = "plant") -> Block:
    if isinstance(plant, StatePlant):
        B, C = plant.B, None
    else:
        B, C = plant.b[:, None], plant.c[None, :]
    return Block(name, plant.A, np.asarray(x0, dtype=float).reshape(-1), {"u": B},
                 tuple(f"x{i + 1}" for i in range(plant.n)), C)


def aggregate(blocks: Sequence[Block], exo: Exosystem) -> tuple[np.ndarray, np.ndarray, dict[str, slice]]:
    """Assemble ``(M, z0, layout)`` of the autonomous system ``[exo; blocks]``."""
    layout: dict[str, slice] = {"exo": slice(0, exo.dim)}
    offset = exo.dim
    for blk in blocks:
        if blk.name in layout or blk.name == "u":
            raise StructuralError(f"duplicate or reserved block name {blk.name!r}")
        A = as_matrix(blk.A, f"{blk.name}.A")
        if A.shape[0] != A.shape[1] or np.asarray(blk.x0).size != A.shape[0]:
            raise DimensionError(f"block {blk.name!r} has inconsistent dimensions")
        layout[blk.name] = slice(offset, offset + blk.dim)
        offset += blk.dim
    M = np.zeros((offset, offset))
    z0 = np.zeros(offset)
    M[layout["exo"], layout["exo"]] = exo.S
    z0[layout["exo"]] = exo.w0
    seen = {"u"}
    outputs = {b.name: as_matrix(b.C_out, f"{b.name}.C_out") for b in blocks if b.C_out is not None}
    for blk in blocks:
        sl = layout[blk.name]
        M[sl, sl] = blk.A
        z0[sl] = np.asarray(blk.x0, dtype=float).reshape(-1)
        for src, gain in blk.inputs.items():
            gain = np.atleast_2d(np.asarray(gain, dtype=float))
            base = src[:-2] if src.endswith(".y") else src
            if base not in seen:
                # a block fed by itself or by a later block closes a loop
                raise StructuralError(f"block {blk.name!r} reads {src!r}, which is not upstream: not a cascade")
            if src.endswith(".y"):
                C = outputs.get(base)
                if C is None:
                    raise StructuralError(f"block {base!r} has no measured output")
                if gain.shape != (blk.dim, C.shape[0]):
                    raise DimensionError(f"gain {blk.name}<-{src} has shape {gain.shape}")
                M[sl, layout[base]] += gain @ C
            elif src == "u":
                if gain.shape != (blk.dim, exo.m):
                    raise DimensionError(f"gain {blk.name}<-u has shape {gain.shape}")
                M[sl, layout["exo"]] += gain @ exo.C_u
            else:
                if gain.shape != (blk.dim, layout[src].stop - layout[src].start):
                    raise DimensionError(f"gain {blk.name}<-{src} has shape {gain.shape}")
                M[sl, layout[src]] += gain
        seen.add(blk.name)
    return M, z0, layout


def grid_steps(T: float, h: float) -> int:
    if h <= 0 or T < 0:
        raise AlignmentError("need h > 0 and T >= 0")
    k = round(T / h)
    if abs(k * h - T) > GRID_RTOL * max(T, h):
        raise AlignmentError(f"T={T} is not a multiple of h={h}")
    return int(k)


def propagate(M: np.ndarray, z0: np.ndarray, steps: int, h: float) -> np.ndarray:
    """States ``z(k h)`` for ``k = 0..steps`` as columns, via one cached propagator."""
    Phi = expm(M * h)
    Z = np.empty((z0.size, steps + 1))
    Z[:, 0] = z0
    for k in range(steps):
        Z[:, k + 1] = Phi @ Z[:, k]
    return Z


@dataclass(frozen=True, eq=False)
class Trajectory:
    blocks: tuple[Block, ...]
    exo: Exosystem
    h: float
    times: np.ndarray
    states: np.ndarray  # aggregate state, columns are grid points
    derivs: np.ndarray
    layout: Mapping[str, slice]
    M: np.ndarray

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def state(self, name: str) -> np.ndarray:
        if name == "u":
            return self.inputs
        return self.states[self.layout[name]]

    def deriv(self, name: str) -> np.ndarray:
        return self.derivs[self.layout[name]]

    @property
    def inputs(self) -> np.ndarray:
        return self.exo.C_u @ self.states[self.layout["exo"]]

    def output(self, name: str) -> np.ndarray:
        blk = next(b for b in self.blocks if b.name == name)
        if blk.C_out is None:
            raise KeyError(f"block {name!r} has no measured output")
        return blk.C_out @ self.state(name)

    def channel(self, selector: str) -> np.ndarray:
        """``"u"``, a block name, ``"<block>.y"`` or ``"<block>.dot"`` (exact derivative)."""
        if selector.endswith(".dot"):
            return self.deriv(selector[:-4])
        if selector.endswith(".y"):
            return self.output(selector[:-2])
        return self.state(selector)

    def extend(self, *blocks: Block) -> "Trajectory":
        """Re-simulate with extra downstream blocks appended (same grid, same exosystem)."""
        return simulate_cascade(self.blocks + tuple(blocks), self.exo, self.T, self.h)

    def to_csv(self, path: str | Path) -> None:
        """Write ``t, <block states>, <inputs>, <block derivatives>`` with 17 significant digits."""
        names, rows = ["t"], [self.times[None, :]]
        for blk in self.blocks:
            names += list(blk.state_labels())
            rows.append(self.state(blk.name))
        names += [f"u{i + 1}" for i in range(self.exo.m)]
        rows.append(self.inputs)
        for blk in self.blocks:
            names += [f"d_{lab}" for lab in blk.state_labels()]
            rows.append(self.deriv(blk.name))
        data = np.vstack(rows).T
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for row in data:
                w.writerow([f"{v:.17g}" for v in row])


def simulate_cascade(blocks: Sequence[Block], exo: Exosystem, T: float, h: float) -> Trajectory:
    blocks = tuple(blocks)
    M, z0, layout = aggregate(blocks, exo)
    steps = grid_steps(T, h)
    Z = propagate(M, z0, steps, h)
    return Trajectory(blocks, exo, float(h), np.arange(steps + 1) * h, Z, M @ Z, layout, M)


def sample_indices(traj: Trajectory, Ts: float, N: int) -> np.ndarray:
    if N < 1:
        raise ValueError("N must be >= 1")
    stride = Ts / traj.h
    k = round(stride)
    if k < 1 or abs(k - stride) > GRID_RTOL * stride:
        raise AlignmentError(f"Ts={Ts} is not a multiple of the grid step h={traj.h}")
    idx = np.arange(N) * k
    if idx[-1] >= traj.times.size:
        raise AlignmentError(f"(N-1)*Ts = {(N - 1) * Ts} exceeds the horizon T = {traj.T}")
    return idx


def sample(traj: Trajectory, Ts: float, N: int, *selectors: str) -> np.ndarray:
    """Stack the selected channels at ``t = 0, Ts, ..., (N-1) Ts`` (no interpolation)."""
    idx = sample_indices(traj, Ts, N)
    return np.vstack([traj.channel(s)[:, idx] for s in selectors])
