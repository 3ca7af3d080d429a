"""End-to-end design runs, closed-loop simulation and reruns of the two worked examples."""
from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from . import benchmarks as bm
from .batching import (
    OutputBatch,
    StateBatch,
    build_baseline_batch,
    build_output_batch,
    build_state_batch,
    check_excitation_baseline,
    check_excitation_output,
    check_excitation_state,
    gramian_mu,
)
from .errors import DdstabError, StageError
from .lmi_design import (
    DEFAULT_DELTA,
    Backend,
    GainResult,
    augmented_output_closed_loop,
    certify,
    encode_baseline_lmi,
    encode_output_lmi,
    encode_state_lmi,
    gain_baseline,
    gain_output,
    gain_state,
    output_closed_loop,
    solve,
    state_closed_loop,
)
from .lti_sim import (
    OutputPlant,
    SignalSpec,
    SineTerm,
    StatePlant,
    build_exosystem,
    grid_steps,
    plant_block,
    propagate,
    simulate_cascade,
)
from .numkit import is_hurwitz, spectrum, spectrum_distance
from .realization import (
    OutputFilterParams,
    StateFilterParams,
    output_realization,
    run_chi,
    run_output_filter,
    run_state_filter,
    state_realization,
)

log = logging.getLogger(__name__)

DECAY_RATIO = 1e-3
HORIZON_CAP = 200.0
CL_STEPS = 4000
STATE_IDENTITY_RTOL = 1e-9
OUTPUT_IDENTITY_RTOL = 1e-8


# --- configuration ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    kind: str
    plant: StatePlant | OutputPlant
    signal: SignalSpec
    filter: StateFilterParams | OutputFilterParams
    T: float
    Ts: float
    h: float | None = None
    x0: np.ndarray | None = None
    x0_range: tuple[float, float] = (-1.0, 1.0)
    delta: float = DEFAULT_DELTA
    seed: int = 0
    zc0: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("state", "output"):
            raise ValueError(f"kind must be 'state' or 'output', got {self.kind!r}")
        if self.kind == "state" and not isinstance(self.plant, StatePlant):
            raise ValueError("state design needs a StatePlant")
        if self.kind == "output" and not isinstance(self.plant, OutputPlant):
            raise ValueError("output design needs an OutputPlant")
        # N = T / Ts must be an integer
        self.N

    @property
    def N(self) -> int:
        return grid_steps(self.T, self.Ts)

    @property
    def step(self) -> float:
        return self.h if self.h is not None else self.Ts / 100

    @property
    def n(self) -> int:
        return self.plant.n

    def initial_state(self) -> np.ndarray:
        if self.x0 is not None:
            return np.asarray(self.x0, dtype=float)
        lo, hi = self.x0_range
        return np.random.default_rng(self.seed).uniform(lo, hi, self.n)

    def controller_initial_state(self) -> np.ndarray:
        dim = self.n + self.plant.m if self.kind == "state" else 2 * self.n
        return np.zeros(dim) if self.zc0 is None else np.asarray(self.zc0, dtype=float)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, x0=None)

    def to_dict(self) -> dict[str, Any]:
        p = self.plant
        plant = {"A": p.A.tolist(), "B": p.B.tolist()} if isinstance(p, StatePlant) else \
            {"A": p.A.tolist(), "b": p.b.tolist(), "c": p.c.tolist()}
        f = self.filter
        filt = {"lambda": f.lam, "gamma": f.gamma} if isinstance(f, StateFilterParams) else \
            {"lambdas": list(f.lambdas), "gammas": list(f.gammas)}
        signal = {
            "channels": [[[t.amplitude, t.omega, t.phase] for t in ch] for ch in self.signal.channels],
            "offsets": list(self.signal.offsets),
        }
        return {
            "kind": self.kind, "plant": plant, "signal": signal, "filter": filt,
            "T": self.T, "Ts": self.Ts, "h": self.step,
            "x0": self.initial_state().tolist(), "x0_range": list(self.x0_range),
            "delta": self.delta, "seed": self.seed,
            "zc0": self.controller_initial_state().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        """Parse a JSON config; anything missing falls back to the canned example of that kind."""
        kind = d.get("kind", "state")
        base = reactor_config() if kind == "state" else siso_config()
        kw: dict[str, Any] = {}
        if "plant" in d:
            kw["plant"] = parse_plant(d["plant"], kind)
        if "signal" in d:
            kw["signal"] = parse_signal(d["signal"])
        if "filter" in d:
            f = d["filter"]
            kw["filter"] = StateFilterParams(float(f["lambda"]), float(f["gamma"])) if kind == "state" \
                else OutputFilterParams(tuple(f["lambdas"]), tuple(f["gammas"]))
        for key in ("T", "Ts", "h", "delta"):
            if d.get(key) is not None:
                kw[key] = float(d[key])
        if "seed" in d:
            kw["seed"] = int(d["seed"])
        x0 = d.get("x0", "unset")
        if isinstance(x0, dict):
            kw["x0"] = None
            kw["x0_range"] = tuple(float(v) for v in x0["uniform"])
        elif x0 != "unset":
            kw["x0"] = None if x0 is None else np.asarray(x0, dtype=float)
        if d.get("x0_range") is not None:
            kw["x0_range"] = tuple(float(v) for v in d["x0_range"])
        if d.get("zc0") is not None:
            kw["zc0"] = np.asarray(d["zc0"], dtype=float)
        return replace(base, **kw)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def parse_plant(d: Any, kind: str) -> StatePlant | OutputPlant:
    if d == "reactor":
        return bm.reactor_plant()
    if d == "siso":
        return bm.siso_plant()
    if "num" in d:
        return OutputPlant.from_transfer_function(d["num"], d["den"])
    if kind == "state":
        return StatePlant(np.asarray(d["A"], dtype=float), np.asarray(d["B"], dtype=float))
    return OutputPlant(np.asarray(d["A"], dtype=float), d["b"], d["c"])


def parse_signal(d: dict[str, Any]) -> SignalSpec:
    if "frequencies" in d:
        return SignalSpec.sines(d["frequencies"], float(d.get("amplitude", 1.0)))
    chans = tuple(tuple(SineTerm(*map(float, t)) for t in ch) for ch in d["channels"])
    return SignalSpec(chans, tuple(d["offsets"]) if d.get("offsets") else None)


def reactor_config(**kw) -> ExperimentConfig:
    cfg = ExperimentConfig("state", bm.reactor_plant(), bm.REACTOR_SIGNAL, bm.REACTOR_FILTER,
                           bm.REACTOR_T, bm.REACTOR_TS, x0_range=(-1.0, 1.0))
    return replace(cfg, **kw)


def siso_config(**kw) -> ExperimentConfig:
    cfg = ExperimentConfig("output", bm.siso_plant(), bm.SISO_SIGNAL, bm.SISO_FILTER,
                           bm.SISO_T, bm.SISO_TS, x0_range=(-5.0, 5.0))
    return replace(cfg, **kw)


# --- controllers and closed loop ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StateController:
    """``zc' = -lam zc + gamma [x; u]``, ``u = K zc``."""

    params: StateFilterParams
    K: np.ndarray

    def closed_loop_matrix(self, plant: StatePlant) -> np.ndarray:
        n, m = plant.n, plant.m
        lam, gam = self.params.lam, self.params.gamma
        K = np.atleast_2d(self.K)
        top = np.hstack([plant.A, plant.B @ K])
        inject = gam * np.vstack([np.eye(n), np.zeros((m, n))])
        bottom = np.hstack([inject, -lam * np.eye(n + m) + gam * np.vstack([np.zeros((n, n + m)), K])])
        return np.vstack([top, bottom])


@dataclass(frozen=True, eq=False)
class OutputController:
    """``zc' = diag(Lam, Lam) zc + [ell y; ell u]``, ``u = K zc``."""

    params: OutputFilterParams
    K: np.ndarray

    def closed_loop_matrix(self, plant: OutputPlant) -> np.ndarray:
        n = plant.n
        Lam, ell = self.params.Lam, self.params.ell[:, None]
        K = np.atleast_2d(self.K)
        Z = np.zeros((n, n))
        filt = np.block([[Lam, Z], [Z, Lam]]) + np.vstack([np.zeros((n, 2 * n)), ell @ K])
        top = np.hstack([plant.A, plant.b[:, None] @ K])
        bottom = np.hstack([np.vstack([ell @ plant.c[None, :], Z]), filt])
        return np.vstack([top, bottom])


@dataclass(frozen=True, eq=False)
class ClosedLoopResult:
    times: np.ndarray
    states: np.ndarray
    M: np.ndarray
    abscissa: float
    decay_ratio: float
    fitted_rate: float

    @property
    def decayed(self) -> bool:
        return self.decay_ratio <= DECAY_RATIO

    def metrics(self) -> dict[str, float]:
        return {"horizon": float(self.times[-1]), "abscissa": self.abscissa,
                "decay_ratio": self.decay_ratio, "fitted_rate": self.fitted_rate,
                "decayed": self.decayed}


def closed_loop_simulate(plant, controller, x0, zc0, T: float | None = None,
                         steps: int = CL_STEPS) -> ClosedLoopResult:
    """Exact simulation of plant + dynamic controller on ``[0, T]``.

    Default horizon is ``10 / |abscissa|`` capped at 200 s, doubled (up to the
    cap) while transient growth keeps the norm ratio above the decay threshold.
    The fitted rate is minus the least-squares slope of ``log ||(x, zc)||`` over
    the second half of the horizon.
    """
    M = controller.closed_loop_matrix(plant)
    _, alpha = is_hurwitz(M)
    z0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(zc0, dtype=float)])
    auto = T is None
    if auto:
        T = min(10.0 / abs(alpha), HORIZON_CAP) if alpha < 0 else HORIZON_CAP
    while True:
        h = T / steps
        Z = propagate(M, z0, steps, h)
        norms = np.linalg.norm(Z, axis=0)
        ratio = float(norms[-1] / norms[0]) if norms[0] > 0 else 0.0
        if not auto or ratio <= DECAY_RATIO or T >= HORIZON_CAP or alpha >= 0:
            break
        T = min(2 * T, HORIZON_CAP)
    t = np.arange(steps + 1) * h
    half = slice(steps // 2, None)
    with np.errstate(divide="ignore"):
        logs = np.log(norms[half])
    ok = np.isfinite(logs)
    rate = float(-np.polyfit(t[half][ok], logs[ok], 1)[0]) if ok.sum() > 2 else float("inf")
    return ClosedLoopResult(t, Z, M, float(alpha), ratio, rate)


# --- reports ----------------------------------------------------------------------------------

@dataclass
class DesignReport:
    kind: str
    config: dict[str, Any]
    excitation: dict[str, Any] | None = None
    identity_residual: float | None = None
    lmi: dict[str, Any] | None = None
    gain: dict[str, Any] | None = None
    certification: dict[str, Any] | None = None
    closed_loop: dict[str, Any] | None = None
    error: str | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return bool(self.lmi and self.lmi["status"] == "feasible")

    @property
    def certified(self) -> bool:
        return bool(self.certification and self.certification.get("certified"))

    def to_dict(self, timings: bool = True) -> dict[str, Any]:
        d = {k: getattr(self, k) for k in ("kind", "config", "excitation", "identity_residual", "lmi",
                                            "gain", "certification", "closed_loop", "error")}
        d["feasible"] = self.feasible
        d["certified"] = self.certified
        if timings:
            d["timings"] = self.timings
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(to_jsonable(self.to_dict(timings)), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"design ({self.kind})"]
        if self.excitation:
            e = self.excitation
            lines.append(f"  excitation   rank {e['achieved_rank']}/{e['required_rank']}"
                         f"  sigma_min {e['smallest_singular_value']:.3e}")
        if self.identity_residual is not None:
            lines.append(f"  batch ident  residual {self.identity_residual:.3e}")
        if self.lmi:
            lines.append(f"  lmi          {self.lmi['status']}  ({self.lmi.get('message', '')})")
        if self.gain:
            K = np.array(self.gain["K"])
            lines.append("  K            " + np.array2string(K, precision=4, suppress_small=True)
                         .replace("\n", "\n               "))
        if self.certification:
            c = self.certification
            lines.append(f"  certified    {c['certified']}  abscissa {c['abscissa']:.4g}")
        if self.closed_loop:
            c = self.closed_loop
            lines.append(f"  closed loop  ratio {c['decay_ratio']:.3e} over {c['horizon']:.3g} s,"
                         f"  rate {c['fitted_rate']:.4g}")
        if self.error:
            lines.append(f"  error        {self.error}")
        return "\n".join(lines)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


@contextmanager
def _stage(report: DesignReport, name: str) -> Iterator[None]:
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except DdstabError as exc:
        raise StageError(name, exc) from exc
    finally:
        report.timings[name] = time.perf_counter() - t0


def state_identity_residual(batch: StateBatch, plant: StatePlant) -> float:
    """``||(Zdot - D E) - (F Z + G U)|| / (1 + ||Zdot||)`` with the true F, G."""
    real = state_realization(plant, batch.params)
    lhs = batch.Zdot - real.D @ batch.E
    return float(np.linalg.norm(lhs - (real.F @ batch.Z + real.G @ batch.U)) / (1 + np.linalg.norm(batch.Zdot)))


def output_identity_residual(batch: OutputBatch, plant: OutputPlant, x0) -> float:
    """Relative residual of the virtual system ``Zadot = [[Lam, 0], [D L, F]] Za + [0; g] U``."""
    params = batch.params
    real = output_realization(plant, params, x0)
    n = params.n
    Abig = np.block([[params.Lam, np.zeros((n, 2 * n))], [real.D @ real.L, real.F]])
    gbig = np.concatenate([np.zeros(n), real.g])[:, None]
    pred = Abig @ batch.Za + gbig @ batch.U
    return float(np.linalg.norm(batch.Zadot - pred) / (1 + np.linalg.norm(batch.Zadot)))


def _gain_dicts(report: DesignReport, gain: GainResult) -> None:
    report.gain = {"K": gain.K.tolist()}
    if gain.K_full is not None:
        report.gain["K_full"] = gain.K_full.tolist()
    if gain.certified is not None:
        report.certification = {
            "certified": gain.certified,
            "abscissa": gain.abscissa,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in gain.eigenvalues],
        }


def run_algorithm1(config: ExperimentConfig, backend: Backend | None = None,
                   keep: dict[str, Any] | None = None) -> DesignReport:
    """State-feedback design from input-state data.

    ``keep``, if given, receives the intermediate objects (trajectory, batch,
    LMI solution, controller) for inspection.
    """
    if config.kind != "state":
        raise ValueError("run_algorithm1 needs a state-feedback config")
    report = DesignReport("state", config.to_dict())
    keep = {} if keep is None else keep
    plant, params = config.plant, config.filter
    x0 = config.initial_state()
    try:
        with _stage(report, "simulate"):
            exo = build_exosystem(config.signal)
            traj = simulate_cascade([plant_block(plant, x0)], exo, config.T, config.step)
        with _stage(report, "filter"):
            traj = run_state_filter(traj, params)
        with _stage(report, "batch"):
            batch = build_state_batch(traj, params, config.Ts, config.N)
            exc = check_excitation_state(batch, gramian_mu(traj))
            report.excitation = exc.to_dict()
            report.identity_residual = state_identity_residual(batch, plant)
            if report.identity_residual > STATE_IDENTITY_RTOL:
                raise StageError("batch", AssertionError(
                    f"compensation identity violated: {report.identity_residual:.3e}"))
        keep.update(trajectory=traj, batch=batch)
        with _stage(report, "lmi"):
            sol = solve(encode_state_lmi(batch, config.delta), backend)
            report.lmi = sol.to_dict()
            keep["solution"] = sol
        if not sol.feasible:
            return report
        with _stage(report, "gain"):
            gain = gain_state(batch, sol.Q, plant)
            _gain_dicts(report, gain)
            keep["gain"] = gain
        with _stage(report, "closed_loop"):
            ctrl = StateController(params, gain.K)
            cl = closed_loop_simulate(plant, ctrl, x0, config.controller_initial_state())
            report.closed_loop = cl.metrics()
            keep.update(controller=ctrl, closed_loop=cl)
    except StageError as exc:
        report.error = str(exc)
        log.warning("algorithm 1 aborted: %s", exc)
    return report


def run_algorithm2(config: ExperimentConfig, backend: Backend | None = None,
                   keep: dict[str, Any] | None = None) -> DesignReport:
    """Output-feedback (SISO) design from input-output data."""
    if config.kind != "output":
        raise ValueError("run_algorithm2 needs an output-feedback config")
    report = DesignReport("output", config.to_dict())
    keep = {} if keep is None else keep
    plant, params = config.plant, config.filter
    x0 = config.initial_state()
    try:
        with _stage(report, "simulate"):
            exo = build_exosystem(config.signal)
            traj = simulate_cascade([plant_block(plant, x0)], exo, config.T, config.step)
        with _stage(report, "filter"):
            traj = run_output_filter(traj, params)
            chi = run_chi(params, config.T, config.step)
        with _stage(report, "batch"):
            batch = build_output_batch(traj, chi, params, config.Ts, config.N)
            exc = check_excitation_output(batch, config.signal.distinct_frequencies, gramian_mu(traj))
            report.excitation = exc.to_dict()
            report.identity_residual = output_identity_residual(batch, plant, x0)
            if report.identity_residual > OUTPUT_IDENTITY_RTOL:
                raise StageError("batch", AssertionError(
                    f"virtual-system identity violated: {report.identity_residual:.3e}"))
        keep.update(trajectory=traj, chi=chi, batch=batch)
        with _stage(report, "lmi"):
            sol = solve(encode_output_lmi(batch, config.delta), backend)
            report.lmi = sol.to_dict()
            keep["solution"] = sol
        if not sol.feasible:
            return report
        with _stage(report, "gain"):
            gain = gain_output(batch, sol.Q, plant)
            _gain_dicts(report, gain)
            real = output_realization(plant, params, x0)
            aug_ok, aug_alpha = is_hurwitz(augmented_output_closed_loop(params, real, gain.K_full))
            report.certification["augmented_abscissa"] = aug_alpha
            keep["gain"] = gain
        with _stage(report, "closed_loop"):
            ctrl = OutputController(params, gain.K)
            cl = closed_loop_simulate(plant, ctrl, x0, config.controller_initial_state())
            report.closed_loop = cl.metrics()
            keep.update(controller=ctrl, closed_loop=cl)
    except StageError as exc:
        report.error = str(exc)
        log.warning("algorithm 2 aborted: %s", exc)
    return report


def run_baseline(config: ExperimentConfig, backend: Backend | None = None) -> DesignReport:
    """Derivative-based comparison design using exact state derivatives from the simulator."""
    report = DesignReport("baseline", config.to_dict())
    plant = config.plant
    try:
        with _stage(report, "simulate"):
            exo = build_exosystem(config.signal)
            traj = simulate_cascade([plant_block(plant, config.initial_state())], exo, config.T, config.step)
        with _stage(report, "batch"):
            batch = build_baseline_batch(traj, config.Ts, config.N)
            report.excitation = check_excitation_baseline(batch).to_dict()
        with _stage(report, "lmi"):
            sol = solve(encode_baseline_lmi(batch, config.delta), backend)
            report.lmi = sol.to_dict()
        if sol.feasible:
            _gain_dicts(report, gain_baseline(batch, sol.Q, plant))
    except StageError as exc:
        report.error = str(exc)
    return report


def run_design(config: ExperimentConfig, backend: Backend | None = None) -> DesignReport:
    return (run_algorithm1 if config.kind == "state" else run_algorithm2)(config, backend)


def verify_report(report: dict[str, Any]) -> dict[str, Any]:
    """Re-certify a stored report from its plant and gain, independently of the design run."""
    cfg = ExperimentConfig.from_dict(report["config"])
    if not report.get("gain"):
        return {"certified": False, "reason": "report has no gain"}
    K = np.atleast_2d(np.asarray(report["gain"]["K"], dtype=float))
    if cfg.kind == "state":
        M = state_closed_loop(cfg.plant, cfg.filter, K)
    else:
        M = output_closed_loop(cfg.plant, cfg.filter, K)
    g = certify(M, K)
    return {"certified": g.certified, "abscissa": g.abscissa,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in g.eigenvalues]}


# --- worked examples ----------------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"


def printed_gain_check_state() -> Check:
    M = state_closed_loop(bm.reactor_plant(), bm.REACTOR_FILTER, bm.REACTOR_K)
    eig = spectrum(M).eigenvalues
    dist = spectrum_distance(eig, bm.REACTOR_K_EIGS)
    return Check("printed K (state): eig(F + G K)", dist <= 0.05 and is_hurwitz(M)[0],
                 {"max_deviation": dist, "eigenvalues": [[z.real, z.imag] for z in eig]})


def printed_gain_check_output() -> Check:
    M = output_closed_loop(bm.siso_plant(), bm.SISO_FILTER, bm.SISO_K)
    eig = spectrum(M).eigenvalues
    dist = spectrum_distance(eig, bm.SISO_K_EIGS)
    return Check("printed K (output): eig(F + g K)", dist <= 0.05 and is_hurwitz(M)[0],
                 {"max_deviation": dist, "eigenvalues": [[z.real, z.imag] for z in eig]})


def sweep(config: ExperimentConfig, seeds: int, backend: Backend | None = None) -> dict[str, Any]:
    certified, failures, worst = 0, [], -np.inf
    for seed in range(seeds):
        rep = run_design(config.with_seed(seed), backend)
        if rep.certified:
            certified += 1
            worst = max(worst, rep.certification["abscissa"])
        else:
            failures.append({"seed": seed, "lmi": rep.lmi, "error": rep.error,
                             "excitation": rep.excitation})
    return {"runs": seeds, "certified": certified, "worst_abscissa": worst, "failures": failures}


def reproduce_paper(which: str = "both", seeds: int = 100, backend: Backend | None = None) -> list[Check]:
    checks: list[Check] = []
    if which in ("state", "both"):
        eig = spectrum(bm.REACTOR_A).eigenvalues
        dist = spectrum_distance(eig, bm.REACTOR_OPEN_LOOP_EIGS)
        checks.append(Check("open-loop spectrum of the reactor", dist <= 1e-2,
                            {"max_deviation": dist, "eigenvalues": eig.real.tolist()}))
        checks.append(printed_gain_check_state())
        rep = run_algorithm1(reactor_config(x0=bm.REACTOR_X0), backend)
        checks.append(Check("algorithm 1 at the reported x(0)", rep.certified, rep.to_dict(timings=False)))
        s = sweep(reactor_config(), seeds, backend)
        checks.append(Check(f"algorithm 1 sweep, x0 ~ U(-1,1)^4, {seeds} seeds", s["certified"] == seeds, s))
    if which in ("output", "both"):
        plant, params = bm.siso_plant(), bm.SISO_FILTER
        from .realization import oracle_theta

        t1, t2 = oracle_theta(plant, params)
        ok = np.allclose(t1, [2.5, -8.0, 6.5], atol=1e-9) and np.allclose(t2, [-1.0, 1.5, -2 / 3], atol=1e-9)
        checks.append(Check("coefficient-matching theta for the SISO plant", ok,
                            {"theta1": t1.tolist(), "theta2": t2.tolist()}))
        checks.append(printed_gain_check_output())
        rep = run_algorithm2(siso_config(x0=bm.SISO_X0), backend)
        checks.append(Check("algorithm 2 at the reported x(0)", rep.certified, rep.to_dict(timings=False)))
        s = sweep(siso_config(), seeds, backend)
        checks.append(Check(f"algorithm 2 sweep, x0 ~ U(-5,5)^3, {seeds} seeds", s["certified"] == seeds, s))
    return checks


def design_from_batch(batch: StateBatch | OutputBatch, plant=None, delta: float = DEFAULT_DELTA,
                      backend: Backend | None = None) -> DesignReport:
    """Solve the LMI on stored data; certification is attached only if ``plant`` is given."""
    kind = "state" if isinstance(batch, StateBatch) else "output"
    report = DesignReport(kind, {"source": "batch", "N": batch.N, "Ts": batch.Ts, "delta": delta})
    try:
        with _stage(report, "batch"):
            if kind == "state":
                report.excitation = check_excitation_state(batch).to_dict()
                if plant is not None:
                    report.identity_residual = state_identity_residual(batch, plant)
            else:
                report.excitation = check_excitation_output(batch).to_dict()
        with _stage(report, "lmi"):
            enc = encode_state_lmi if kind == "state" else encode_output_lmi
            sol = solve(enc(batch, delta), backend)
            report.lmi = sol.to_dict()
        if sol.feasible:
            with _stage(report, "gain"):
                _gain_dicts(report, (gain_state if kind == "state" else gain_output)(batch, sol.Q, plant))
    except StageError as exc:
        report.error = str(exc)
    return report
