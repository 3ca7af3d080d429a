"""Command-line interface: ``ddstab <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .batching import StateBatch, load_batch
from .errors import DdstabError
from .pipeline import (
    ExperimentConfig,
    design_from_batch,
    parse_plant,
    reactor_config,
    reproduce_paper,
    run_algorithm1,
    run_algorithm2,
    siso_config,
    verify_report,
    to_jsonable,
)


def _load_config(path: str | None, kind: str, args) -> ExperimentConfig:
    if path is None:
        cfg = reactor_config() if kind == "state" else siso_config()
    else:
        d = json.loads(Path(path).read_text())
        d.setdefault("kind", kind)
        if d["kind"] != kind:
            raise SystemExit(f"config kind {d['kind']!r} does not match design-{kind}")
        cfg = ExperimentConfig.from_dict(d)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.delta is not None:
        cfg = replace(cfg, delta=args.delta)
    return cfg


def _write_closed_loop_csv(path: Path, cl) -> None:
    data = np.vstack([cl.times, cl.states]).T
    dim = cl.states.shape[0]
    header = ",".join(["t"] + [f"z{i}" for i in range(dim)])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def _emit(report, out: str | None, name: str) -> None:
    print(report.summary())
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.json").write_text(report.to_json())
        print(f"report written to {d / f'{name}.json'}")


def cmd_design(args, kind: str) -> int:
    cfg = _load_config(args.config, kind, args)
    keep: dict = {}
    report = (run_algorithm1 if kind == "state" else run_algorithm2)(cfg, keep=keep)
    _emit(report, args.out, f"design-{kind}")
    if args.csv:
        d = Path(args.out or ".")
        d.mkdir(parents=True, exist_ok=True)
        if "trajectory" in keep:
            keep["trajectory"].to_csv(d / f"{kind}-experiment.csv")
        if "closed_loop" in keep:
            _write_closed_loop_csv(d / f"{kind}-closed-loop.csv", keep["closed_loop"])
    return 0 if report.certified else 1


def cmd_design_from_batch(args) -> int:
    batch = load_batch(args.batch_dir)
    plant = None
    if args.plant:
        spec = json.loads(Path(args.plant).read_text())
        plant = parse_plant(spec.get("plant", spec), "state" if isinstance(batch, StateBatch) else "output")
    report = design_from_batch(batch, plant, args.delta if args.delta is not None else 1e-3)
    _emit(report, args.out, "design-from-batch")
    if plant is None:
        return 0 if report.feasible else 1
    return 0 if report.certified else 1


def cmd_verify(args) -> int:
    report = json.loads(Path(args.report).read_text())
    res = verify_report(report)
    print(json.dumps(to_jsonable(res), indent=2))
    return 0 if res["certified"] else 1


def cmd_reproduce(args) -> int:
    checks = reproduce_paper(args.which, args.seeds)
    for c in checks:
        print(c.line())
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        bundle = {"which": args.which, "seeds": args.seeds,
                  "passed": all(c.passed for c in checks),
                  "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]}
        (d / "reproduction.json").write_text(json.dumps(to_jsonable(bundle), indent=2, sort_keys=True))
        (d / "summary.txt").write_text("\n".join(c.line() for c in checks) + "\n")
        print(f"bundle written to {d}")
    return 0 if all(c.passed for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddstab", description="Data-driven stabilization from filtered data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="seed for the random initial state")
        p.add_argument("--delta", type=float, default=None, help="LMI margin (default 1e-3)")
        p.add_argument("--out", default=None, help="directory for JSON/CSV output")

    for kind in ("state", "output"):
        p = sub.add_parser(f"design-{kind}", help=f"{kind}-feedback design from a simulated experiment")
        p.add_argument("config", nargs="?", default=None, help="JSON config (default: canned example)")
        common(p)
        p.add_argument("--csv", action="store_true", help="also write experiment and closed-loop trajectories")
        p.set_defaults(func=lambda a, k=kind: cmd_design(a, k))

    p = sub.add_parser("design-from-batch", help="design from a stored batch directory")
    p.add_argument("batch_dir")
    p.add_argument("--plant", default=None, help="JSON with the true plant, enables certification")
    common(p)
    p.set_defaults(func=cmd_design_from_batch)

    p = sub.add_parser("verify", help="re-certify a stored design report")
    p.add_argument("report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce-paper", help="rerun the two worked examples and report pass/fail")
    p.add_argument("--which", choices=("state", "output", "both"), default="both")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DdstabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
