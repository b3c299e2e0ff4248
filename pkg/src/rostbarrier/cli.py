"""Command line entry point: ``rostbarrier {solve,verify,value}``.

A run is described by one JSON document::

    {"mu": {...}, "nu": {...}, "T": 1.0, "N": 200,
     "solver": {...}, "mc": {...}, "lattice": {...}, "gates": {...},
     "boundaries": "path/to/boundaries.csv"}

Only ``mu``, ``nu``, ``T`` and ``N`` are required. Unknown keys are
rejected, and the fully defaulted config is written next to the outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import (
    ConfigError,
    InsufficientSamples,
    MeasureError,
    NoSignChange,
    NumericalDomainError,
    SweepDivergence,
    UnsupportedSampling,
)
from .measures import Measure
from .solver import BarrierProblem, BoundaryPair, Grid, Scheme, SolverConfig, solve_boundaries
from .value import LatticeSpec, lattice_value, oracle_report, value_U_kernel, value_U_localtime
from .verify import MCConfig, embedding_test, simulate_embedding

log = logging.getLogger("rostbarrier")

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


@dataclass
class LatticeOptions:
    radius: float | None = None
    threshold: float = 1e-12
    window: tuple[float, float] = (0.1, 0.9)


@dataclass
class Gates:
    """Acceptance thresholds checked by ``verify``; ``oracle_tol = None``
    means max(0.05, 3 sqrt(h))."""

    oracle_tol: float | None = None
    ks_max: float = 0.02
    censor_se: float = 3.0


@dataclass
class RunConfig:
    mu: Measure
    nu: Measure
    T: float
    N: int
    solver: SolverConfig = field(default_factory=SolverConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    lattice: LatticeOptions = field(default_factory=LatticeOptions)
    gates: Gates = field(default_factory=Gates)
    boundaries: str | None = None

    @property
    def grid(self) -> Grid:
        return Grid(self.T, self.N)

    def problem(self) -> BarrierProblem:
        return BarrierProblem.build(self.mu, self.nu)

    def to_dict(self) -> dict[str, Any]:
        solver = dataclasses.asdict(self.solver)
        return {
            "mu": self.mu.to_spec(),
            "nu": self.nu.to_spec(),
            "T": self.T,
            "N": self.N,
            "solver": solver,
            "mc": dataclasses.asdict(self.mc),
            "lattice": {**dataclasses.asdict(self.lattice), "window": list(self.lattice.window)},
            "gates": dataclasses.asdict(self.gates),
            "boundaries": self.boundaries,
        }


_TOP_KEYS = {"mu", "nu", "T", "N", "solver", "mc", "lattice", "gates", "boundaries"}


def _build(cls, name: str, data: Any):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"'{name}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from exc


def parse_config(doc: Any, base_dir: Path | None = None) -> RunConfig:
    """Validate a config document; every error is a :class:`ConfigError`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    missing = [k for k in ("mu", "nu", "T", "N") if k not in doc]
    if missing:
        raise ConfigError(f"missing required keys: {missing}")
    try:
        mu = Measure.from_spec(doc["mu"])
        nu = Measure.from_spec(doc["nu"])
    except MeasureError as exc:
        raise ConfigError(f"invalid measure: {exc}") from exc
    T, N = doc["T"], doc["N"]
    if isinstance(T, bool) or not isinstance(T, (int, float)) or not (math.isfinite(T) and T > 0):
        raise ConfigError("T must be a positive number")
    if isinstance(N, bool) or not isinstance(N, int) or N < 2:
        raise ConfigError("N must be an integer >= 2")
    solver_doc = doc.get("solver")
    if isinstance(solver_doc, dict) and isinstance(solver_doc.get("scheme"), dict):
        solver_doc = {**solver_doc, "scheme": _build(Scheme, "solver.scheme", solver_doc["scheme"])}
    lattice_doc = doc.get("lattice")
    if isinstance(lattice_doc, dict) and "window" in lattice_doc:
        w = lattice_doc["window"]
        if not (isinstance(w, (list, tuple)) and len(w) == 2):
            raise ConfigError("lattice.window must be a pair")
        lattice_doc = {**lattice_doc, "window": (float(w[0]), float(w[1]))}
    boundaries = doc.get("boundaries")
    if boundaries is not None:
        if not isinstance(boundaries, str):
            raise ConfigError("'boundaries' must be a path")
        if base_dir is not None and not Path(boundaries).is_absolute():
            boundaries = str(base_dir / boundaries)
    return RunConfig(
        mu=mu,
        nu=nu,
        T=float(T),
        N=int(N),
        solver=_build(SolverConfig, "solver", solver_doc),
        mc=_build(MCConfig, "mc", doc.get("mc")),
        lattice=_build(LatticeOptions, "lattice", lattice_doc),
        gates=_build(Gates, "gates", doc.get("gates")),
        boundaries=boundaries,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, path.parent)


# ---------------------------------------------------------------------------
# pipeline pieces


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _write_json(out: Path, name: str, obj: Any) -> None:
    _write(out, name, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def obtain_boundaries(cfg: RunConfig, prob: BarrierProblem) -> tuple[BoundaryPair, dict | None]:
    """Read boundaries from ``cfg.boundaries`` or solve them in-run. Solved
    boundaries go through their CSV form so both routes see identical
    numbers."""
    if cfg.boundaries is not None:
        try:
            text = Path(cfg.boundaries).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read boundaries {cfg.boundaries}: {exc}") from exc
        try:
            bp = BoundaryPair.from_csv(text, cfg.T, cfg.solver.scheme)
        except ValueError as exc:
            raise ConfigError(f"bad boundaries file: {exc}") from exc
        if bp.grid.N != cfg.N:
            raise ConfigError(f"boundaries file has N={bp.grid.N}, config says N={cfg.N}")
        return bp, None
    bp, diag = solve_boundaries(prob, cfg.grid, cfg.solver)
    return bp.rounded(), diag.to_dict()


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    prob = cfg.problem()
    started = time.perf_counter()
    bp, diag = solve_boundaries(prob, cfg.grid, cfg.solver)
    log.info("solved N=%d in %.2fs, max |residual| %.3g", cfg.N, time.perf_counter() - started,
             diag.max_abs_residual)
    _write(out, "boundaries.csv", bp.to_csv())
    _write_json(out, "solve_diagnostics.json", {"mode": prob.mode, "hat_b_plus": _num(prob.hat_b_plus),
                                                "hat_b_minus": _num(prob.hat_b_minus), **diag.to_dict()})
    return EXIT_OK


def _num(v: float) -> float | str:
    return "inf" if math.isinf(v) else v


def cmd_verify(cfg: RunConfig, out: Path, oracle: bool = True, mc: bool = True) -> int:
    prob = cfg.problem()
    bp, solve_diag = obtain_boundaries(cfg, prob)
    report: dict[str, Any] = {}
    failed: list[str] = []
    if oracle:
        spec = LatticeSpec(bp.grid, cfg.lattice.radius or LatticeSpec.for_problem(prob, bp.grid, cfg.solver).radius,
                           cfg.lattice.threshold)
        rep = oracle_report(bp, lattice_value(prob, spec), cfg.lattice.window, cfg.gates.oracle_tol)
        _write(out, "oracle_report.csv", rep.to_csv())
        report["oracle"] = rep.summary()
        if not rep.passed:
            failed.append("oracle")
    if mc:
        samples = simulate_embedding(bp, prob, cfg.mc, cfg.solver)
        _write(out, "samples.csv", samples.to_csv())
        diag = embedding_test(samples, prob, bp)
        mc_report = {
            "ks": diag.ks,
            "n_stopped": diag.n_stopped,
            "n_censored": diag.n_censored,
            "censor_pred": diag.censor_pred,
            "censor_obs": diag.censor_obs,
        }
        _write_json(out, "mc_report.json", mc_report)
        ks_ok = diag.ks < cfg.gates.ks_max
        censor_ok = abs(diag.censor_obs - diag.censor_pred) <= cfg.gates.censor_se * diag.censor_se
        report["mc"] = {**diag.to_dict(), "ks_max": cfg.gates.ks_max, "ks_passed": ks_ok,
                        "censor_passed": censor_ok}
        if not ks_ok:
            failed.append("mc_ks")
        if not censor_ok:
            failed.append("mc_censoring")
    if solve_diag is not None:
        report["solve"] = {"max_abs_residual": solve_diag["max_abs_residual"]}
    report["failed_gates"] = failed
    _write_json(out, "verify_report.json", report)
    for name in failed:
        log.warning("gate failed: %s", name)
    return EXIT_GATE if failed else EXIT_OK


def cmd_value(cfg: RunConfig, t: float, x: float, out: Path | None = None) -> int:
    prob = cfg.problem()
    bp, _ = obtain_boundaries(cfg, prob)
    if not 0.0 <= t <= cfg.T:
        raise NumericalDomainError(f"query time {t} outside [0, {cfg.T}]")
    u_kernel = value_U_kernel(t, x, bp, prob)
    u_local = value_U_localtime(t, x, bp, prob)
    result = {"t": t, "x": x, "U_kernel": u_kernel, "U_localtime": u_local, "difference": u_kernel - u_local}
    print(f"U_kernel    = {u_kernel:.10g}")
    print(f"U_localtime = {u_local:.10g}")
    print(f"difference  = {u_kernel - u_local:.10g}")
    k = round(t / bp.grid.h)
    if abs(t - k * bp.grid.h) <= 1e-12 * max(cfg.T, 1.0) and k < bp.grid.N:
        u_disc = value_U_kernel(k * bp.grid.h, x, bp, prob, mode="discrete")
        result["U_discrete"] = u_disc
        print(f"U_discrete  = {u_disc:.10g}")
    if out is not None:
        _write_json(out, "value.json", result)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rostbarrier", description="Rost barrier boundaries for Brownian motion.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool) -> None:
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="64-bit seed for the Monte Carlo streams")

    common(sub.add_parser("solve", help="solve the boundaries and write boundaries.csv"), True)
    p_verify = sub.add_parser("verify", help="lattice oracle and Monte Carlo embedding checks")
    common(p_verify, True)
    p_verify.add_argument("--oracle", action=argparse.BooleanOptionalAction, default=True)
    p_verify.add_argument("--mc", action=argparse.BooleanOptionalAction, default=True)
    p_value = sub.add_parser("value", help="evaluate U(t, x) by both representations")
    common(p_value, False)
    p_value.add_argument("--t", type=float, required=True)
    p_value.add_argument("--x", type=float, required=True)
    return parser


def _error_line(kind: str, code: int, exc: BaseException) -> None:
    print(json.dumps({"error": kind, "exit_code": code, "message": str(exc)}), file=sys.stderr)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        try:
            cfg.mc = dataclasses.replace(cfg.mc, seed=args.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    out = Path(args.out) if args.out else None
    if out is not None:
        _write_json(out, "config.json", cfg.to_dict())
    if args.command == "solve":
        return cmd_solve(cfg, out)
    if args.command == "verify":
        return cmd_verify(cfg, out, oracle=args.oracle, mc=args.mc)
    return cmd_value(cfg, args.t, args.x, out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        return run(args)
    except (ConfigError, MeasureError) as exc:
        _error_line("config", EXIT_CONFIG, exc)
        return EXIT_CONFIG
    except OSError as exc:
        _error_line("io", EXIT_CONFIG, exc)
        return EXIT_CONFIG
    except (NoSignChange, SweepDivergence, NumericalDomainError, UnsupportedSampling, InsufficientSamples) as exc:
        _error_line(type(exc).__name__, EXIT_NUMERICAL, exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
