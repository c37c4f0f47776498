"""Command-line entry point ``minkowski``.

Every command writes ``report.json`` (and CSV artifacts where relevant) to
``--out`` and prints the report.  Exit codes: 0 success, 1 a check failed,
2 invalid input, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, config
from .checks import SUITES, Check, run_suite
from .errors import (
    BracketFailure,
    CollapseDetected,
    MeshFailure,
    MinkowskiError,
    NonConvergence,
    NonPositivity,
)
from .functional import energy, first_variation, homogeneity_exponents, isoperimetric_gap, isoperimetric_ratio
from .geometry import ConvexBody, body_from_support, disk, mean_width, random_convex_body, square
from .grid import SupportVector, SurfaceMeasure, measure_centroid
from .measure import body_measure, snap_error
from .pde import SolverConfig, field_stats, solve_body
from .solver import OptimizerConfig, solve_minkowski, validate_target

log = logging.getLogger(__name__)

OPERATIONS = ("pde", "measure", "functional", "variation", "minkowski", "iso", "verify")
EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (NonConvergence, NonPositivity, BracketFailure, CollapseDetected, MeshFailure)


class InputError(Exception):
    """Bad scenario or unreadable input file."""


@dataclass
class Scenario:
    name: str
    operation: str
    beta: float = 0.5
    mesh_h: float = 0.02
    M: int = 256
    body: str = "disk"  # builtin name (disk, square, random) or a JSON file path
    seed: int = 0
    other: str | None = None
    params: dict = field(default_factory=dict)
    out: str = "."

    def validate(self):
        if self.operation not in OPERATIONS:
            raise InputError(f"unknown operation {self.operation!r}")
        if not 0.0 < self.beta < 1.0:
            raise InputError("beta must lie in (0, 1)")
        if not self.mesh_h > 0:
            raise InputError("mesh-h must be positive")
        if self.M < 8:
            raise InputError("directions must be at least 8")


@dataclass
class Report:
    scenario: dict
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["status"] == "pass" for c in self.checks)

    def add(self, check: Check):
        self.checks.append(check.to_dict())

    def to_dict(self) -> dict:
        self.checks.sort(key=lambda c: c["name"])
        return {"scenario": self.scenario, "passed": self.passed, "checks": self.checks,
                "results": self.results, "timing": self.timing, "constants": self.constants}


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno} column {exc.colno})") from exc


def load_body(source: str, seed: int = 0, M: int = 256) -> ConvexBody:
    """Builtin name or JSON file (polygon ``{"vertices"}`` or support ``{"directions","values"}``)."""
    if source == "disk":
        return disk()
    if source == "square":
        return square()
    if source == "random":
        return random_convex_body(seed, M)
    doc = _read_json(source)
    try:
        if "vertices" in doc:
            return ConvexBody.from_dict(doc)
        if "values" in doc:
            return body_from_support(SupportVector.from_dict(doc))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{source}: {exc}") from exc
    raise InputError(f"{source}: expected a polygon or support-vector object")


def load_measure(path: str) -> SurfaceMeasure:
    doc = _read_json(path)
    try:
        return SurfaceMeasure.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _write_csv(path: Path, header: str, rows: np.ndarray):
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")


def _constants(beta: float) -> dict:
    doc = config.load_defaults()
    pins = doc["pinned"].get(repr(float(beta)))
    return {"defaults_version": doc["version"], "defaults_file": str(config.defaults_path()),
            "pinned": {repr(float(beta)): pins} if pins else {}}


def run_scenario(s: Scenario, cfg: SolverConfig | None = None) -> Report:
    s.validate()
    cfg = cfg or config.solver_config(beta=s.beta, mesh_h=s.mesh_h)
    out = Path(s.out)
    out.mkdir(parents=True, exist_ok=True)
    rep = Report(scenario=asdict(s), constants=_constants(s.beta))
    tol = config.tolerance
    t0 = time.perf_counter()
    op = s.operation

    if op in ("pde", "measure", "functional", "iso"):
        body = load_body(s.body, s.seed, s.M)
        fld = solve_body(body, cfg)
        rep.timing["solve_s"] = time.perf_counter() - t0
        e = energy(fld, cfg)
        if op == "pde":
            st = field_stats(fld, body, cfg)
            rep.results.update(nodes=fld.mesh.n_nodes, triangles=len(fld.mesh.triangles),
                               iterations=fld.iterations, monotone=fld.monotone,
                               residual=fld.residual, F=e.F, F_dual=e.F_dual,
                               identity_gap=e.identity_gap, **asdict(st))
            rep.add(Check("identity_gap", e.identity_gap <= tol("identity_gap"), e.identity_gap,
                          tol("identity_gap")))
            rep.add(Check("sup_bound", st.sup_ok, st.sup_phi, st.bound_sup))
            rep.add(Check("grad_bound", st.grad_ok, st.sup_grad, st.bound_grad))
            _write_csv(out / "field.csv", "x,y,phi", np.column_stack([fld.mesh.nodes, fld.values]))
        elif op == "measure":
            mu = body_measure(fld, body, s.M)
            c = measure_centroid(mu)
            cn = float(np.linalg.norm(c))
            rep.results.update(mass=mu.mass, centroid=c.tolist(), nonzero_bins=int(np.count_nonzero(mu.weights)),
                               snap_error=snap_error(body, s.M))
            rep.add(Check("centroid", cn <= tol("centroid"), cn, tol("centroid")))
            mu.save(out / "measure.json")
        elif op == "functional":
            ex = homogeneity_exponents(cfg.beta)
            rep.results.update(F=e.F, F_dual=e.F_dual, identity_gap=e.identity_gap, I_energy=e.I_energy,
                               alpha=ex.alpha, gamma=ex.gamma)
            rep.add(Check("identity_gap", e.identity_gap <= tol("identity_gap"), e.identity_gap,
                          tol("identity_gap")))
        else:
            try:
                F_ball = config.pinned(cfg.beta)["F_ball"]
            except KeyError as exc:
                raise InputError(str(exc)) from exc
            alpha = homogeneity_exponents(cfg.beta).alpha
            W = mean_width(body, SurfaceMeasure.uniform(s.M))
            gap = isoperimetric_gap(body, cfg, F_ball, s.M, e.F)
            rep.results.update(F=e.F, W=W, F_ball=F_ball, gap=gap,
                               ratio=isoperimetric_ratio(e.F, W, F_ball, alpha))
            rep.add(Check("iso_gap", gap >= -tol("iso_slack") * e.F, gap / e.F, -tol("iso_slack")))
    elif op == "variation":
        K = load_body(s.body, s.seed, s.M)
        L = load_body(s.other or "disk", s.seed + 1, s.M)
        d = config.load_defaults()["variation"]
        r = first_variation(K, L, cfg, t_step=s.params.get("t_step", d["t_step"]), M=s.M,
                            levels=s.params.get("levels", d["levels"]))
        rep.results.update(formula_side=r.formula_side, fd_side=r.fd_side, rel_error=r.rel_error,
                           steps=list(r.steps), values=list(r.values))
        rep.add(Check("variation", r.rel_error <= tol("variation_rel"), r.rel_error, tol("variation_rel")))
    elif op == "minkowski":
        mu = load_measure(s.body)
        if mu.M != s.M:
            log.info("using the target's own grid size %d", mu.M)
        target = validate_target(mu, tol("centroid"), tol("nondegeneracy"))
        opt_params = config.load_defaults()["optimizer"]
        opt_params.update(s.params.get("optimizer", {}))
        opt = OptimizerConfig(**opt_params)
        initial = load_body(s.other, s.seed, mu.M) if s.other else None
        sol = solve_minkowski(target, cfg, opt, initial=initial)
        (out / "solution.json").write_text(json.dumps(sol.to_dict(), indent=2) + "\n")
        if sol.trace:
            keys = list(sol.trace[0])
            _write_csv(out / "trace.csv", ",".join(keys),
                       np.array([[row[k] for k in keys] for row in sol.trace], dtype=float))
        rep.results.update(sol.to_dict(), residual_scaled=sol.residual_scaled, stop_reason=sol.stop_reason,
                           F_trace=sol.F_trace)
        rep.add(Check("residual", sol.residual <= tol("roundtrip_residual"), sol.residual,
                      tol("roundtrip_residual")))
    elif op == "verify":
        for c in run_suite(s.params.get("suite", ""), cfg, s.M):
            rep.add(c)
    rep.timing["total_s"] = time.perf_counter() - t0
    (out / "report.json").write_text(json.dumps(rep.to_dict(), indent=2, default=float) + "\n")
    return rep


def build_parser() -> argparse.ArgumentParser:
    defaults = config.load_defaults()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--beta", type=float, default=defaults["solver"]["beta"])
    common.add_argument("--mesh-h", type=float, default=defaults["solver"]["mesh_h"])
    common.add_argument("--directions", "-M", type=int, default=defaults["directions"], dest="M")
    common.add_argument("--tol", type=float, default=None, help="fixed-point sup-norm tolerance")
    common.add_argument("--max-iter", type=int, default=None, help="fixed-point (or optimizer) iteration cap")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--in", dest="input", default=None, help="input JSON (polygon, support or measure)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--config", default=None, help="scenario JSON; command-line flags override it")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="minkowski", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("pde", "solve the Dirichlet problem, write field.csv"),
                        ("measure", "boundary measure on the direction grid, write measure.json"),
                        ("functional", "energy and its identity check"),
                        ("iso", "isoperimetric gap against the pinned disk energy")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("--body", default="disk", help="disk, square, random, or use --in")
    sp = sub.add_parser("variation", parents=[common], help="first variation vs finite differences")
    sp.add_argument("--body", default="square")
    sp.add_argument("--other", default="disk", help="the perturbing body L (builtin or file)")
    sp.add_argument("--t-step", type=float, default=None)
    sp = sub.add_parser("minkowski", parents=[common], help="recover a body from a target measure (--in)")
    sp.add_argument("--initial", default=None, help="starting body (builtin or file); default unit-width disk")
    sp = sub.add_parser("verify", parents=[common], help="run a verification suite")
    sp.add_argument("suite", choices=SUITES)
    sp = sub.add_parser("pin-constants", parents=[common],
                        help="recompute the pinned disk constants and write defaults.json to --out")
    sp.add_argument("--betas", type=float, nargs="+", default=None)
    return p


def _scenario_from_args(args) -> Scenario:
    base = {}
    if args.config:
        base = _read_json(args.config)
    cmd = args.command
    body = args.input or getattr(args, "body", None) or base.get("body", "disk")
    if cmd == "minkowski":
        if not (args.input or base.get("body")):
            raise InputError("minkowski needs a target measure via --in")
        body = args.input or base["body"]
    params = dict(base.get("params", {}))
    if cmd == "verify":
        params["suite"] = args.suite
    if cmd == "variation" and args.t_step is not None:
        params["t_step"] = args.t_step
    if cmd == "minkowski" and args.max_iter is not None:
        params.setdefault("optimizer", {})["max_iter"] = args.max_iter
    other = getattr(args, "other", None) or getattr(args, "initial", None) or base.get("other")
    try:
        return Scenario(name=base.get("name", cmd), operation=cmd, beta=args.beta, mesh_h=args.mesh_h,
                        M=args.M, body=body, seed=args.seed, other=other, params=params, out=args.out)
    except TypeError as exc:
        raise InputError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "pin-constants":
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            doc = config.write_pins(out / "defaults.json", args.betas or [args.beta])
            print(json.dumps(doc["pinned"], indent=2))
            return EXIT_OK
        s = _scenario_from_args(args)
        overrides = {"beta": s.beta, "mesh_h": s.mesh_h, "fp_tol": args.tol}
        if args.command != "minkowski":
            overrides["max_iter"] = args.max_iter
        cfg = config.solver_config(**overrides)
        rep = run_scenario(s, cfg)
    except (InputError, MinkowskiError, ValueError) as exc:
        if isinstance(exc, NUMERIC_ERRORS):
            print(f"error: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERIC_ERRORS as exc:  # pragma: no cover - all are MinkowskiError
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(rep.to_dict(), indent=2, default=float))
    return EXIT_OK if rep.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
