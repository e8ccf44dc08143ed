"""Command-line driver: solve -> build -> simulate -> verify, plus compose and certify.

Exit codes: 0 success, 1 bad input or usage, 2 a checked bound was violated.
Every JSON output goes through ``jsonio`` so identical inputs, config and
seed give identical bytes.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import algsim, boolfn, jsonio, library, spectral
from .advsdp import DualSolution, SolverTolerances, evaluate_primal, feasibility_residual, solve_dual
from .boolfn import BooleanFunction
from .errors import AdvqError, BoundViolation, CertificateError, ConfigError, ValidationError
from .graphrefl import DEFAULT_KAPPA, build_graph, build_input_operators, query_oracle_check

log = logging.getLogger("advq")

CONFIG_ENV = "ADVQ_CONFIG"
CHECKS = ("witness", "bipartite", "effective", "phase", "jordan")
# numeric --lemma values map onto the descriptive check names
LEMMA_ALIASES = {"3.1": "witness", "3.2": "bipartite", "3.3": "effective", "3.4": "phase"}
RECONSTRUCT_TOL = 1e-10
IDENTITY_TOL = 1e-9


@dataclass
class RunConfig:
    tol_feas: float = 1e-8
    tol_obj: float = 1e-4
    tol_ker: float = 1e-9
    tol_gap: float = 1e-9
    kappa: float = DEFAULT_KAPPA
    gamma_points: int = 50
    c_points: int = 21
    theta_points: int = 50
    seed: int = 0
    jobs: int = 1
    max_iter: int = 200

    def __post_init__(self):
        for name in ("tol_feas", "tol_obj", "tol_ker", "tol_gap"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.kappa <= 1:
            raise ConfigError("kappa must lie in (0, 1]")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    @property
    def solver(self) -> SolverTolerances:
        return SolverTolerances(feas=self.tol_feas, obj=self.tol_obj, max_iter=self.max_iter)

    @classmethod
    def resolve(cls, args) -> "RunConfig":
        """Defaults, then the file named by $ADVQ_CONFIG, then command-line flags."""
        values = {}
        path = os.environ.get(CONFIG_ENV)
        if path:
            data = jsonio.load(path)
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
            values.update(data)
        for f in fields(cls):
            flag = getattr(args, f.name, None)
            if flag is not None:
                values[f.name] = flag
        return cls(**values)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_function(ref: str) -> BooleanFunction:
    """A truth-table path, or ``name:OR_2`` for a built-in function."""
    if ref.startswith("name:"):
        name = ref[5:]
        if name not in boolfn.NAMED:
            raise ValidationError(f"unknown function {name!r}; known: {', '.join(sorted(boolfn.NAMED))}")
        return boolfn.NAMED[name]()
    return boolfn.load(ref)


def load_dual(path: str, f: BooleanFunction) -> DualSolution:
    try:
        return DualSolution.from_dict(jsonio.load(path), f)
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateError(f"{path}: malformed dual file ({exc})") from None


def dual_record(d: DualSolution) -> dict:
    out = d.to_dict()
    if d.meta:
        out["solver"] = {k: v for k, v in d.meta.items() if v is not None}
    return out


def _emit(obj, out: str | None):
    if out:
        jsonio.dump(obj, out)
    else:
        sys.stdout.write(jsonio.dumps(obj) + "\n")


def _obtain_dual(args, f: BooleanFunction, cfg: RunConfig) -> DualSolution:
    if getattr(args, "dual", None):
        return load_dual(args.dual, f)
    log.info("no --dual given; solving %s", f.name or "f")
    return solve_dual(f, cfg.solver)


def _feasibility(f, d, cfg) -> dict:
    res = feasibility_residual(f, d)
    return {"check": "dual.feasibility", "x": None, "residual": res, "bound": cfg.tol_feas, "pass": res <= cfg.tol_feas}


def _inputs(f: BooleanFunction, args) -> list[str]:
    x = getattr(args, "input", None)
    if x is None:
        return list(f.domain)
    if x not in f:
        raise ValidationError(f"{x!r} is not in the domain of {f.name or 'f'}")
    return [x]


def _fan_out(fn, items, jobs: int) -> list:
    if jobs == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------- checks

def _gap_entry(name: str, x: str, report: spectral.GapReport) -> dict:
    entry = {"check": name, "x": x, "pass": report.passed, "rows": report.rows()}
    if not report.passed:
        entry["invariant"] = report.side
    entry.update({k: v for k, v in report.extra.items() if k != "x"})
    return entry


def _violation(name: str, x: str, exc: BoundViolation) -> dict:
    return {"check": name, "x": x, "pass": False, "invariant": exc.invariant, "message": str(exc)}


def _check_witness(ops, cfg):
    g = ops.graph
    try:
        if ops.f_x == 1:
            w = spectral.witness_positive(ops)
            bound = 1 / (1 + g.kappa**2)
        else:
            w = spectral.witness_negative(ops)
            bound = g.kappa**2 / (g.W * (g.W + 1))
    except BoundViolation as exc:
        return _violation("witness", ops.x, exc)
    return {"check": "witness", "x": ops.x, "f_x": ops.f_x, "overlap": w.overlap, "bound": bound,
            "residual": w.residual, "pass": True}


def _check_bipartite(ops, cfg):
    if ops.f_x != 0:
        return None
    try:
        rep = spectral.verify_bipartite_gap_for_input(ops, spectral.default_log_grid(points=cfg.gamma_points))
    except BoundViolation as exc:
        return _violation("bipartite", ops.x, exc)
    return _gap_entry("bipartite", ops.x, rep)


def _check_effective(ops, cfg):
    if ops.f_x != 0:
        return None
    rep = spectral.verify_effective_gap(ops, spectral.default_c_grid(cfg.c_points))
    entry = _gap_entry("effective", ops.x, rep)
    err = spectral.transfer_identity_error(ops)
    entry["transfer_identity_error"] = err
    if err > IDENTITY_TOL:
        entry["pass"] = False
        entry.setdefault("invariant", "effective_gap.transfer_identity")
    return entry


def _check_phase(ops, cfg):
    thetas = spectral.default_log_grid(points=cfg.theta_points)
    try:
        rep = spectral.verify_phase_gap(ops, thetas)
    except BoundViolation as exc:
        return _violation("phase", ops.x, exc)
    return _gap_entry("phase", ops.x, rep)


def _check_jordan(ops, cfg):
    spec = spectral.spectrum_of(ops)
    recon = float(np.abs(spec.reconstruct() - ops.U).max())
    ident = spectral.block_identities(spec, ops.Pi, ops.graph.delta)
    ok = recon <= RECONSTRUCT_TOL and max(ident.values()) <= IDENTITY_TOL
    entry = {"check": "jordan", "x": ops.x, "reconstruction_error": recon, "block_identities": ident, "pass": ok}
    if not ok:
        entry["invariant"] = "jordan.reconstruction" if recon > RECONSTRUCT_TOL else "jordan.block_identity"
    return entry


def _check_oracle(ops, cfg):
    ok = query_oracle_check(ops.graph, ops.x)
    entry = {"check": "query_oracle", "x": ops.x, "pass": ok}
    if not ok:
        entry["invariant"] = "query_oracle.factorization"
    return entry


def _check_algorithms(ops, cfg):
    out = []
    for alg in (1, 2, 3):
        res = algsim.run(ops, alg)
        ok = algsim.meets_threshold(res)
        entry = {"check": f"alg{alg}", "x": ops.x, "pass": ok, "outcome": res.to_dict()}
        if not ok:
            entry["invariant"] = f"alg{alg}.{'completeness' if ops.f_x else 'soundness'}"
        out.append(entry)
    return out


CHECKERS = {
    "witness": _check_witness,
    "bipartite": _check_bipartite,
    "effective": _check_effective,
    "phase": _check_phase,
    "jordan": _check_jordan,
}


def verification_report(f: BooleanFunction, d: DualSolution, cfg: RunConfig, checks, inputs,
                        extras: bool = False) -> dict:
    """Assemble the report; ``extras`` adds the oracle factorization and algorithm thresholds."""
    entries = [_feasibility(f, d, cfg)]
    if entries[0]["pass"]:
        g = build_graph(f, d, cfg.kappa, cfg.tol_ker)

        def per_input(x):
            ops = build_input_operators(g, x)
            rows = []
            for name in checks:
                e = CHECKERS[name](ops, cfg)
                if e is not None:
                    rows.append(e)
            if extras:
                rows.append(_check_oracle(ops, cfg))
                rows.extend(_check_algorithms(ops, cfg))
            return rows

        for rows in _fan_out(per_input, inputs, cfg.jobs):
            entries.extend(rows)
        kernel = {"kernel_dim": g.kernel_dim, "kernel_gap": g.smallest_nonzero, "root_kernel_mass": spectral.kernel_root_mass(g)}
    else:
        kernel = None
    order = {x: i for i, x in enumerate(f.domain)}
    entries.sort(key=lambda e: (e["check"], -1 if e["x"] is None else order[e["x"]]))
    failed = sorted({e.get("invariant", e["check"]) for e in entries if not e["pass"]})
    report = {
        "function": f.name,
        "n": f.n,
        "W": d.W,
        "m": d.m,
        "kappa": cfg.kappa,
        "checks": entries,
        "failed": failed,
        "pass": not failed,
    }
    if kernel:
        report["graph"] = kernel
    if d.meta:
        report["solver"] = {k: v for k, v in d.meta.items() if v is not None}
    return report


def _finish(report: dict, out: str | None) -> int:
    _emit(report, out)
    if report["pass"]:
        return 0
    for name in report["failed"]:
        sys.stderr.write(f"bound violated: {name}\n")
    return 2


# --------------------------------------------------------------------------- commands

def cmd_solve(args, cfg: RunConfig) -> int:
    f = load_function(args.function)
    d = solve_dual(f, cfg.solver)
    _emit(dual_record(d), args.out)
    log.info("W = %.12g, m = %d", d.W, d.m)
    return 0


def cmd_build(args, cfg: RunConfig) -> int:
    f = load_function(args.function)
    d = _obtain_dual(args, f, cfg)
    feas = _feasibility(f, d, cfg)
    if not feas["pass"]:
        sys.stderr.write(f"bound violated: dual.feasibility (residual {feas['residual']:.3e})\n")
        return 2
    g = build_graph(f, d, cfg.kappa, cfg.tol_ker)
    _emit(g.to_dict(), args.out)
    return 0


def cmd_simulate(args, cfg: RunConfig) -> int:
    f = load_function(args.function)
    d = _obtain_dual(args, f, cfg)
    feas = _feasibility(f, d, cfg)
    if not feas["pass"]:
        sys.stderr.write(f"bound violated: dual.feasibility (residual {feas['residual']:.3e})\n")
        return 2
    g = build_graph(f, d, cfg.kappa, cfg.tol_ker)
    inputs = list(f.domain) if args.all_inputs or args.input is None else _inputs(f, args)
    algs = [args.alg] if args.alg else [1, 2, 3]
    order = {x: i for i, x in enumerate(f.domain)}

    def per_input(x):
        ops = build_input_operators(g, x)
        rows = []
        for alg in algs:
            if args.trials:
                # one stream per input so rows do not depend on which inputs were requested
                res = algsim.sample(ops, alg, args.trials, cfg.seed + order[x])
            else:
                res = algsim.run(ops, alg)
            row = res.to_dict()
            row["meets_threshold"] = algsim.meets_threshold(res)
            rows.append(row)
        return rows

    rows = [r for chunk in _fan_out(per_input, inputs, cfg.jobs) for r in chunk]
    rows.sort(key=lambda r: (r["alg"], order[r["x"]]))
    _emit(rows, args.out)
    bad = [f"alg{r['alg']}@{r['x']}" for r in rows if not r["meets_threshold"]]
    if bad:
        sys.stderr.write(f"bound violated: {', '.join(bad)}\n")
        return 2
    return 0


def cmd_verify(args, cfg: RunConfig) -> int:
    f = load_function(args.function)
    d = _obtain_dual(args, f, cfg)
    if args.all:
        checks, extras = CHECKS, True
    else:
        lemma = LEMMA_ALIASES.get(args.lemma, args.lemma)
        checks, extras = (lemma,), False
    report = verification_report(f, d, cfg, checks, _inputs(f, args), extras)
    return _finish(report, args.out)


def cmd_compose(args, cfg: RunConfig) -> int:
    f, g = load_function(args.f), load_function(args.g)
    fg = boolfn.compose(f, g, cap=args.cap)
    W = {}
    for key, fn in (("f", f), ("g", g), ("fg", fg)):
        W[key] = solve_dual(fn, cfg.solver).W
    product = W["f"] * W["g"]
    deviation = abs(W["fg"] - product) / product
    report = {
        "f": f.name, "g": g.name, "n": fg.n,
        "W_f": W["f"], "W_g": W["g"], "W_fg": W["fg"], "W_f_times_W_g": product,
        "relative_deviation": deviation, "rtol": args.rtol,
        "failed": [] if deviation <= args.rtol else ["composition.multiplicativity"],
    }
    report["pass"] = not report["failed"]
    return _finish(report, args.out)


def _builtin_gamma(f: BooleanFunction) -> np.ndarray:
    """Closed-form adversary matrix for a function whose truth table is a known one."""
    for name in library.NAMES:
        c = library.certificate(name)
        if c.f.domain == f.domain and c.f.values == f.values:
            return c.gamma
    raise ValidationError(f"no built-in adversary matrix for {f.name or 'f'}; pass --gamma")


def cmd_certify(args, cfg: RunConfig) -> int:
    f = load_function(args.function)
    if args.gamma:
        data = jsonio.load(args.gamma)
        gamma = np.asarray(data["gamma"] if isinstance(data, dict) else data, dtype=float)
    else:
        gamma = _builtin_gamma(f)
    p = evaluate_primal(f, gamma)
    report = {"function": f.name, "value": p.value, "norm": p.norm, "max_filtered_norm": p.max_filtered_norm,
              "unbounded": p.unbounded, "failed": []}
    if args.dual:
        d = load_dual(args.dual, f)
        gap = d.W - p.value
        report.update(W=d.W, duality_gap=gap, tol_gap=cfg.tol_gap)
        if gap < -cfg.tol_gap:
            report["failed"].append("weak_duality")
        feas = _feasibility(f, d, cfg)
        report["feasibility_residual"] = feas["residual"]
        if not feas["pass"]:
            report["failed"].append("dual.feasibility")
    report["pass"] = not report["failed"]
    return _finish(report, args.out)


# --------------------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol-feas", type=float, default=argparse.SUPPRESS, help="dual feasibility tolerance")
    p.add_argument("--tol-obj", type=float, default=argparse.SUPPRESS, help="relative duality-gap tolerance")
    p.add_argument("--kappa", type=float, default=argparse.SUPPRESS, help="root edge scale, in (0, 1]")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="threads for per-input work")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="advq", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(handler=fn)
        return p

    p = add("solve", cmd_solve, "solve the dual adversary SDP")
    p.add_argument("--function", required=True, help="truth-table JSON or name:F")
    p.add_argument("--out")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)

    p = add("build", cmd_build, "build the graph and dump B_G")
    p.add_argument("--function", required=True)
    p.add_argument("--dual")
    p.add_argument("--out")

    p = add("simulate", cmd_simulate, "exact (or sampled) output probabilities of the algorithms")
    p.add_argument("--function", required=True)
    p.add_argument("--dual")
    p.add_argument("--alg", type=int, choices=(1, 2, 3))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--input")
    g.add_argument("--all-inputs", action="store_true")
    p.add_argument("--trials", type=int)
    p.add_argument("--out")

    p = add("verify", cmd_verify, "check the spectral bounds on every (or one) input")
    p.add_argument("--function", required=True)
    p.add_argument("--dual", help="omit to solve first")
    p.add_argument("--input")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lemma", choices=sorted(LEMMA_ALIASES) + list(CHECKS))
    g.add_argument("--all", action="store_true")
    p.add_argument("--out")

    p = add("compose", cmd_compose, "compare W(f o g) with W(f) W(g)")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--cap", type=int, default=boolfn.DEFAULT_COMPOSE_CAP)
    p.add_argument("--rtol", type=float, default=2e-3)
    p.add_argument("--out")

    p = add("certify", cmd_certify, "evaluate an adversary matrix Gamma")
    p.add_argument("--function", required=True)
    p.add_argument("--gamma", help="JSON matrix in domain order; default: built-in matrix")
    p.add_argument("--dual")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.resolve(args)
        return args.handler(args, cfg)
    except BoundViolation as exc:
        sys.stderr.write(f"bound violated: {exc}\n")
        return 2
    except AdvqError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
