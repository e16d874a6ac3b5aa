"""Command-line front end: oulab {check, solve, verify, converge, example7}.

Exit codes: 0 pass, 1 usage or IO error, 2 failure, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import gram_schmidt_theta
from .covariance import covariance_infinity
from .dirichlet import build_example, closed_form_b, closed_form_q_inf, parse_example_list
from .functions import Cosine, profile_from_dict
from .galerkin import build_pair, hypothesis_report
from .mehler import MehlerKernel, Resolvent, pde_residual
from .model import ModelError, degeneracy, load_model, model_to_dict
from .quadrature import QuadratureError, QuadratureSpec
from .verify import VerificationError, convergence_csv, convergence_study, solve_and_verify

EXIT = {"pass": 0, "fail": 2, "inconclusive": 3}
MC_COMMANDS = {"solve", "verify", "converge"}


class UsageError(Exception):
    pass


class Failure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    model_path: str | None = None
    example: str | None = None
    lam: float = 1.0
    ladder: list = field(default_factory=list)
    eps: list = field(default_factory=lambda: [0.0])
    quad: dict = field(default_factory=dict)
    phi: dict | None = None
    seed: int | None = None
    out: str | None = None
    jobs: int = 1
    n: int | None = None
    samples: int = 20
    tail: str = "consistent"

    def validate(self) -> None:
        if (self.model_path is None) == (self.example is None):
            raise UsageError("exactly one model source required: --model PATH or --example7 q1,q2,q3,N")
        if self.command in MC_COMMANDS and self.seed is None:
            raise UsageError("seed required")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()] if text.strip() else []


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oulab", description="Truncated Ornstein-Uhlenbeck operators: checks, solves, verification.")
    parser.add_argument("--version", action="version", version=f"oulab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("check", "Lyapunov, dissipation, RKHS constant and nu per (n, eps)"),
        ("solve", "solve lam v - L_n v = phi at sample points"),
        ("verify", "run the estimate suite and write a JSON report"),
        ("converge", "distances between consecutive ladder solutions (CSV)"),
        ("example7", "expand the Dirichlet preset q1,q2,q3,N with its closed forms"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON run config; command-line flags override it")
        p.add_argument("--model", dest="model_path", help="model JSON file")
        p.add_argument("--example7", dest="example", help="Dirichlet preset shorthand q1,q2,q3,N")
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--ladder", help="comma-separated frame sizes n")
        p.add_argument("--eps", help="comma-separated regularization grid")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--phi", help='inline profile JSON, e.g. {"cosine": {"a": [1, 0.5], "b": 0}}')
        p.add_argument("--quad", help="inline quadrature JSON {gh_order, qmc_points, seed, laplace_nodes}")
        p.add_argument("--jobs", type=int)
        p.add_argument("--n", type=int, help="frame size for solve")
        p.add_argument("--samples", type=int, help="number of standard normal points for solve")
        p.add_argument("--tail", choices=["consistent", "printed"], help="tail convention for example7 closed forms")
    return parser


def _json_arg(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: invalid JSON ({exc})") from None


def make_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: invalid JSON ({exc})") from None
    cfg = RunConfig(command=args.command)
    mapping = {
        "model": "model_path",
        "example7": "example",
        "lambda": "lam",
        "ladder": "ladder",
        "eps": "eps",
        "quad": "quad",
        "phi": "phi",
        "seed": "seed",
        "out": "out",
        "jobs": "jobs",
        "n": "n",
        "samples": "samples",
        "tail": "tail",
    }
    for key, attr in mapping.items():
        if key in base:
            setattr(cfg, attr, base[key])
    if args.model_path is not None:
        cfg.model_path, cfg.example = args.model_path, None
    if args.example is not None:
        cfg.example, cfg.model_path = args.example, (None if args.model_path is None else args.model_path)
    for attr in ("lam", "seed", "out", "jobs", "n", "samples", "tail"):
        value = getattr(args, attr)
        if value is not None:
            setattr(cfg, attr, value)
    try:
        if args.ladder is not None:
            cfg.ladder = _ints(args.ladder)
        if args.eps is not None:
            cfg.eps = _floats(args.eps)
    except ValueError as exc:
        raise UsageError(f"bad list: {exc}") from None
    if args.phi is not None:
        cfg.phi = _json_arg(args.phi, "--phi")
    if args.quad is not None:
        cfg.quad = _json_arg(args.quad, "--quad")
    cfg.ladder = [int(n) for n in cfg.ladder]
    cfg.eps = [float(e) for e in cfg.eps]
    if cfg.command != "example7" or cfg.model_path is not None:
        cfg.validate()
    elif cfg.example is None:
        raise UsageError("example7 requires --example7 q1,q2,q3,N")
    return cfg


def _load(cfg: RunConfig):
    """(model, preset or None)."""
    if cfg.model_path is not None:
        try:
            return load_model(cfg.model_path), None
        except OSError as exc:
            raise UsageError(f"cannot read model: {exc}") from None
    try:
        q1, q2, q3, N = parse_example_list(cfg.example)
        preset = build_example(q1, q2, q3, N, cfg.tail)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return preset.model, preset


def _quad(cfg: RunConfig) -> QuadratureSpec:
    spec = dict(cfg.quad or {})
    if cfg.seed is not None:
        spec["seed"] = cfg.seed
    return QuadratureSpec.from_dict(spec)


def _phi(cfg: RunConfig, dim: int):
    if cfg.phi is None:
        return Cosine([1.0, 0.5] if dim >= 2 else [1.0])
    try:
        return profile_from_dict(cfg.phi)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad profile: {exc}") from None


def _ladder(cfg: RunConfig, dim: int, floor: int = 1) -> list[int]:
    if cfg.ladder:
        return cfg.ladder
    ladder = [n for n in (2, 3, 4) if floor <= n <= dim]
    return ladder or [dim]


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        try:
            Path(cfg.out).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write output: {exc}") from None
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def cmd_check(cfg: RunConfig) -> int:
    model, preset = _load(cfg)
    flag = degeneracy(model)
    if not flag.nondegenerate and not any(e > 0 for e in cfg.eps):
        sys.stderr.write("regularization required: diffusion is degenerate and the epsilon grid has no positive entry\n")
        return 2
    pack = covariance_infinity(model)
    qnorm = float(np.linalg.norm(model.diffusion, "fro"))
    ladder = _ladder(cfg, model.dim)
    basis = gram_schmidt_theta(pack.q_inf, n=max(ladder))
    nu_formula = preset.nu_formula if preset is not None else None
    cells, failed = [], False
    lyap_ok = pack.lyap_residual <= 1e-10 * (qnorm + np.linalg.norm(model.drift, "fro") * np.linalg.norm(pack.q_inf, "fro"))
    for eps in cfg.eps:
        for n in ladder:
            pair = build_pair(model, pack.q_inf, basis, n, eps)
            rep = hypothesis_report(model, pack.q_inf, pair, nu_formula)
            entry = rep.to_dict()
            entry["comparison"] = (not flag.nondegenerate) and eps == 0
            dissipation_ok = rep.dissipation_residual <= 1e-10 * max(np.linalg.norm(pair.q_mat, "fro"), 1.0)
            entry["ok"] = bool(rep.ok and dissipation_ok)
            if not entry["comparison"] and not entry["ok"]:
                failed = True
            cells.append(entry)
    out = {
        "schema": "ou-check/1",
        "label": model.label,
        "dim": model.dim,
        "degeneracy": {"nondegenerate": flag.nondegenerate, "rank": flag.rank},
        "lyapunov_residual": pack.lyap_residual,
        "lyapunov_relative": pack.lyap_residual / qnorm if qnorm else pack.lyap_residual,
        "cells": cells,
        "status": "fail" if failed or not lyap_ok else "pass",
    }
    _emit(cfg, _dumps(out))
    return 2 if out["status"] == "fail" else 0


def cmd_solve(cfg: RunConfig) -> int:
    model, _ = _load(cfg)
    quad = _quad(cfg)
    phi = _phi(cfg, model.dim)
    n = cfg.n or max(_ladder(cfg, model.dim, phi.arity))
    if not phi.arity <= n <= model.dim:
        raise UsageError(f"n must lie between the profile arity {phi.arity} and {model.dim}")
    eps = cfg.eps[0] if cfg.eps else 0.0
    if not degeneracy(model).nondegenerate and eps <= 0:
        sys.stderr.write("regularization required: diffusion is degenerate and epsilon is 0\n")
        return 2
    pack = covariance_infinity(model)
    pair = build_pair(model, pack.q_inf, gram_schmidt_theta(pack.q_inf, n=n), n, eps)
    kernel = MehlerKernel(pair)
    sol = Resolvent(kernel, cfg.lam, phi, quad)
    pts = np.random.default_rng(cfg.seed).standard_normal((cfg.samples, n))
    v, g, H = sol.evaluate(pts)
    out = {
        "schema": "ou-solve/1",
        "label": model.label,
        "lambda": cfg.lam,
        "n": n,
        "epsilon": eps,
        "phi": phi.to_dict(),
        "points": pts.tolist(),
        "value": v.tolist(),
        "gradient": g.tolist(),
        "pde_residual": pde_residual(kernel, cfg.lam, phi, pts, (v, g, H)),
    }
    _emit(cfg, _dumps(out))
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    model, _ = _load(cfg)
    phi = _phi(cfg, model.dim)
    try:
        report = solve_and_verify(model, cfg.lam, phi, _ladder(cfg, model.dim, phi.arity), cfg.eps, _quad(cfg), jobs=cfg.jobs)
    except VerificationError as exc:
        if "regularization required" in str(exc):
            sys.stderr.write(f"{exc}\n")
            return 2
        raise UsageError(str(exc)) from None
    _emit(cfg, report.to_json())
    return EXIT[report.status]


def cmd_converge(cfg: RunConfig) -> int:
    model, _ = _load(cfg)
    phi = _phi(cfg, model.dim)
    ladder = cfg.ladder or [n for n in range(phi.arity, min(model.dim, 5) + 1)]
    eps = cfg.eps[0] if cfg.eps else 0.0
    try:
        rows = convergence_study(model, cfg.lam, phi, ladder, _quad(cfg), epsilon=eps)
    except VerificationError as exc:
        raise UsageError(str(exc)) from None
    _emit(cfg, convergence_csv(rows))
    return 0


def cmd_example7(cfg: RunConfig) -> int:
    q1, q2, q3, N = parse_example_list(cfg.example)
    preset = build_example(q1, q2, q3, N, cfg.tail)
    out = {
        "model": model_to_dict(preset.model),
        "tail": preset.tail,
        "q_inf": preset.q_inf.tolist(),
        "b_mat": preset.b_mat.tolist(),
        "q_inf_tail_alternatives": {
            "consistent": np.diag(closed_form_q_inf(q1, q2, q3, N, "consistent"))[2:].tolist(),
            "printed": np.diag(closed_form_q_inf(q1, q2, q3, N, "printed"))[2:].tolist(),
        },
        "b_tail_alternatives": {
            "consistent": np.diag(closed_form_b(q1, q2, q3, N, "consistent"))[2:].tolist(),
            "printed": np.diag(closed_form_b(q1, q2, q3, N, "printed"))[2:].tolist(),
        },
        "admissible": preset.admissible,
        "admissibility_margin": preset.admissibility_margin,
        "sufficient_condition": preset.sufficient,
        "nu_formula": preset.nu_formula,
    }
    _emit(cfg, _dumps(out))
    return 0


COMMANDS = {
    "check": cmd_check,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "converge": cmd_converge,
    "example7": cmd_example7,
}


def main(argv=None) -> int:
    try:
        cfg = make_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (ModelError, QuadratureError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
