"""Command-line front end.

Exit codes: 0 success (``check``: strictly passive), 1 error,
2 passive but not strictly (``check``) or not strictly passive
(``optimal-ph``), 3 not passive (``check``).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .distance import (
    passify,
    passivation_refine,
    refinement_certificate,
    stability_radius,
    stabilization_diagonal,
    stabilization_refine,
)
from .exceptions import NotStrictlyPassive, PassivityError
from .io import dumps, load_matrix, load_model, read_json, write_json
from .model import from_ph_form, frequency_scan, shift_model, spectral_abscissa, transform_to_ph
from .optimal import classify_passivity, optimal_ph, passivity_status
from .oracle import random_perturbation_search
from .radius import apply_perturbation, ph_radius, x_passivity_radius
from .riccati import extremal_solutions

EXIT_OK, EXIT_ERROR, EXIT_PASSIVE, EXIT_NONPASSIVE = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    input_path: str
    output_path: str | None
    tol: float
    axis_tol: float
    method: str
    seed: int
    format: str


class _Report:
    """Collects ``key: value`` lines for text output and a dict for JSON."""

    def __init__(self, kind):
        self.data = {"kind": kind}
        self.lines = []

    def add(self, key, value, label=None, fmt="{:.10g}"):
        self.data[key] = value
        if label is not None:
            if isinstance(value, float):
                shown = fmt.format(value)
            elif isinstance(value, (list, tuple)) and value and isinstance(value[0], float):
                shown = "[" + ", ".join(fmt.format(v) for v in value) + "]"
            else:
                shown = str(value)
            self.lines.append(f"{label}: {shown}")

    def note(self, text):
        self.lines.append(text)

    def emit(self, cfg, out=None):
        out = out or sys.stdout
        if cfg.format == "json":
            out.write(dumps(self.data))
        else:
            out.write("\n".join(self.lines) + "\n")
        if cfg.output_path:
            write_json(cfg.output_path, self.data)


def _status_dict(st):
    return {
        "xi": st.xi,
        "a1": st.a1,
        "a2": st.a2,
        "a3": st.a3,
        "spectral_abscissa": st.spectral_abscissa,
        "d_margin": st.d_margin,
        "crossings": list(st.crossings),
        "degenerate": st.degenerate,
    }


# ------------------------------------------------------------------ commands

def cmd_check(cfg, args):
    M = load_model(cfg.input_path)
    st = passivity_status(M, 0.0, cfg.axis_tol)
    verdict = classify_passivity(M, cfg.tol, cfg.axis_tol)
    rep = _Report("check")
    rep.add("model", M.to_dict())
    rep.add("minimal", bool(M.minimal), "minimal")
    rep.add("status", _status_dict(st))
    rep.note(f"A1 (A Hurwitz): {st.a1}  spectral abscissa {st.spectral_abscissa:.10g}")
    rep.note(f"A2 (D^T + D > 0): {st.a2}  lambda_min {st.d_margin:.10g}")
    rep.note(f"A3 (no imaginary-axis zeros): {st.a3}"
             + (f"  crossings {[float(f'{w:.10g}') for w in st.crossings]}" if st.crossings else "")
             + ("  (degenerate pencil)" if st.degenerate else ""))
    rep.add("verdict", verdict, "verdict")
    extremal = None
    if verdict == "strict" and M.minimal:
        try:
            lo, hi = extremal_solutions(M, cfg.axis_tol)
            extremal = {"X_minus": lo.X, "X_plus": hi.X,
                        "residual_minus": lo.relative_residual, "residual_plus": hi.relative_residual}
            rep.note(f"X_- eigenvalues: {np.array2string(np.linalg.eigvalsh(lo.X), precision=6)}")
            rep.note(f"X_+ eigenvalues: {np.array2string(np.linalg.eigvalsh(hi.X), precision=6)}")
        except PassivityError as exc:
            rep.note(f"extremal solutions unavailable: {exc}")
    rep.add("extremal", extremal)
    rep.emit(cfg)
    return {"strict": EXIT_OK, "passive": EXIT_PASSIVE, "non-passive": EXIT_NONPASSIVE}[verdict]


def _load_certificate(path, n):
    obj = read_json(path)
    X = obj.get("X", obj.get("certificate")) if isinstance(obj, dict) else obj
    if isinstance(X, dict):
        X = X.get("X")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape != (n, n):
        raise PassivityError(f"certificate has shape {X.shape}, expected {(n, n)}")
    return X


def cmd_radius(cfg, args):
    M = load_model(cfg.input_path)
    rep = _Report("radius")
    if args.certificate:
        X = _load_certificate(args.certificate, M.n)
        source = args.certificate
    else:
        X = optimal_ph(M, cfg.tol, cfg.axis_tol, cfg.method).X
        source = "optimal"
    r = x_passivity_radius(M, X)
    rep.add("model", M.to_dict())
    rep.add("certificate_source", source, "certificate")
    rep.add("X", X)
    rep.add("rho", float(r.rho), "rho_M(X)")
    rep.add("gamma_star", float(r.gamma_star), "gamma*")
    rep.add("lower_bound", float(r.lower_bound), "lower bound alpha*beta/2")
    rep.add("upper_bound", float(r.upper_bound), "upper bound alpha*beta/(1+c)")
    rep.add("xi_star", float(r.certificate.xi_star), "xi*(X)")
    rep.add("ph_radius", float(ph_radius(transform_to_ph(M, X))), "rho of pH form (X = I)")
    rep.add("residual_lambda_min", float(r.residual_lambda_min), "lambda_min W(X, M + Delta)")
    rep.add("perturbation", {"dA": r.perturbation.dA, "dB": r.perturbation.dB,
                             "dC": r.perturbation.dC, "dD": r.perturbation.dD})
    if args.restarts > 0:
        rs = random_perturbation_search(M, X, args.restarts, cfg.seed)
        rep.add("random_search", {"restarts": args.restarts, "seed": cfg.seed, "upper_bound": rs})
        rep.note(f"random search ({args.restarts} restarts, seed {cfg.seed}): {rs:.10g}")
    rep.emit(cfg)
    return EXIT_OK


def cmd_optimal_ph(cfg, args):
    M = load_model(cfg.input_path)
    try:
        res = optimal_ph(M, cfg.tol, cfg.axis_tol, cfg.method)
    except NotStrictlyPassive as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PASSIVE
    P = res.realization
    rep = _Report("optimal-ph")
    rep.add("model", from_ph_form(P).to_dict())
    rep.add("ph", P.to_dict())
    rep.add("xi", {"xi_lo": res.xi.xi_lo, "xi_hi": res.xi.xi_hi, "iterations": res.xi.iterations,
                   "evaluations": res.xi.evaluations, "method": res.xi.method,
                   "fallback": res.xi.fallback, "xi_up": res.xi.xi_up_initial})
    rep.note(f"Xi bracket: [{res.xi.xi_lo:.12g}, {res.xi.xi_hi:.12g}]  "
             f"({res.xi.method}, {res.xi.iterations} iterations)")
    rep.add("certificate", res.X)
    rep.add("T", P.T)
    rep.add("xi_star", float(res.xi_star), "xi*(X)")
    rep.add("ph_radius", float(ph_radius(P)), "pH radius")
    for name in ("J", "R", "G", "K", "S", "N"):
        rep.note(f"{name} = {np.array2string(getattr(P, name), precision=8)}")
    if args.ph_out:
        write_json(args.ph_out, P.to_dict())
    rep.emit(cfg)
    return EXIT_OK


def _parse_floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def cmd_passify(cfg, args):
    M = load_model(cfg.input_path)
    res = passify(M, cfg.tol, cfg.axis_tol)
    rep = _Report("passify")
    rep.add("xi", res.xi, "Xi (diagonal shift)")
    rep.add("xi_bracket", [res.xi_lo, res.xi])
    rep.add("binding", list(res.binding), "binding condition")
    rep.add("spectral_norm", float(res.spectral_norm), "diagonal stage, spectral norm")
    rep.add("frobenius_diagonal", float(res.frobenius_diagonal), "diagonal stage, Frobenius norm")
    if res.refined_perturbation is None:
        rep.add("frobenius_refined", 0.0, "refined stage, Frobenius norm")
        rep.add("model", M.to_dict())
        rep.note("model is already strictly passive")
        rep.emit(cfg)
        return EXIT_OK
    rep.add("frobenius_refined", float(res.frobenius_refined), "refined stage, Frobenius norm")
    rep.add("frobenius_triangular", float(res.construction_norm), "triangular construction, Frobenius norm")
    rep.add("certificate_kind", res.certificate.kind, "refined certificate")
    rep.add("certificate", res.certificate.X)
    Mref = apply_perturbation(M, res.refined_perturbation)
    rep.add("model", Mref.to_dict())
    rep.add("diagonal_model", shift_model(M, -res.xi).to_dict())
    sweep = []
    for d in _parse_floats(args.sweep) if args.sweep else []:
        X = refinement_certificate(M, res.xi + d, res.xi + d)
        p = passivation_refine(M, res.xi, X)
        sweep.append({"shift": d, "frobenius_refined": p.norm_F})
        rep.note(f"certificate at Xi + {d:g}: refined Frobenius norm {p.norm_F:.10g}")
    rep.add("sweep", sweep)
    rep.emit(cfg)
    return EXIT_OK


def cmd_stabilize(cfg, args):
    A = load_matrix(cfg.input_path)
    res = stabilization_diagonal(A)
    dA = stabilization_refine(A, res.xi)
    rep = _Report("stabilize")
    rep.add("xi", res.xi, "Xi (diagonal shift)")
    rep.add("binding", ["A1'"] if res.xi > 0 else [], "binding condition")
    rep.add("spectral_norm", res.spectral_norm, "diagonal stage, spectral norm")
    rep.add("frobenius_diagonal", res.frobenius_norm, "diagonal stage, Frobenius norm")
    rep.add("frobenius_refined", float(np.linalg.norm(dA)), "refined stage, Frobenius norm")
    rep.add("abscissa_refined", spectral_abscissa(A + dA), "spectral abscissa after refinement")
    rep.add("A_diagonal", res.A_stab)
    rep.add("A_refined", A + dA)
    if spectral_abscissa(A) < 0.0:
        sr = stability_radius(A)
        rep.add("stability_radius", {"radius": sr.radius, "omega": sr.omega})
        rep.note(f"stability radius: {sr.radius:.10g} at omega = {sr.omega:.10g}")
    rep.emit(cfg)
    return EXIT_OK


def parse_grid(text, allow_log):
    """``LO:HI:N`` (linear) or ``LO:HI:N:log``."""
    parts = text.split(":")
    log = False
    if len(parts) == 4 and allow_log and parts[3] == "log":
        log = True
        parts = parts[:3]
    if len(parts) != 3:
        raise ValueError(f"grid {text!r} is not LO:HI:N" + ("[:log]" if allow_log else ""))
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError(f"grid {text!r} is empty")
    if log:
        if lo <= 0 or hi <= 0:
            raise ValueError("log grid needs positive bounds")
        return np.logspace(np.log10(lo), np.log10(hi), n)
    return np.linspace(lo, hi, n)


def cmd_scan(cfg, args):
    M = load_model(cfg.input_path)
    if args.xi is not None:
        xis = np.array(_parse_floats(args.xi))
    else:
        xis = parse_grid(args.xi_grid, allow_log=False)
    omegas = parse_grid(args.omega_grid, allow_log=True)
    if xis.size == 0 or omegas.size == 0:
        raise ValueError("empty grid")
    scan = frequency_scan(M, xis, omegas)
    if cfg.format == "json":
        text = dumps({"kind": "scan", "xi": scan.xi, "omega": scan.omega, "gamma": scan.gamma,
                      "skipped": scan.skipped})
    else:
        text = scan.to_csv()
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if scan.skipped:
        print(f"skipped {scan.skipped} resolvent-singular points", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "radius": cmd_radius,
    "optimal-ph": cmd_optimal_ph,
    "passify": cmd_passify,
    "stabilize": cmd_stabilize,
    "scan": cmd_scan,
}


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="model JSON file")
    common.add_argument("--tol", type=_positive, default=1e-6, help="bracket tolerance tau (default 1e-6)")
    common.add_argument("--axis-tol", type=_positive, default=1e-8,
                        help="imaginary-axis band relative to the pencil norm (default 1e-8)")
    common.add_argument("--method", choices=("bisection", "accelerated"), default="accelerated")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "json", "csv"), default=None)
    common.add_argument("--out", metavar="PATH", default=None, help="write the JSON (or CSV) result here")

    parser = argparse.ArgumentParser(prog="phrobust", description="Passivity robustness of LTI models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="test conditions A1-A3 at xi = 0")
    p = sub.add_parser("radius", parents=[common], help="X-passivity radius and worst-case perturbation")
    p.add_argument("--certificate", metavar="PATH", help="JSON with key 'X' (default: optimal certificate)")
    p.add_argument("--restarts", type=int, default=0, help="random-search restarts for an upper bound")
    p = sub.add_parser("optimal-ph", parents=[common], help="optimally robust pH realization")
    p.add_argument("--ph-out", metavar="PATH", help="also write the pH matrices as a pH model file")
    p = sub.add_parser("passify", parents=[common], help="distance to passivity, two stages")
    p.add_argument("--sweep", metavar="D1,D2,...", help="extra certificate shifts above Xi to compare")
    sub.add_parser("stabilize", parents=[common], help="distance to stability of A")
    p = sub.add_parser("scan", parents=[common], help="CSV of gamma(xi, omega)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--xi-grid", metavar="LO:HI:N", default="0:0:1")
    g.add_argument("--xi", metavar="X1,X2,...", help="explicit list of shifts")
    p.add_argument("--omega-grid", metavar="LO:HI:N[:log]", default="0:100:1001")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.format or ("csv" if args.command == "scan" else "text")
    if fmt == "csv" and args.command != "scan":
        parser.error("--format csv is only valid for scan")
    cfg = RunConfig(args.command, args.input, args.out, args.tol, args.axis_tol, args.method, args.seed, fmt)
    try:
        return COMMANDS[args.command](cfg, args)
    except (PassivityError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
