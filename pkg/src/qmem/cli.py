"""Command-line batch front-end.

Every subcommand accepts ``--config FILE`` with a JSON object whose keys are
the long flag names (dashes or underscores); explicit flags win over the file.
Exit codes: 0 success, 2 usage error, 3 numeric or invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from ._parallel import parallel_map
from .phase_space import (
    GaussianState,
    UncertaintyViolation,
    is_complete_memory_map,
    is_symplectic,
    symplectic_residual,
)
from .physical_models.eit import (
    EITParams,
    IntegrationError,
    IntegratorOptions,
    Ramp,
    RAMP_SHAPES,
    eit_ramp_sweep,
    reference_gamma_B,
)
from .protocols import (
    N_PASSES,
    SCHEMES,
    DegenerateMeasurement,
    HomodyneModel,
    ProtocolSpec,
    analytic_fidelity,
    gaussian_overlap_fidelity,
    run_protocol,
    sample_conditional_memories,
    target_state,
)
from .quadratic_dynamics import IdealCoupling, ideal_map
from .wigner import AMPLITUDE_CONVENTIONS, cat_fidelity, classical_limit_crossing

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

SIG_DIGITS = 12
FIDELITY_SLACK = 1e-9


class UsageError(Exception):
    pass


class InvariantFailure(Exception):
    pass


def fmt(x) -> str:
    return format(float(x), f".{SIG_DIGITS}g")


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) + 0.0 if math.isfinite(x) else None
    return obj


def dumps_json(doc) -> str:
    return json.dumps(_round(doc), indent=2, sort_keys=True) + "\n"


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def parse_range(text: str, log: bool = False) -> np.ndarray:
    """``start:stop:count`` grid, linear or logarithmic."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"range {text!r} must look like start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"range {text!r} has non-numeric fields") from None
    if count < 1:
        raise UsageError(f"range {text!r} needs count >= 1")
    if stop < start:
        raise UsageError(f"range {text!r} needs stop >= start")
    if log:
        if start <= 0:
            raise UsageError(f"log range {text!r} needs positive endpoints")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def _check_fidelity(f: float, what: str) -> None:
    if not (math.isfinite(f) and -FIDELITY_SLACK <= f <= 1 + FIDELITY_SLACK):
        raise InvariantFailure(f"{what} = {f!r} outside [0, 1]")


def _state_doc(s: GaussianState) -> dict:
    return {"mean": s.mean, "cov": s.cov}


def cmd_ideal_map(args) -> str:
    M = ideal_map(IdealCoupling(args.xi, args.phi))
    if not is_symplectic(M):
        raise InvariantFailure("ideal map is not symplectic")
    return dumps_json(
        {
            "xi": args.xi,
            "phi": args.phi,
            "matrix": M,
            "symplectic_residual": symplectic_residual(M),
            "complete_memory_map": is_complete_memory_map(M, tol=1e-9),
        }
    )


def _input_states(args):
    light = GaussianState(np.array(args.input_mean, float), np.diag(np.array(args.input_var, float)))
    atom = GaussianState.squeezed(args.atom_var, x=args.x0)
    return light, atom


def cmd_protocol(args) -> str:
    strengths = tuple(args.t) if args.t else (1.0,) * N_PASSES[args.scheme]
    measured = args.scheme.endswith("_feedback")
    homodyne = None
    if measured:
        quad = "X" if args.scheme == "single_pass_feedback" else "P"
        homodyne = HomodyneModel(quadrature=quad, sigma_eta=args.sigma_eta)
    elif args.sigma_eta:
        raise UsageError(f"{args.scheme} has no measurement; drop --sigma-eta")
    spec = ProtocolSpec(args.scheme, strengths, homodyne, args.gain if measured else None, x0=args.x0)
    light, atom = _input_states(args)

    result = run_protocol(spec, light, atom)
    if not is_symplectic(result.composite_map, tol=1e-8):
        raise InvariantFailure("composite map is not symplectic")
    target = target_state(spec, light)
    overlap = gaussian_overlap_fidelity(result.memory_state, target)
    _check_fidelity(overlap, "overlap fidelity")

    analytic = None
    default_gain = args.gain is None
    if default_gain and args.scheme != "triple_pass":
        analytic = analytic_fidelity(
            args.scheme, args.atom_var, args.input_var[1], args.input_var[0], args.sigma_eta, strengths[0]
        )
    elif args.scheme == "triple_pass" and strengths == (1.0, 1.0, 1.0):
        analytic = 1.0

    doc = {
        "scheme": args.scheme,
        "pass_strengths": list(strengths),
        "sigma_eta": args.sigma_eta,
        "feedback_gain": spec.feedback_gain,
        "composite_map": result.composite_map,
        "memory_state": _state_doc(result.memory_state),
        "target_state": _state_doc(target),
        "outcome_mean": result.outcome_mean,
        "outcome_variance": result.outcome_variance,
        "overlap_fidelity": overlap,
        "analytic_fidelity": analytic,
    }
    if args.samples:
        if not measured:
            raise UsageError(f"{args.scheme} has no measurement to sample")
        rng = np.random.default_rng(args.seed)
        _, means, cov = sample_conditional_memories(spec, light, atom, args.samples, rng)
        S = cov + target.cov
        Sinv = np.linalg.inv(S)
        d = means - target.mean
        per_shot = np.exp(-0.5 * np.einsum("ni,ij,nj->n", d, Sinv, d)) / math.sqrt(np.linalg.det(S))
        se = float(per_shot.std(ddof=1) / math.sqrt(len(per_shot))) if len(per_shot) > 1 else math.nan
        doc["monte_carlo"] = {
            "samples": args.samples,
            "seed": args.seed,
            "fidelity": float(per_shot.mean()),
            "standard_error": se,
        }
    return dumps_json(doc)


def _cat_row(job):
    a2, variances, sigma_eta, t, convention, parity = job
    return [cat_fidelity(a2, v, sigma_eta, t, parity=parity, convention=convention) for v in variances]


def cmd_cat_fidelity(args):
    alpha2 = parse_range(args.alpha2)
    variances = parse_range(args.var)
    if alpha2[0] < 0 or variances[0] <= 0:
        raise UsageError("alpha2 must be >= 0 and variances > 0")
    jobs = [(float(a2), variances.tolist(), args.sigma_eta, args.t, args.convention, args.parity)
            for a2 in alpha2]
    grid = parallel_map(_cat_row, jobs)
    rows = []
    for a2, frow in zip(alpha2, grid):
        for v, f in zip(variances, frow):
            _check_fidelity(f, f"fidelity at alpha2={a2:g}, var={v:g}")
            rows.append([float(a2), float(v), float(f)])
    text = dumps_csv(["alpha2", "sigma_xa", "fidelity"], rows)

    crossings = {}
    for conv in AMPLITUDE_CONVENTIONS:
        try:
            crossings[conv] = classical_limit_crossing(
                0.5, 0.5, (float(alpha2[0]) or 1e-3, float(alpha2[-1])), args.sigma_eta, args.t, conv
            )
        except ValueError:
            crossings[conv] = None
    sidecar = dumps_json(
        {
            "sigma_xa": 0.5,
            "level": 0.5,
            "alpha2_crossing": crossings,
            "grid_convention": args.convention,
            "sigma_eta": args.sigma_eta,
            "t": args.t,
            "parity": args.parity,
        }
    )
    side_path = args.sidecar
    if side_path is None and args.output not in (None, "-"):
        side_path = str(Path(args.output).with_suffix(".crossing.json"))
    return text, (side_path, sidecar)


def cmd_eit(args) -> str:
    if args.gamma <= 0:
        raise UsageError("--gamma must be positive")
    base = EITParams(args.g_sqrt_n, 1.0, args.gamma, args.delta, Ramp(args.shape, 1.0))
    if args.durations:
        gB = reference_gamma_B(base)
        if any(T <= 0 for T in args.durations):
            raise UsageError("durations must be positive")
        ratios = [abs(base.ramp.span) / (T * gB) for T in args.durations]
    else:
        ratios = parse_range(args.ratios, log=True).tolist()
    opts = IntegratorOptions(rtol=args.rtol, atol=args.atol, max_step=args.max_step)
    rows = eit_ramp_sweep(base, ratios, opts)
    header = ["T", "theta_dot_over_gammaB", "efficiency", "predicted_loss", "gamma_D_T", "omega_B", "status"]
    for r in rows:
        if r["status"] == "ok":
            _check_fidelity(r["efficiency"], f"efficiency at T={r['T']:g}")
    return dumps_csv(header, [[r[k] for k in header] for r in rows])


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with flag values")
    p.add_argument("--output", "-o", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmem", description="Quantum-memory phase-space calculations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ideal-map", help="closed-form swap map for coupling angle xi and area phi")
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=math.pi / 2)
    _common(p)
    p.set_defaults(func=cmd_ideal_map)

    p = sub.add_parser("protocol", help="run a storage scheme on Gaussian inputs")
    p.add_argument("--scheme", choices=SCHEMES, default="single_pass_feedback")
    p.add_argument("--t", type=float, nargs="+", default=None, help="pass strengths")
    p.add_argument("--sigma-eta", type=float, default=0.0)
    p.add_argument("--gain", type=float, default=None, help="feedback gain (default: scheme's own)")
    p.add_argument("--x0", type=float, default=0.0, help="initial atomic position mean")
    p.add_argument("--input-mean", type=float, nargs=2, default=[0.0, 0.0], metavar=("X", "P"))
    p.add_argument("--input-var", type=float, nargs=2, default=[0.5, 0.5], metavar=("VX", "VP"))
    p.add_argument("--atom-var", type=float, default=0.5, help="atomic X variance (minimum uncertainty)")
    p.add_argument("--samples", type=int, default=0, help="Monte-Carlo outcome samples")
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("cat-fidelity", help="odd-cat storage fidelity grid (CSV)")
    p.add_argument("--alpha2", default="0.1:5:50", help="start:stop:count")
    p.add_argument("--var", default="0.05:0.5:10", help="atomic X variance start:stop:count")
    p.add_argument("--sigma-eta", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--parity", choices=("odd", "even"), default="odd")
    p.add_argument("--convention", choices=AMPLITUDE_CONVENTIONS, default="quadrature")
    p.add_argument("--sidecar", default=None, help="crossing JSON path")
    _common(p)
    p.set_defaults(func=cmd_cat_fidelity)

    p = sub.add_parser("eit", help="EIT storage efficiency versus ramp speed (CSV)")
    p.add_argument("--g-sqrt-n", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=10.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--shape", choices=RAMP_SHAPES, default="smoothstep")
    p.add_argument("--ratios", default="1e-3:1e-2:4", help="theta_dot/gamma_B log range start:stop:count")
    p.add_argument("--durations", type=float, nargs="+", default=None, help="explicit ramp durations")
    p.add_argument("--rtol", type=float, default=1e-9)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--max-step", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_eit)
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(cfg) - known - {"command"})
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {unknown}")
    cfg.pop("command", None)
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        out = args.func(args)
        if isinstance(out, tuple):
            out, (side_path, side_text) = out
            _emit(out, args.output)
            if side_path:
                _emit(side_text, side_path)
        else:
            _emit(out, args.output)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UncertaintyViolation, InvariantFailure, IntegrationError, DegenerateMeasurement,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"qmem: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError) as exc:
        print(f"qmem: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
