"""Command-line surface.

Every command writes a JSON artifact (with --out) that embeds a
canonical argv: `torsio rerun artifact.json --out copy.json` replays it
and must reproduce the bytes exactly.  To keep that promise the
canonical argv stores resolved values (seed resolved from TORSIO_SEED,
floats via repr) in a fixed order, and never the output path.

Exit codes: 0 ok, 2 invalid input, 3 solver did not converge,
4 verdict inconclusive under --strict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import artifacts
from .diagnostics import DiagnoseConfig, _decide, diagnose_l1, diagnose_l2
from .elliptic import solve
from .expr import ExprError
from .gallery import preset, preset_names, run_gallery, run_preset
from .geometry import Box, GridMismatch, build_grid, region_from_dict
from .measure import InfinityOutside, InvalidMeasure, measure_from_dict
from .ptorsion import p_diagnose, p_solve, p_torsion
from .shapeopt import BallsConfig, optimize
from .spectral import (
    ball_probe_profile,
    cube_quotient_profile,
    dirichlet_eigenvalues,
    spectral_abscissa,
    tail_abscissa_profile,
)
from .torsion import default_radii, torsional_rigidity, torsion_function


class CliError(Exception):
    """Invalid input; maps to exit code 2."""


def _parse_box(text: str):
    try:
        lo_s, hi_s = text.split(":")
        lo = tuple(float(v) for v in lo_s.split(","))
        hi = tuple(float(v) for v in hi_s.split(","))
    except ValueError:
        raise CliError(f"bad box {text!r}, expected lo1,lo2:hi1,hi2") from None
    if len(lo) != len(hi):
        raise CliError(f"box corners have different dimensions: {text!r}")
    return Box(lo, hi)


def _parse_radii(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(f"bad radii list {text!r}") from None


def _parse_rhs(text: str):
    if text.startswith("const:"):
        try:
            return float(text[6:])
        except ValueError:
            raise CliError(f"bad rhs {text!r}") from None
    if text.startswith("expr:"):
        return text[5:]
    raise CliError(f"bad rhs {text!r}, expected const:V or expr:E")


def _load_json(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise CliError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise CliError(f"{path} is not valid JSON: {e}") from None


def _resolve_problem(args):
    """Measure + grid from --preset or --measure/--box/--h flags."""
    if getattr(args, "preset", None):
        p = preset(args.preset)
        measure = p.measure()
        box = _parse_box(args.box) if args.box else Box(*p.box)
        h = args.h if args.h is not None else p.h
        return measure, build_grid(box, h)
    if not getattr(args, "measure", None):
        raise CliError("need --measure FILE or --preset NAME")
    measure = measure_from_dict(_load_json(args.measure))
    if not args.box or args.h is None:
        raise CliError("need --box and --h with --measure")
    return measure, build_grid(_parse_box(args.box), args.h)


def _problem_argv(args) -> list:
    if getattr(args, "preset", None):
        out = ["--preset", args.preset]
        if args.box:
            out += ["--box", args.box]
        if args.h is not None:
            out += ["--h", repr(args.h)]
        return out
    return ["--measure", args.measure, "--box", args.box, "--h", repr(args.h)]


def _field_csv(path, field):
    grid = field.grid
    coords = grid.centers()
    header = [f"x{i + 1}" for i in range(grid.dim)] + ["value"]
    vals = np.asarray(field.values, dtype=np.float64).reshape(-1)
    rows = [list(coords[i]) + [vals[i]] for i in range(coords.shape[0])]
    artifacts.write_csv(path, header, rows)


def _env_seed() -> int:
    raw = os.environ.get("TORSIO_SEED", "")
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"TORSIO_SEED={raw!r} is not an integer") from None


def _check_threads():
    raw = os.environ.get("TORSIO_THREADS", "")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise CliError(f"TORSIO_THREADS={raw!r} is not an integer") from None
        if n < 1:
            raise CliError("TORSIO_THREADS must be >= 1")
    # evaluation is sequential and deterministic; the value never
    # changes results, so it is validated but not recorded


def _cmd_solve(args):
    measure, grid = _resolve_problem(args)
    rhs = _parse_rhs(args.rhs)
    argv = ["solve"] + _problem_argv(args) + ["--rhs", args.rhs, "--tol", repr(args.tol)]
    if args.p is not None and args.p != 2.0:
        argv += ["--p", repr(args.p)]
        field, energy, iters, ok = p_solve(measure, rhs, grid, args.p, tol=min(args.tol, 1e-8))
        payload = {
            "kind": "p_solve",
            "p": args.p,
            "energy": energy,
            "iterations": iters,
            "converged": ok,
            "max": field.max(),
            "integral": field.integral(),
            "grid": grid.to_dict(),
        }
        u = field
    else:
        res = solve(measure, rhs, grid, tol=args.tol)
        payload = res.to_dict()
        payload["kind"] = "solve"
        ok = res.converged
        u = res.u
    if args.csv:
        _field_csv(args.csv, u)
    print(f"solve: converged={ok} max={u.max():.6g} integral={u.integral():.6g}")
    return payload, argv, (0 if ok else 3)


def _cmd_torsion(args):
    measure, grid = _resolve_problem(args)
    radii = _parse_radii(args.radii) if args.radii else None
    argv = ["torsion"] + _problem_argv(args) + ["--tol", repr(args.tol)]
    if args.radii:
        argv += ["--radii", args.radii]
    if args.p is not None and args.p != 2.0:
        argv += ["--p", repr(args.p)]
        res = p_torsion(measure, grid, args.p, radii, tol=min(args.tol, 1e-8))
    else:
        res = torsion_function(measure, grid, radii, tol=args.tol)
    payload = res.to_dict()
    payload["kind"] = "torsion"
    if args.csv:
        _field_csv(args.csv, res.w)
    for r, s in zip(res.radii, res.sup_tail):
        print(f"  R={r:<10g} sup_tail={s:.6g}")
    print(f"torsion: max={res.w_max:.6g} integral={res.w.integral():.6g} converged={res.converged}")
    return payload, argv, (0 if res.solver_converged else 3)


def _cmd_rigidity(args):
    measure, grid = _resolve_problem(args)
    radii = _parse_radii(args.radii) if args.radii else None
    argv = ["rigidity"] + _problem_argv(args) + ["--tol", repr(args.tol)]
    if args.radii:
        argv += ["--radii", args.radii]
    res = torsional_rigidity(measure, grid, radii, tol=args.tol)
    payload = res.to_dict()
    payload["kind"] = "rigidity"
    if args.csv:
        _field_csv(args.csv, res.u)
    for r, v in zip(res.radii, res.per_radius):
        print(f"  R={r:<10g} rigidity={v:.8g}")
    print(f"rigidity: {res.rigidity:.8g} stabilized={res.stabilized}")
    return payload, argv, (0 if res.solver_converged else 3)


def _cmd_eig(args):
    region = region_from_dict(_load_json(args.region))
    grid = build_grid(_parse_box(args.box), args.h)
    measure = InfinityOutside(region)
    res = dirichlet_eigenvalues(measure, grid, k=args.k, tol=args.tol)
    argv = ["eig", "--region", args.region, "--box", args.box, "--h", repr(args.h),
            "-k", str(args.k), "--tol", repr(args.tol)]
    payload = res.to_dict()
    payload["kind"] = "eig"
    for i, v in enumerate(res.values):
        print(f"  lambda_{i + 1} = {v:.8g}")
    return payload, argv, (0 if res.converged else 3)


def _cmd_abscissa(args):
    measure, grid = _resolve_problem(args)
    res = spectral_abscissa(measure, grid, tol=args.tol)
    argv = ["abscissa"] + _problem_argv(args) + ["--tol", repr(args.tol)]
    payload = res.to_dict()
    payload["kind"] = "abscissa"
    print(f"abscissa: {res.value:.8g} (residual {res.residuals[0]:.2e})")
    return payload, argv, (0 if res.converged else 3)


def _cmd_probe(args):
    measure, grid = _resolve_problem(args)
    radii = _parse_radii(args.radii) if args.radii else default_radii(grid, 5, cap=0.7)
    argv = ["probe", "--criterion", str(args.criterion)] + _problem_argv(args)
    if args.radii:
        argv += ["--radii", args.radii]
    argv += ["--ball-radius", repr(args.ball_radius), "--cube-edge", repr(args.cube_edge)]
    if args.criterion == 5:
        profiles = [tail_abscissa_profile(measure, grid, radii)]
    elif args.criterion == 6:
        # "every h" sampled at three ball sizes
        profiles = [
            ball_probe_profile(measure, grid, radii, s * args.ball_radius)
            for s in (0.5, 1.0, 2.0)
        ]
    elif args.criterion == 7:
        profiles = [ball_probe_profile(measure, grid, radii, args.ball_radius)]
    elif args.criterion == 8:
        profiles = [cube_quotient_profile(measure, grid, radii, args.cube_edge)]
    else:
        raise CliError("criterion must be one of 5, 6, 7, 8")
    payload = {
        "kind": "probe",
        "criterion": args.criterion,
        "profiles": [p.to_dict() for p in profiles],
        "grid": grid.to_dict(),
    }
    if args.csv:
        header, rows = artifacts.profile_rows(profiles)
        artifacts.write_csv(args.csv, header, rows)
    for p in profiles:
        print(f"  {p.label}: " + " ".join(f"{v:.6g}" for v in p.values))
    return payload, argv, 0


def _cmd_diagnose(args):
    measure, grid = _resolve_problem(args)
    if args.refine:
        grid = grid.refined()
    radii = _parse_radii(args.radii) if args.radii else None
    cfg = DiagnoseConfig(radii=radii) if radii else None
    argv = ["diagnose", "--embedding", args.embedding] + _problem_argv(args)
    if args.radii:
        argv += ["--radii", args.radii]
    if args.refine:
        argv += ["--refine"]
    if args.p is not None and args.p != 2.0:
        argv += ["--p", repr(args.p)]
        diag = p_diagnose(measure, grid, args.p, cfg)
        wanted = "tail_sup_decay" if args.embedding == "l2" else "torsion_l1_stabilization"
        reports = [r for r in diag.reports if r.criterion == wanted]
        decision, warn = _decide(reports)
        diag.reports = reports
        diag.decision = decision
        diag.warnings = diag.warnings + warn
    else:
        run = diagnose_l2 if args.embedding == "l2" else diagnose_l1
        diag = run(measure, grid, cfg)
    payload = diag.to_dict()
    payload["kind"] = "diagnose"
    payload["embedding"] = args.embedding
    box = [list(grid.lo), list(grid.hi)]
    print(f"note: finite-box evidence at box={box} h={grid.h:g}; "
          "profiles show trends, not limits")
    for r in diag.reports:
        print(f"  {r.criterion}: {r.verdict} ({r.classification})")
    for w in diag.warnings:
        print(f"  warning: {w}")
    print(f"diagnose[{args.embedding}]: {diag.decision}")
    code = 0
    if args.strict and diag.decision == "inconclusive":
        code = 4
    return payload, argv, code


def _cmd_optimize(args):
    seed = args.seed if args.seed is not None else _env_seed()
    cfg = BallsConfig(
        num_balls=args.m,
        dim=args.dim,
        k=args.k,
        mode=args.mode,
        budget=args.budget,
        seed=seed,
        population=args.population,
    )
    res = optimize(cfg)
    argv = ["optimize", "-k", str(args.k), "-m", str(args.m),
            "--dim", str(args.dim), "--mode", args.mode,
            "--budget", str(args.budget), "--seed", str(seed),
            "--population", str(args.population)]
    payload = res.to_dict()
    payload["kind"] = "optimize"
    if args.trace_csv:
        header = ("generation", "evaluations", "best", "generation_best", "mean")
        rows = [[t[c] for c in header] for t in res.trace]
        artifacts.write_csv(args.trace_csv, header, rows)
    print(f"optimize: best={res.best_value:.8g} after {res.evaluations} evaluations")
    for b in res.best_balls:
        c = ", ".join(f"{v:.4f}" for v in b.center)
        print(f"  ball center=({c}) radius={b.radius:.4f}")
    return payload, argv, 0


def _cmd_gallery(args):
    if args.action == "list":
        for name in preset_names():
            p = preset(name)
            print(f"{name:<20} L2={p.expected_l2:<12} L1={p.expected_l1}")
        return {"kind": "gallery_list", "names": preset_names()}, ["gallery", "list"], 0
    names = args.names or None
    for n in names or []:
        preset(n)  # validate early
    result = run_gallery(names, refine=args.refine)
    argv = ["gallery", "run"] + (list(names) if names else [])
    if args.refine:
        argv += ["--refine"]
    payload = dict(result)
    payload["kind"] = "gallery_run"
    for rec in result["records"]:
        name = rec["preset"]["name"]
        print(f"{name:<20} L2 {rec['l2']['decision']:<12} (expected {rec['expected_l2']:<12}) "
              f"L1 {rec['l1']['decision']:<12} (expected {rec['expected_l1']:<12}) "
              f"{'ok' if rec['ok'] else 'MISMATCH'}")
    print(f"gallery: {'all ok' if result['all_ok'] else 'mismatches present'}")
    return payload, argv, 0


def _cmd_rerun(args):
    doc = _load_json(args.artifact)
    if "argv" not in doc:
        raise CliError(f"{args.artifact} has no embedded argv")
    argv = list(doc["argv"])
    if args.out:
        argv += ["--out", args.out]
    return None, argv, main(argv)


def _add_problem_flags(sp, rhs=False, p=False, radii=True):
    sp.add_argument("--measure", help="measure JSON file")
    sp.add_argument("--preset", help="gallery preset name instead of --measure")
    sp.add_argument("--box", help="grid box lo1,lo2:hi1,hi2")
    sp.add_argument("--h", type=float, help="grid spacing")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--out", help="write JSON artifact here")
    sp.add_argument("--csv", help="write field/profile CSV here")
    if radii:
        sp.add_argument("--radii", help="comma-separated radius schedule")
    if rhs:
        sp.add_argument("--rhs", default="const:1", help="const:V or expr:E")
    if p:
        sp.add_argument("--p", type=float, default=None, help="exponent (default 2)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="torsio", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve the elliptic problem")
    _add_problem_flags(sp, rhs=True, p=True, radii=False)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("torsion", help="torsion function by exhaustion")
    _add_problem_flags(sp, p=True)
    sp.set_defaults(fn=_cmd_torsion)

    sp = sub.add_parser("rigidity", help="torsional rigidity by exhaustion")
    _add_problem_flags(sp)
    sp.set_defaults(fn=_cmd_rigidity)

    sp = sub.add_parser("eig", help="Dirichlet eigenvalues of a region")
    sp.add_argument("--region", required=True, help="region JSON file")
    sp.add_argument("--box", required=True)
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("-k", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_eig)

    sp = sub.add_parser("abscissa", help="spectral abscissa of a measure")
    _add_problem_flags(sp, radii=False)
    sp.set_defaults(fn=_cmd_abscissa)
    sp.set_defaults(tol=1e-8)

    sp = sub.add_parser("probe", help="localized eigenvalue profiles")
    sp.add_argument("--criterion", type=int, required=True, choices=(5, 6, 7, 8))
    _add_problem_flags(sp)
    sp.add_argument("--ball-radius", type=float, default=1.0)
    sp.add_argument("--cube-edge", type=float, default=1.0)
    sp.set_defaults(fn=_cmd_probe)

    sp = sub.add_parser("diagnose", help="compactness diagnosis")
    sp.add_argument("--embedding", choices=("l1", "l2"), default="l2")
    _add_problem_flags(sp, p=True)
    sp.add_argument("--refine", action="store_true", help="halve h and double the box")
    sp.add_argument("--strict", action="store_true", help="exit 4 if inconclusive")
    sp.set_defaults(fn=_cmd_diagnose)

    sp = sub.add_parser("optimize", help="eigenvalue-rigidity ball optimization")
    sp.add_argument("-k", type=int, default=2, help="eigenvalue index")
    sp.add_argument("-m", type=int, default=2, help="number of balls")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--mode", choices=("product", "constrained"), default="product")
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=None, help="default TORSIO_SEED or 0")
    sp.add_argument("--population", type=int, default=24)
    sp.add_argument("--out")
    sp.add_argument("--trace-csv")
    sp.set_defaults(fn=_cmd_optimize)

    sp = sub.add_parser("gallery", help="preset measures with known verdicts")
    gsub = sp.add_subparsers(dest="action", required=True)
    gl = gsub.add_parser("list")
    gl.set_defaults(fn=_cmd_gallery, action="list", out=None)
    gr = gsub.add_parser("run")
    gr.add_argument("names", nargs="*", help="preset names (default: all)")
    gr.add_argument("--refine", action="store_true")
    gr.add_argument("--out")
    gr.set_defaults(fn=_cmd_gallery, action="run")

    sp = sub.add_parser("rerun", help="replay an artifact's embedded command")
    sp.add_argument("artifact")
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_rerun)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        _check_threads()
        result = args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, InvalidMeasure, GridMismatch, ExprError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.command == "rerun":
        return result[2]
    payload, argv_canon, code = result
    if getattr(args, "out", None) and payload is not None:
        artifacts.write_json(args.out, payload, argv_canon)
    return code


if __name__ == "__main__":
    sys.exit(main())
