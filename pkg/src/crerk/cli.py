"""``crerk`` command line: solve, converge, energy, stability and check.

The exit status is 0 when the command ran and every requested check or
acceptance flag passed, 1 when a check failed and 2 on usage or runtime errors.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .errors import ERKError
from .integrators import SolveOptions, integrate
from .problems import get_problem, henon_heiles
from .schemes import SCHEME_NAMES, make_scheme
from .stability import parse_range, stability_scan, write_stability_csv
from .verification import check_linear_exactness, check_order_conditions, check_symplecticity

log = logging.getLogger("crerk")

ORDER_TOL = 1e-14
SYMPLECTIC_TOL = 1e-6
LINEAR_TOL = 1e-11
LINEAR_STEPS = 100
PROBLEM_NAMES = ("henon-heiles", "duffing", "sine-gordon", "linear")


def _common(parser):
    parser.add_argument("--config", help="INI file with study defaults; flags override it")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomised evaluation points")
    parser.add_argument("-v", "--verbose", action="store_true")


def _problem_args(parser, required=True):
    parser.add_argument("--problem", choices=PROBLEM_NAMES, required=required)
    parser.add_argument("--omega", type=float)
    parser.add_argument("--k", type=float)
    parser.add_argument("--n-grid", type=int)


def build_parser():
    p = argparse.ArgumentParser(prog="crerk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="integrate one problem and write the trajectory")
    _common(s)
    s.add_argument("--method", required=True, choices=SCHEME_NAMES)
    _problem_args(s)
    s.add_argument("--t-end", type=float, required=True)
    s.add_argument("--h", required=True, help="stepsize, e.g. 0.01, 1/30 or 2^-5")
    s.add_argument("--stage-solver", choices=("pure", "linimp"))
    s.add_argument("--out", required=True)

    c = sub.add_parser("converge", help="convergence study")
    _common(c)
    c.add_argument("--methods", help="comma-separated scheme names")
    _problem_args(c, required=False)
    c.add_argument("--t-end", type=float)
    c.add_argument("--h-list", help="comma-separated stepsizes")
    c.add_argument("--repeats", type=int)
    c.add_argument("--stage-solver", choices=("pure", "linimp"))
    c.add_argument("--out")

    e = sub.add_parser("energy", help="relative energy error along a long run")
    _common(e)
    e.add_argument("--method")
    _problem_args(e, required=False)
    e.add_argument("--t-end", type=float)
    e.add_argument("--h")
    e.add_argument("--stage-solver", choices=("pure", "linimp"))
    e.add_argument("--out")

    st = sub.add_parser("stability", help="|R| scan on the partitioned test equation")
    _common(st)
    st.add_argument("--method", required=True, choices=SCHEME_NAMES)
    st.add_argument("--k1", default="-10:10:400", help="min:max:n")
    st.add_argument("--k2", default="-10:10:400", help="min:max:n")
    st.add_argument("--out", required=True)

    ck = sub.add_parser("check", help="order conditions, symplecticity or linear exactness")
    _common(ck)
    ck.add_argument("kind", choices=("order", "symplectic", "linear"))
    ck.add_argument("--method", required=True, choices=SCHEME_NAMES)
    _problem_args(ck, required=False)
    ck.add_argument("--h", default=None)
    ck.add_argument("--out", required=True)
    return p


def _study_config(args, schemes):
    overrides = dict(
        problem=args.problem, schemes=schemes, t_end=args.t_end,
        stepsizes=getattr(args, "stepsizes", None), omega=args.omega, k=args.k,
        n_grid=args.n_grid, stage_solver=args.stage_solver,
        repeats=getattr(args, "repeats", None), out_dir=args.out, seed=args.seed)
    if args.config:
        return bench.RunConfig.from_ini(args.config, **overrides)
    missing = [name for name in ("problem", "schemes", "t_end", "stepsizes")
               if overrides[name] is None]
    if missing:
        raise SystemExit(f"crerk: missing {', '.join(missing)} (pass flags or --config)")
    return bench.RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_solve(args):
    problem = get_problem(args.problem, omega=args.omega, k=args.k, n_grid=args.n_grid)
    h = bench.parse_stepsize(args.h)
    opts = SolveOptions(stage_solver=args.stage_solver)
    traj = integrate(args.method, problem, args.t_end, h, opts)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"y{i}" for i in range(problem.dim)])
        for t, y in zip(traj.times, traj.states):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in y])
    print(f"{args.method} on {problem.name}: {traj.times.size - 1} steps, "
          f"solver {traj.meta['stage_solver']}, max iterations {int(traj.iterations.max())}")
    return 0


def cmd_converge(args):
    args.stepsizes = bench.split_list(args.h_list) if args.h_list else None
    schemes = bench.split_list(args.methods) if args.methods else None
    cfg = _study_config(args, schemes)
    reports = bench.run_convergence(cfg)
    ok = True
    for r in reports:
        bench.emit_outputs(r, cfg.out_dir)
        slope = "n/a" if r.slope is None else f"{r.slope:.3f}"
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.scheme:10s} slope {slope} band {r.band} failures {len(r.failures)}")
        ok &= r.passed
    return 0 if ok else 1


def cmd_energy(args):
    args.stepsizes = [args.h] if args.h else None
    schemes = [args.method] if args.method else None
    cfg = _study_config(args, schemes)
    for r in bench.run_energy(cfg):
        bench.emit_outputs(r, cfg.out_dir)
        print(f"{r.scheme} on {r.problem}: max|rgeh| {r.max_abs_rgeh:.3e} drift {r.drift_rate:.3e}")
    return 0


def cmd_stability(args):
    grid = stability_scan(args.method, parse_range(args.k1), parse_range(args.k2))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_stability_csv(grid, out)
    print(f"{args.method}: stable fraction {grid.stable_fraction:.4f}")
    return 0


def _eval_point(problem, seed):
    y = problem.y0.copy()
    if seed is not None:
        rng = np.random.default_rng(seed)
        y = y + 1e-2 * np.maximum(1.0, np.abs(y)) * rng.standard_normal(y.shape)
    return y


def cmd_check(args):
    scheme = make_scheme(args.method)
    if args.kind == "order":
        rep = check_order_conditions(scheme.A, scheme.b, scheme.c, scheme.order)
        residuals = list(rep.residuals)
        passed = rep.max_residual <= ORDER_TOL
    elif args.kind == "symplectic":
        problem = get_problem(args.problem or "henon-heiles", omega=args.omega, k=args.k,
                              n_grid=args.n_grid)
        h = bench.parse_stepsize(args.h or 0.1)
        d = check_symplecticity(scheme, problem, _eval_point(problem, args.seed), h)
        residuals = [d.defect_norm]
        passed = d.defect_norm <= SYMPLECTIC_TOL
    else:
        problem = (henon_heiles() if args.problem is None else
                   get_problem(args.problem, omega=args.omega, k=args.k, n_grid=args.n_grid))
        h = bench.parse_stepsize(args.h or 0.5)
        err = check_linear_exactness(scheme, problem.M, _eval_point(problem, args.seed), h,
                                     LINEAR_STEPS)
        residuals = [err]
        passed = err <= LINEAR_TOL
    record = {"scheme": scheme.name, "check": args.kind, "residuals": residuals, "pass": passed}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(f"{'PASS' if passed else 'FAIL'} {args.kind} {scheme.name}: max residual {max(residuals):.3e}")
    return 0 if passed else 1


_COMMANDS = {
    "solve": cmd_solve,
    "converge": cmd_converge,
    "energy": cmd_energy,
    "stability": cmd_stability,
    "check": cmd_check,
}


def _join_ranges(argv):
    """Glue ``--k1 -10:10:400`` into ``--k1=-10:10:400`` so argparse accepts a leading minus."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--k1", "--k2"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_ranges(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ERKError, ValueError, ArithmeticError, OSError, KeyError) as exc:
        print(f"crerk: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
