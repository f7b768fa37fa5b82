"""Convergence, energy and timing studies with CSV/JSON outputs.

A study is described by a :class:`RunConfig`, read from an INI file (or built
directly).  Results are plain dataclasses; :func:`emit_outputs` persists them.
"""

import configparser
import csv
import hashlib
import json
import logging
import os
import re
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ERKError, InvalidParameterError, UnreliableReferenceError
from .integrators import SolveOptions, integrate, step_count
from .problems import ReferenceSolution, get_problem
from .schemes import make_scheme

__all__ = [
    "RunConfig",
    "ConvergenceRow",
    "ConvergenceReport",
    "EnergyReport",
    "reference_solution",
    "run_convergence",
    "run_energy",
    "emit_outputs",
    "parse_stepsize",
    "split_list",
    "fit_slope",
    "slope_band",
    "REFERENCE_TOL",
    "DEGENERATE_ERROR",
    "THREADS_ENV",
]

log = logging.getLogger(__name__)

REFERENCE_TOL = 1e-10
REFERENCE_REFINEMENT = 32
# errors at or below this are treated as exact; a slope fit would only see roundoff
DEGENERATE_ERROR = 1e-11
THREADS_ENV = "CRERK_NUM_THREADS"

_BANDS = {1: (0.8, 1.3), 2: (1.75, 2.25), 4: (3.65, 4.35)}
# order reduction on the stiff semi-discretisation
_REDUCED_BANDS = {"sine-gordon": {4: (2.5, 4.5)}}


def slope_band(order, problem_name):
    """Acceptance band for the fitted convergence slope."""
    return _REDUCED_BANDS.get(problem_name, {}).get(order, _BANDS[order])


_POW = re.compile(r"^\s*([0-9.]+)\s*\^\s*(-?\d+)\s*$")


def parse_stepsize(text):
    """Parse ``0.125``, ``1/8`` or ``2^-3`` into a float."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    m = _POW.match(s)
    try:
        if m:
            return float(Fraction(m.group(1)) ** int(m.group(2)))
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise InvalidParameterError(f"cannot parse stepsize {text!r}") from None


def split_list(text):
    return [p.strip() for p in str(text).split(",") if p.strip()]


@dataclass
class RunConfig:
    """Everything needed to reproduce one study.

    Stepsizes must divide ``t_end - t0`` integrally; this is checked on
    construction.
    """

    problem: str
    schemes: list
    t_end: float
    stepsizes: list
    omega: Optional[float] = None
    k: Optional[float] = None
    n_grid: Optional[int] = None
    stage_solver: Optional[str] = None
    fp_tol: float = 1e-14
    max_iter: int = 100
    repeats: int = 5
    out_dir: str = "results"
    seed: int = 0

    def __post_init__(self):
        self.schemes = [make_scheme(s).name for s in self.schemes]
        self.stepsizes = sorted((parse_stepsize(h) for h in self.stepsizes), reverse=True)
        self.t_end = float(self.t_end)
        if self.repeats < 1:
            raise InvalidParameterError("repeats must be at least 1")
        t0 = self.build_problem().t0
        for h in self.stepsizes:
            step_count(t0, self.t_end, h)

    def build_problem(self):
        return get_problem(self.problem, omega=self.omega, k=self.k, n_grid=self.n_grid)

    def solve_options(self, record_energy=False):
        return SolveOptions(fp_tol=self.fp_tol, max_iter=self.max_iter,
                            stage_solver=self.stage_solver, record_energy=record_energy)

    def to_dict(self):
        return asdict(self)

    @property
    def config_hash(self):
        """sha256 of the configuration, excluding the output location."""
        d = self.to_dict()
        d.pop("out_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_ini(cls, path, **overrides):
        """Read ``[problem]``, ``[study]``, ``[solver]`` and ``[output]`` sections.

        Keyword overrides that are not ``None`` replace file values.
        """
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FileNotFoundError(f"config file not found: {path}")
        values = {}
        if cp.has_section("problem"):
            p = cp["problem"]
            values["problem"] = p.get("name")
            for key, conv in (("omega", float), ("k", float), ("n_grid", int)):
                if key in p:
                    values[key] = conv(p[key])
        if cp.has_section("study"):
            s = cp["study"]
            if "schemes" in s:
                values["schemes"] = split_list(s["schemes"])
            if "t_end" in s:
                values["t_end"] = float(s["t_end"])
            if "stepsizes" in s:
                values["stepsizes"] = split_list(s["stepsizes"])
            if "repeats" in s:
                values["repeats"] = s.getint("repeats")
            if "seed" in s:
                values["seed"] = s.getint("seed")
        if cp.has_section("solver"):
            s = cp["solver"]
            if "stage_solver" in s:
                values["stage_solver"] = s["stage_solver"]
            if "fp_tol" in s:
                values["fp_tol"] = s.getfloat("fp_tol")
            if "max_iter" in s:
                values["max_iter"] = s.getint("max_iter")
        if cp.has_section("output") and "dir" in cp["output"]:
            values["out_dir"] = cp["output"]["dir"]
        values.update({k: v for k, v in overrides.items() if v is not None})
        missing = [k for k in ("problem", "schemes", "t_end", "stepsizes") if not values.get(k)]
        if missing:
            raise InvalidParameterError(f"config {path} lacks {', '.join(missing)}")
        return cls(**values)


# --- reference ------------------------------------------------------------------

def reference_solution(problem, t_end, output_h=None, smallest_h=None, opts=None):
    """Reference trajectory for a study ending at ``t_end``.

    Problems with an exact callback return it unchanged.  Otherwise imerk24 is
    run at ``h_ref = smallest_h / 32`` and at ``h_ref / 2``; the two must agree
    to ``REFERENCE_TOL`` at ``t_end`` or :class:`UnreliableReferenceError` is
    raised.  States are stored on the ``output_h`` grid (default: the end
    point only).
    """
    t0 = problem.t0
    if problem.reference is not None and problem.reference.kind == "exact-callback":
        return problem.reference
    if t_end == t0:
        return ReferenceSolution(kind="fine-grid", t0=t0, times=np.array([t0]),
                                 states=problem.y0[None, :].copy())
    span = t_end - t0
    output_h = span if output_h is None else float(output_h)
    n_out = step_count(t0, t_end, output_h)
    smallest_h = output_h if smallest_h is None else float(smallest_h)
    h_ref = smallest_h / REFERENCE_REFINEMENT
    stride = step_count(0.0, output_h, h_ref)
    opts = opts or SolveOptions()
    coarse = integrate("imerk24", problem, t_end, h_ref, opts)
    fine = integrate("imerk24", problem, t_end, h_ref / 2.0, opts)
    diff = float(np.linalg.norm(coarse.final - fine.final))
    if not diff <= REFERENCE_TOL:
        raise UnreliableReferenceError(
            f"{problem.name}: reference at h={h_ref:g} and h/2 differ by {diff:.3e} "
            f"at t={t_end} (tolerance {REFERENCE_TOL:g})")
    states = coarse.states[::stride][: n_out + 1]
    times = t0 + output_h * np.arange(n_out + 1)
    return ReferenceSolution(kind="fine-grid", t0=t0, times=times, states=states,
                             meta={"h_ref": h_ref, "richardson_diff": diff, "scheme": "imerk24"})


# --- convergence ------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    ge: float
    seconds: float
    error: Optional[str] = None


@dataclass
class ConvergenceReport:
    scheme: str
    problem: str
    rows: list
    slope: Optional[float]
    order: int
    band: tuple
    config_hash: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def failures(self):
        return [r for r in self.rows if r.error is not None]

    @property
    def degenerate(self):
        ok = [r for r in self.rows if r.error is None]
        return bool(ok) and all(r.ge <= DEGENERATE_ERROR for r in ok)

    @property
    def passed(self):
        if self.failures:
            return False
        if self.degenerate:
            return True
        return self.slope is not None and self.band[0] <= self.slope <= self.band[1]


def fit_slope(hs, errors):
    """Least-squares slope of ``log(error)`` against ``log(h)``; ``None`` if under-determined."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = np.isfinite(errors) & (errors > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(hs[keep]), np.log(errors[keep]), 1)[0])


def _thread_count():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def _run_cell(scheme, problem, t_end, h, opts, repeats, target):
    times = []
    final = None
    try:
        for _ in range(repeats):
            start = time.perf_counter()
            traj = integrate(scheme, problem, t_end, h, opts)
            times.append(time.perf_counter() - start)
            final = traj.final
    except (ERKError, ArithmeticError) as exc:
        log.info("%s h=%g failed: %s", scheme, h, exc)
        return ConvergenceRow(h=h, ge=float("nan"), seconds=float("nan"),
                              error=f"{type(exc).__name__}: {exc}")
    ge = float(np.linalg.norm(final - target))
    return ConvergenceRow(h=h, ge=ge, seconds=statistics.median(times))


def run_convergence(config, reference=None):
    """One :class:`ConvergenceReport` per scheme of ``config``.

    The global error is the Euclidean norm at ``t_end`` against the reference;
    the reported time is the median of ``config.repeats`` integrations.
    Failed cells are kept as rows with ``error`` set and left out of the fit.
    """
    problem = config.build_problem()
    if reference is None:
        reference = reference_solution(problem, config.t_end, smallest_h=config.stepsizes[-1])
    target = reference.eval(config.t_end)
    opts = config.solve_options()
    cells = [(s, h) for s in config.schemes for h in config.stepsizes]
    run = lambda cell: _run_cell(cell[0], problem, config.t_end, cell[1], opts,
                                 config.repeats, target)
    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    by_cell = dict(zip(cells, rows))
    reports = []
    for name in config.schemes:
        scheme = make_scheme(name)
        rows_s = [by_cell[(name, h)] for h in config.stepsizes]
        ok = [r for r in rows_s if r.error is None]
        slope = None
        if ok and not all(r.ge <= DEGENERATE_ERROR for r in ok):
            slope = fit_slope([r.h for r in ok], [r.ge for r in ok])
        reports.append(ConvergenceReport(
            scheme=name, problem=problem.name, rows=rows_s, slope=slope, order=scheme.order,
            band=slope_band(scheme.order, problem.name), config_hash=config.config_hash,
            meta={"t_end": config.t_end, "reference": reference.kind,
                  **{k: v for k, v in reference.meta.items() if k != "scheme"}}))
    return reports


# --- energy -------------------------------------------------------------------------

@dataclass
class EnergyReport:
    scheme: str
    problem: str
    h: float
    times: np.ndarray
    rgeh: np.ndarray
    config_hash: str = ""

    @property
    def max_abs_rgeh(self):
        return float(np.max(np.abs(self.rgeh))) if self.rgeh.size else 0.0

    @property
    def drift_rate(self):
        """Slope of a least-squares line through ``rgeh`` against ``t``."""
        if self.rgeh.size < 2:
            return 0.0
        return float(np.polyfit(self.times, self.rgeh, 1)[0])


def run_energy(config, h=None):
    """Relative energy errors ``(H(y_n) - H_0) / H_0`` for every scheme of ``config``.

    ``h`` defaults to the largest configured stepsize.
    """
    problem = config.build_problem()
    if problem.hamiltonian is None:
        raise InvalidParameterError(f"problem {problem.name!r} has no Hamiltonian")
    h = config.stepsizes[0] if h is None else parse_stepsize(h)
    opts = config.solve_options(record_energy=True)
    reports = []
    for name in config.schemes:
        traj = integrate(name, problem, config.t_end, h, opts)
        H = traj.energies
        if H[0] == 0.0:
            raise InvalidParameterError("initial energy is zero; relative error undefined")
        rgeh = (H - H[0]) / H[0]
        reports.append(EnergyReport(scheme=name, problem=problem.name, h=h, times=traj.times,
                                    rgeh=rgeh, config_hash=config.config_hash))
    return reports


# --- outputs ---------------------------------------------------------------------------

def _fmt(x):
    return f"{float(x):.17g}"


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _write_json(path, payload):
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_outputs(report, out_dir):
    """Write a report into ``out_dir`` and return the paths written.

    Convergence reports give ``<scheme>_<problem>_convergence.csv``
    (``h,ge,seconds``), a timing-free ``..._errors.csv`` (``h,ge``) that is
    byte-deterministic, and a JSON sidecar.  Energy reports give
    ``<scheme>_<problem>_energy.csv`` (``t,rgeh``) and a sidecar.
    """
    if not isinstance(report, (ConvergenceReport, EnergyReport)):
        raise TypeError(f"cannot emit {type(report).__name__}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    stem = f"{report.scheme}_{report.problem}"
    if isinstance(report, ConvergenceReport):
        main = out / f"{stem}_convergence.csv"
        errs = out / f"{stem}_errors.csv"
        side = out / f"{stem}_convergence.json"
        _write_csv(main, ["h", "ge", "seconds"], [(r.h, r.ge, r.seconds) for r in report.rows])
        _write_csv(errs, ["h", "ge"], [(r.h, r.ge) for r in report.rows])
        _write_json(side, {
            "scheme": report.scheme,
            "problem": report.problem,
            "config_hash": report.config_hash,
            "order": report.order,
            "slope": report.slope,
            "band": list(report.band),
            "degenerate": report.degenerate,
            "pass": report.passed,
            "failures": [{"h": r.h, "error": r.error} for r in report.failures],
            "meta": report.meta,
        })
        return [main, errs, side]
    main = out / f"{stem}_energy.csv"
    side = out / f"{stem}_energy.json"
    _write_csv(main, ["t", "rgeh"], zip(report.times, report.rgeh))
    _write_json(side, {
        "scheme": report.scheme,
        "problem": report.problem,
        "config_hash": report.config_hash,
        "h": report.h,
        "max_abs_rgeh": report.max_abs_rgeh,
        "drift_rate": report.drift_rate,
        "finite": bool(np.all(np.isfinite(report.rgeh))),
    })
    return [main, side]

