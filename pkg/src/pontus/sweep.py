"""Parameter-plane sweeps of the gain function.

Cells are independent tasks over immutable inputs: each runs the direct
baseline (shared per column) and one continuous protocol, then attaches
non-Markovianity flags.  Failures are recorded per cell, never aborting
the sweep, and results are bit-identical regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .core import FieldVector, ParameterPoint, RateTriple
from .dynamics import IntegratorConfig
from .errors import BallViolation, SingularGenerator
from .nonmarkov import boundary_curve, is_non_markovian
from .protocols import DEFAULT_EPS, run_continuous, run_direct

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"


@dataclass(frozen=True)
class GridAxis:
    """Named, strictly increasing sample grid of one sweep axis."""

    name: str
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) < 2:
            raise ValueError("a sweep axis needs at least two points")
        if not all(b > a for a, b in zip(self.values[:-1], self.values[1:])):
            raise ValueError("axis values must be strictly increasing")

    @classmethod
    def log(cls, name: str, lo: float, hi: float, n: int) -> "GridAxis":
        if lo <= 0 or hi <= lo:
            raise ValueError("log axis needs 0 < lo < hi")
        return cls(name, tuple(np.geomspace(lo, hi, n)))

    @classmethod
    def linear(cls, name: str, lo: float, hi: float, n: int) -> "GridAxis":
        if hi <= lo:
            raise ValueError("linear axis needs lo < hi")
        return cls(name, tuple(np.linspace(lo, hi, n)))


@dataclass(frozen=True)
class SweepSpec:
    """One gain-map problem: rate endpoints, field rule, and the two grids."""

    rates_s: RateTriple
    rates_f: RateTriple
    kappa_axis: GridAxis
    second_axis: GridAxis  # "theta" (field angle) or "omega" (modulation)
    h: Optional[FieldVector] = None  # fixed field; required for omega sweeps
    omega: float = 0.0  # fixed modulation frequency; theta sweeps only
    eps: float = DEFAULT_EPS
    cfg: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.kappa_axis.name != "kappa":
            raise ValueError("first axis must be kappa")
        if self.second_axis.name not in ("theta", "omega"):
            raise ValueError("second axis must be theta or omega")
        if self.second_axis.name == "omega":
            if self.h is None:
                raise ValueError("omega sweeps need a fixed field")
            if self.omega != 0.0:
                raise ValueError("omega sweeps scan omega; leave the fixed value 0")
        else:
            if self.omega != 0.0:
                raise ValueError("theta sweeps are defined at omega = 0")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass
class GainMap:
    """Grid of gain values with per-cell flags and the Markov boundary."""

    spec: SweepSpec
    kappa: np.ndarray
    second: np.ndarray
    tau_dir: np.ndarray
    tau_cpm: np.ndarray
    gain: np.ndarray
    f_total: np.ndarray
    inconclusive: np.ndarray
    non_markovian: np.ndarray
    status: List[List[str]]
    boundary: List[Tuple[float, Optional[float]]]

    @property
    def shape(self):
        return self.gain.shape


def _field_for_theta(theta: float) -> FieldVector:
    return FieldVector(math.sin(theta), 0.0, math.cos(theta))


def _direct_tau(h: FieldVector, spec: SweepSpec):
    """(tau_dir, status) of the direct problem at one field."""
    try:
        res = run_direct(
            ParameterPoint(h, spec.rates_s, "S"),
            ParameterPoint(h, spec.rates_f, "F"),
            spec.eps,
            spec.cfg,
        )
    except SingularGenerator:
        return math.nan, "singular-generator"
    if not res.converged:
        return math.nan, STATUS_TIMEOUT
    return res.tau, STATUS_OK


def _cell(args):
    """One sweep cell; must stay a plain top-level function for pickling."""
    (kappa, omega, h_arr, gs_arr, gf_arr, eps, cfg, tau_dir) = args
    h = FieldVector.from_array(h_arr)
    gs = RateTriple.from_array(gs_arr)
    gf = RateTriple.from_array(gf_arr)

    if omega > 0:
        nm_flag, f_total = is_non_markovian(gs_arr, gf_arr, kappa, omega)
    else:
        nm_flag, f_total = False, 0.0

    out = {
        "tau_cpm": math.nan,
        "gain": math.nan,
        "inconclusive": False,
        "non_markovian": nm_flag,
        "f_total": f_total,
        "status": STATUS_OK,
    }
    try:
        res = run_continuous(
            ParameterPoint(h, gs, "S"),
            ParameterPoint(h, gf, "F"),
            kappa,
            omega,
            eps,
            cfg,
        )
    except SingularGenerator:
        out["status"] = "singular-generator"
        return out
    except BallViolation:
        out["status"] = "ball-violation"
        return out
    except Exception as exc:  # record, never abort the sweep
        out["status"] = f"error:{type(exc).__name__}"
        return out
    if not res.converged:
        out["status"] = STATUS_TIMEOUT
        return out
    out["tau_cpm"] = res.tau
    out["inconclusive"] = res.inconclusive
    if not math.isnan(tau_dir):
        if res.tau > 0:
            out["gain"] = tau_dir / res.tau - 1.0
        else:
            out["gain"] = 0.0 if tau_dir == 0 else math.inf
    return out


def _run_cells(tasks, jobs: Optional[int], progress: Optional[Callable]):
    results = [None] * len(tasks)
    if jobs is not None and jobs <= 1:
        for i, task in enumerate(tasks):
            results[i] = _cell(task)
            if progress:
                progress(i + 1, len(tasks))
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(tasks) // (8 * (pool._max_workers or 1)))
        for i, out in enumerate(pool.map(_cell, tasks, chunksize=chunk)):
            results[i] = out
            if progress:
                progress(i + 1, len(tasks))
    return results


def _assemble(spec, kappas, seconds, tau_dir_col, col_status, tasks, jobs, progress):
    n1, n2 = len(kappas), len(seconds)
    results = _run_cells(tasks, jobs, progress)
    gm = GainMap(
        spec=spec,
        kappa=np.asarray(kappas),
        second=np.asarray(seconds),
        tau_dir=np.empty((n1, n2)),
        tau_cpm=np.empty((n1, n2)),
        gain=np.empty((n1, n2)),
        f_total=np.empty((n1, n2)),
        inconclusive=np.zeros((n1, n2), dtype=bool),
        non_markovian=np.zeros((n1, n2), dtype=bool),
        status=[[STATUS_OK] * n2 for _ in range(n1)],
        boundary=[],
    )
    k = 0
    for i in range(n1):
        for j in range(n2):
            cell = results[k]
            k += 1
            gm.tau_dir[i, j] = tau_dir_col[j]
            gm.tau_cpm[i, j] = cell["tau_cpm"]
            gm.gain[i, j] = cell["gain"]
            gm.f_total[i, j] = cell["f_total"]
            gm.inconclusive[i, j] = cell["inconclusive"]
            gm.non_markovian[i, j] = cell["non_markovian"]
            if col_status[j] != STATUS_OK:
                gm.status[i][j] = f"direct-{col_status[j]}"
            else:
                gm.status[i][j] = cell["status"]
    return gm


def sweep_kappa_theta(
    spec: SweepSpec,
    jobs: Optional[int] = None,
    progress: Optional[Callable] = None,
) -> GainMap:
    """Gain map over (kappa, field angle) at omega = 0.

    The field h = (sin theta, 0, cos theta) rotates with the second axis,
    shifting both the initial and the target steady state; the direct
    baseline is therefore recomputed once per column.
    """
    if spec.second_axis.name != "theta":
        raise ValueError("spec's second axis is not theta")
    kappas = list(spec.kappa_axis.values)
    thetas = list(spec.second_axis.values)
    gs = spec.rates_s.as_array()
    gf = spec.rates_f.as_array()

    tau_dir_col, col_status, fields = [], [], []
    for theta in thetas:
        h = _field_for_theta(theta)
        fields.append(h.as_array())
        tau, status = _direct_tau(h, spec)
        tau_dir_col.append(tau)
        col_status.append(status)

    tasks = [
        (kap, 0.0, fields[j], gs, gf, spec.eps, spec.cfg, tau_dir_col[j])
        for kap in kappas
        for j in range(len(thetas))
    ]
    gm = _assemble(
        spec, kappas, thetas, tau_dir_col, col_status, tasks, jobs, progress
    )
    gm.boundary = []  # omega = 0 everywhere: Markovian by construction
    return gm


def sweep_kappa_omega(
    spec: SweepSpec,
    jobs: Optional[int] = None,
    progress: Optional[Callable] = None,
) -> GainMap:
    """Gain map over (kappa, omega) at a fixed field.

    One direct baseline serves the whole grid; cells above the per-channel
    tangency boundary are flagged non-Markovian and the boundary curve is
    attached for overlay plots.
    """
    if spec.second_axis.name != "omega":
        raise ValueError("spec's second axis is not omega")
    kappas = list(spec.kappa_axis.values)
    omegas = list(spec.second_axis.values)
    gs = spec.rates_s.as_array()
    gf = spec.rates_f.as_array()
    h_arr = spec.h.as_array()

    tau, status = _direct_tau(spec.h, spec)
    tau_dir_col = [tau] * len(omegas)
    col_status = [status] * len(omegas)

    tasks = [
        (kap, om, h_arr, gs, gf, spec.eps, spec.cfg, tau)
        for kap in kappas
        for om in omegas
    ]
    gm = _assemble(
        spec, kappas, omegas, tau_dir_col, col_status, tasks, jobs, progress
    )
    gm.boundary = boundary_curve(gs, gf, kappas)
    return gm


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def gain_map_to_csv(gm: GainMap, path) -> None:
    """Row-major cell dump; booleans as true/false, failures in ``status``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "axis1,axis2,tau_dir,tau_cpm,gain,inconclusive,non_markovian,"
            "f_total,status\n"
        )
        n1, n2 = gm.shape
        for i in range(n1):
            for j in range(n2):
                fh.write(
                    ",".join(
                        [
                            _fmt(gm.kappa[i]),
                            _fmt(gm.second[j]),
                            _fmt(gm.tau_dir[i, j]),
                            _fmt(gm.tau_cpm[i, j]),
                            _fmt(gm.gain[i, j]),
                            "true" if gm.inconclusive[i, j] else "false",
                            "true" if gm.non_markovian[i, j] else "false",
                            _fmt(gm.f_total[i, j]),
                            gm.status[i][j],
                        ]
                    )
                    + "\n"
                )


def gain_map_sidecar(gm: GainMap) -> dict:
    """JSON-ready description of the sweep and the boundary curve."""
    spec = gm.spec
    return {
        "schema": 1,
        "sweep": {
            "kind": f"kappa-{spec.second_axis.name}",
            "rates_s": list(spec.rates_s.as_array()),
            "rates_f": list(spec.rates_f.as_array()),
            "h": None if spec.h is None else list(spec.h.as_array()),
            "omega_fixed": spec.omega,
            "eps": spec.eps,
            "kappa": list(spec.kappa_axis.values),
            spec.second_axis.name: list(spec.second_axis.values),
            "integrator": {
                "rel_tol": spec.cfg.rel_tol,
                "abs_tol": spec.cfg.abs_tol,
                "t_cap": spec.cfg.t_cap,
                "sample_stride": spec.cfg.sample_stride,
            },
        },
        "boundary": [[k, w] for k, w in gm.boundary],
    }
