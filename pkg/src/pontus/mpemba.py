"""Classification of relaxation speed-ups and the gain function."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotConverged, ZeroDenominator
from .protocols import ProtocolResult

log = logging.getLogger(__name__)

#: Separation below which two trace-distance curves count as coincident.
TOL_SEPARATION = 1e-6
#: Excursions of the curve difference smaller than this are ignored.
TOL_CROSSING = 1e-8


class TwoStepClass(Enum):
    WEAK_TYPE_A = "weak-type-A"
    WEAK_TYPE_B = "weak-type-B"
    STRONG = "strong"
    NO_EFFECT = "no-effect"


class ContinuousClass(Enum):
    WEAK = "weak"
    STRONG = "strong"
    NO_EFFECT = "no-effect"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GainValue:
    """Relative speed-up of the engineered protocol over the direct quench."""

    g: float
    tau_dir: float
    tau_cpm: float


def gain(tau_dir: float, tau_cpm: float) -> GainValue:
    """g = tau_dir / tau_cpm - 1; positive iff the engineered route is faster."""
    if tau_dir < 0 or tau_cpm < 0:
        raise ValueError("relaxation times must be nonnegative")
    if tau_cpm == 0:
        raise ZeroDenominator("engineered relaxation time is zero")
    return GainValue(g=tau_dir / tau_cpm - 1.0, tau_dir=tau_dir, tau_cpm=tau_cpm)


def count_crossings(series_a, series_b, tol: float = TOL_CROSSING) -> int:
    """Number of sign changes of (a - b) on a shared grid.

    Stretches where the two series differ by at most ``tol`` are treated as
    coincident: they neither produce nor break a crossing, so touching
    without passing through counts zero.
    """
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("series must share one grid")
    d = a - b
    signs = np.sign(d)
    signs[np.abs(d) <= tol] = 0
    nz = signs[signs != 0]
    if len(nz) < 2:
        return 0
    return int(np.count_nonzero(nz[:-1] != nz[1:]))


def _check_comparable(engineered: ProtocolResult, direct: ProtocolResult) -> None:
    if direct.kind != "direct":
        raise ValueError("baseline result must come from the direct protocol")
    if engineered.epsilon != direct.epsilon:
        raise ValueError("results were produced with different cutoffs")
    if np.max(
        np.abs(
            engineered.trajectory.target.as_array()
            - direct.trajectory.target.as_array()
        )
    ) > 1e-12:
        raise ValueError("results target different final states")


def two_step_distances(two_step: ProtocolResult, direct: ProtocolResult):
    """(d_S, d_I, d_SF): start distance, detour state at the switch, and the
    direct-protocol state at the same instant, all measured to the target."""
    if two_step.t_intermediate is None or two_step.r_intermediate is None:
        raise ValueError("result does not carry a switching state")
    tgt = direct.trajectory.target.as_array()
    d_s = float(direct.trajectory.dist[0])
    d_i = 0.5 * float(np.linalg.norm(two_step.r_intermediate - tgt))
    d_sf = float(direct.trajectory.distance_of(two_step.t_intermediate))
    return d_s, d_i, d_sf


def classify_two_step(
    two_step: ProtocolResult, direct: ProtocolResult
) -> TwoStepClass:
    """Sort a two-step run into weak-A / weak-B / strong / no-effect.

    The detour is graded by where its switching state sits relative to the
    direct trajectory at the same instant and to the starting distance; no
    speed-up at all is reported as no-effect regardless of geometry.
    """
    _check_comparable(two_step, direct)
    if not (two_step.converged and direct.converged):
        raise NotConverged("both runs must have converged to classify them")
    if two_step.tau >= direct.tau:
        return TwoStepClass.NO_EFFECT
    d_s, d_i, d_sf = two_step_distances(two_step, direct)
    if d_i < d_sf:
        return TwoStepClass.WEAK_TYPE_A
    if d_i < d_s:
        return TwoStepClass.WEAK_TYPE_B
    return TwoStepClass.STRONG


def _shared_series(engineered: ProtocolResult, direct: ProtocolResult):
    """Distance series of both runs on their common sample grid, truncated
    where both have settled below the cutoff for good."""
    ta, da = engineered.trajectory.t, engineered.trajectory.dist
    tb, db = direct.trajectory.t, direct.trajectory.dist
    n = min(len(ta), len(tb))
    # drop any trailing off-grid stop sample; the strides must agree before it
    mismatch = np.nonzero(np.abs(ta[:n] - tb[:n]) > 1e-9)[0]
    if len(mismatch):
        n = int(mismatch[0])
    if n < 2:
        raise ValueError("trajectories were sampled on different grids")
    eps = engineered.epsilon
    relevant = np.maximum(da[:n], db[:n]) >= eps
    m = int(np.nonzero(relevant)[0][-1]) + 2 if relevant.any() else n
    m = min(m, n)
    return da[:m], db[:m]


def relevant_crossings(engineered: ProtocolResult, direct: ProtocolResult) -> int:
    """Crossings of the two trace-distance curves while either is above the
    cutoff; sub-cutoff tails are operationally indistinguishable."""
    da, db = _shared_series(engineered, direct)
    return count_crossings(da, db)


def classify_continuous(
    cpm: ProtocolResult, direct: ProtocolResult
) -> ContinuousClass:
    """Sort a continuous run into weak / strong / no-effect / inconclusive.

    Both runs launch from the same state with coincident distance at t = 0,
    and the ramped run starts on its instantaneous attractor with vanishing
    initial slope, so the grading compares the curves at the first instant
    they separate measurably: engineered below direct is weak, above is
    strong.
    """
    _check_comparable(cpm, direct)
    if cpm.inconclusive:
        return ContinuousClass.INCONCLUSIVE
    if not (cpm.converged and direct.converged):
        raise NotConverged("both runs must have converged to classify them")
    if cpm.tau >= direct.tau:
        return ContinuousClass.NO_EFFECT
    da, db = _shared_series(cpm, direct)
    sep = np.nonzero(np.abs(da - db) > TOL_SEPARATION)[0]
    if len(sep) == 0:
        return ContinuousClass.NO_EFFECT
    first = sep[0]
    cls = ContinuousClass.WEAK if da[first] < db[first] else ContinuousClass.STRONG
    crossings = count_crossings(da, db)
    parity_even = crossings % 2 == 0
    if (cls is ContinuousClass.WEAK) != parity_even:
        log.warning(
            "classifier parity mismatch: %s with %d curve crossing(s)",
            cls.value,
            crossings,
        )
    return cls
