"""Non-Markovianity of damped-cosine rate schedules.

A channel contributes whenever its instantaneous rate turns negative.  The
accumulated weight of the negative windows admits a closed form through the
antiderivative of the rate, with an adaptive quadrature as the independent
cross-check, and the Markovian/non-Markovian boundary in the
(kappa, omega) plane follows from a tangency condition on the first
negative lobe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DivergentIntervalCount, NoSolution

CHANNELS = ("plus", "minus", "z")

#: Tail weight accepted when the interval list is infinite and the measure
#: must be truncated.
_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class NmChannelReport:
    """Negative-rate bookkeeping of one dissipation channel."""

    channel: str
    f_value: float
    n_intervals: int
    intervals: Tuple[Tuple[float, float], ...]


def _neg_part_quad(
    rate_scalar, rate_vector, T: float, n_segments: int, quad_tol: float
) -> float:
    """Adaptive quadrature of -min(0, rate) over [0, T].

    The kinks of min(0, .) defeat the error estimator of adaptive rules, so
    the domain is first split at the rate's sign changes (located on a
    dense sample grid and sharpened by bisection); the negative stretches
    are then smooth and integrate reliably.
    """
    grid = np.linspace(0.0, T, 128 * n_segments + 1)
    vals = rate_vector(grid)
    neg = vals < 0.0
    if not neg.any():
        return 0.0
    cuts = [0.0]
    for k in np.nonzero(neg[:-1] != neg[1:])[0]:
        lo, hi = grid[k], grid[k + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if (rate_scalar(mid) < 0.0) == neg[k]:
                lo = mid
            else:
                hi = mid
        cuts.append(0.5 * (lo + hi))
    cuts.append(T)
    pieces = [
        (a, b)
        for a, b in zip(cuts[:-1], cuts[1:])
        if rate_scalar(0.5 * (a + b)) < 0.0
    ]
    total = 0.0
    for a, b in pieces:
        val, _ = quad(
            lambda s: -rate_scalar(s), a, b, limit=200,
            epsabs=quad_tol / len(pieces),
        )
        total += val
    return total


def nm_measure_quadrature(
    schedule, channel: str, T: float, quad_tol: float = 1e-10
) -> float:
    """Accumulated negative-rate weight of one channel up to time T.

    Pure quadrature of the schedule's instantaneous rates; shares nothing
    with the closed-form route, so the two can cross-check each other.
    """
    if T <= 0:
        raise ValueError("horizon must be positive")
    idx = CHANNELS.index(channel)

    def rate_scalar(t: float) -> float:
        return float(schedule.rates(t)[idx])

    def rate_vector(ts: np.ndarray) -> np.ndarray:
        return schedule.rates_array(ts)[:, idx]

    omega = getattr(schedule, "omega", 0.0)
    # sample density tied to the oscillation so no sign window is skipped
    n_segments = max(8, int(math.ceil(T * omega / math.pi)) + 1)
    return _neg_part_quad(rate_scalar, rate_vector, T, n_segments, quad_tol)


def negative_intervals(
    g_s: float, g_f: float, kappa: float, omega: float
) -> list:
    """Time windows where gamma(t) = g_f + (g_s - g_f) e^{-kt} cos(wt) < 0.

    Each window is bracketed inside one negative cosine lobe and its
    endpoints are the roots of the rate, located to 1e-12.
    """
    if kappa <= 0 and omega <= 0:
        raise ValueError("at least one of kappa, omega must be positive")
    if g_s < 0 or g_f < 0:
        raise ValueError("endpoint rates must be nonnegative")
    dg = g_s - g_f
    if omega == 0 or dg <= 0:
        # monotone approach from above (or from below with nonnegative
        # start): the rate never changes sign
        return []
    if g_f == 0:
        raise DivergentIntervalCount(
            "vanishing final rate: every negative lobe contributes"
        )
    c = g_f / dg
    if c >= 1.0:
        return []
    if kappa == 0:
        raise DivergentIntervalCount(
            "undamped modulation: negative lobes repeat forever"
        )

    def f(t: float) -> float:
        return math.exp(-kappa * t) * math.cos(omega * t) + c

    out = []
    n = 1
    while True:
        lo = (2 * n - 1.5) * math.pi / omega
        hi = (2 * n - 0.5) * math.pi / omega
        if math.exp(-kappa * lo) < c:
            break  # envelope can no longer reach the threshold
        t_min = ((2 * n - 1) * math.pi - math.atan2(kappa, omega)) / omega
        if f(t_min) < 0.0:
            t1 = brentq(f, lo, t_min, xtol=1e-12)
            t2 = brentq(f, t_min, hi, xtol=1e-12)
            out.append((float(t1), float(t2)))
        n += 1
    return out


def nm_measure_closed_form(
    g_s: float, g_f: float, kappa: float, omega: float
) -> float:
    """Total negative-rate weight of one channel over all times.

    Sums the antiderivative of the rate across the negative windows; the
    damped-cosine part of the antiderivative is the same constant at both
    window edges (the rate vanishes there) and cancels, leaving the linear
    term proportional to the final rate plus the sine part.  When the
    window count diverges (vanishing final rate) the value falls back to a
    truncated quadrature with a bounded tail.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    dg = g_s - g_f
    try:
        intervals = negative_intervals(g_s, g_f, kappa, omega)
    except DivergentIntervalCount:
        horizon = math.log(abs(dg) / (kappa * _TAIL_TOL)) / kappa

        def rate_scalar(t: float) -> float:
            return g_f + dg * math.exp(-kappa * t) * math.cos(omega * t)

        def rate_vector(ts: np.ndarray) -> np.ndarray:
            return g_f + dg * np.exp(-kappa * ts) * np.cos(omega * ts)

        n_segments = max(8, int(math.ceil(horizon * omega / math.pi)) + 1)
        return _neg_part_quad(rate_scalar, rate_vector, horizon, n_segments, 1e-11)

    k2w2 = kappa * kappa + omega * omega

    def antiderivative(t: float) -> float:
        return g_f * t + dg * omega / k2w2 * math.exp(-kappa * t) * math.sin(
            omega * t
        )

    return -sum(antiderivative(t2) - antiderivative(t1) for t1, t2 in intervals)


def markov_boundary_alpha(g_s: float, g_f: float) -> float:
    """Slope parameter of the per-channel boundary omega(kappa) = kappa/alpha.

    alpha solves exp(-a (pi - atan a)) / sqrt(1 + a^2) = g_f / (g_s - g_f),
    the condition that the first negative cosine lobe is exactly tangent to
    zero; its left side decreases from 1, so a solution exists only for a
    ratio strictly between 0 and 1.
    """
    if g_s <= g_f:
        raise NoSolution("no modulation overshoot: rates never turn negative")
    ratio = g_f / (g_s - g_f)
    if ratio <= 0:
        raise NoSolution("tangency ratio must be positive")
    if ratio >= 1:
        raise NoSolution("modulation too weak to reach zero")

    def f(a: float) -> float:
        return (
            math.exp(-a * (math.pi - math.atan(a))) / math.sqrt(1.0 + a * a)
            - ratio
        )

    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise NoSolution("tangency equation has no root below 1e6")
    return float(brentq(f, 0.0, hi, xtol=1e-12))


def channel_boundary_omega(g_s: float, g_f: float, kappa: float) -> Optional[float]:
    """Least omega at which a channel turns non-Markovian, None if it never
    does.  A vanishing final rate makes any oscillation non-Markovian."""
    if g_f == 0 and g_s > 0:
        return 0.0
    try:
        return kappa / markov_boundary_alpha(g_s, g_f)
    except NoSolution:
        return None


def is_non_markovian(
    rates_s: Sequence[float],
    rates_f: Sequence[float],
    kappa: float,
    omega: float,
):
    """Whether the three-channel schedule breaks Markovianity, plus the total
    accumulated measure over all channels."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    gs = np.asarray(rates_s, dtype=float)
    gf = np.asarray(rates_f, dtype=float)
    if omega == 0:
        return False, 0.0
    bounds = [
        channel_boundary_omega(float(a), float(b), kappa) for a, b in zip(gs, gf)
    ]
    finite = [w for w in bounds if w is not None]
    flag = bool(finite) and omega > min(finite)
    total = sum(
        nm_measure_closed_form(float(a), float(b), kappa, omega)
        for a, b in zip(gs, gf)
    )
    return flag, float(total)


def channel_report(
    g_s: float, g_f: float, kappa: float, omega: float, channel: str
) -> NmChannelReport:
    """Per-channel summary: measure, window count, and the windows."""
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}")
    try:
        intervals = tuple(negative_intervals(g_s, g_f, kappa, omega))
    except DivergentIntervalCount:
        # report the windows inside the truncation horizon of the measure
        horizon = math.log((g_s - g_f) / (kappa * _TAIL_TOL)) / kappa
        lobes = []
        n = 1
        while (2 * n - 1.5) * math.pi / omega < horizon:
            lobes.append(
                ((2 * n - 1.5) * math.pi / omega, (2 * n - 0.5) * math.pi / omega)
            )
            n += 1
        intervals = tuple(lobes)
    f_value = nm_measure_closed_form(g_s, g_f, kappa, omega)
    return NmChannelReport(
        channel=channel,
        f_value=float(f_value),
        n_intervals=len(intervals),
        intervals=intervals,
    )


def boundary_curve(
    rates_s: Sequence[float], rates_f: Sequence[float], kappas: Sequence[float]
) -> list:
    """Samples (kappa, omega_min) of the least non-Markovian frequency over
    all channels; omega_min is None where every channel stays Markovian."""
    gs = np.asarray(rates_s, dtype=float)
    gf = np.asarray(rates_f, dtype=float)
    out = []
    for kap in kappas:
        bounds = [
            channel_boundary_omega(float(a), float(b), float(kap))
            for a, b in zip(gs, gf)
        ]
        finite = [w for w in bounds if w is not None]
        out.append((float(kap), min(finite) if finite else None))
    return out
