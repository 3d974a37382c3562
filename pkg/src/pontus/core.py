"""Domain types for Bloch-ball dynamics of an open two-level system.

All quantities are dimensionless: the magnitude of the initial control field
is the energy unit, times are measured in its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BallViolation, NegativeEndpointRate, NonFinite

#: Tolerance on |r| <= 1.  Round-off from propagation may push the norm
#: marginally above 1; anything beyond this margin is treated as unphysical.
TOL_BALL = 1e-9


def _require_finite(values, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFinite(f"{what} must be finite, got {values}")


@dataclass(frozen=True)
class BlochVector:
    """Point in the closed unit ball representing a two-level density matrix."""

    r_x: float
    r_y: float
    r_z: float

    def __post_init__(self):
        _require_finite((self.r_x, self.r_y, self.r_z), "Bloch vector")
        n = self.norm()
        if n > 1.0 + TOL_BALL:
            raise BallViolation(f"|r| = {n} exceeds 1 + {TOL_BALL}")
        if n > 1.0:
            # inside the admitted margin: project back onto the sphere
            object.__setattr__(self, "r_x", self.r_x / n)
            object.__setattr__(self, "r_y", self.r_y / n)
            object.__setattr__(self, "r_z", self.r_z / n)

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        a = np.asarray(arr, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.r_x, self.r_y, self.r_z])

    def norm(self) -> float:
        return float(np.sqrt(self.r_x**2 + self.r_y**2 + self.r_z**2))


@dataclass(frozen=True)
class FieldVector:
    """Control field h; the system Hamiltonian is h·sigma."""

    h_x: float
    h_y: float
    h_z: float

    def __post_init__(self):
        _require_finite((self.h_x, self.h_y, self.h_z), "field")

    @classmethod
    def from_array(cls, arr) -> "FieldVector":
        a = np.asarray(arr, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.h_x, self.h_y, self.h_z])


@dataclass(frozen=True)
class RateTriple:
    """Rates of the excitation (+), relaxation (-), and pure-dephasing (z) channels.

    Endpoint definitions must be nonnegative (see ``validate_endpoint``);
    instantaneous rates along an engineered schedule may dip below zero.
    """

    gamma_plus: float
    gamma_minus: float
    gamma_z: float

    def __post_init__(self):
        _require_finite(self.as_array(), "rates")

    @classmethod
    def from_array(cls, arr) -> "RateTriple":
        a = np.asarray(arr, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma_plus, self.gamma_minus, self.gamma_z])


@dataclass(frozen=True)
class ParameterPoint:
    """A field plus a rate triple: one static generator of the dynamics."""

    h: FieldVector
    gamma: RateTriple
    label: str = "custom"

    @classmethod
    def make(cls, h, gamma, label: str = "custom") -> "ParameterPoint":
        return cls(FieldVector.from_array(h), RateTriple.from_array(gamma), label)


@dataclass(frozen=True)
class AffineGenerator:
    """Drift matrix and forcing vector of the affine Bloch equation r' = L r + b."""

    Lambda: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.Lambda, dtype=float)
        bb = np.asarray(self.b, dtype=float)
        if L.shape != (3, 3) or bb.shape != (3,):
            raise ValueError("generator must be a 3x3 matrix plus a 3-vector")
        _require_finite(L, "drift matrix")
        _require_finite(bb, "forcing vector")
        # structural facts of the two-level dissipator: equal transverse
        # damping and forcing along z only
        if abs(L[0, 0] - L[1, 1]) > 1e-12 * max(1.0, abs(L[0, 0])):
            raise ValueError("transverse damping entries must coincide")
        if abs(bb[0]) > 1e-12 or abs(bb[1]) > 1e-12:
            raise ValueError("forcing must point along z")
        L.setflags(write=False)
        bb.setflags(write=False)
        object.__setattr__(self, "Lambda", L)
        object.__setattr__(self, "b", bb)


@dataclass(frozen=True)
class ModulationInfo:
    """Envelope data of an exponentially damped rate modulation."""

    kappa: float
    omega: float
    dg_max: float  # largest modulation amplitude over the three channels

    def envelope(self, t) -> np.ndarray:
        return self.dg_max * np.exp(-self.kappa * np.asarray(t, dtype=float))


@dataclass
class Trajectory:
    """Dense time series of the Bloch vector under some protocol.

    ``distance_of`` is an exact (or dense-output) evaluator of the trace
    distance to the target at arbitrary times within the recorded span; it
    backs sub-sample bisection of threshold crossings.
    """

    t: np.ndarray
    r: np.ndarray
    rates: np.ndarray
    dist: np.ndarray
    target: BlochVector
    epsilon: float
    tau: Optional[float] = None
    converged: bool = False
    inconclusive: bool = False
    timed_out: bool = False
    distance_of: Optional[Callable[[float], float]] = field(
        default=None, repr=False, compare=False
    )
    modulation: Optional[ModulationInfo] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.rates = np.asarray(self.rates, dtype=float)
        self.dist = np.asarray(self.dist, dtype=float)
        if not (len(self.t) == len(self.r) == len(self.rates) == len(self.dist)):
            raise ValueError("sample arrays must share one length")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("sample times must be strictly increasing")
        ref = 0.5 * np.linalg.norm(self.r - self.target.as_array(), axis=1)
        if len(self.t) and np.max(np.abs(ref - self.dist)) > 1e-12:
            raise ValueError("recorded distances disagree with the samples")

    def __len__(self) -> int:
        return len(self.t)


def trace_distance(r1: BlochVector, r2: BlochVector) -> float:
    """Trace distance between two-level states, half the Euclidean Bloch distance."""
    return 0.5 * float(np.linalg.norm(r1.as_array() - r2.as_array()))


def validate_endpoint(p: ParameterPoint) -> ParameterPoint:
    """Check that a static S/A/F definition has finite fields and rates >= 0."""
    _require_finite(p.h.as_array(), f"field of endpoint {p.label!r}")
    g = p.gamma.as_array()
    _require_finite(g, f"rates of endpoint {p.label!r}")
    if np.any(g < 0):
        raise NegativeEndpointRate(
            f"endpoint {p.label!r} has negative rate(s) {tuple(g)}"
        )
    return p
