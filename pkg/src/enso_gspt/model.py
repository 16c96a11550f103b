"""Model definitions: parameters, states, and right-hand sides.

The nondimensional system couples a fast temperature difference x, an
intermediate western-temperature departure y, and a slow thermocline
anomaly z:

    x' = x [x + y + c (1 - tanh(x + z))] + rho*delta (x^2 - a x)
    y' = -rho*delta (a y + x^2)
    z' = delta (k - z - x/2)

with c > 1, k in (0, 1), a > 0 and two small timescale ratios delta, rho.
The dimensional three-box model it derives from is kept as an independent
entry point; no unit conversion is provided because the reference scales
are not part of this package.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError

__all__ = [
    "C_VALIDATION_BOUND",
    "A_VALIDATION_BOUND",
    "SCALE_SEPARATION_LIMIT",
    "ModelDomainWarning",
    "Params",
    "State",
    "DimensionalParams",
    "DimensionalState",
    "rhs_full",
    "rhs_in_formulation",
    "jacobian_full",
    "t_sub",
    "rhs_dimensional",
]

# Soft validation bounds: the coupling term must not dominate the fast
# equation and rho*delta*a must stay well below O(1).
C_VALIDATION_BOUND = 5.0
A_VALIDATION_BOUND = 100.0
SCALE_SEPARATION_LIMIT = 0.1


class ModelDomainWarning(UserWarning):
    """Parameters are valid but outside the regime the analysis targets."""


@dataclass(frozen=True)
class Params:
    """The five constants of the nondimensional model.

    Raises
    ------
    DomainError
        If c <= 1, k outside (0, 1), or a, delta, rho non-positive.
    """

    c: float
    k: float
    a: float
    delta: float
    rho: float

    def __post_init__(self):
        for name in ("c", "k", "a", "delta", "rho"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"parameter {name} must be finite, got {v}")
        if self.c <= 1.0:
            raise DomainError(f"c must exceed 1, got {self.c}")
        if not 0.0 < self.k < 1.0:
            raise DomainError(f"k must lie in (0, 1), got {self.k}")
        if self.a <= 0.0:
            raise DomainError(f"a must be positive, got {self.a}")
        if self.delta <= 0.0 or self.rho <= 0.0:
            raise DomainError("delta and rho must be positive")
        if self.c > C_VALIDATION_BOUND:
            warnings.warn(f"c = {self.c} exceeds the validation bound "
                          f"{C_VALIDATION_BOUND}", ModelDomainWarning, stacklevel=2)
        if self.a > A_VALIDATION_BOUND:
            warnings.warn(f"a = {self.a} exceeds the validation bound "
                          f"{A_VALIDATION_BOUND}", ModelDomainWarning, stacklevel=2)
        if self.scale_separation_flag:
            warnings.warn(
                f"delta*rho*a = {self.delta * self.rho * self.a:.3g} > "
                f"{SCALE_SEPARATION_LIMIT}: the three-timescale separation "
                "degrades", ModelDomainWarning, stacklevel=2)

    @property
    def scale_separation_flag(self) -> bool:
        """True when delta*rho*a is large enough to blur the timescale split."""
        return self.delta * self.rho * self.a > SCALE_SEPARATION_LIMIT

    def to_json(self) -> str:
        return json.dumps({"c": self.c, "k": self.k, "a": self.a,
                           "delta": self.delta, "rho": self.rho},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Params":
        obj = json.loads(text)
        return cls(c=float(obj["c"]), k=float(obj["k"]), a=float(obj["a"]),
                   delta=float(obj["delta"]), rho=float(obj["rho"]))


@dataclass(frozen=True)
class State:
    """A phase-space point (x, y, z).

    x <= 0 in the studied regime; positive x is reported through
    ``in_domain`` rather than rejected, since the invariant plane {x = 0}
    may be touched exactly.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise DomainError(f"state components must be finite: {self}")

    @property
    def in_domain(self) -> bool:
        return self.x <= 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class DimensionalParams:
    """Constants of the dimensional three-box model."""

    alpha: float
    T_r: float
    epsilon: float
    mu: float
    zeta: float
    r: float
    b: float
    L: float
    beta: float
    H: float
    z0: float
    hstar: float
    T_r0: float
    T_0: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise DomainError(f"dimensional parameter {f.name} must be finite")
        if self.hstar == 0.0:
            raise DomainError("hstar must be nonzero")
        if self.beta == 0.0:
            raise DomainError("beta must be nonzero")


@dataclass(frozen=True)
class DimensionalState:
    """Western temperature T1, eastern temperature T2, thermocline depth h1."""

    T1: float
    T2: float
    h1: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.T1, self.T2, self.h1)):
            raise DomainError(f"state components must be finite: {self}")


def rhs_full(p: Params, s: State) -> tuple[float, float, float]:
    """Fast-time right-hand side (x', y', z').

    The x-equation is coded with x as an exact multiplicative factor, so the
    plane {x = 0} is invariant in floating point as well as in exact
    arithmetic.
    """
    x, y, z = s.x, s.y, s.z
    rd = p.rho * p.delta
    bracket = x + y + p.c * (1.0 - math.tanh(x + z))
    dx = x * (bracket + rd * (x - p.a))
    dy = -rd * (p.a * y + x * x)
    dz = p.delta * (p.k - z - 0.5 * x)
    return (dx, dy, dz)


def rhs_in_formulation(p: Params, s: State, form: str) -> tuple[float, float, float]:
    """Right-hand side in the fast, intermediate (tau = delta*t) or slow
    (s = rho*tau) time formulation.

    The three formulations are exact rescalings of one another: intermediate
    equals the fast field divided by delta, slow divided by delta*rho.
    """
    dx, dy, dz = rhs_full(p, s)
    if form == "fast":
        return (dx, dy, dz)
    if form == "intermediate":
        d = p.delta
        return (dx / d, dy / d, dz / d)
    if form == "slow":
        d = p.delta * p.rho
        return (dx / d, dy / d, dz / d)
    raise ValueError(f"unknown formulation {form!r}; expected "
                     "'fast', 'intermediate' or 'slow'")


def jacobian_full(p: Params, s: State) -> np.ndarray:
    """Analytic Jacobian of ``rhs_full`` with respect to (x, y, z)."""
    x, y, z = s.x, s.y, s.z
    rd = p.rho * p.delta
    th = math.tanh(x + z)
    sech2 = 1.0 - th * th
    bracket = x + y + p.c * (1.0 - th)
    return np.array([
        [bracket + x * (1.0 - p.c * sech2) + rd * (2.0 * x - p.a),
         x,
         -x * p.c * sech2],
        [-2.0 * rd * x, -rd * p.a, 0.0],
        [-0.5 * p.delta, 0.0, -p.delta],
    ])


def t_sub(dp: DimensionalParams, T1: float, T2: float, h1: float) -> float:
    """Subsurface temperature entering the eastern-box equation."""
    if dp.hstar == 0.0:
        raise DomainError("hstar must be nonzero")
    arg = (dp.H - dp.z0 + h1 + dp.b * dp.L * dp.mu * (T2 - T1) / dp.beta) / dp.hstar
    return 0.5 * (dp.T_r + dp.T_0) - 0.5 * (dp.T_r - dp.T_r0) * math.tanh(arg)


def rhs_dimensional(dp: DimensionalParams, ds: DimensionalState) -> tuple[float, float, float]:
    """Right-hand side (dT1/dt, dT2/dt, dh1/dt) of the dimensional model."""
    T1, T2, h1 = ds.T1, ds.T2, ds.h1
    dT = T2 - T1
    dT1 = -dp.alpha * (T1 - dp.T_r) - dp.epsilon * dp.mu * dT * dT
    dT2 = (-dp.alpha * (T2 - dp.T_r)
           + dp.zeta * dp.mu * dT * (T2 - t_sub(dp, T1, T2, h1)))
    dh1 = dp.r * (-h1 - dp.b * dp.L * dp.mu * dT / (2.0 * dp.beta))
    return (dT1, dT2, dh1)
