"""Reduced and layer subsystem flows, intermediate fibres, and the
delayed-loss-of-stability (way-in/way-out) solver.

On the invariant plane the reduced flow is linear with the explicit
solution (y, z)(t) = (y0 e^{-rho a t}, k + (z0 - k) e^{-t}) in the
intermediate time.  A trajectory that enters the attracting part of the
plane leaves it only after the repulsion accumulated past the neutral
curve balances the attraction accumulated before it; the balance point is
the root of the integral

    W(z_in, z_out) = int_{z_in}^{z_out} [y(z) + c (1 - tanh z)] / (k - z) dz

with y(z) the plane flow parametrised by z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import DomainError, NoExitError, PreconditionError
from .geometry import h_graph, lambda2
from .model import Params

__all__ = [
    "ExitPoint",
    "mp_flow_explicit",
    "mp_y_of_z",
    "reduced_s_rhs",
    "intermediate_rhs",
    "fibre_zeta",
    "m2s_reduced_rhs",
    "standard_form_rhs",
    "wayinout_W",
    "solve_exit_point",
]

_LAMBDA_SINGULAR = 1e-12
_Z_NODE_GUARD = 1e-8
_EXIT_REFINE = 1e-10


@dataclass(frozen=True)
class ExitPoint:
    """Delayed exit height on the invariant plane.

    z_out lies strictly between the neutral-curve crossing height and the
    node height k; w_residual is the value of the balance integral at the
    returned root; bracket is the interval the bisection started from.
    """

    z_out: float
    w_residual: float
    bracket: tuple[float, float]


def mp_flow_explicit(k: float, rho: float, a: float,
                     y0: float, z0: float, t: float) -> tuple[float, float]:
    """Explicit plane flow in intermediate time."""
    return (y0 * math.exp(-rho * a * t), k + (z0 - k) * math.exp(-t))


def mp_y_of_z(k: float, rho: float, a: float,
              y0: float, z0: float, z: float) -> float:
    """Plane flow with time eliminated: y as a function of z.

    Requires (z - k)/(z0 - k) > 0, i.e. z on the same side of the node as
    z0 and not past it.  The real power is evaluated as
    exp(rho*a*ln(ratio)) so only positive ratios are meaningful.
    """
    if z0 == k:
        raise DomainError("z0 must differ from the node height k")
    ratio = (z - k) / (z0 - k)
    if ratio <= 0.0:
        raise DomainError(f"(z - k)/(z0 - k) = {ratio} must be positive")
    return y0 * math.exp(rho * a * math.log(ratio))


def intermediate_rhs(c: float, k: float, x: float, z: float) -> tuple[float, float]:
    """Desingularised flow on the S-surface in the double singular limit."""
    th = math.tanh(x + z)
    sech2 = 1.0 - th * th
    f = k - z - 0.5 * x
    return (c * f * sech2, (1.0 - c * sech2) * f)


def reduced_s_rhs(p: Params, x: float, z: float) -> tuple[float, float]:
    """Desingularised reduced flow on the S-surface including the slow
    drift term rho (a h(x, z) + x^2)."""
    th = math.tanh(x + z)
    sech2 = 1.0 - th * th
    f = p.k - z - 0.5 * x
    drift = p.rho * (p.a * h_graph(p.c, x, z) + x * x)
    return (p.c * f * sech2 + drift, (1.0 - p.c * sech2) * f)


def fibre_zeta(c: float, x: float, x0: float, z0: float) -> float:
    """Intermediate fibre through (x0, z0) as a graph z = zeta(x).

    Solves dz/dx = cosh^2(x + z)/c - 1; blows up where the arctanh
    argument leaves (-1, 1).
    """
    arg = (x - x0 + c * math.tanh(x0 + z0)) / c
    if not -1.0 < arg < 1.0:
        raise DomainError(f"fibre argument {arg} outside (-1, 1)")
    return -x + math.atanh(arg)


def m2s_reduced_rhs(p: Params, x: float, z: float) -> tuple[float, float]:
    """Slow flow along the equilibrium curve of the intermediate problem.

    Tangent to that curve (direction (1, -1/2)); singular where the
    nontrivial eigenvalue of the intermediate problem vanishes.
    """
    lam = lambda2(p.c, x, z)
    if abs(lam) < _LAMBDA_SINGULAR:
        raise DomainError("fold of the intermediate equilibrium curve: "
                          "the reduced flow is singular here")
    th = math.tanh(x + z)
    sech2 = 1.0 - th * th
    g1 = p.a * h_graph(p.c, x, z) + x * x
    det = -(1.0 - p.c * sech2) * g1
    scale = det / lam
    return (scale, -0.5 * scale)


def standard_form_rhs(p: Params, x: float, y: float) -> tuple[float, float]:
    """Reduced flow on the S-surface projected to the (x, y) chart.

    Defined only for (x + y)/c in (-2, 0); parallel to ``reduced_s_rhs``
    pushed through the z-over-(x, y) graph, up to a positive time
    rescaling.
    """
    u = (x + y) / p.c + 1.0
    if not -1.0 < u < 1.0:
        raise DomainError(f"(x + y)/c = {(x + y) / p.c} outside (-2, 0)")
    denom = p.c * (1.0 - u * u)
    g = p.a * y + x * x
    dx = p.k - math.atanh(u) + 0.5 * x + p.rho * g / denom
    dy = -p.rho * (1.0 / denom - 1.0) * g
    return (dx, dy)


def _winout_integrand(c, k, a, rho, y_in, z_in):
    def f(z):
        y = y_in * math.exp(rho * a * math.log((z - k) / (z_in - k)))
        return (y + c * (1.0 - math.tanh(z))) / (k - z)
    return f


def wayinout_W(c: float, k: float, a: float, rho: float,
               y_in: float, z_in: float, z: float) -> float:
    """Accumulated attraction/repulsion balance from z_in to z.

    Both endpoints must lie strictly on the same side of the node height
    k.  Evaluated by adaptive quadrature to a relative accuracy of 1e-10.
    """
    if z == z_in:
        return 0.0
    lo, hi = min(z_in, z), max(z_in, z)
    if lo < k < hi or z_in == k or z == k:
        raise DomainError("integration path must not touch z = k")
    f = _winout_integrand(c, k, a, rho, y_in, z_in)
    val, _err = quad(f, z_in, z, epsabs=1e-14, epsrel=1e-10, limit=200)
    return val


def solve_exit_point(c: float, k: float, a: float, rho: float,
                     y_in: float, z_in: float) -> ExitPoint:
    """Delayed exit height for an entry on the attracting plane.

    The entry (0, y_in, z_in) must be attracting, i.e. its fast
    linearisation y_in + c (1 - tanh z_in) must be negative.  The exit is
    the first height past the neutral-curve crossing at which the balance
    integral returns to zero, located by stepping towards the node in
    increments of one sixty-fourth of the remaining gap and refined by
    bisection to 1e-10 in z.

    Raises
    ------
    PreconditionError
        If the entry lies on the repelling side of the plane.
    NoExitError
        If the balance never returns to zero before the node is reached;
        the trajectory is captured by the stable node.
    """
    fx_in = y_in + c * (1.0 - math.tanh(z_in))
    if fx_in > 0.0:
        raise PreconditionError(
            f"entry is on the repelling side (F_x = {fx_in:.3g})")
    if z_in == k:
        raise DomainError("entry height must differ from the node height k")
    if fx_in == 0.0:
        return ExitPoint(z_out=z_in, w_residual=0.0, bracket=(z_in, z_in))

    side = 1.0 if z_in > k else -1.0

    def fx_along(z):
        y = y_in * math.exp(rho * a * math.log((z - k) / (z_in - k)))
        return y + c * (1.0 - math.tanh(z))

    # Neutral crossing between the node and the entry; the plane flow always
    # reaches it because y contracts to 0 while c (1 - tanh z) stays positive.
    z_near = k + side * _Z_NODE_GUARD
    if fx_along(z_near) <= 0.0:
        raise NoExitError("no neutral crossing before the node")
    z_cross = _bisect_z(fx_along, z_near, z_in)

    def W(z):
        return wayinout_W(c, k, a, rho, y_in, z_in, z)

    step = (k - z_cross) / 64.0
    prev = z_cross
    w_prev = W(prev)
    if w_prev >= 0.0:
        # entry effectively at the crossing; degenerate root at the entry
        return ExitPoint(z_out=z_in, w_residual=w_prev, bracket=(z_in, z_cross))
    for j in range(1, 65):
        zj = z_cross + step * j if j < 64 else k + side * _Z_NODE_GUARD
        wj = W(zj)
        if wj >= 0.0:
            lo, hi = prev, zj
            z_out = _bisect_z(W, hi, lo) if lo > hi else _bisect_z(W, lo, hi)
            return ExitPoint(z_out=z_out, w_residual=W(z_out),
                             bracket=(min(lo, hi), max(lo, hi)))
        prev, w_prev = zj, wj
    raise NoExitError("balance never returns to zero before the node: "
                      "trajectory captured at (0, 0, k)")


def _bisect_z(f, lo: float, hi: float) -> float:
    """Sign-change bisection in z, refined to an interval of 1e-10."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise DomainError("bisection bracket does not change sign")
    while abs(hi - lo) > _EXIT_REFINE:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
