"""Closed-form singular geometry of the layer problem.

The critical manifold of the fast subsystem is the union of the invariant
plane {x = 0} and the S-shaped surface where x + y + c (1 - tanh(x+z)) = 0.
This module provides the graph representations of that surface, the
stability classification of both sheets, the fold lines at x + z = -theta
and x + z = +theta with theta = arccosh(sqrt(c)), the folded singularities
where the fold lines meet the nullcline surface of the intermediate
problem, and the projection of fold points along fast fibres onto the
first attracting sheet they reach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError, NoLandingError, PreconditionError
from .model import State

__all__ = [
    "BranchLabel",
    "FoldedSingularities",
    "theta",
    "tanh_theta",
    "h_graph",
    "g_graph",
    "fx_linearisation",
    "lambda2",
    "m2s_point",
    "m2s_folds",
    "folded_singularities",
    "classify_point",
    "project_fast",
    "manifold_mesh",
    "DEFAULT_SET_TOL",
]

DEFAULT_SET_TOL = 1e-9
_ROOT_TOL = 1e-12


class BranchLabel(str, Enum):
    """Label of the manifold subset a point belongs to."""

    P_ATTRACTING = "P_attracting"
    P_REPELLING = "P_repelling"
    S_A_MINUS = "S_a_minus"
    S_REPELLING = "S_repelling"
    S_A_PLUS = "S_a_plus"
    FOLD_MINUS = "Fold_minus"
    FOLD_PLUS = "Fold_plus"
    F_P_CURVE = "F_P_curve"
    M2S_POINT = "M2S_point"
    M2P_POINT = "M2P_point"
    OFF_MANIFOLD = "off_manifold"


def theta(c: float) -> float:
    """Fold offset: the fold lines of the S-surface sit at x + z = -/+ theta.

    theta = arccosh(sqrt(c)) = ln(sqrt(c) + sqrt(c - 1)).
    """
    if c <= 1.0:
        raise DomainError(f"fold offset requires c > 1, got {c}")
    return math.log(math.sqrt(c) + math.sqrt(c - 1.0))


def tanh_theta(c: float) -> float:
    """tanh of the fold offset, sqrt((c - 1)/c); companion to ``theta``."""
    if c <= 1.0:
        raise DomainError(f"fold offset requires c > 1, got {c}")
    return math.sqrt((c - 1.0) / c)


def h_graph(c: float, x: float, z: float) -> float:
    """The S-surface as a graph of y over (x, z)."""
    return -x - c * (1.0 - math.tanh(x + z))


def g_graph(c: float, x: float, y: float) -> float:
    """The S-surface as a graph of z over (x, y).

    Defined only where (x + y)/c is in (-2, 0); inverse of ``h_graph``.
    """
    arg = (x + y) / c + 1.0
    if not -1.0 < arg < 1.0:
        raise DomainError(f"(x + y)/c = {(x + y) / c} outside (-2, 0)")
    return math.atanh(arg) - x


def fx_linearisation(c: float, x: float, y: float, z: float) -> float:
    """Linearisation of the fast flow with respect to x.

    On the plane {x = 0} this reduces to y + c (1 - tanh z); on the
    S-surface it reduces to x (1 - c sech^2(x + z)).
    """
    th = math.tanh(x + z)
    sech2 = 1.0 - th * th
    return x * (1.0 - c * sech2) + (x + y + c * (1.0 - th))


def lambda2(c: float, x: float, z: float) -> float:
    """Nontrivial eigenvalue of the intermediate problem along its
    equilibrium curve: -1 + c sech^2(x + z)/2.  Negative sign marks the
    attracting part, positive the repelling part."""
    th = math.tanh(x + z)
    return -1.0 + 0.5 * c * (1.0 - th * th)


def m2s_point(c: float, k: float, x: float) -> State:
    """Point of the intermediate problem's equilibrium curve at abscissa x."""
    z = k - 0.5 * x
    return State(x, h_graph(c, x, z), z)


def m2s_folds(c: float) -> float:
    """|x + z| location where ``lambda2`` vanishes; requires c > 2."""
    if c <= 2.0:
        raise DomainError(f"lambda2 never vanishes for c <= 2 (got c = {c})")
    return math.acosh(math.sqrt(0.5 * c))


@dataclass(frozen=True)
class FoldedSingularities:
    """The two folded singularities, where the equilibrium curve of the
    intermediate problem crosses the fold lines."""

    q_minus: State
    q_plus: State
    theta: float


def folded_singularities(c: float, k: float) -> FoldedSingularities:
    """Coordinates of the folded singularities for given (c, k)."""
    th = theta(c)
    xm = -2.0 * k - 2.0 * th
    zm = 2.0 * k + th
    xp = -2.0 * k + 2.0 * th
    zp = 2.0 * k - th
    return FoldedSingularities(
        q_minus=State(xm, h_graph(c, xm, zm), zm),
        q_plus=State(xp, h_graph(c, xp, zp), zp),
        theta=th,
    )


def _on_plane(s: State, tol: float) -> bool:
    return abs(s.x) < tol


def _on_surface(c: float, s: State, tol: float) -> bool:
    return abs(s.x + s.y + c * (1.0 - math.tanh(s.x + s.z))) < tol


def classify_point(c: float, k: float, s: State,
                   tol: float = DEFAULT_SET_TOL) -> BranchLabel:
    """Assign the finest matching branch label to a phase-space point.

    Membership in the algebraic sets is decided with absolute tolerance
    ``tol``.  Sets where normal hyperbolicity is lost (the plane/surface
    intersection curve and the two fold lines) take precedence over the
    equilibrium curve of the intermediate problem, which in turn precedes
    the open attracting/repelling subsets.  Plane membership is tested
    before surface membership for points near the intersection.
    """
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    th = theta(c)
    on_p = _on_plane(s, tol)
    on_s = _on_surface(c, s, tol)
    fx_plane = s.y + c * (1.0 - math.tanh(s.z))

    if on_p and abs(fx_plane) < tol:
        return BranchLabel.F_P_CURVE
    if on_s:
        u = s.x + s.z
        if abs(u + th) < tol:
            return BranchLabel.FOLD_MINUS
        if abs(u - th) < tol:
            return BranchLabel.FOLD_PLUS
        if abs(k - s.z - 0.5 * s.x) < tol:
            return BranchLabel.M2S_POINT
    if on_p:
        return (BranchLabel.P_ATTRACTING if fx_plane < 0.0
                else BranchLabel.P_REPELLING)
    if on_s:
        u = s.x + s.z
        if u <= -th:
            return BranchLabel.S_A_MINUS
        if u >= th:
            return BranchLabel.S_A_PLUS
        return BranchLabel.S_REPELLING
    return BranchLabel.OFF_MANIFOLD


def _fast_nullcline(c: float, y: float, z: float):
    """The bracket B(xi) = xi + y + c (1 - tanh(xi + z)); fast flow is
    x' = x B(x) with (y, z) frozen."""
    def B(xi: float) -> float:
        return xi + y + c * (1.0 - math.tanh(xi + z))
    return B


def _bisect(f, lo: float, hi: float, tol: float = _ROOT_TOL) -> float:
    flo = f(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol or hi - lo < 1e-15 * (1.0 + abs(mid)):
            return mid
        if (flo < 0.0) == (fm < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def project_fast(c: float, s: State,
                 tol: float = DEFAULT_SET_TOL) -> tuple[State, BranchLabel]:
    """Land a departing point on the first attracting sheet along its fast
    fibre, holding (y, z) fixed.

    The start must be leaving or sitting on a non-attracting set: either
    its fast linearisation is nonnegative or it lies on a fold line.  Fold
    points on the lower fold jump upward (x increasing), fold points on the
    upper fold jump downward; off-manifold points follow the sign of the
    fast flow.  The landing is the first zero of the fast nullcline in the
    travel direction, or the plane itself when no zero intervenes.

    Raises
    ------
    PreconditionError
        If the start point is strictly attracting.
    NoLandingError
        If the fibre terminates on the repelling part of the plane exactly
        (measure-zero configurations).
    """
    if s.x > 0.0:
        raise PreconditionError("projection is defined for x <= 0")
    th = theta(c)
    B = _fast_nullcline(c, s.y, s.z)
    u = s.x + s.z
    on_surface = abs(B(s.x)) < tol
    on_fold_minus = on_surface and abs(u + th) < tol
    on_fold_plus = on_surface and abs(u - th) < tol

    fx = fx_linearisation(c, s.x, s.y, s.z)
    if fx < 0.0 and not (on_fold_minus or on_fold_plus):
        raise PreconditionError(
            f"start point is attracting (F_x = {fx:.3g}) and not on a fold")

    if on_fold_minus:
        direction = +1
    elif on_fold_plus:
        direction = -1
    elif on_surface:
        # repelling interior sheet: the model's singular cycles leave upward
        direction = +1
    else:
        direction = +1 if s.x * B(s.x) > 0.0 else -1

    if direction == +1:
        return _march_up(c, s, B, th, tol)
    return _march_down(c, s, B, th)


def _march_up(c, s, B, th, tol):
    n = 4096
    x0 = s.x
    prev_x, prev_v = x0, B(x0)
    crossed = abs(prev_v) >= tol  # on-manifold starts must first leave zero
    for j in range(1, n + 1):
        xj = x0 + (0.0 - x0) * j / n
        vj = B(xj)
        if not crossed:
            if abs(vj) >= tol:
                crossed = True
                prev_x, prev_v = xj, vj
            continue
        if vj == 0.0 or (prev_v < 0.0) != (vj < 0.0):
            root = _bisect(B, prev_x, xj)
            label = (BranchLabel.S_A_PLUS if root + s.z >= th - tol
                     else BranchLabel.S_A_MINUS if root + s.z <= -th + tol
                     else None)
            if label is None:
                raise NoLandingError("fibre tangent to the repelling sheet")
            return State(root, s.y, s.z), label
        prev_x, prev_v = xj, vj
    plane_fx = B(0.0)
    if abs(plane_fx) < tol:
        raise NoLandingError("fibre terminates on the plane's "
                             "non-hyperbolic curve")
    if plane_fx > 0.0:
        raise NoLandingError("fibre reaches the repelling plane")
    return State(0.0, s.y, s.z), BranchLabel.P_ATTRACTING


def _march_down(c, s, B, th):
    # B(xi) -> -inf as xi -> -inf, so a lower landing always exists.
    x0 = s.x
    step = max(0.05, abs(x0) * 0.05)
    prev_x, prev_v = x0, B(x0)
    moved = False
    xi = x0
    for _ in range(4000):
        xi -= step
        v = B(xi)
        if not moved:
            if abs(v) >= _ROOT_TOL * 10:
                moved = True
                prev_x, prev_v = xi, v
            continue
        if v == 0.0 or (prev_v < 0.0) != (v < 0.0):
            root = _bisect(B, xi, prev_x)
            return State(root, s.y, s.z), BranchLabel.S_A_MINUS
        prev_x, prev_v = xi, v
    raise NoLandingError("no landing found below the start point")


def manifold_mesh(c: float, k: float,
                  x_range: tuple[float, float, int] = (-4.0, 0.0, 41),
                  z_range: tuple[float, float, int] = (0.0, 2.0, 41)):
    """Yield rows (set, x, y, z) describing the singular geometry.

    Emits the S-surface graph over the requested rectangle, the two fold
    lines and the intermediate-problem equilibrium curve as polylines over
    the x-range, and the two folded singularities.
    """
    th = theta(c)
    x_lo, x_hi, nx = x_range
    z_lo, z_hi, nz = z_range
    if nx < 2 or nz < 2:
        raise DomainError("mesh needs at least 2 points per axis")
    for i in range(nx):
        x = x_lo + (x_hi - x_lo) * i / (nx - 1)
        for j in range(nz):
            z = z_lo + (z_hi - z_lo) * j / (nz - 1)
            yield ("MS", x, h_graph(c, x, z), z)
    for i in range(nx):
        x = x_lo + (x_hi - x_lo) * i / (nx - 1)
        z = -x - th
        yield ("L_minus", x, h_graph(c, x, z), z)
    for i in range(nx):
        x = x_lo + (x_hi - x_lo) * i / (nx - 1)
        z = -x + th
        yield ("L_plus", x, h_graph(c, x, z), z)
    for i in range(nx):
        x = x_lo + (x_hi - x_lo) * i / (nx - 1)
        p = m2s_point(c, k, x)
        yield ("M2S", p.x, p.y, p.z)
    q = folded_singularities(c, k)
    yield ("q_minus", q.q_minus.x, q.q_minus.y, q.q_minus.z)
    yield ("q_plus", q.q_plus.x, q.q_plus.y, q.q_plus.z)
