"""Parameter-regime classification in the (c, k, a) space.

For fixed (c, k) the geometry admits two scalar tests: the fast-fibre
projection of the lower folded singularity lands on the attracting plane
or on the upper attracting sheet depending on the sign of A_qminus, and
the analogous test for the companion point of the upper folded singularity
is decided by A_qstar.  Together with the signs of the denominators d-/d+
of the fold-crossing damping thresholds a-/a+ this splits the (c, k) plane
into the regions D1-D3, A1-A3 and their realised intersections V1-V6, each
admitting a distinct menu of oscillatory behaviour selected by a.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, NoRootError
from .geometry import folded_singularities, h_graph, theta, tanh_theta
from .model import Params, State, jacobian_full, rhs_full

__all__ = [
    "RegimeReport",
    "EquilibriumSolution",
    "A_qminus",
    "A_qstar_formula",
    "A_qstar_direct",
    "d_mp",
    "a_mp",
    "curve_C_side",
    "classify_regions",
    "solve_equilibrium_reduced",
    "solve_equilibrium_full",
    "p_star",
    "a_p",
    "regime_map",
    "REGIME_MAP_COLUMNS",
]

_DEGENERATE_TOL = 1e-12
_SCAN_CELLS = 256
_ROOT_XTOL = 1e-12


def A_qminus(c: float, k: float) -> float:
    """Plane-side fast linearisation at the projection of the lower folded
    singularity; negative means the projection lands on the attracting
    plane."""
    q = folded_singularities(c, k).q_minus
    return q.y + c * (1.0 - math.tanh(q.z))


def A_qstar_formula(c: float, k: float) -> float:
    """Closed-form classifier for the projection of the companion point of
    the upper folded singularity; positive means the projection lands on
    the attracting plane (note the inverted sign convention relative to
    ``A_qminus``).

    Defined only while the y-height of the upper folded singularity lies in
    (-2c, 0).
    """
    th = theta(c)
    yq = folded_singularities(c, k).q_plus.y
    arg = yq / c + 1.0
    if not -1.0 < arg < 1.0:
        raise DomainError(f"arctanh argument {arg} outside (-1, 1); "
                          "use the direct evaluation instead")
    return yq - th - math.atanh(arg) + c * (1.0 + tanh_theta(c))


def A_qstar_direct(c: float, k: float) -> float:
    """Direct classifier for the same projection: locate the companion
    point on the lower fold in closed form and evaluate the plane-side
    fast linearisation there (negative means attracting plane)."""
    th = theta(c)
    yq = folded_singularities(c, k).q_plus.y
    x_star = -yq - c * (1.0 + tanh_theta(c))
    z_star = -th - x_star
    return yq + c * (1.0 - math.tanh(z_star))


def d_mp(c: float, k: float) -> tuple[float, float]:
    """Denominators (d-, d+) of the fold-crossing damping thresholds;
    each equals minus the y-height of the corresponding folded
    singularity."""
    if c <= 1.0:
        raise DomainError(f"requires c > 1, got {c}")
    th = theta(c)
    tt = tanh_theta(c)
    xm = -2.0 * k - 2.0 * th
    xp = -2.0 * k + 2.0 * th
    return (xm + c * (1.0 + tt), xp + c * (1.0 - tt))


def a_mp(c: float, k: float) -> tuple[float | None, float | None]:
    """Damping thresholds (a-, a+) at which the reduced equilibrium sits on
    the lower/upper folded singularity; absent where the corresponding
    denominator is nonpositive."""
    dm, dp = d_mp(c, k)
    th = theta(c)
    xm = -2.0 * k - 2.0 * th
    xp = -2.0 * k + 2.0 * th
    am = xm * xm / dm if dm > 0.0 else None
    ap = xp * xp / dp if dp > 0.0 else None
    return (am, ap)


def curve_C_side(c: float, k: float) -> str:
    """Side of the curve separating negative from positive x-height of the
    upper folded singularity: 'above' iff k > theta(c) (the singularity has
    x < 0 and is dynamically reachable)."""
    th = theta(c)
    if abs(k - th) <= _DEGENERATE_TOL:
        return "on"
    return "above" if k > th else "below"


@dataclass(frozen=True)
class RegimeReport:
    """Full classification of one (c, k) pair."""

    c: float
    k: float
    A_qminus: float
    A_qstar: float | None
    A_qstar_direct: float
    d_minus: float
    d_plus: float
    D_label: str
    A_label: str
    V_label: str
    curve_C_side: str
    a_minus: float | None
    a_plus: float | None
    a_p: float | None

    def as_dict(self) -> dict:
        return {
            "c": self.c, "k": self.k,
            "A_qminus": self.A_qminus,
            "A_qstar": self.A_qstar,
            "A_qstar_direct": self.A_qstar_direct,
            "d_minus": self.d_minus, "d_plus": self.d_plus,
            "D": self.D_label, "A": self.A_label, "V": self.V_label,
            "curve_side": self.curve_C_side,
            "a_minus": self.a_minus, "a_plus": self.a_plus, "a_p": self.a_p,
        }


_V_TABLE = {
    ("D1", "A1"): "V1",
    ("D2", "A1"): "V2",
    ("D3", "A1"): "V3",
    ("D2", "A2"): "V4",
    ("D3", "A2"): "V5",
    ("D3", "A3"): "V6",
}


def classify_regions(c: float, k: float) -> RegimeReport:
    """Classify one (c, k) pair into its D, A and V regions.

    The plane-landing classifier is evaluated both in closed form and
    directly; the two must disagree in sign (they use opposite
    conventions), otherwise the D label is downgraded to 'degenerate' with
    both values reported.  Any classifier within 1e-12 of zero also yields
    a degenerate label.
    """
    if c <= 1.0 or not 0.0 < k < 1.0:
        raise DomainError(f"(c, k) = ({c}, {k}) outside (1, inf) x (0, 1)")
    aqm = A_qminus(c, k)
    aqd = A_qstar_direct(c, k)
    try:
        aqs = A_qstar_formula(c, k)
    except DomainError:
        aqs = None
    dm, dp = d_mp(c, k)
    am, ap = a_mp(c, k)

    # Effective sign of the companion-point classifier in the formula's
    # convention: positive means the projection lands on the plane.
    star_sign = -_sign(aqd) if aqs is None else _sign(aqs)
    degenerate_d = (abs(aqm) <= _DEGENERATE_TOL
                    or abs(aqd) <= _DEGENERATE_TOL
                    or (aqs is not None and abs(aqs) <= _DEGENERATE_TOL)
                    or (aqs is not None and _sign(aqs) == _sign(aqd)))
    if degenerate_d:
        d_label = "degenerate"
    elif aqm < 0.0 and star_sign > 0:
        d_label = "D1"
    elif aqm > 0.0 and star_sign > 0:
        d_label = "D2"
    elif aqm > 0.0 and star_sign < 0:
        d_label = "D3"
    else:
        d_label = "degenerate"  # A_qminus < 0 with plane-missing companion

    if abs(dm) <= _DEGENERATE_TOL or abs(dp) <= _DEGENERATE_TOL:
        a_label = "degenerate"
    elif dm > 0.0 and dp > 0.0:
        a_label = "A1"
    elif dm < 0.0 and dp > 0.0:
        a_label = "A2"
    elif dm < 0.0 and dp < 0.0:
        a_label = "A3"
    else:
        a_label = "degenerate"  # d- > 0 with d+ < 0 cannot occur (d- < d+)

    v_label = _V_TABLE.get((d_label, a_label), "unclassified")

    apk = None
    if d_label == "D2":
        apk = a_p(c, k)

    return RegimeReport(
        c=c, k=k, A_qminus=aqm, A_qstar=aqs, A_qstar_direct=aqd,
        d_minus=dm, d_plus=dp, D_label=d_label, A_label=a_label,
        V_label=v_label, curve_C_side=curve_C_side(c, k),
        a_minus=am, a_plus=ap, a_p=apk,
    )


def _sign(v: float) -> int:
    return (v > 0.0) - (v < 0.0)


@dataclass(frozen=True)
class EquilibriumSolution:
    """Equilibrium of the reduced flow (kind 'reduced') or of the full
    system (kind 'full')."""

    state: State
    kind: str
    residual: float
    all_roots: tuple[float, ...] = field(default=())
    unique: bool = True
    seed_distance: float | None = None


def _eqbria_lhs(c, k, a):
    def g(x):
        return a * x - x * x + a * c * (1.0 - math.tanh(0.5 * x + k))
    return g


def solve_equilibrium_reduced(c: float, k: float, a: float) -> EquilibriumSolution:
    """All equilibria of the reduced flow along the intermediate
    equilibrium curve, by sign scan and bisection.

    Scans a*x - x^2 + a*c*(1 - tanh(x/2 + k)) over [x_{q-} - 10, 0] in 256
    cells and bisects each bracket to 1e-12 in x.  The principal root is
    the largest; multiplicity is flagged rather than assumed away.
    """
    if a <= 0.0:
        raise DomainError(f"a must be positive, got {a}")
    x_lo = folded_singularities(c, k).q_minus.x - 10.0
    g = _eqbria_lhs(c, k, a)
    xs = np.linspace(x_lo, 0.0, _SCAN_CELLS + 1)
    vals = [g(x) for x in xs]
    roots: list[float] = []
    for i in range(1, len(xs)):
        v0, v1 = vals[i - 1], vals[i]
        if v0 == 0.0:
            roots.append(xs[i - 1])
        elif (v0 < 0.0) != (v1 < 0.0):
            roots.append(_bisect_interval(g, xs[i - 1], xs[i]))
    if vals[-1] == 0.0:
        roots.append(xs[-1])
    if not roots:
        raise NoRootError("no equilibrium of the reduced flow found on "
                          f"[{x_lo}, 0]")
    roots = sorted(set(roots))
    x_hat = roots[-1]
    z_hat = k - 0.5 * x_hat
    y_hat = h_graph(c, x_hat, z_hat)
    return EquilibriumSolution(
        state=State(x_hat, y_hat, z_hat), kind="reduced",
        residual=abs(g(x_hat)), all_roots=tuple(roots),
        unique=(len(roots) == 1))


def _bisect_interval(f, lo, hi):
    flo = f(lo)
    while hi - lo > _ROOT_XTOL:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_equilibrium_full(p: Params, max_iter: int = 100) -> EquilibriumSolution:
    """Global equilibrium of the full system by Newton iteration seeded at
    the reduced equilibrium; converges to a residual of 1e-12."""
    seed = solve_equilibrium_reduced(p.c, p.k, p.a)
    s = np.array(seed.state.as_tuple())
    for _ in range(max_iter):
        f = np.array(rhs_full(p, State(*s)))
        res = np.max(np.abs(f))
        if res <= 1e-12:
            dist = float(np.linalg.norm(s - np.array(seed.state.as_tuple())))
            return EquilibriumSolution(
                state=State(*s), kind="full", residual=float(res),
                all_roots=seed.all_roots, unique=seed.unique,
                seed_distance=dist)
        jac = jacobian_full(p, State(*s))
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian at {s}") from exc
        if not np.all(np.isfinite(step)):
            raise ConvergenceError(f"non-finite Newton step at {s}")
        s = s - step
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations")


def p_star(c: float) -> State:
    """The unique point on the lower fold whose fast fibre lands exactly on
    the plane's neutral curve.

    Found as the interior sign change of the plane-side fast linearisation
    along the fold, scanned over x in [-20, 0) and bisected to 1e-12.  The
    boundary x = 0 is a degenerate zero and is excluded.
    """
    th = theta(c)
    ct = c * (1.0 + tanh_theta(c))

    def balance(x):
        return -x - ct + c * (1.0 - math.tanh(-x - th))

    # The boundary x = 0 is a quadratically degenerate zero of the balance
    # (value ~ -tanh(theta) x^2), so the scan stops at -1e-6 where the true
    # value still dominates rounding noise; every interior root satisfies
    # x <= -(1 + sqrt(3)) theta and stays inside the scanned interval.
    xs = np.linspace(-20.0, -1e-6, 2049)
    vals = [balance(x) for x in xs]
    brackets = [(xs[i - 1], xs[i]) for i in range(1, len(xs))
                if (vals[i - 1] < 0.0) != (vals[i] < 0.0)]
    if not brackets:
        raise NoRootError(f"no interior sign change along the lower fold "
                          f"for c = {c}")
    if len(brackets) > 1:
        raise NoRootError(f"multiple sign changes along the lower fold for "
                          f"c = {c}: {brackets}")
    x_s = _bisect_interval(balance, *brackets[0])
    z_s = -x_s - th
    return State(x_s, h_graph(c, x_s, z_s), z_s)


def a_p(c: float, k: float) -> float | None:
    """Damping value at which the reduced equilibrium's y-height equals the
    y-height of the fold point that projects onto the neutral curve.

    Below it the unstable-manifold plane of the equilibrium projects onto
    the attracting plane (plateaus), above it onto the upper attracting
    sheet.  None when no solution exists between the lower folded
    singularity and x = 0.
    """
    y_star = p_star(c).y
    target = -y_star

    def d_of(x):
        return x + c * (1.0 - math.tanh(0.5 * x + k))

    x_qm = folded_singularities(c, k).q_minus.x
    xs = np.linspace(x_qm, 0.0, _SCAN_CELLS + 1)
    vals = [d_of(x) - target for x in xs]
    for i in range(1, len(xs)):
        if (vals[i - 1] < 0.0) != (vals[i] < 0.0):
            x_p = _bisect_interval(lambda x: d_of(x) - target,
                                   xs[i - 1], xs[i])
            return x_p * x_p / target
        if vals[i - 1] == 0.0:
            return xs[i - 1] ** 2 / target
    return None


REGIME_MAP_COLUMNS = ("c", "k", "A_qminus", "A_qstar", "d_minus", "d_plus",
                      "D", "A", "V", "curve_side", "a_minus", "a_plus", "a_p")


def _map_cell(ck: tuple[float, float]) -> RegimeReport:
    return classify_regions(*ck)


def default_jobs() -> int:
    env = os.environ.get("ENSO_GSPT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def regime_map(c_values, k_values, n_jobs: int | None = None) -> list[RegimeReport]:
    """Classify a full (c, k) grid; rows ordered c-major then k.

    Cells are independent, so the evaluation is a parallel map; results are
    gathered in grid order regardless of completion order.
    """
    cells = [(float(c), float(k)) for c in c_values for k in k_values]
    jobs = default_jobs() if n_jobs is None else max(1, n_jobs)
    if jobs == 1 or len(cells) < 4096:
        return [_map_cell(ck) for ck in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_map_cell, cells, chunksize=max(1, len(cells) // (8 * jobs))))
