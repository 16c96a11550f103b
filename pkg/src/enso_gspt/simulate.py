"""Stiff adaptive integration of the full system with event detection.

The fast variable traverses many orders of magnitude during passages near
the invariant plane (depths of exp(-hundreds) are reached while the
trajectory waits out the accumulated attraction), so the integrator works
in log-fast coordinates L = ln|x|: the substitution removes both the
stiffness of the exponential collapse and the floating-point underflow
that would otherwise glue trajectories to the plane or flip the sign of x.
The transformed system

    L' = x + y + c (1 - tanh(x + z)) + rho*delta (x - a),   x = sgn e^L
    y' = -rho*delta (a y + x^2)
    z' = delta (k - z - x/2)

is exact; initial states on the plane itself evolve by the plane
subsystem with x identically zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationError
from .geometry import theta
from .model import Params, State, rhs_full

__all__ = [
    "IntegratorConfig",
    "Event",
    "Trajectory",
    "integrate",
    "detect_events",
    "steady_state_check",
    "discard_transient",
    "PLANE_EPS",
]

PLANE_EPS = 1e-3
_LOG_UNDERFLOW = -745.0
_EVENT_T_TOL = 1e-6

_METHODS = {"implicit_adaptive": "LSODA", "explicit_adaptive": "RK45"}


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings; defaults resolve the 1 : delta : delta*rho
    timescale spread at the studied parameter values."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 10.0
    t_end: float = 1e5
    initial_state: tuple[float, float, float] = (-1.0, -1.0, 0.5)
    method: str = "implicit_adaptive"
    sample_stride: int = 1

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise DomainError("tolerances must be positive")
        if self.t_end <= 0.0:
            raise DomainError("t_end must be positive")
        if self.max_step <= 0.0:
            raise DomainError("max_step must be positive")
        if self.method not in _METHODS:
            raise DomainError(f"method must be one of {sorted(_METHODS)}")
        if self.sample_stride < 1:
            raise DomainError("sample_stride must be >= 1")


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    state: tuple[float, float, float]


@dataclass
class Trajectory:
    """Time-ordered samples of one integration plus detected events.

    The interpolant of the underlying solver is kept (not serialised) so
    that events can be refined below the sampling resolution.
    """

    params: Params
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    events: list[Event] = field(default_factory=list)
    _interp: object = field(default=None, repr=False, compare=False)

    def state_at(self, t: float) -> tuple[float, float, float]:
        """State at an arbitrary time, from the solver interpolant when
        available and linear interpolation of the samples otherwise."""
        if self._interp is not None:
            return self._interp(t)
        xi = float(np.interp(t, self.t, self.x))
        yi = float(np.interp(t, self.t, self.y))
        zi = float(np.interp(t, self.t, self.z))
        return (xi, yi, zi)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,x,y,z\n")
            for ti, xi, yi, zi in zip(self.t, self.x, self.y, self.z):
                fh.write(f"{ti:.17g},{xi:.17g},{yi:.17g},{zi:.17g}\n")

    @classmethod
    def from_csv(cls, path, params: Params) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 4:
            raise DomainError(f"expected 4 columns t,x,y,z in {path}")
        return cls(params=params, t=data[:, 0], x=data[:, 1],
                   y=data[:, 2], z=data[:, 3])


def _log_system(p: Params, sign: float):
    c, k, a, delta, rho = p.c, p.k, p.a, p.delta, p.rho
    rd = rho * delta

    def rhs(t, s):
        L, y, z = s
        x = sign * math.exp(L) if L > _LOG_UNDERFLOW else 0.0
        bracket = x + y + c * (1.0 - math.tanh(x + z))
        return (bracket + rd * (x - a),
                -rd * (a * y + x * x),
                delta * (k - z - 0.5 * x))

    def jac(t, s):
        L, y, z = s
        x = sign * math.exp(L) if L > _LOG_UNDERFLOW else 0.0
        th = math.tanh(x + z)
        sech2 = 1.0 - th * th
        return [[(1.0 - c * sech2 + rd) * x, 1.0, -c * sech2],
                [-2.0 * rd * x * x, -rd * a, 0.0],
                [-0.5 * delta * x, 0.0, -delta]]

    return rhs, jac


def _plane_system(p: Params):
    rd = p.rho * p.delta

    def rhs(t, s):
        y, z = s
        return (-rd * p.a * y, p.delta * (p.k - z))

    def jac(t, s):
        return [[-rd * p.a, 0.0], [0.0, -p.delta]]

    return rhs, jac


def integrate(p: Params, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the full system over [0, t_end].

    Output samples are the adaptive solver steps, subdivided through the
    dense interpolant until consecutive samples differ in x by at most 5%
    of the trajectory's x-range, then thinned by ``sample_stride``.

    Raises
    ------
    IntegrationError
        On step-size underflow (the time reached is attached) or if the
        solution leaves the finite range.
    """
    x0, y0, z0 = cfg.initial_state
    if not all(math.isfinite(v) for v in cfg.initial_state):
        raise DomainError("initial state must be finite")
    method = _METHODS[cfg.method]

    if x0 == 0.0:
        rhs, jac = _plane_system(p)
        kwargs = {} if method == "RK45" else {"jac": jac}
        sol = solve_ivp(rhs, (0.0, cfg.t_end), (y0, z0), method=method,
                        rtol=cfg.rel_tol, atol=cfg.abs_tol,
                        max_step=cfg.max_step, dense_output=True, **kwargs)
        _check_solution(sol)

        def interp(t, _sol=sol.sol):
            yz = _sol(t)
            return (0.0, float(yz[0]), float(yz[1]))

        t = sol.t
        traj = Trajectory(params=p, t=t, x=np.zeros_like(t),
                          y=sol.y[0], z=sol.y[1], _interp=interp)
        return _thin(traj, cfg.sample_stride)

    sign = -1.0 if x0 < 0.0 else 1.0
    rhs, jac = _log_system(p, sign)
    kwargs = {} if method == "RK45" else {"jac": jac}
    # Absolute tolerance on L is a relative tolerance on x, so it is tied
    # to rel_tol rather than to abs_tol (which keeps its meaning for y, z).
    atol = [max(cfg.rel_tol, 1e-12), cfg.abs_tol, cfg.abs_tol]
    sol = solve_ivp(rhs, (0.0, cfg.t_end), (math.log(abs(x0)), y0, z0),
                    method=method, rtol=cfg.rel_tol, atol=atol,
                    max_step=cfg.max_step, dense_output=True, **kwargs)
    _check_solution(sol)

    def interp(t, _sol=sol.sol, _sign=sign):
        L, y, z = _sol(t)
        x = _sign * math.exp(L) if L > _LOG_UNDERFLOW else 0.0
        return (x + 0.0, float(y), float(z))

    t, samples = _refined_samples(sol, sign)
    traj = Trajectory(params=p, t=t, x=samples[0], y=samples[1],
                      z=samples[2], _interp=interp)
    return _thin(traj, cfg.sample_stride)


def _check_solution(sol):
    if sol.status != 0:
        t_reached = float(sol.t[-1]) if len(sol.t) else 0.0
        raise IntegrationError(f"integration stopped early: {sol.message}",
                               t_reached=t_reached)
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError("non-finite state encountered",
                               t_reached=float(sol.t[-1]))


def _x_of_L(L, sign):
    with np.errstate(under="ignore"):
        x = sign * np.exp(np.maximum(L, _LOG_UNDERFLOW))
    x[L <= _LOG_UNDERFLOW] = 0.0
    return x + 0.0


def _refined_samples(sol, sign):
    t = sol.t
    x = _x_of_L(sol.y[0], sign)
    x_range = float(x.max() - x.min())
    thresh = max(0.05 * x_range, 1e-9)

    out_t = [t[0]]
    out_s = [(x[0], sol.y[1][0], sol.y[2][0])]

    def emit(t0, s0, t1, s1, depth):
        if abs(s1[0] - s0[0]) <= thresh or depth >= 14 or t1 - t0 < 1e-12:
            out_t.append(t1)
            out_s.append(s1)
            return
        tm = 0.5 * (t0 + t1)
        Lm, ym, zm = sol.sol(tm)
        xm = sign * math.exp(Lm) if Lm > _LOG_UNDERFLOW else 0.0
        sm = (xm + 0.0, ym, zm)
        emit(t0, s0, tm, sm, depth + 1)
        emit(tm, sm, t1, s1, depth + 1)

    for i in range(1, len(t)):
        s1 = (x[i], sol.y[1][i], sol.y[2][i])
        emit(out_t[-1], out_s[-1], t[i], s1, 0)

    arr = np.array(out_s)
    return np.array(out_t), (arr[:, 0], arr[:, 1], arr[:, 2])


def _thin(traj: Trajectory, stride: int) -> Trajectory:
    if stride <= 1 or len(traj.t) <= 2:
        return traj
    idx = np.arange(0, len(traj.t), stride)
    if idx[-1] != len(traj.t) - 1:
        idx = np.append(idx, len(traj.t) - 1)
    return replace(traj, t=traj.t[idx], x=traj.x[idx], y=traj.y[idx],
                   z=traj.z[idx])


def detect_events(traj: Trajectory, c: float | None = None,
                  k: float | None = None,
                  plane_eps: float = PLANE_EPS) -> list[Event]:
    """Locate geometric events along a trajectory.

    Detects crossings of the two fold planes x + z = -/+ theta, entries
    into and exits from the band |x| < plane_eps, and crossings of the
    plane's neutral curve y + c (1 - tanh z) = 0 while inside that band.
    Crossing times are refined to 1e-6 through the trajectory interpolant.
    """
    if c is None:
        c = traj.params.c
    if k is None:
        k = traj.params.k
    th = theta(c)
    t, x, y, z = traj.t, traj.x, traj.y, traj.z
    events: list[Event] = []

    def refine(fn, t0, t1):
        f0 = fn(*traj.state_at(t0))
        while t1 - t0 > _EVENT_T_TOL:
            tm = 0.5 * (t0 + t1)
            fm = fn(*traj.state_at(tm))
            if fm == 0.0:
                return tm
            if (fm < 0.0) == (f0 < 0.0):
                t0, f0 = tm, fm
            else:
                t1 = tm
        return 0.5 * (t0 + t1)

    def add_crossings(series, kind_fn, fn):
        s = np.sign(series)
        for i in np.flatnonzero(s[:-1] * s[1:] < 0.0):
            te = refine(fn, t[i], t[i + 1])
            kind = kind_fn(series[i])
            if kind is not None:
                events.append(Event(te, kind, traj.state_at(te)))

    add_crossings(x + z + th, lambda prev: "fold_minus_cross",
                  lambda xi, yi, zi: xi + zi + th)
    add_crossings(x + z - th, lambda prev: "fold_plus_cross",
                  lambda xi, yi, zi: xi + zi - th)
    add_crossings(np.abs(x) - plane_eps,
                  lambda prev: "plane_entry" if prev > 0 else "plane_exit",
                  lambda xi, yi, zi: abs(xi) - plane_eps)

    fp = y + c * (1.0 - np.tanh(z))
    s = np.sign(fp)
    near = np.abs(x) < plane_eps
    for i in np.flatnonzero(s[:-1] * s[1:] < 0.0):
        if near[i] or near[i + 1]:
            te = refine(lambda xi, yi, zi: yi + c * (1.0 - math.tanh(zi)),
                        t[i], t[i + 1])
            events.append(Event(te, "FP_cross", traj.state_at(te)))

    events.sort(key=lambda e: e.t)
    return events


def steady_state_check(traj: Trajectory, window_fraction: float = 0.2,
                       eps: float = 1e-4) -> bool:
    """True when the trailing window is flat in x and the terminal state is
    an equilibrium to within 1e-6 in the right-hand side."""
    if len(traj.t) == 0:
        raise DomainError("empty trajectory")
    t_cut = traj.t[-1] - window_fraction * (traj.t[-1] - traj.t[0])
    tail = traj.x[traj.t >= t_cut]
    if tail.size == 0:
        return False
    x_spread = float(tail.max() - tail.min())
    if x_spread >= eps * (1.0 + abs(float(tail.mean()))):
        return False
    f = rhs_full(traj.params,
                 State(float(traj.x[-1]), float(traj.y[-1]), float(traj.z[-1])))
    return math.sqrt(f[0] ** 2 + f[1] ** 2 + f[2] ** 2) < 1e-6


def discard_transient(traj: Trajectory, fallback_fraction: float = 0.3,
                      match_tol: float = 1e-3) -> Trajectory:
    """Drop the initial transient of a trajectory.

    Looks for two consecutive near-identical hits of the return map on the
    section x + z = -theta (increasing crossings); when the attractor is
    not that simple, falls back to dropping the first 30% of the time
    span.
    """
    if len(traj.t) < 3:
        return traj
    th = theta(traj.params.c)
    u = traj.x + traj.z + th
    s = np.sign(u)
    rising = np.flatnonzero((s[:-1] < 0) & (s[1:] >= 0))
    t_start = traj.t[0] + fallback_fraction * (traj.t[-1] - traj.t[0])
    prev_hit = None
    for i in rising:
        hit = (traj.y[i], traj.z[i])
        if prev_hit is not None:
            dy = abs(hit[0] - prev_hit[0])
            dz = abs(hit[1] - prev_hit[1])
            if (dy <= match_tol * (1.0 + abs(prev_hit[0]))
                    and dz <= match_tol * (1.0 + abs(prev_hit[1]))):
                t_start = traj.t[i]
                break
        prev_hit = hit
    keep = traj.t >= t_start
    if keep.sum() < 3:
        return traj
    return replace(traj, t=traj.t[keep], x=traj.x[keep], y=traj.y[keep],
                   z=traj.z[keep], events=[e for e in traj.events
                                           if e.t >= t_start])
