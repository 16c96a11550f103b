"""Qualitative classification of simulated trajectories.

A trajectory is summarised by the sizes and positions of its
oscillations: excursions spanning at least half of the attractor's
x-range count as large-amplitude oscillations (LAOs), smaller ones above
the noise floor as small-amplitude oscillations (SAOs), and maximal
intervals spent within |x| < 1e-3 for at least half an intermediate time
unit count as plateaus.  The LAO/SAO alternation is run-length encoded
into a mixed-mode signature, and SAO clusters are located in the upper or
lower third of the attractor's x-range.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import EnsoError, IndeterminateClassification, PreconditionError
from .model import Params
from .regimes import default_jobs
from .simulate import (IntegratorConfig, Trajectory, discard_transient,
                       integrate, steady_state_check)

__all__ = [
    "ClassifyThresholds",
    "TrajectoryClass",
    "SweepEntry",
    "extract_extrema",
    "detect_plateaus",
    "classify_trajectory",
    "sweep_a",
    "onset_bisection",
]


@dataclass(frozen=True)
class ClassifyThresholds:
    """Tunable split points of the classifier.

    lao_fraction is the peak-to-trough span, as a fraction of the
    attractor x-range, above which an oscillation counts as large; the
    noise floor is the same fraction below which extrema are ignored.
    SAO clusters in the middle third of the x-range have no meaningful
    side and are reported as indeterminate.
    """

    lao_fraction: float = 0.5
    noise_fraction: float = 1e-4
    plane_eps: float = 1e-3
    location_thirds: float = 1.0 / 3.0


@dataclass(frozen=True)
class TrajectoryClass:
    pattern: str                       # steady_state | relaxation | mmo
    has_plateaus: bool
    sao_location: str                  # above | below | none
    signature: tuple[tuple[int, int], ...]
    x_range: tuple[float, float]
    period_estimate: float | None

    def as_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "has_plateaus": self.has_plateaus,
            "sao_location": self.sao_location,
            "signature": [list(e) for e in self.signature],
            "x_range": list(self.x_range),
            "period_estimate": self.period_estimate,
        }


def extract_extrema(t: np.ndarray, x: np.ndarray,
                    noise_floor: float | None = None) -> list[tuple[float, float, int]]:
    """Alternating local extrema of a series, ignoring features whose
    prominence is below the noise floor (default 1e-4 of the global
    range).  Returns (time, value, kind) triples with kind +1 for maxima
    and -1 for minima."""
    if len(x) < 3:
        raise PreconditionError("need at least 3 samples")
    rng = float(np.max(x) - np.min(x))
    if rng == 0.0:
        return []
    if noise_floor is None:
        noise_floor = 1e-4 * rng
    imax, _ = find_peaks(x, prominence=noise_floor)
    imin, _ = find_peaks(-x, prominence=noise_floor)
    merged = sorted([(i, 1) for i in imax] + [(i, -1) for i in imin])
    out: list[tuple[float, float, int]] = []
    for i, kind in merged:
        if out and out[-1][2] == kind:
            # keep the more extreme of two same-kind neighbours
            if kind * x[i] > kind * out[-1][1]:
                out[-1] = (float(t[i]), float(x[i]), kind)
            continue
        out.append((float(t[i]), float(x[i]), kind))
    return out


def detect_plateaus(traj: Trajectory, eps_x: float = 1e-3,
                    min_duration: float | None = None) -> list[tuple[float, float]]:
    """Maximal intervals with |x| < eps_x lasting at least min_duration
    (default half an intermediate time unit, 0.5/delta)."""
    if min_duration is None:
        min_duration = 0.5 / traj.params.delta
    inside = np.abs(traj.x) < eps_x
    out = []
    start = None
    for i in range(len(traj.t)):
        if inside[i] and start is None:
            start = traj.t[i]
        elif not inside[i] and start is not None:
            if traj.t[i - 1] - start >= min_duration:
                out.append((float(start), float(traj.t[i - 1])))
            start = None
    if start is not None and traj.t[-1] - start >= min_duration:
        out.append((float(start), float(traj.t[-1])))
    return out


def _peak_classes(t, x, thresholds):
    """LAO/SAO tagging of the local maxima by their span to the
    neighbouring minima."""
    ext = extract_extrema(t, x,
                          noise_floor=thresholds.noise_fraction
                          * float(np.max(x) - np.min(x)))
    rng = float(np.max(x) - np.min(x))
    peaks = []
    for j, (tj, xj, kind) in enumerate(ext):
        if kind != 1:
            continue
        spans = []
        if j > 0:
            spans.append(abs(xj - ext[j - 1][1]))
        if j + 1 < len(ext):
            spans.append(abs(xj - ext[j + 1][1]))
        if not spans:
            continue
        span = max(spans)
        peaks.append((tj, xj, span >= thresholds.lao_fraction * rng))
    return peaks, rng


def _signature(peaks) -> tuple[tuple[int, int], ...]:
    """Run-length encode the LAO/SAO peak sequence into epochs of
    (LAO count, following SAO count); an incomplete leading SAO run is
    dropped and exact repetitions are collapsed to one period."""
    kinds = [is_lao for (_, _, is_lao) in peaks]
    while kinds and not kinds[0]:
        kinds.pop(0)
    epochs: list[tuple[int, int]] = []
    i = 0
    while i < len(kinds):
        n_lao = 0
        while i < len(kinds) and kinds[i]:
            n_lao += 1
            i += 1
        n_sao = 0
        while i < len(kinds) and not kinds[i]:
            n_sao += 1
            i += 1
        epochs.append((n_lao, n_sao))
    if not epochs:
        return ()
    if len(epochs) == 1 and epochs[0][1] == 0:
        return ((1, 0),)
    for period in range(1, len(epochs) // 2 + 1):
        if len(epochs) % period == 0:
            unit = epochs[:period]
            if all(epochs[j:j + period] == unit
                   for j in range(0, len(epochs), period)):
                return tuple(unit)
    return tuple(epochs)


def _window_stats(traj, t0, t1, thresholds):
    mask = (traj.t >= t0) & (traj.t <= t1)
    t, x = traj.t[mask], traj.x[mask]
    if len(t) < 3:
        raise IndeterminateClassification("window too short to classify")
    peaks, rng = _peak_classes(t, x, thresholds)
    saos = [xj for (_, xj, is_lao) in peaks if not is_lao]
    loc = "none"
    if saos:
        frac = (float(np.mean(saos)) - float(np.min(x))) / rng
        if frac >= 1.0 - thresholds.location_thirds:
            loc = "above"
        elif frac <= thresholds.location_thirds:
            loc = "below"
        else:
            raise IndeterminateClassification(
                f"SAO cluster sits mid-range (fraction {frac:.2f})")
    return {
        "n_lao": sum(1 for p in peaks if p[2]),
        "n_sao": len(saos),
        "sao_location": loc,
        "x_range": (float(np.min(x)), float(np.max(x))),
    }


def classify_trajectory(traj: Trajectory,
                        thresholds: ClassifyThresholds = ClassifyThresholds()
                        ) -> TrajectoryClass:
    """Classify a transient-free trajectory.

    Raises
    ------
    IndeterminateClassification
        When the two halves of the trajectory disagree on the coarse
        statistics (the attractor has not stabilised), or when SAO
        clusters sit in the middle of the x-range.
    """
    if len(traj.t) < 3:
        raise PreconditionError("need at least 3 samples")
    x_range = (float(traj.x.min()), float(traj.x.max()))

    if steady_state_check(traj):
        return TrajectoryClass(pattern="steady_state", has_plateaus=False,
                               sao_location="none", signature=(),
                               x_range=x_range, period_estimate=None)

    t0, t1 = float(traj.t[0]), float(traj.t[-1])
    tm = 0.5 * (t0 + t1)
    first = _window_stats(traj, t0, tm, thresholds)
    second = _window_stats(traj, tm, t1, thresholds)
    span0 = first["x_range"][1] - first["x_range"][0]
    span1 = second["x_range"][1] - second["x_range"][0]
    if first["sao_location"] != second["sao_location"]:
        raise IndeterminateClassification(
            f"SAO location differs between windows: "
            f"{first['sao_location']} vs {second['sao_location']}")
    if (first["n_sao"] > 0) != (second["n_sao"] > 0):
        raise IndeterminateClassification(
            "SAO presence differs between the two halves")
    if max(span0, span1) > 0 and abs(span0 - span1) > 0.1 * max(span0, span1):
        raise IndeterminateClassification(
            f"x-range differs between windows: {span0:.3g} vs {span1:.3g}")

    peaks, _rng = _peak_classes(traj.t, traj.x, thresholds)
    lao_times = [tj for (tj, _, is_lao) in peaks if is_lao]
    n_sao = sum(1 for p in peaks if not p[2])
    pattern = "mmo" if n_sao > 0 else "relaxation"
    plateaus = detect_plateaus(traj, eps_x=thresholds.plane_eps)
    period = (float(np.mean(np.diff(lao_times)))
              if len(lao_times) >= 2 else None)
    sao_location = first["sao_location"] if n_sao > 0 else "none"

    return TrajectoryClass(
        pattern=pattern,
        has_plateaus=len(plateaus) > 0,
        sao_location=sao_location,
        signature=_signature(peaks),
        x_range=x_range,
        period_estimate=period,
    )


@dataclass(frozen=True)
class SweepEntry:
    a: float
    result: TrajectoryClass | None
    error: str | None = None


def _sweep_worker(args) -> SweepEntry:
    c, k, a, delta, rho, cfg = args
    try:
        p = Params(c=c, k=k, a=a, delta=delta, rho=rho)
        traj = discard_transient(integrate(p, cfg))
        return SweepEntry(a=a, result=classify_trajectory(traj))
    except EnsoError as exc:
        return SweepEntry(a=a, result=None, error=f"{type(exc).__name__}: {exc}")


def sweep_a(c: float, k: float, a_grid, cfg: IntegratorConfig = IntegratorConfig(),
            delta: float = 0.01, rho: float = 0.01,
            n_jobs: int | None = None) -> list[SweepEntry]:
    """Independent simulations over a grid of damping values.

    Entries are integrated and classified in parallel; the output order is
    the grid order and per-entry failures are recorded inline.
    """
    tasks = [(c, k, float(a), delta, rho, cfg) for a in a_grid]
    if not tasks:
        return []
    jobs = default_jobs() if n_jobs is None else max(1, n_jobs)
    if jobs == 1 or len(tasks) == 1:
        return [_sweep_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_worker, tasks))


def onset_bisection(c: float, k: float, a_lo: float, a_hi: float,
                    cfg: IntegratorConfig = IntegratorConfig(),
                    delta: float = 0.01, rho: float = 0.01,
                    a_tol: float = 1e-2) -> float:
    """Bisect the damping value separating steady from oscillatory
    behaviour, to within a_tol.

    The two bracket ends must classify differently under
    ``steady_state_check``.
    """
    def is_steady(a):
        p = Params(c=c, k=k, a=a, delta=delta, rho=rho)
        return steady_state_check(integrate(p, cfg))

    lo_steady = is_steady(a_lo)
    hi_steady = is_steady(a_hi)
    if lo_steady == hi_steady:
        raise PreconditionError(
            f"same class at both ends of [{a_lo}, {a_hi}]: "
            f"steady={lo_steady}")
    while a_hi - a_lo > a_tol:
        mid = 0.5 * (a_lo + a_hi)
        if is_steady(mid) == lo_steady:
            a_lo = mid
        else:
            a_hi = mid
    return 0.5 * (a_lo + a_hi)
