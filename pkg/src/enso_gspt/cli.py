"""Command-line interface.

Subcommands cover the closed-form geometry (``geometry``, ``thresholds``),
the parameter-regime classification (``classify-regime``, ``regime-map``),
trajectory work (``simulate``, ``classify-trajectory``, ``sweep-a``), the
delayed-exit solver (``wayout``) and the intermediate fibres (``fibre``).

All numeric file output is deterministic: 17 significant digits, '.'
decimal separator, '\\n' line endings, and parallel work is gathered in
input order.  A JSON config file can pre-set any flag of a subcommand;
explicit flags win over the file, and the effective configuration is
echoed to ``<out>.config.json`` next to each output file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, geometry, regimes, simulate, slowfast
from .errors import EnsoError
from .model import Params

__all__ = ["run", "main"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _json_out(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _parse_range(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"range must be lo:hi:n, got {spec!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise argparse.ArgumentTypeError("range count must be >= 1")
    return np.linspace(lo, hi, n)


def _parse_ic(spec: str) -> tuple[float, float, float]:
    parts = spec.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"ic must be x,y,z, got {spec!r}")
    return (float(parts[0]), float(parts[1]), float(parts[2]))


# Defaults per subcommand; a config file may override any of them, and
# explicitly passed flags override the file.
_DEFAULTS: dict[str, dict] = {
    "geometry": {"c": None, "k": None, "x_min": -4.0, "x_max": 0.0, "nx": 41,
                 "z_min": 0.0, "z_max": 2.0, "nz": 41, "out": None},
    "classify-regime": {"c": None, "k": None},
    "regime-map": {"c_range": None, "k_range": None, "out": None},
    "thresholds": {"c": None, "k": None},
    "simulate": {"c": None, "k": None, "a": None, "delta": 0.01, "rho": 0.01,
                 "t_end": 1e5, "ic": (-1.0, -1.0, 0.5), "rel_tol": 1e-8,
                 "abs_tol": 1e-10, "max_step": 10.0,
                 "method": "implicit_adaptive", "stride": 1, "out": None},
    "classify-trajectory": {"infile": None, "c": None, "k": None, "a": None,
                            "delta": None, "rho": None,
                            "transient_fraction": 0.3},
    "sweep-a": {"c": None, "k": None, "a_grid": None, "delta": 0.01,
                "rho": 0.01, "t_end": 1e5, "out": None},
    "wayout": {"c": None, "k": None, "a": None, "rho": None,
               "y_in": None, "z_in": None},
    "fibre": {"c": None, "x0": None, "z0": None, "x_min": None,
              "x_max": None, "n": 101, "out": None},
}

_REQUIRED: dict[str, tuple[str, ...]] = {
    "geometry": ("c", "k", "out"),
    "classify-regime": ("c", "k"),
    "regime-map": ("c_range", "k_range", "out"),
    "thresholds": ("c", "k"),
    "simulate": ("c", "k", "a", "out"),
    "classify-trajectory": ("infile",),
    "sweep-a": ("c", "k", "a_grid", "out"),
    "wayout": ("c", "k", "a", "rho", "y_in", "z_in"),
    "fibre": ("c", "x0", "z0", "x_min", "x_max"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="enso-gspt",
        description="Three-timescale ENSO model toolkit: singular geometry, "
                    "regime classification, stiff simulation and trajectory "
                    "classification.")
    p.add_argument("--config", help="JSON file pre-setting subcommand flags")
    p.add_argument("--threads", type=int,
                   help="parallelism degree (default: ENSO_GSPT_THREADS "
                        "or machine cores)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry", help="emit manifold meshes as CSV")
    g.add_argument("--c", type=float)
    g.add_argument("--k", type=float)
    g.add_argument("--x-min", dest="x_min", type=float)
    g.add_argument("--x-max", dest="x_max", type=float)
    g.add_argument("--nx", type=int)
    g.add_argument("--z-min", dest="z_min", type=float)
    g.add_argument("--z-max", dest="z_max", type=float)
    g.add_argument("--nz", type=int)
    g.add_argument("--out")

    cr = sub.add_parser("classify-regime",
                        help="classify one (c, k) pair as JSON")
    cr.add_argument("--c", type=float)
    cr.add_argument("--k", type=float)

    rm = sub.add_parser("regime-map", help="classify a (c, k) grid to CSV")
    rm.add_argument("--c-range", dest="c_range", type=_parse_range,
                    metavar="LO:HI:N")
    rm.add_argument("--k-range", dest="k_range", type=_parse_range,
                    metavar="LO:HI:N")
    rm.add_argument("--out")

    th = sub.add_parser("thresholds",
                        help="damping thresholds for one (c, k) as JSON")
    th.add_argument("--c", type=float)
    th.add_argument("--k", type=float)

    si = sub.add_parser("simulate", help="integrate the full system to CSV")
    si.add_argument("--c", type=float)
    si.add_argument("--k", type=float)
    si.add_argument("--a", type=float)
    si.add_argument("--delta", type=float)
    si.add_argument("--rho", type=float)
    si.add_argument("--t-end", dest="t_end", type=float)
    si.add_argument("--ic", type=_parse_ic, metavar="X,Y,Z")
    si.add_argument("--rel-tol", dest="rel_tol", type=float)
    si.add_argument("--abs-tol", dest="abs_tol", type=float)
    si.add_argument("--max-step", dest="max_step", type=float)
    si.add_argument("--method",
                    choices=["implicit_adaptive", "explicit_adaptive"])
    si.add_argument("--stride", type=int)
    si.add_argument("--out")

    ct = sub.add_parser("classify-trajectory",
                        help="classify a trajectory CSV as JSON")
    ct.add_argument("--in", dest="infile")
    ct.add_argument("--c", type=float)
    ct.add_argument("--k", type=float)
    ct.add_argument("--a", type=float)
    ct.add_argument("--delta", type=float)
    ct.add_argument("--rho", type=float)
    ct.add_argument("--transient-fraction", dest="transient_fraction",
                    type=float)

    sw = sub.add_parser("sweep-a",
                        help="classify simulations over a damping grid")
    sw.add_argument("--c", type=float)
    sw.add_argument("--k", type=float)
    sw.add_argument("--a-grid", dest="a_grid", type=_parse_range,
                    metavar="LO:HI:N")
    sw.add_argument("--delta", type=float)
    sw.add_argument("--rho", type=float)
    sw.add_argument("--t-end", dest="t_end", type=float)
    sw.add_argument("--out")

    wo = sub.add_parser("wayout", help="delayed exit height as JSON")
    wo.add_argument("--c", type=float)
    wo.add_argument("--k", type=float)
    wo.add_argument("--a", type=float)
    wo.add_argument("--rho", type=float)
    wo.add_argument("--y-in", dest="y_in", type=float)
    wo.add_argument("--z-in", dest="z_in", type=float)

    fi = sub.add_parser("fibre",
                        help="intermediate fibre through (x0, z0) as CSV")
    fi.add_argument("--c", type=float)
    fi.add_argument("--x0", type=float)
    fi.add_argument("--z0", type=float)
    fi.add_argument("--x-min", dest="x_min", type=float)
    fi.add_argument("--x-max", dest="x_max", type=float)
    fi.add_argument("--n", type=int)
    fi.add_argument("--out")

    return p


def _load_config(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        return {}
    return json.loads(text)


def _effective(args: argparse.Namespace, config: dict) -> dict:
    cmd = args.command
    eff = dict(_DEFAULTS[cmd])
    section = config.get(cmd, config) if config else {}
    for key, val in section.items():
        norm = key.replace("-", "_")
        if norm in eff:
            eff[norm] = val
        elif key not in _DEFAULTS:
            print(f"warning: unknown config key {key!r} ignored",
                  file=sys.stderr)
    for key in eff:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            eff[key] = cli_val
    missing = [k for k in _REQUIRED[cmd] if eff.get(k) is None]
    if missing:
        raise UsageError(f"{cmd}: missing required value(s): "
                         + ", ".join(sorted(missing)))
    return eff


class UsageError(Exception):
    pass


def _echo_config(eff: dict, out_path: str) -> None:
    clean = {}
    for key, val in eff.items():
        if isinstance(val, np.ndarray):
            clean[key] = [float(v) for v in val]
        elif isinstance(val, tuple):
            clean[key] = list(val)
        else:
            clean[key] = val
    with open(str(out_path) + ".config.json", "w", newline="") as fh:
        fh.write(_json_out(clean) + "\n")


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _cmd_geometry(eff, threads):
    rows = geometry.manifold_mesh(
        eff["c"], eff["k"],
        x_range=(eff["x_min"], eff["x_max"], eff["nx"]),
        z_range=(eff["z_min"], eff["z_max"], eff["nz"]))
    _write_csv(eff["out"], "set,x,y,z", rows)
    _echo_config(eff, eff["out"])
    return 0


def _cmd_classify_regime(eff, threads):
    report = regimes.classify_regions(eff["c"], eff["k"])
    print(_json_out(report.as_dict()))
    return 0


def _cmd_regime_map(eff, threads):
    reports = regimes.regime_map(eff["c_range"], eff["k_range"],
                                 n_jobs=threads)
    rows = []
    for r in reports:
        d = r.as_dict()
        rows.append([d[col] if col in d else d[col]
                     for col in regimes.REGIME_MAP_COLUMNS])
    _write_csv(eff["out"], ",".join(regimes.REGIME_MAP_COLUMNS), rows)
    _echo_config(eff, eff["out"])
    return 0


def _cmd_thresholds(eff, threads):
    c, k = eff["c"], eff["k"]
    dm, dp = regimes.d_mp(c, k)
    am, ap = regimes.a_mp(c, k)
    report = regimes.classify_regions(c, k)
    print(_json_out({
        "c": c, "k": k, "theta": geometry.theta(c),
        "d_minus": dm, "d_plus": dp,
        "a_minus": am, "a_plus": ap, "a_p": report.a_p,
        "V": report.V_label,
    }))
    return 0


def _cmd_simulate(eff, threads):
    p = Params(c=eff["c"], k=eff["k"], a=eff["a"],
               delta=eff["delta"], rho=eff["rho"])
    cfg = simulate.IntegratorConfig(
        rel_tol=eff["rel_tol"], abs_tol=eff["abs_tol"],
        max_step=eff["max_step"], t_end=eff["t_end"],
        initial_state=tuple(eff["ic"]), method=eff["method"],
        sample_stride=eff["stride"])
    traj = simulate.integrate(p, cfg)
    traj.events = simulate.detect_events(traj)
    traj.to_csv(eff["out"])
    events_path = _sidecar(eff["out"], ".events.csv")
    _write_csv(events_path, "t,kind,x,y,z",
               ((e.t, e.kind, e.state[0], e.state[1], e.state[2])
                for e in traj.events))
    _echo_config(eff, eff["out"])
    return 0


def _sidecar(out_path: str, suffix: str) -> str:
    base = str(out_path)
    if base.endswith(".csv"):
        return base[:-4] + suffix
    return base + suffix


def _cmd_classify_trajectory(eff, threads):
    params = _trajectory_params(eff)
    traj = simulate.Trajectory.from_csv(eff["infile"], params)
    traj = simulate.discard_transient(
        traj, fallback_fraction=eff["transient_fraction"])
    result = analysis.classify_trajectory(traj)
    print(_json_out(result.as_dict()))
    return 0


def _trajectory_params(eff) -> Params:
    fields = {k: eff[k] for k in ("c", "k", "a", "delta", "rho")}
    if any(v is None for v in fields.values()):
        sidecar = str(eff["infile"]) + ".config.json"
        if not os.path.exists(sidecar):
            raise UsageError(
                "classify-trajectory: pass --c --k --a --delta --rho or "
                f"provide the sidecar {sidecar}")
        with open(sidecar) as fh:
            stored = json.load(fh)
        for key, val in fields.items():
            if val is None:
                fields[key] = stored[key]
    return Params(**fields)


def _cmd_sweep_a(eff, threads):
    entries = analysis.sweep_a(
        eff["c"], eff["k"], eff["a_grid"],
        cfg=simulate.IntegratorConfig(t_end=eff["t_end"]),
        delta=eff["delta"], rho=eff["rho"], n_jobs=threads)
    rows = []
    for e in entries:
        if e.result is None:
            rows.append([e.a, f"error({e.error})", "", "", "", "", "", ""])
            continue
        r = e.result
        sig = ";".join(f"{L}^{s}" for L, s in r.signature)
        rows.append([e.a, r.pattern, r.has_plateaus, r.sao_location, sig,
                     r.x_range[0], r.x_range[1], r.period_estimate])
    _write_csv(eff["out"],
               "a,pattern,plateaus,sao_location,signature,x_min,x_max,period",
               rows)
    _echo_config(eff, eff["out"])
    return 0


def _cmd_wayout(eff, threads):
    exit_point = slowfast.solve_exit_point(
        eff["c"], eff["k"], eff["a"], eff["rho"], eff["y_in"], eff["z_in"])
    print(_json_out({"z_out": exit_point.z_out,
                     "w_residual": exit_point.w_residual}))
    return 0


def _cmd_fibre(eff, threads):
    xs = np.linspace(eff["x_min"], eff["x_max"], eff["n"])
    rows = [(x, slowfast.fibre_zeta(eff["c"], float(x), eff["x0"], eff["z0"]))
            for x in xs]
    if eff["out"]:
        _write_csv(eff["out"], "x,z", rows)
        _echo_config(eff, eff["out"])
    else:
        print("x,z")
        for row in rows:
            print(",".join(_fmt(v) for v in row))
    return 0


_COMMANDS = {
    "geometry": _cmd_geometry,
    "classify-regime": _cmd_classify_regime,
    "regime-map": _cmd_regime_map,
    "thresholds": _cmd_thresholds,
    "simulate": _cmd_simulate,
    "classify-trajectory": _cmd_classify_trajectory,
    "sweep-a": _cmd_sweep_a,
    "wayout": _cmd_wayout,
    "fibre": _cmd_fibre,
}


def run(argv) -> int:
    """Parse arguments and dispatch; returns the process exit code
    (0 success, 1 domain error, 2 usage or config error)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    config = {}
    if args.config:
        try:
            config = _load_config(args.config)
        except json.JSONDecodeError as exc:
            print(f"error: config parse failure at line {exc.lineno}, "
                  f"column {exc.colno}: {exc.msg}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2

    threads = args.threads
    if threads is None:
        env = os.environ.get("ENSO_GSPT_THREADS")
        threads = int(env) if env else None

    try:
        eff = _effective(args, config)
        return _COMMANDS[args.command](eff, threads)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EnsoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
