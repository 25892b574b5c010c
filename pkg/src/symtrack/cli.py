"""Command-line front end: ``symtrack analyze | simulate | track | selftest``.

Exit codes: 0 success, 1 input error, 2 inconclusive, 3 numerical failure,
4 self-test mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .closure import REPORT_SCHEMA, analyze_z
from .cones import ConeIndeterminate, analyze_k
from .curves import CurveError, builtin_curve, heisenberg_group, load_curve
from .dynamics import ControlSignal, GroupState, NumericalFailure, integrate, invariant_drift
from .liealg import se3
from .selftest import run_selftest
from .specfile import SpecError, bundled_specs, load_spec
from .tracking import TrackingError, frequency_sweep, track, track_kinematic

EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3, 4
TRACK_SCHEMA = "symtrack.track/1"


def _err(msg: str) -> None:
    print(f"symtrack: {msg}", file=sys.stderr)


def _floats(text: str, n: int, what: str) -> np.ndarray:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ValueError(f"{what}: expected {n} comma-separated numbers") from None
    if len(vals) != n:
        raise ValueError(f"{what}: expected {n} numbers, got {len(vals)}")
    return np.array(vals)


# ---------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    spec = load_spec(args.spec)
    sysm = spec.system
    t0 = time.perf_counter()
    rep = analyze_z(sysm, args.lmax)
    out = {"schema": REPORT_SCHEMA, "system": sysm.name, "analysis": rep.to_dict()}
    print(f"system: {sysm.name} (dim {sysm.dim}, {len(sysm.controls)} controls)")
    print(rep.summary())
    positive = rep.positive
    if args.cones:
        krep = analyze_k(sysm, args.lmax, args.samples)
        out["cone_analysis"] = krep.to_dict()
        print("cone criterion:")
        print(krep.summary())
        positive = positive or krep.positive
    out["verdict"] = rep.verdict if rep.positive or not args.cones else out["cone_analysis"]["verdict"]
    out["elapsed_s"] = time.perf_counter() - t0
    if args.json:
        Path(args.json).write_text(json.dumps(out, indent=2, default=str))
    return EXIT_OK if positive else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------- simulate

def _parse_controls(text: str | None, k: int) -> ControlSignal:
    """``None``/``zero``, constants ``a,b,c``, inline JSON or a JSON file."""
    if text is None or text.strip() in ("", "0", "zero"):
        return ControlSignal.zero(k)
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
    elif Path(stripped).exists():
        try:
            data = json.loads(Path(stripped).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{stripped}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    else:
        vals = _floats(stripped, k, "--u")
        data = {"channels": k, "terms": [{"channel": a + 1, "kind": "poly", "coeffs": [v]}
                                         for a, v in enumerate(vals) if v]}
    sig = ControlSignal.from_dict(data)
    if sig.channels != k:
        raise ValueError(f"control signal has {sig.channels} channels, system has {k}")
    return sig


def cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    sysm = spec.system
    if sysm.algebra != se3():
        raise ValueError("simulation needs a system on se3")
    k = len(sysm.controls)
    u = _parse_controls(args.u, k)
    xi0 = _floats(args.velocity, 6, "--velocity")
    s0 = GroupState.from_velocity(sysm, np.eye(3), np.zeros(3), xi0[:3], xi0[3:])
    traj = integrate(sysm, s0, u, args.t, args.dt, args.method)
    fin = traj.final
    print(f"integrated {len(traj) - 1} steps of {args.method} to t = {traj.times[-1]:g}")
    print(f"final position {np.array2string(fin.r, precision=6)}")
    if u.is_zero:
        d = invariant_drift(sysm, traj)
        print(f"relative drift: energy {d['energy']:.3e}, |P|^2 {d['P_squared']:.3e}, "
              f"Pi.P {d['Pi_dot_P']:.3e}; orthogonality residual {d['orthogonality']:.3e}")
    if args.out:
        traj.to_csv(args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- track

def _curve(text: str | None, kinematic: bool):
    if text is None:
        return builtin_curve("heisenberg_line" if kinematic else "circle")
    if Path(text).exists():
        return load_curve(text)
    return builtin_curve(text)


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def cmd_track(args) -> int:
    spec = load_spec(args.spec)
    sysm = spec.system
    kinematic = sysm.algebra != se3()
    if kinematic and sysm.algebra != heisenberg_group().algebra:
        raise ValueError("tracking needs a system on se3 or on the Heisenberg algebra")
    curve = _curve(args.curve, kinematic)
    if (curve.group.name != "se3") != kinematic:
        raise ValueError(f"curve lives on {curve.group.name}, system does not")
    eps = math.inf if args.eps is None else args.eps
    if not eps > 0:
        raise ValueError("--eps must be positive")
    rep = analyze_z(sysm)
    if not rep.positive:
        _err(f"analyzer verdict is {rep.verdict}; tracking is not certified")
        return EXIT_INCONCLUSIVE
    out = Path(args.out) if args.out else None

    if args.sweep and args.sweep > 1:
        runs = frequency_sweep(sysm, curve, args.omega, args.sweep, args.dt, args.workers, out)
    else:
        res = (track_kinematic(sysm, curve, args.omega, args.dt) if kinematic
               else track(sysm, curve, eps, args.omega, args.dt))
        if out is not None:
            res.write(out, f"run_{args.omega:g}Hz")
        runs = [res.summary()]

    errs = [r["max_error"] for r in runs]
    best = int(np.argmin(errs))
    summary = {
        "schema": TRACK_SCHEMA,
        "system": sysm.name,
        "curve": type(curve).__name__,
        "duration": curve.duration,
        "epsilon": None if math.isinf(eps) else eps,
        "frequencies": [r["omega_osc"] for r in runs],
        "max_errors": errs,
        "strictly_decreasing": _strictly_decreasing(errs),
        "best": best,
        "success": errs[best] < eps,
        "runs": runs,
    }
    print(f"{'f [Hz]':>8} {'max error':>12}")
    for r in runs:
        print(f"{r['omega_osc']:>8g} {r['max_error']:>12.5g}")
    if len(runs) > 1:
        print(f"strictly decreasing: {'yes' if summary['strictly_decreasing'] else 'no'}")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str))
        print(f"wrote {out / 'summary.json'}")
    return EXIT_OK if summary["success"] else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------- selftest

def cmd_selftest(args) -> int:
    t0 = time.perf_counter()
    rep = run_selftest()
    for m in rep.mismatches:
        print(f"MISMATCH {m}")
    print(f"{rep.checked} entries checked, {len(rep.mismatches)} mismatches "
          f"({time.perf_counter() - t0:.2f} s)")
    return EXIT_OK if rep.ok else EXIT_SELFTEST


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symtrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    specs = ", ".join(bundled_specs())

    a = sub.add_parser("analyze", help="decide trackability of a system")
    a.add_argument("spec", help=f"system file or bundled name ({specs})")
    a.add_argument("--lmax", type=int, default=3)
    a.add_argument("--cones", action="store_true", help="also run the cone criterion")
    a.add_argument("--samples", type=int, default=None, help="sphere samples per cone level")
    a.add_argument("--json", metavar="OUT", help="write the report as JSON")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="integrate the controlled dynamics")
    s.add_argument("spec")
    s.add_argument("--t", type=float, default=10.0, help="final time [s]")
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--u", default=None, help="constants 'a,b,c', inline JSON or a JSON file (default zero)")
    s.add_argument("--velocity", default="0.1,0.2,0.3,1,0,0", help="initial body velocity w1,w2,w3,v1,v2,v3")
    s.add_argument("--method", choices=("rk4_reproject", "lie_euler"), default="rk4_reproject")
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("track", help="oscillatory open-loop tracking of a reference curve")
    t.add_argument("spec")
    t.add_argument("--curve", help="builtin name or curve JSON file (default circle, or heisenberg_line)")
    t.add_argument("--eps", type=float, default=None, help="required max error (default none)")
    t.add_argument("--omega", type=float, default=1.0, help="base oscillation frequency [Hz]")
    t.add_argument("--sweep", type=int, default=0, help="number of frequencies omega, 2 omega, ...")
    t.add_argument("--dt", type=float, default=None)
    t.add_argument("--workers", type=int, default=None, help="parallel runs (default SYMTRACK_THREADS or 1)")
    t.add_argument("--out", help="output directory")
    t.set_defaults(func=cmd_track)

    st = sub.add_parser("selftest", help="check the se(3) tables in exact arithmetic")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except ConeIndeterminate as exc:
        _err(f"cone solver gave no answer: {exc}")
        return EXIT_INCONCLUSIVE
    except TrackingError as exc:
        _err(str(exc))
        return EXIT_INCONCLUSIVE if exc.stage == "analysis" else EXIT_INPUT
    except (SpecError, CurveError, ValueError, OSError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
