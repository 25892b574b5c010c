"""Reference curves on matrix Lie groups.

A curve exposes its duration, its group elements ``matrix(ts)`` and its body
velocity ``body_velocity(ts) = vee(g^{-1} g')``, both vectorized over time.
SE(3) elements are 4x4 homogeneous matrices ``[[A, r], [0, 1]]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm
from scipy.spatial.transform import Rotation, RotationSpline

from .liealg import LieAlgebra, hat, heisenberg, se3

__all__ = [
    "MatrixGroup",
    "se3_group",
    "heisenberg_group",
    "CurveError",
    "ReferenceCurve",
    "ExpCurve",
    "LineCurve",
    "CircleCurve",
    "HelixCurve",
    "AttitudeSlew",
    "WaypointCurve",
    "PiecewiseCurve",
    "builtin_curve",
    "curve_from_dict",
    "load_curve",
    "BUILTIN_CURVES",
    "JOINT_TOL",
]

JOINT_TOL = 1e-6


class CurveError(ValueError):
    """Malformed curve description or a continuity violation."""


@dataclass
class MatrixGroup:
    """Matrix realization of a Lie algebra: ``basis[i]`` represents ``e_i``."""

    algebra: LieAlgebra
    basis: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=float)
        n, N, _ = self.basis.shape
        if n != self.algebra.dim:
            raise ValueError("one basis matrix per algebra direction is required")
        self._flat_pinv = np.linalg.pinv(self.basis.reshape(n, N * N).T)

    @property
    def size(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def hat(self, xi) -> np.ndarray:
        """Algebra vector(s) to matrices; works on ``(..., n)`` arrays."""
        return np.tensordot(np.asarray(xi, dtype=float), self.basis, axes=(-1, 0))

    def vee(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        flat = X.reshape(X.shape[:-2] + (self.size * self.size,))
        return flat @ self._flat_pinv.T

    def exp(self, xi) -> np.ndarray:
        return expm(self.hat(xi))

    def identity(self) -> np.ndarray:
        return np.eye(self.size)

    def project(self, g: np.ndarray) -> np.ndarray:
        """Pull a perturbed element back onto the group (SE(3) only needs it)."""
        if self.name == "se3":
            from .dynamics import polar

            g = g.copy()
            g[:3, :3] = polar(g[:3, :3])
            g[3] = (0, 0, 0, 1)
        return g

    def distance(self, g1: np.ndarray, g2: np.ndarray) -> float:
        """Configuration distance: the SE(3) metric, Frobenius norm otherwise."""
        if self.name == "se3":
            from .dynamics import se3_distance

            return se3_distance((g1[:3, :3], g1[:3, 3]), (g2[:3, :3], g2[:3, 3]))
        return float(np.linalg.norm(g1 - g2))


def se3_group() -> MatrixGroup:
    basis = np.zeros((6, 4, 4))
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        basis[i, :3, :3] = hat(e)
        basis[3 + i, i, 3] = 1.0
    return MatrixGroup(se3(), basis, "se3")


def heisenberg_group() -> MatrixGroup:
    basis = np.zeros((3, 3, 3))
    basis[0, 0, 1] = 1.0
    basis[1, 1, 2] = 1.0
    basis[2, 0, 2] = 1.0
    return MatrixGroup(heisenberg(), basis, "heisenberg")


def _se3_matrix(A, r) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    r = np.asarray(r, dtype=float)
    lead = A.shape[:-2]
    g = np.zeros(lead + (4, 4))
    g[..., :3, :3] = A
    g[..., :3, 3] = r
    g[..., 3, 3] = 1.0
    return g


def _se3_velocity(A, omega_world, rdot) -> np.ndarray:
    """Body velocity from world-frame angular rate and position rate."""
    At = np.swapaxes(A, -1, -2)
    w = np.einsum("...ij,...j->...i", At, omega_world)
    v = np.einsum("...ij,...j->...i", At, rdot)
    return np.concatenate([w, v], axis=-1)


def _derivative(fn, ts: np.ndarray, duration: float, h: float) -> np.ndarray:
    """Second-order finite difference of ``fn`` on ``[0, duration]``.

    Central where the stencil fits, three-point one-sided at the ends.
    """
    h = min(h, duration / 4)
    fwd = ts - h < 0
    bwd = ts + h > duration
    mid = ~(fwd | bwd)
    out = None
    for sel, offsets, weights in ((mid, (-1, 1), (-0.5, 0.5)),
                                  (fwd, (0, 1, 2), (-1.5, 2.0, -0.5)),
                                  (bwd, (0, -1, -2), (1.5, -2.0, 0.5))):
        if not np.any(sel):
            continue
        t = ts[sel]
        val = sum(w * fn(np.clip(t + o * h, 0, duration)) for o, w in zip(offsets, weights)) / h
        if out is None:
            out = np.zeros((len(ts),) + val.shape[1:])
        out[sel] = val
    return out


def _attitude_velocity(attitude, ts, duration):
    """Body angular velocity ``vee(A^T A')`` of an attitude function."""
    A = attitude(ts)
    dA = _derivative(attitude, ts, duration, 1e-5 * max(1.0, duration))
    S = np.einsum("nji,njk->nik", A, dA)
    w = 0.5 * np.stack([S[:, 2, 1] - S[:, 1, 2], S[:, 0, 2] - S[:, 2, 0], S[:, 1, 0] - S[:, 0, 1]], axis=1)
    return A, w


@dataclass
class ReferenceCurve:
    """Base class; subclasses implement :meth:`matrix` and :meth:`body_velocity`."""

    duration: float
    group: MatrixGroup = field(default_factory=se3_group, repr=False)

    def _check_times(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if np.any(ts < -1e-12) or np.any(ts > self.duration + 1e-12):
            raise CurveError(f"time outside [0, {self.duration}]")
        return np.clip(ts, 0.0, self.duration)

    def matrix(self, ts) -> np.ndarray:
        raise NotImplementedError

    def body_velocity(self, ts) -> np.ndarray:
        raise NotImplementedError

    def at(self, t: float) -> np.ndarray:
        return self.matrix(np.array([t]))[0]

    def config(self, t: float):
        """``(A, r)`` at time ``t`` (SE(3) curves)."""
        g = self.at(t)
        return g[:3, :3], g[:3, 3]

    def body_acceleration(self, ts, h: float | None = None) -> np.ndarray:
        ts = self._check_times(ts)
        h = 1e-5 * max(1.0, self.duration) if h is None else h
        return _derivative(self.body_velocity, ts, self.duration, h)


@dataclass
class ExpCurve(ReferenceCurve):
    """``g0 exp(t xi)``: constant body velocity ``xi``."""

    xi: np.ndarray = None
    g0: np.ndarray = None

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.g0 = self.group.identity() if self.g0 is None else np.asarray(self.g0, dtype=float)

    def matrix(self, ts):
        ts = self._check_times(ts)
        return np.array([self.g0 @ self.group.exp(t * self.xi) for t in ts])

    def body_velocity(self, ts):
        ts = self._check_times(ts)
        return np.tile(self.xi, (len(ts), 1))


@dataclass
class LineCurve(ReferenceCurve):
    """Straight segment at fixed attitude ``A0`` with world velocity ``velocity``."""

    start: tuple = (0.0, 0.0, 0.0)
    velocity: tuple = (1.0, 0.0, 0.0)
    A0: np.ndarray = None

    def __post_init__(self):
        self.A0 = np.eye(3) if self.A0 is None else np.asarray(self.A0, dtype=float)

    def matrix(self, ts):
        ts = self._check_times(ts)
        r = np.asarray(self.start, dtype=float) + ts[:, None] * np.asarray(self.velocity, dtype=float)
        return _se3_matrix(np.broadcast_to(self.A0, (len(ts), 3, 3)), r)

    def body_velocity(self, ts):
        ts = self._check_times(ts)
        v = self.A0.T @ np.asarray(self.velocity, dtype=float)
        return np.tile(np.concatenate([np.zeros(3), v]), (len(ts), 1))


@dataclass
class HelixCurve(ReferenceCurve):
    """Helix about the z axis at fixed attitude; ``pitch`` is the rise per turn."""

    radius: float = 1.0
    pitch: float = 0.0
    turns: float = 1.0
    A0: np.ndarray = None

    def __post_init__(self):
        self.A0 = np.eye(3) if self.A0 is None else np.asarray(self.A0, dtype=float)

    def _rate(self):
        return 2 * math.pi * self.turns / self.duration

    def matrix(self, ts):
        ts = self._check_times(ts)
        th = self._rate() * ts
        r = np.column_stack([self.radius * np.cos(th), self.radius * np.sin(th),
                             self.pitch * th / (2 * math.pi)])
        return _se3_matrix(np.broadcast_to(self.A0, (len(ts), 3, 3)), r)

    def body_velocity(self, ts):
        ts = self._check_times(ts)
        k = self._rate()
        th = k * ts
        rdot = np.column_stack([-self.radius * k * np.sin(th), self.radius * k * np.cos(th),
                                np.full_like(th, self.pitch * k / (2 * math.pi))])
        A = np.broadcast_to(self.A0, (len(ts), 3, 3))
        return _se3_velocity(A, np.zeros_like(rdot), rdot)


@dataclass
class CircleCurve(HelixCurve):
    """Circle of ``radius`` in the horizontal plane, one turn by default."""


@dataclass
class AttitudeSlew(ReferenceCurve):
    """Rotation about a fixed ``axis`` by ``angle`` with a smoothstep profile.

    The angle follows ``angle (3s^2 - 2s^3)``, ``s = t/duration``, so the
    curve starts and ends at rest; the position is fixed at ``start``.
    """

    axis: tuple = (0.0, 0.0, 1.0)
    angle: float = math.pi / 2
    start: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        if not np.linalg.norm(a) > 0:
            raise CurveError("rotation axis must be nonzero")
        self._axis = a / np.linalg.norm(a)

    def _theta(self, ts):
        s = ts / self.duration
        return self.angle * (3 * s**2 - 2 * s**3), self.angle * (6 * s - 6 * s**2) / self.duration

    def matrix(self, ts):
        ts = self._check_times(ts)
        th, _ = self._theta(ts)
        A = Rotation.from_rotvec(th[:, None] * self._axis).as_matrix()
        return _se3_matrix(A, np.broadcast_to(np.asarray(self.start, dtype=float), (len(ts), 3)))

    def body_velocity(self, ts):
        ts = self._check_times(ts)
        _, thd = self._theta(ts)
        out = np.zeros((len(ts), 6))
        out[:, :3] = thd[:, None] * self._axis
        return out


@dataclass
class WaypointCurve(ReferenceCurve):
    """C^2 interpolation of SE(3) waypoints.

    Positions use a cubic spline, attitudes a rotation spline; the body
    angular velocity is obtained from ``A^T A'`` by finite differences.
    """

    times: np.ndarray = None
    positions: np.ndarray = None
    rotvecs: np.ndarray = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise CurveError("at least two waypoint times are required")
        if np.any(np.diff(self.times) <= 0):
            raise CurveError("waypoint times must be strictly increasing")
        if self.positions.shape != (len(self.times), 3):
            raise CurveError("one 3-vector position per waypoint time is required")
        rv = np.zeros_like(self.positions) if self.rotvecs is None else np.asarray(self.rotvecs, dtype=float)
        if rv.shape != self.positions.shape:
            raise CurveError("one rotation vector per waypoint time is required")
        self.rotvecs = rv
        self._t0 = self.times[0]
        self.duration = float(self.times[-1] - self.times[0])
        self._pos = CubicSpline(self.times - self._t0, self.positions)
        self._rot = RotationSpline(self.times - self._t0, Rotation.from_rotvec(rv))

    def _attitude(self, ts):
        return self._rot(ts).as_matrix()

    def matrix(self, ts):
        ts = self._check_times(ts)
        return _se3_matrix(self._attitude(ts), self._pos(ts))

    def body_velocity(self, ts):
        ts = self._check_times(ts)
        A, w = _attitude_velocity(self._attitude, ts, self.duration)
        v = np.einsum("nji,nj->ni", A, self._pos(ts, 1))
        return np.concatenate([w, v], axis=1)


@dataclass
class PiecewiseCurve(ReferenceCurve):
    """Consecutive polynomial segments in position and rotation vector.

    ``segments[m]`` is ``{"duration": d, "position": [[cx...], [cy...], [cz...]],
    "rotvec": [...]}`` with ascending coefficients in local time.  Value and
    first derivative must agree at every joint (checked at construction).
    """

    segments: list = None

    def __post_init__(self):
        if not self.segments:
            raise CurveError("a piecewise curve needs at least one segment")
        self._segs = []
        t0 = 0.0
        for m, seg in enumerate(self.segments):
            d = float(seg.get("duration", 0))
            if not d > 0:
                raise CurveError(f"segment {m + 1}: duration must be positive")
            pos = self._coeffs(seg.get("position"), m, "position")
            rot = self._coeffs(seg.get("rotvec"), m, "rotvec")
            self._segs.append((t0, d, pos, rot))
            t0 += d
        self.duration = t0
        self._check_joints()

    @staticmethod
    def _coeffs(raw, m, what):
        if raw is None:
            return [np.zeros(1)] * 3
        if len(raw) != 3:
            raise CurveError(f"segment {m + 1}: {what} needs three coefficient lists")
        return [np.asarray(c, dtype=float) if len(c) else np.zeros(1) for c in raw]

    def _eval(self, ts, order=0):
        ts = self._check_times(ts)
        starts = np.array([s[0] for s in self._segs])
        idx = np.clip(np.searchsorted(starts, ts, side="right") - 1, 0, len(self._segs) - 1)
        pos = np.zeros((len(ts), 3))
        rot = np.zeros((len(ts), 3))
        for m, (t0, _, pc, rc) in enumerate(self._segs):
            sel = idx == m
            if not np.any(sel):
                continue
            tau = ts[sel] - t0
            for i in range(3):
                p, r = pc[i], rc[i]
                if order:
                    p, r = np.polynomial.polynomial.polyder(p), np.polynomial.polynomial.polyder(r)
                pos[sel, i] = np.polynomial.polynomial.polyval(tau, p)
                rot[sel, i] = np.polynomial.polynomial.polyval(tau, r)
        return pos, rot

    def _segment_end(self, m):
        t0, d, pc, rc = self._segs[m]
        vals = []
        for order in (0, 1):
            ev = []
            for c in pc + rc:
                cc = np.polynomial.polynomial.polyder(c) if order else c
                ev.append(np.polynomial.polynomial.polyval(d, cc))
            vals.append(np.array(ev))
        return vals

    def _segment_start(self, m):
        _, _, pc, rc = self._segs[m]
        val = np.array([c[0] for c in pc + rc])
        der = np.array([c[1] if len(c) > 1 else 0.0 for c in pc + rc])
        return val, der

    def _check_joints(self):
        for m in range(len(self._segs) - 1):
            (v_end, d_end), (v_start, d_start) = self._segment_end(m), self._segment_start(m + 1)
            if np.max(np.abs(v_end - v_start)) > JOINT_TOL:
                raise CurveError(f"joint {m + 1} (t = {self._segs[m + 1][0]:g}): value jumps "
                                 f"by {np.max(np.abs(v_end - v_start)):.3g}")
            if np.max(np.abs(d_end - d_start)) > JOINT_TOL:
                raise CurveError(f"joint {m + 1} (t = {self._segs[m + 1][0]:g}): derivative jumps "
                                 f"by {np.max(np.abs(d_end - d_start)):.3g}")

    def _attitude(self, ts):
        _, rot = self._eval(ts)
        return Rotation.from_rotvec(rot).as_matrix()

    def matrix(self, ts):
        pos, rot = self._eval(ts)
        return _se3_matrix(Rotation.from_rotvec(rot).as_matrix(), pos)

    def body_velocity(self, ts):
        ts = self._check_times(ts)
        A, w = _attitude_velocity(self._attitude, ts, self.duration)
        rdot, _ = self._eval(ts, order=1)
        v = np.einsum("nji,nj->ni", A, rdot)
        return np.concatenate([w, v], axis=1)


BUILTIN_CURVES = ("line", "circle", "helix", "attitude_slew", "heisenberg_line")


def builtin_curve(name: str, **params) -> ReferenceCurve:
    """Named benchmark curves; unknown parameters raise ``CurveError``."""
    try:
        if name == "line":
            return LineCurve(float(params.pop("duration", 1.0)), **params)
        if name == "circle":
            return CircleCurve(float(params.pop("duration", 2 * math.pi)), radius=float(params.pop("radius", 1.0)),
                               **params)
        if name == "helix":
            return HelixCurve(float(params.pop("duration", 2 * math.pi)), **params)
        if name == "attitude_slew":
            return AttitudeSlew(float(params.pop("duration", 2.0)), **params)
        if name == "heisenberg_line":
            xi = params.pop("velocity", (1.0, 0.0, 1.0))
            return ExpCurve(float(params.pop("duration", 1.0)), heisenberg_group(), xi=xi, **params)
    except TypeError as exc:
        raise CurveError(f"bad parameters for curve {name!r}: {exc}") from exc
    raise CurveError(f"unknown curve {name!r}; builtins are {', '.join(BUILTIN_CURVES)}")


def curve_from_dict(data: dict) -> ReferenceCurve:
    data = dict(data)
    kind = data.pop("type", "builtin")
    if kind == "builtin":
        return builtin_curve(data.pop("name"), **data)
    if kind == "waypoints":
        return WaypointCurve(0.0, times=data["times"], positions=data["positions"], rotvecs=data.get("rotvecs"))
    if kind == "piecewise":
        return PiecewiseCurve(0.0, segments=data["segments"])
    raise CurveError(f"unknown curve type {kind!r}")


def load_curve(path) -> ReferenceCurve:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CurveError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return curve_from_dict(data)
    except KeyError as exc:
        raise CurveError(f"{path}: missing field {exc}") from exc
