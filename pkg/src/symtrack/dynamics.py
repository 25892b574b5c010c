"""Simulation of an invariant mechanical system on SE(3) in impulse form.

The state is the attitude ``A``, the position ``r`` and the body impulses
``(Pi, P) = M (omega, v)``.  Uncontrolled motion follows the Kirchhoff
equations ``Pi' = Pi x omega + P x v``, ``P' = P x omega``; forces enter as
``M (Y0 + D xi + sum u_a Y_a)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .liealg import ad_star, hat, se3, vee
from .mech import MechSystem

__all__ = [
    "NumericalFailure",
    "GroupState",
    "StateRate",
    "Trajectory",
    "ControlSignal",
    "ControlTerm",
    "require_se3",
    "body_velocity",
    "kirchhoff_rhs",
    "adstar_rhs",
    "integrate",
    "casimirs",
    "se3_distance",
    "invariant_drift",
    "rotation_angle",
    "expm_so3",
    "polar",
    "csv_header",
]

ORTHO_TOL = 1e-9
_SE3 = se3()


class NumericalFailure(RuntimeError):
    """Raised when the integrated state stops being finite."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.6g}")
        self.time = time


def _ortho_residual(A: np.ndarray) -> float:
    return float(np.linalg.norm(A.T @ A - np.eye(3)))


@dataclass
class GroupState:
    """Configuration ``(A, r)`` in SE(3) together with the body impulses."""

    A: np.ndarray
    r: np.ndarray
    Pi: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        self.A = np.array(self.A, dtype=float).reshape(3, 3)
        self.r = np.array(self.r, dtype=float).reshape(3)
        self.Pi = np.array(self.Pi, dtype=float).reshape(3)
        self.P = np.array(self.P, dtype=float).reshape(3)
        res = _ortho_residual(self.A)
        if not res < ORTHO_TOL:
            raise ValueError(f"attitude is not orthogonal (residual {res:.3g})")
        if np.linalg.det(self.A) <= 0:
            raise ValueError("attitude has negative determinant")

    @classmethod
    def from_velocity(cls, sys: MechSystem, A, r, omega, v) -> "GroupState":
        mu = sys.inertia.float_matrix @ np.concatenate([np.ravel(omega), np.ravel(v)]).astype(float)
        return cls(A, r, mu[:3], mu[3:])

    @classmethod
    def identity(cls) -> "GroupState":
        return cls(np.eye(3), np.zeros(3), np.zeros(3), np.zeros(3))

    @property
    def impulse(self) -> np.ndarray:
        return np.concatenate([self.Pi, self.P])

    def flat(self) -> np.ndarray:
        return np.concatenate([self.A.ravel(), self.r, self.Pi, self.P])

    @classmethod
    def from_flat(cls, y) -> "GroupState":
        y = np.asarray(y, dtype=float)
        return cls(y[:9].reshape(3, 3), y[9:12], y[12:15], y[15:18])

    @classmethod
    def _trusted(cls, y: np.ndarray) -> "GroupState":
        # integrator output is already reprojected; skip the validation
        s = object.__new__(cls)
        s.A, s.r, s.Pi, s.P = y[:9].reshape(3, 3), y[9:12], y[12:15], y[15:18]
        return s


@dataclass
class StateRate:
    """Time derivative of a :class:`GroupState`."""

    dA: np.ndarray
    dr: np.ndarray
    dPi: np.ndarray
    dP: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.dA), self.dr, self.dPi, self.dP])


def require_se3(sys: MechSystem) -> None:
    if sys.algebra != _SE3:
        raise ValueError("simulation needs a system on se(3) in the standard basis")


def body_velocity(sys: MechSystem, s: GroupState) -> tuple[np.ndarray, np.ndarray]:
    """``(omega, v) = M^{-1} (Pi, P)``."""
    xi = sys.inertia.float_inverse @ s.impulse
    return xi[:3], xi[3:]


def _forces(sys: MechSystem):
    """Closure computing the impulse-space force ``M (Y0 + D xi + B u)``."""
    M = sys.inertia.float_matrix
    f0 = M @ np.asarray(sys.drift_const, dtype=float)
    MD = M @ np.asarray(sys.drift_linear, dtype=float)
    MB = M @ sys.control_matrix
    linear = bool(np.any(MD))

    def force(xi, u):
        f = f0 + MB @ u
        return f + MD @ xi if linear else f

    return force


def kirchhoff_rhs(sys: MechSystem, s: GroupState, u) -> StateRate:
    """Right-hand side of the controlled Kirchhoff equations with SE(3) kinematics."""
    require_se3(sys)
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != len(sys.controls):
        raise ValueError(f"expected {len(sys.controls)} control values, got {u.shape[0]}")
    omega, v = body_velocity(sys, s)
    f = _forces(sys)(np.concatenate([omega, v]), u)
    dPi = np.cross(s.Pi, omega) + np.cross(s.P, v) + f[:3]
    dP = np.cross(s.P, omega) + f[3:]
    return StateRate(s.A @ hat(omega), s.A @ v, dPi, dP)


def adstar_rhs(sys: MechSystem, s: GroupState, u) -> np.ndarray:
    """Impulse rate ``ad*_xi(M xi) + M F`` from the structure constants alone."""
    u = np.asarray(u, dtype=float).reshape(-1)
    xi = sys.inertia.float_inverse @ s.impulse
    return ad_star(sys.algebra, xi, s.impulse) + _forces(sys)(xi, u)


def _make_flat_rhs(sys: MechSystem):
    Minv = sys.inertia.float_inverse
    force = _forces(sys)

    def rhs(y, u):
        xi = Minv @ y[12:18]
        f = force(xi, u).tolist()
        a11, a12, a13, a21, a22, a23, a31, a32, a33, _, _, _, p1, p2, p3, q1, q2, q3 = y.tolist()
        w1, w2, w3, v1, v2, v3 = xi.tolist()
        # rows of A hat(w) are the rows of A crossed with w
        return np.array([
            a12 * w3 - a13 * w2, a13 * w1 - a11 * w3, a11 * w2 - a12 * w1,
            a22 * w3 - a23 * w2, a23 * w1 - a21 * w3, a21 * w2 - a22 * w1,
            a32 * w3 - a33 * w2, a33 * w1 - a31 * w3, a31 * w2 - a32 * w1,
            a11 * v1 + a12 * v2 + a13 * v3,
            a21 * v1 + a22 * v2 + a23 * v3,
            a31 * v1 + a32 * v2 + a33 * v3,
            p2 * w3 - p3 * w2 + q2 * v3 - q3 * v2 + f[0],
            p3 * w1 - p1 * w3 + q3 * v1 - q1 * v3 + f[1],
            p1 * w2 - p2 * w1 + q1 * v2 - q2 * v1 + f[2],
            q2 * w3 - q3 * w2 + f[3],
            q3 * w1 - q1 * w3 + f[4],
            q1 * w2 - q2 * w1 + f[5],
        ])

    return rhs


def polar(A: np.ndarray) -> np.ndarray:
    """Closest rotation matrix (orthogonal polar factor)."""
    U, _, Vt = np.linalg.svd(A)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] *= -1
        R = U @ Vt
    return R


def expm_so3(w) -> np.ndarray:
    """``exp(hat(w))`` by the Rodrigues formula."""
    w = np.asarray(w, dtype=float)
    th = float(np.linalg.norm(w))
    K = hat(w)
    if th < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return np.eye(3) + (math.sin(th) / th) * K + ((1 - math.cos(th)) / th**2) * K @ K


@dataclass(frozen=True)
class ControlTerm:
    """One additive term on one channel (0-based).

    ``kind="poly"``: ``sum coeffs[m] t^m``.  ``kind="osc"``: the polynomial
    envelope ``coeffs`` times ``cos(2 pi freq t + phase)`` (``freq`` in Hz).
    """

    channel: int
    kind: str
    coeffs: tuple = (0.0,)
    freq: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("poly", "osc"):
            raise ValueError(f"unknown term kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not all(math.isfinite(c) for c in self.coeffs + (self.freq, self.phase)):
            raise ValueError("control term has nonfinite parameters")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        val = np.polynomial.polynomial.polyval(t, self.coeffs)
        if self.kind == "osc":
            val = val * np.cos(2 * np.pi * self.freq * t + self.phase)
        return val


@dataclass
class ControlSignal:
    """Open-loop input ``u(t)`` on ``channels`` channels.

    A sum of :class:`ControlTerm` plus optional vectorized callables
    ``fn(t) -> array (len(t), channels)``.  Callables are evaluated but not
    serialized; :meth:`to_dict` refuses them.
    """

    channels: int
    terms: list = field(default_factory=list)
    functions: list = field(default_factory=list)

    def __post_init__(self):
        for term in self.terms:
            if not 0 <= term.channel < self.channels:
                raise ValueError(f"term on channel {term.channel + 1} of a {self.channels}-channel signal")

    @classmethod
    def zero(cls, channels: int) -> "ControlSignal":
        return cls(channels)

    @classmethod
    def from_function(cls, channels: int, fn: Callable) -> "ControlSignal":
        return cls(channels, [], [fn])

    def __add__(self, other: "ControlSignal") -> "ControlSignal":
        if other.channels != self.channels:
            raise ValueError("channel counts differ")
        return ControlSignal(self.channels, self.terms + other.terms, self.functions + other.functions)

    @property
    def is_zero(self) -> bool:
        return not self.functions and all(not any(t.coeffs) for t in self.terms)

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((ts.shape[0], self.channels))
        for term in self.terms:
            out[:, term.channel] += term(ts)
        for fn in self.functions:
            out += np.asarray(fn(ts), dtype=float).reshape(ts.shape[0], self.channels)
        if not np.all(np.isfinite(out)):
            bad = ts[~np.all(np.isfinite(out), axis=1)][0]
            raise NumericalFailure("control signal is not finite", float(bad))
        return out[0] if scalar else out

    def to_dict(self) -> dict:
        if self.functions:
            raise ValueError("signals with callable parts cannot be serialized; export samples instead")
        terms = []
        for t in self.terms:
            d = {"channel": t.channel + 1, "kind": t.kind, "coeffs": list(t.coeffs)}
            if t.kind == "osc":
                d.update(freq=t.freq, phase=t.phase)
            terms.append(d)
        return {"channels": self.channels, "terms": terms}

    @classmethod
    def from_dict(cls, data: dict) -> "ControlSignal":
        k = int(data["channels"])
        terms = []
        for d in data.get("terms", []):
            kind = d.get("kind", "osc" if "freq" in d else "poly")
            terms.append(ControlTerm(int(d["channel"]) - 1, kind, tuple(d.get("coeffs", (0.0,))),
                                     float(d.get("freq", 0.0)), float(d.get("phase", 0.0))))
        return cls(k, terms)


def csv_header(channels: int = 3) -> list[str]:
    return (["t"] + [f"A{i}{j}" for i in range(1, 4) for j in range(1, 4)] + ["rx", "ry", "rz"]
            + ["Pi1", "Pi2", "Pi3", "P1", "P2", "P3"] + [f"u{a}" for a in range(1, channels + 1)])


@dataclass
class Trajectory:
    """Sampled solution: ``states[n]`` at ``times[n]`` under ``controls[n]``."""

    times: np.ndarray
    states: list
    controls: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.controls = np.asarray(self.controls, dtype=float)
        if not (len(self.times) == len(self.states) == len(self.controls)):
            raise ValueError("times, states and controls must have equal lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> GroupState:
        return self.states[-1]

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.r for s in self.states])

    @property
    def attitudes(self) -> np.ndarray:
        return np.array([s.A for s in self.states])

    @property
    def impulses(self) -> np.ndarray:
        return np.array([s.impulse for s in self.states])

    def velocities(self, sys: MechSystem) -> np.ndarray:
        return self.impulses @ sys.inertia.float_inverse.T

    def rows(self) -> np.ndarray:
        flat = np.array([s.flat() for s in self.states])
        return np.column_stack([self.times, flat, self.controls])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(csv_header(self.controls.shape[1]))
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row])


def _grid(t_final: float, dt: float) -> np.ndarray:
    n = int(math.ceil(t_final / dt - 1e-9))
    ts = np.arange(n + 1) * dt
    ts[-1] = t_final
    return ts


def integrate(sys: MechSystem, s0: GroupState, u: ControlSignal | None, t_final: float, dt: float,
              method: str = "rk4_reproject") -> Trajectory:
    """Integrate from ``s0`` over ``[0, t_final]`` with step ``dt``.

    ``rk4_reproject`` takes classical fourth-order steps on the flattened
    state and replaces the attitude by its polar factor after each step.
    ``lie_euler`` is first order: the attitude is advanced by the exact
    rotation ``exp(dt hat(omega))`` so it never leaves SO(3).
    """
    require_se3(sys)
    if not dt > 0 or not t_final > 0:
        raise ValueError("dt and t_final must be positive")
    if method not in ("rk4_reproject", "lie_euler"):
        raise ValueError(f"unknown method {method!r}")
    k = len(sys.controls)
    u = ControlSignal.zero(k) if u is None else u
    if u.channels != k:
        raise ValueError(f"control signal has {u.channels} channels, system has {k}")
    ts = _grid(t_final, dt)
    hs = np.diff(ts)
    zero = u.is_zero
    if zero:
        U0 = np.zeros((len(ts), k))
        Umid = np.zeros((len(hs), k))
    else:
        U0 = u(ts)
        Umid = u(ts[:-1] + hs / 2)
    rhs = _make_flat_rhs(sys)
    Minv = sys.inertia.float_inverse

    y = s0.flat()
    states = [s0]
    # overflow is detected by the finiteness checks below
    with np.errstate(over="ignore", invalid="ignore"):
        for n, h in enumerate(hs):
            if method == "rk4_reproject":
                k1 = rhs(y, U0[n])
                k2 = rhs(y + 0.5 * h * k1, Umid[n])
                k3 = rhs(y + 0.5 * h * k2, Umid[n])
                k4 = rhs(y + h * k3, U0[n + 1])
                y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
                if not np.all(np.isfinite(y)):
                    raise NumericalFailure("state became nonfinite", float(ts[n + 1]))
                y[:9] = polar(y[:9].reshape(3, 3)).ravel()
            else:
                d = rhs(y, U0[n])
                if not np.all(np.isfinite(d)):
                    raise NumericalFailure("state became nonfinite", float(ts[n]))
                omega = (Minv @ y[12:18])[:3]
                A = y[:9].reshape(3, 3)
                y = y + h * d
                y[:9] = (A @ expm_so3(h * omega)).ravel()
                if not np.all(np.isfinite(y)):
                    raise NumericalFailure("state became nonfinite", float(ts[n + 1]))
            states.append(GroupState._trusted(y.copy()))
    return Trajectory(ts, states, U0)


def casimirs(s: GroupState) -> tuple[float, float]:
    """``(|P|^2, Pi . P)``, conserved by the uncontrolled flow."""
    return float(s.P @ s.P), float(s.Pi @ s.P)


def invariant_drift(sys: MechSystem, traj: Trajectory) -> dict:
    """Largest relative change of energy, ``|P|^2`` and ``Pi . P`` along ``traj``.

    ``Pi . P`` is measured against ``|Pi| |P|`` since it may start at zero.
    """
    Minv = sys.inertia.float_inverse
    mu = traj.impulses
    E = 0.5 * np.einsum("ti,ij,tj->t", mu, Minv, mu)
    Pi, P = mu[:, :3], mu[:, 3:]
    c1 = np.einsum("ti,ti->t", P, P)
    c2 = np.einsum("ti,ti->t", Pi, P)

    def rel(x, scale):
        d = float(np.max(np.abs(x - x[0])))
        return 0.0 if d == 0 else d / scale if scale > 0 else math.inf

    ortho = max(_ortho_residual(s.A) for s in traj.states)
    return {"energy": rel(E, abs(E[0])), "P_squared": rel(c1, abs(c1[0])),
            "Pi_dot_P": rel(c2, float(np.linalg.norm(Pi[0]) * np.linalg.norm(P[0]))),
            "orthogonality": float(ortho)}


def rotation_angle(R: np.ndarray) -> float:
    """Angle in ``[0, pi]`` of the rotation ``R``."""
    return float(math.atan2(np.linalg.norm(vee(R)), (np.trace(R) - 1) / 2))


def se3_distance(s1, s2) -> float:
    """``|r1 - r2| + angle(A1^T A2)``; accepts states or ``(A, r)`` pairs."""
    A1, r1 = (s1.A, s1.r) if isinstance(s1, GroupState) else s1
    A2, r2 = (s2.A, s2.r) if isinstance(s2, GroupState) else s2
    return float(np.linalg.norm(np.asarray(r1) - np.asarray(r2))) + rotation_angle(np.asarray(A1).T @ np.asarray(A2))
