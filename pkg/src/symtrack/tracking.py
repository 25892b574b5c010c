"""Open-loop oscillatory tracking in two stages.

Stage one (kinematic) writes the body velocity of the reference curve as a
combination of a family of invariant fields ``X_a`` and of their first-order
brackets.  Bracket directions are produced by sinusoidal pairs

    u_a = alpha cos(W t),  u_b = beta sin(W t),  alpha beta = 2 W w(t),

whose averaged flow is ``w [X_a, X_b]`` (``W = 2 pi f`` rad/s).

Stage two (mechanical) computes the force ``xi1' + <xi1:xi1>/2 - Y(xi1)``
needed to follow the stage-one velocity ``xi1`` and realizes it with the
physical inputs: components along ``Y_a`` directly, components along
``<Y_a:Y_b>`` by a zero-mean pair that makes the velocity oscillate as
``sin(W t) (mu Y_a + nu Y_b)``, whose averaged force is
``-(mu nu / 2) <Y_a:Y_b>`` plus the self terms
``-(mu^2 <Y_a:Y_a> + nu^2 <Y_b:Y_b>) / 4``; the latter are fed back through
the decomposition.  Oscillations are switched on with smooth ramps so that
no mean displacement is left behind.  Pair ``p`` runs at the odd multiple
``2p + 1`` of its stage base frequency (sums of two such frequencies never
equal a third, which avoids resonant cross terms); the mechanical base is
``MECH_RATIO`` times the fastest kinematic frequency.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .closure import FieldFamily, analyze_z, orthonormal_basis, z_family
from .curves import MatrixGroup, ReferenceCurve, _derivative, se3_group
from .dynamics import ControlSignal, GroupState, Trajectory, integrate, require_se3
from .liealg import bracket
from .mech import MechSystem, gamma_constants, symmetric_product

__all__ = [
    "TrackingError",
    "KinematicPlan",
    "MechanicalPlan",
    "TrackResult",
    "KinematicResult",
    "kinematic_synthesis",
    "mechanical_synthesis",
    "integrate_kinematic",
    "track",
    "track_kinematic",
    "frequency_sweep",
    "MECH_RATIO",
    "STEPS_PER_PERIOD",
    "REGULARIZATION",
]

MECH_RATIO = 10
STEPS_PER_PERIOD = 60
REGULARIZATION = 1e-3
RAMP_PERIODS = 1.0
DECOMP_TOL = 1e-8
ACTIVE_TOL = 1e-9


class TrackingError(RuntimeError):
    """A synthesis stage rejected its input; ``stage`` names which one."""

    def __init__(self, stage: str, message: str, residual: float | None = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.residual = residual


def _multiple(p: int) -> int:
    """Frequency multiple of the ``p``-th oscillating pair.

    Odd multiples are sum-free (no multiple is the sum of two others), so
    harmonics of one pair never resonate with another pair at third order.
    """
    return 2 * p + 1


def _independent_directions(candidates, base: np.ndarray, tol: float = 1e-9):
    """Greedy choice of candidates that add rank outside ``span(base)``."""
    chosen = []
    cols = [base[:, i] for i in range(base.shape[1])]
    rank = orthonormal_basis(cols).shape[1] if cols else 0
    for key, vec in candidates:
        trial = orthonormal_basis(cols + [vec]) if np.linalg.norm(vec) > tol else None
        if trial is not None and trial.shape[1] > rank:
            cols.append(vec)
            rank += 1
            chosen.append((key, vec))
    return chosen


class _TwoLevel:
    """Decompose ``v = F c + G w`` with ``F`` preferred and ``G`` covering the rest."""

    def __init__(self, F: np.ndarray, G: np.ndarray):
        n = F.shape[0]
        self.F, self.G = F, G
        self.Fp = np.linalg.pinv(F) if F.shape[1] else np.zeros((0, n))
        self.perp = np.eye(n) - F @ self.Fp
        self.Gp = np.linalg.pinv(self.perp @ G) if G.shape[1] else np.zeros((0, n))

    def __call__(self, V: np.ndarray):
        """Rows of ``V`` are vectors; returns ``(c, w, residual_norms)``."""
        w = V @ (self.Gp @ self.perp).T
        c = (V - w @ self.G.T) @ self.Fp.T
        res = np.linalg.norm(V - c @ self.F.T - w @ self.G.T, axis=1)
        return c, w, res


def _split_amplitudes(w, delta=REGULARIZATION):
    """Smooth factors ``s(w)``, ``t(w) = w/s`` with ``s t = w``, and two derivatives of each."""
    s = (w * w + delta * delta) ** 0.25
    s1 = w / (2 * s**3)
    s2 = 1 / (2 * s**3) - 3 * w * w / (4 * s**7)
    t = w / s
    t1 = 1 / s - w * s1 / s**2
    t2 = -2 * s1 / s**2 - w * s2 / s**2 + 2 * w * s1**2 / s**3
    return (s, s1, s2), (t, t1, t2)


def _smoothstep(x):
    """Quintic ramp from 0 to 1 on [0, 1] with three derivatives (in x)."""
    x = np.clip(x, 0.0, 1.0)
    return (10 * x**3 - 15 * x**4 + 6 * x**5, 30 * x**2 - 60 * x**3 + 30 * x**4,
            60 * x - 180 * x**2 + 120 * x**3, 60 - 360 * x + 360 * x**2)


# fraction of a ramp's duration lost to the envelope: int_0^1 (1 - p(x)^2) dx
_P = np.polynomial.Polynomial([0, 0, 0, 10, -15, 6])
RAMP_DEFICIT = float((1 - _P**2).integ()(1.0))


def _envelope(ts, duration, ramp, fall: bool = True):
    """Ramp envelope ``e`` and the gain ``k`` that makes up for it.

    ``e`` rises over ``[0, ramp]`` (and falls over the last ``ramp`` when
    ``fall``); averaged effects scale with ``e^2``, so ``k`` adds a bump next
    to each ramp carrying the lost fraction.  Both come with two time
    derivatives.
    """
    def rising(x):
        v, d1, d2, _ = _smoothstep(x)
        return v, d1, d2

    def bump(x):
        _, d1, d2, d3 = _smoothstep(x)
        inside = (x > 0) & (x < 1)
        return d1 * inside, d2 * inside, d3 * inside

    def scaled(f, sign):
        return f[0], sign * f[1] / ramp, f[2] / ramp**2

    e = scaled(rising(ts / ramp), 1)
    k = [1.0 + RAMP_DEFICIT * scaled(bump(ts / ramp - 1), 1)[0], *scaled(bump(ts / ramp - 1), 1)[1:]]
    k[1] = RAMP_DEFICIT * k[1]
    k[2] = RAMP_DEFICIT * k[2]
    if fall:
        e = _product(e, scaled(rising((duration - ts) / ramp), -1))
        kb = scaled(bump((duration - ts) / ramp - 1), -1)
        k = [k[0] + RAMP_DEFICIT * kb[0], k[1] + RAMP_DEFICIT * kb[1], k[2] + RAMP_DEFICIT * kb[2]]
    return e, tuple(k)


def _compose(f, w, w1, w2):
    """Value and two time derivatives of ``f(w(t))`` given ``f`` = (f, f', f'')."""
    return f[0], f[1] * w1, f[2] * w1**2 + f[1] * w2


def _product(a, b):
    return a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2 * a[1] * b[1] + a[0] * b[2]


@dataclass
class BracketPair:
    """Generators ``a``, ``b`` oscillating at ``freq`` Hz to move along ``direction``."""

    a: int
    b: int
    direction: np.ndarray
    freq: float
    ramp: float = 0.0

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.freq


@dataclass
class KinematicPlan:
    """Stage-one controls for the generators ``X`` (columns of ``fields``).

    For a bracket pair the displacements ``U_a = A sin(W t)`` and
    ``U_b = -B cos(W t)`` are prescribed, with ``A B = 2 w k e^2 / W``, a
    ramp envelope ``e`` that vanishes at both ends and a gain ``k`` that
    restores what the ramps lose; the inputs are their time derivatives.
    Both displacements are zero-mean and vanish at the endpoints, so no
    offset is left over to interact with the direct motion.
    """

    fields: np.ndarray
    curve: ReferenceCurve
    pairs: list
    decomposition: _TwoLevel = field(repr=False)
    residual: float = 0.0
    base_freq: float = 1.0

    @property
    def uses_brackets(self) -> bool:
        return bool(self.pairs)

    def _slow(self, ts, order=0):
        out = [self.decomposition(self.curve.body_velocity(ts))[:2]]
        if order >= 1:
            out.append(self.decomposition(self.curve.body_acceleration(ts))[:2])
        if order >= 2:
            tau = self.curve.duration
            jerk = _derivative(self.curve.body_acceleration, ts, tau, 1e-4 * max(1.0, tau))
            out.append(self.decomposition(jerk)[:2])
        return out

    def controls(self, ts, derivative=False):
        """Generator inputs ``u(t)`` (and ``u'(t)`` when asked), shape ``(len, m)``."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        need = 2 if (derivative and self.pairs) else (1 if derivative else 0)
        slow = self._slow(ts, need)
        c, w = slow[0]
        u = c.copy()
        du = slow[1][0].copy() if derivative else None
        for p, pair in enumerate(self.pairs):
            W = pair.omega
            k = math.sqrt(2 / W)
            wp = w[:, p]
            w1 = slow[1][1][:, p] if need >= 1 else 0 * wp
            w2 = slow[2][1][:, p] if need >= 2 else 0 * wp
            env, gain = _envelope(ts, self.curve.duration, pair.ramp)
            wp, w1, w2 = _product((wp, w1, w2), gain)
            fs, ft = _split_amplitudes(wp)
            A = _product(_compose(fs, wp, w1, w2), env)
            B = _product(_compose(ft, wp, w1, w2), env)
            cs, sn = np.cos(W * ts), np.sin(W * ts)
            u[:, pair.a] += k * (A[1] * sn + W * A[0] * cs)
            u[:, pair.b] += k * (-B[1] * cs + W * B[0] * sn)
            if derivative:
                du[:, pair.a] += k * (A[2] * sn + 2 * W * A[1] * cs - W * W * A[0] * sn)
                du[:, pair.b] += k * (-B[2] * cs + 2 * W * B[1] * sn + W * W * B[0] * cs)
        return (u, du) if derivative else u

    def velocity(self, ts) -> np.ndarray:
        return self.controls(ts) @ self.fields.T

    def velocity_and_rate(self, ts):
        u, du = self.controls(ts, derivative=True)
        return u @ self.fields.T, du @ self.fields.T

    def averaged_velocity(self, ts) -> np.ndarray:
        """Target velocity ``sum c_a X_a + sum w_p [X_a, X_b]`` (without ramps)."""
        c, w = self._slow(np.atleast_1d(ts))[0]
        dirs = np.column_stack([p.direction for p in self.pairs]) if self.pairs else np.zeros((self.fields.shape[0], 0))
        return c @ self.fields.T + w[:, : len(self.pairs)] @ dirs.T

    @property
    def max_freq(self) -> float:
        return max([p.freq for p in self.pairs], default=self.base_freq)


def _sample_grid(duration: float, max_freq: float, minimum: int = 2001) -> np.ndarray:
    return np.linspace(0.0, duration, max(minimum, int(40 * max_freq * duration) + 1))


def kinematic_synthesis(fam: FieldFamily, curve: ReferenceCurve, omega_osc: float,
                        tol: float = DECOMP_TOL, allow_brackets: bool = True) -> KinematicPlan:
    """Controls on the members of ``fam`` whose flow tracks ``curve``.

    ``omega_osc`` is the base frequency in Hz; bracket pair ``p`` oscillates
    at ``(2p + 1) omega_osc``.  The body velocity is decomposed first over the
    members and then, for what is left, over first-order brackets of
    members.  A velocity outside that span raises :class:`TrackingError`
    with the residual.
    """
    if not omega_osc > 0:
        raise TrackingError("kinematic", "oscillation frequency must be positive")
    X = fam.matrix()
    n, m = X.shape
    if m == 0:
        raise TrackingError("kinematic", "the field family is empty")
    base = orthonormal_basis([X[:, a] for a in range(m)])
    perp = np.eye(n) - base @ base.T
    cands = []
    if allow_brackets:
        for a in range(m):
            for b in range(a + 1, m):
                d = np.asarray(bracket(fam.algebra, X[:, a], X[:, b]), dtype=float)
                cands.append(((a, b), d))
    chosen = _independent_directions([(k, perp @ d) for k, d in cands], base)
    keys = {k for k, _ in chosen}
    dirs = [(k, d) for k, d in cands if k in keys]
    G = np.column_stack([d for _, d in dirs]) if dirs else np.zeros((n, 0))
    dec = _TwoLevel(X, G)

    ts = np.linspace(0.0, curve.duration, 401)
    xi = np.asarray(curve.body_velocity(ts), dtype=float)
    if not np.all(np.isfinite(xi)):
        raise TrackingError("kinematic", "curve velocity is not finite")
    c, w, res = dec(xi)
    scale = np.maximum(1.0, np.linalg.norm(xi, axis=1))
    worst = float(np.max(res / scale))
    if worst > tol:
        raise TrackingError("kinematic", f"curve velocity leaves the reachable span (residual {worst:.3g})", worst)

    active = [i for i in range(len(dirs)) if np.max(np.abs(w[:, i])) > ACTIVE_TOL]
    if len(active) < len(dirs):
        G = G[:, active] if active else np.zeros((n, 0))
        dirs = [dirs[i] for i in active]
        dec = _TwoLevel(X, G)
    freqs = [omega_osc * _multiple(p) for p in range(len(dirs))]
    pairs = [BracketPair(a, b, d, fr, min(RAMP_PERIODS / fr, curve.duration / 6))
             for fr, ((a, b), d) in zip(freqs, dirs)]
    return KinematicPlan(X, curve, pairs, dec, worst, omega_osc)


def _gamma_tensor(sys: MechSystem) -> np.ndarray:
    n = sys.dim
    G = np.zeros((n, n, n))
    for (i, j, k), v in gamma_constants(sys).items():
        G[i, j, k] = float(v)
    return G


@dataclass
class ProductPair:
    """Channels ``a``, ``b`` oscillating at ``freq`` Hz to push along ``direction``."""

    a: int
    b: int
    direction: np.ndarray
    freq: float
    ramp: float = 0.0

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.freq


@dataclass
class MechanicalPlan:
    """Stage-two input on the physical channels.

    Pair ``p`` makes the body velocity oscillate as
    ``d/dt [-(e/W) cos(W t) (mu Y_a + nu Y_b)]`` with a rising envelope
    ``e``: the induced displacement starts at zero and has zero mean, so it
    leaves no offset behind.  The averaged force is ``rho k e^2`` along
    ``<Y_a:Y_b>`` where ``k`` restores what the ramp loses.
    """

    system: MechSystem
    kinematic: KinematicPlan
    pairs: list
    decomposition: _TwoLevel = field(repr=False)
    self_terms: np.ndarray = field(repr=False, default=None)
    residual: float = 0.0
    base_freq: float = 1.0
    iterations: int = 4

    def required_force(self, ts) -> np.ndarray:
        """``xi1' + <xi1:xi1>/2 - Y0 - D xi1`` along the stage-one velocity."""
        xi, dxi = self.kinematic.velocity_and_rate(ts)
        gam = _gamma_tensor_cached(self.system)
        quad = np.einsum("ijk,ti,tj->tk", gam, xi, xi)
        y0 = np.asarray(self.system.drift_const, dtype=float)
        D = np.asarray(self.system.drift_linear, dtype=float)
        return dxi + 0.5 * quad - y0 - xi @ D.T

    def coefficients(self, ts):
        """Direct inputs ``lam`` and product coefficients ``rho``, plus the residual."""
        f = self.required_force(ts)
        target = f
        for _ in range(self.iterations):
            lam, rho, res = self.decomposition(target)
            if self.self_terms is None or not self.pairs:
                break
            mu, nu = self._amplitudes(rho)
            selfs = -0.25 * (mu[:, :, None] ** 2 * self.self_terms[None, :, 0, :]
                             + nu[:, :, None] ** 2 * self.self_terms[None, :, 1, :]).sum(axis=1)
            target = f - selfs
        return lam, rho, res

    @staticmethod
    def _amplitudes(rho):
        (s, _, _), (t, _, _) = _split_amplitudes(rho)
        return math.sqrt(2) * s, -math.sqrt(2) * t

    def _envelope_amplitudes(self, ts, rho):
        """Enveloped amplitudes ``e mu`` and ``e nu`` per pair, shape ``(len, P)``."""
        tau = self.kinematic.curve.duration
        A = np.empty_like(rho)
        B = np.empty_like(rho)
        for p, pair in enumerate(self.pairs):
            e, k = _envelope(ts, tau, pair.ramp, fall=False)
            mu, nu = self._amplitudes(rho[:, p] * k[0])
            A[:, p], B[:, p] = e[0] * mu, e[0] * nu
        return A, B

    def controls(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        lam, rho, _ = self.coefficients(ts)
        u = lam.copy()
        if not self.pairs:
            return u
        tau = self.kinematic.curve.duration
        h = 1e-4 * min(1.0, 1.0 / self.kinematic.max_freq)
        lo, hi = np.clip(ts - h, 0, tau), np.clip(ts + h, 0, tau)
        mid = (lo + hi) / 2
        amps = [self._envelope_amplitudes(t, self.coefficients(t)[1]) for t in (lo, mid, hi)]
        step = ((hi - lo) / 2)[:, None]
        A, B = self._envelope_amplitudes(ts, rho)
        dA, dB = (amps[2][0] - amps[0][0]) / (2 * step), (amps[2][1] - amps[0][1]) / (2 * step)
        ddA = (amps[2][0] - 2 * amps[1][0] + amps[0][0]) / step**2
        ddB = (amps[2][1] - 2 * amps[1][1] + amps[0][1]) / step**2
        for p, pair in enumerate(self.pairs):
            W = pair.omega
            cs, sn = np.cos(W * ts), np.sin(W * ts)
            # second derivative of -(x/W) cos(W t)
            u[:, pair.a] += W * A[:, p] * cs + 2 * dA[:, p] * sn - ddA[:, p] * cs / W
            u[:, pair.b] += W * B[:, p] * cs + 2 * dB[:, p] * sn - ddB[:, p] * cs / W
        return u

    def signal(self) -> ControlSignal:
        return ControlSignal.from_function(len(self.system.controls), self.controls)

    @property
    def max_freq(self) -> float:
        return max([p.freq for p in self.pairs], default=self.base_freq)


_GAMMA_CACHE: dict = {}


def _gamma_tensor_cached(sys: MechSystem) -> np.ndarray:
    key = id(sys)
    hit = _GAMMA_CACHE.get(key)
    if hit is None or hit[0] is not sys:
        hit = (sys, _gamma_tensor(sys))
        _GAMMA_CACHE[key] = hit
    return hit[1]


def mechanical_synthesis(sys: MechSystem, kin: KinematicPlan, omega_osc: float,
                         tol: float = DECOMP_TOL) -> MechanicalPlan:
    """Physical inputs that follow the stage-one velocity of ``kin``.

    ``omega_osc`` is the kinematic base frequency in Hz; product pair ``p``
    oscillates at ``(2p + 1)`` times ``MECH_RATIO`` times the larger of
    ``omega_osc`` and the fastest bracket frequency.  Only the control
    directions and their pairwise products are available, so a required
    force outside that span raises :class:`TrackingError`.
    """
    Y = sys.control_matrix
    n, k = Y.shape
    if k == 0:
        raise TrackingError("mechanical", "the system has no controls")
    base = orthonormal_basis([Y[:, a] for a in range(k)])
    perp = np.eye(n) - base @ base.T
    cands = []
    for a in range(k):
        for b in range(a + 1, k):
            d = np.asarray(symmetric_product(sys, Y[:, a], Y[:, b]), dtype=float)
            cands.append(((a, b), d))
    chosen = {key for key, _ in _independent_directions([(key, perp @ d) for key, d in cands], base)}
    dirs = [(key, d) for key, d in cands if key in chosen]
    G = np.column_stack([d for _, d in dirs]) if dirs else np.zeros((n, 0))
    mech_base = MECH_RATIO * max(omega_osc, kin.max_freq)

    def build(dirs_now, G_now):
        selfs = None
        if dirs_now:
            selfs = np.array([[np.asarray(symmetric_product(sys, Y[:, a], Y[:, a]), dtype=float),
                               np.asarray(symmetric_product(sys, Y[:, b], Y[:, b]), dtype=float)]
                              for (a, b), _ in dirs_now])
        pairs = [ProductPair(a, b, d, mech_base * _multiple(p),
                             min(RAMP_PERIODS / (mech_base * _multiple(p)), kin.curve.duration / 6))
                 for p, ((a, b), d) in enumerate(dirs_now)]
        return MechanicalPlan(sys, kin, pairs, _TwoLevel(Y, G_now), selfs, 0.0, mech_base)

    plan = build(dirs, G)
    ts = _sample_grid(kin.curve.duration, kin.max_freq)
    f = plan.required_force(ts)
    lam, rho, res = plan.coefficients(ts)
    scale = np.maximum(1.0, np.linalg.norm(f, axis=1))
    worst = float(np.max(res / scale))
    if worst > tol:
        raise TrackingError("mechanical", f"required force leaves the realizable span (residual {worst:.3g})", worst)
    active = [p for p in range(len(dirs)) if np.max(np.abs(rho[:, p])) > ACTIVE_TOL]
    if len(active) < len(dirs):
        dirs = [dirs[p] for p in active]
        G = np.column_stack([d for _, d in dirs]) if dirs else np.zeros((n, 0))
        plan = build(dirs, G)
    plan.residual = worst
    return plan


def _rk4_group(group: MatrixGroup, g0: np.ndarray, ts: np.ndarray, xi_nodes: np.ndarray,
               xi_mid: np.ndarray) -> np.ndarray:
    """``g' = g hat(xi(t))`` by RK4 with projection back onto the group."""
    H0 = group.hat(xi_nodes)
    Hm = group.hat(xi_mid)
    out = np.empty((len(ts),) + g0.shape)
    g = np.array(g0, dtype=float)
    out[0] = g
    for n in range(len(ts) - 1):
        h = ts[n + 1] - ts[n]
        k1 = g @ H0[n]
        k2 = (g + 0.5 * h * k1) @ Hm[n]
        k3 = (g + 0.5 * h * k2) @ Hm[n]
        k4 = (g + h * k3) @ H0[n + 1]
        g = group.project(g + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4))
        if not np.all(np.isfinite(g)):
            raise TrackingError("integration", f"kinematic flow became nonfinite at t = {ts[n + 1]:.6g}")
        out[n + 1] = g
    return out


def integrate_kinematic(plan: KinematicPlan, dt: float, g0: np.ndarray | None = None):
    """Stage-one configurations on the grid ``0, dt, ..., duration``."""
    curve = plan.curve
    ts = _time_grid(curve.duration, dt)
    g0 = curve.at(0.0) if g0 is None else g0
    xi = plan.velocity(ts)
    xim = plan.velocity(ts[:-1] + np.diff(ts) / 2)
    return ts, _rk4_group(curve.group, g0, ts, xi, xim)


def _time_grid(duration: float, dt: float) -> np.ndarray:
    n = int(math.ceil(duration / dt - 1e-9))
    ts = np.arange(n + 1) * dt
    ts[-1] = duration
    return ts


def _default_dt(max_freq: float, duration: float) -> float:
    return min(duration / 200, 1.0 / (STEPS_PER_PERIOD * max_freq))


@dataclass
class KinematicResult:
    """Driftless tracking on a matrix group (no mechanics involved)."""

    times: np.ndarray
    configs: np.ndarray
    errors: np.ndarray
    plan: KinematicPlan
    params: dict

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors))

    @property
    def final_error(self) -> float:
        return float(self.errors[-1])

    def summary(self) -> dict:
        return {"max_error": self.max_error, "final_error": self.final_error,
                "omega_osc": self.params["omega_osc"], "stage": "kinematic",
                "stage_residuals": {"kinematic": self.plan.residual}, "params": self.params}

    def write(self, outdir, stem: str = "track") -> tuple[Path, Path]:
        """CSV of time, row-major group matrix and error, plus the JSON summary."""
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
        N = self.configs.shape[1]
        header = ["t"] + [f"g{i + 1}{j + 1}" for i in range(N) for j in range(N)] + ["error"]
        rows = np.column_stack([self.times, self.configs.reshape(len(self.times), -1), self.errors])
        np.savetxt(csv_path, rows, delimiter=",", header=",".join(header), comments="", fmt="%.12g")
        json_path.write_text(json.dumps(self.summary(), indent=2))
        return csv_path, json_path


def track_kinematic(sys: MechSystem, curve: ReferenceCurve, omega_osc: float, dt: float | None = None,
                    level: int = 0) -> KinematicResult:
    """Track ``curve`` with the driftless system of the level-``level`` fields."""
    fam = z_family(sys, level)
    if fam.algebra != curve.group.algebra:
        raise TrackingError("kinematic", "curve and system live on different algebras")
    plan = kinematic_synthesis(fam, curve, omega_osc)
    dt = _default_dt(plan.max_freq, curve.duration) if dt is None else dt
    ts, gs = integrate_kinematic(plan, dt)
    ref = curve.matrix(ts)
    errs = np.array([curve.group.distance(a, b) for a, b in zip(ref, gs)])
    params = {"omega_osc": omega_osc, "dt": dt, "level": level,
              "brackets": [[p.a + 1, p.b + 1, p.freq] for p in plan.pairs]}
    return KinematicResult(ts, gs, errs, plan, params)


@dataclass
class TrackResult:
    """Outcome of :func:`track`; errors are sampled on the simulation grid."""

    controls: ControlSignal
    realized: Trajectory
    errors: np.ndarray
    params: dict
    budget: dict
    stage_residuals: dict
    strong: bool
    epsilon: float

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors))

    @property
    def success(self) -> bool:
        return self.max_error < self.epsilon

    def summary(self) -> dict:
        return {
            "max_error": self.max_error,
            "omega_osc": self.params["omega_osc"],
            "stage_residuals": self.stage_residuals,
            "error_budget": self.budget,
            "tracking": "strong" if self.strong else "configuration-only",
            "epsilon": None if math.isinf(self.epsilon) else self.epsilon,
            "success": self.success,
            "params": self.params,
        }

    def write(self, outdir, stem: str = "track") -> tuple[Path, Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
        self.realized.to_csv(csv_path)
        json_path.write_text(json.dumps(self.summary(), indent=2))
        return csv_path, json_path


def _candidate_plans(sys: MechSystem, curve: ReferenceCurve, omega_osc: float, levels: int):
    """Stage-one plans in order of preference: no brackets first, lowest level first."""
    fams = [z_family(sys, k) for k in range(levels)]
    for allow in (False, True):
        for k, fam in enumerate(fams):
            try:
                yield k, kinematic_synthesis(fam, curve, omega_osc, allow_brackets=allow)
            except TrackingError:
                continue


def track(sys: MechSystem, curve: ReferenceCurve, epsilon: float = math.inf, omega_osc: float = 1.0,
          dt: float | None = None, l_max: int = 3) -> TrackResult:
    """Analyze, synthesize both stages, simulate and measure the error.

    The stage-one family is the lowest level ``Z_k`` that reaches the curve
    velocity without brackets, otherwise the lowest one that reaches it with
    first-order brackets; a family is used only if stage two can realize it.
    The simulation starts at the reference configuration with the stage-one
    velocity.
    """
    require_se3(sys)
    if curve.group.name != "se3":
        raise TrackingError("analysis", "mechanical tracking needs an SE(3) curve")
    if not epsilon > 0:
        raise TrackingError("analysis", "epsilon must be positive")
    report = analyze_z(sys, l_max)
    if not report.positive:
        raise TrackingError("analysis", f"analyzer verdict is {report.verdict}")

    first_error = None
    kin = mech = None
    level = None
    for level, plan in _candidate_plans(sys, curve, omega_osc, l_max):
        try:
            mech = mechanical_synthesis(sys, plan, omega_osc)
            kin = plan
            break
        except TrackingError as exc:
            first_error = first_error or exc
    if mech is None:
        raise first_error or TrackingError("kinematic", "no field family reaches the curve velocity")

    dt = _default_dt(mech.max_freq, curve.duration) if dt is None else dt
    g0 = curve.at(0.0)
    xi0 = kin.velocity(np.array([0.0]))[0]
    s0 = GroupState.from_velocity(sys, g0[:3, :3], g0[:3, 3], xi0[:3], xi0[3:])
    u = mech.signal()
    realized = integrate(sys, s0, u, curve.duration, dt)

    ts = realized.times
    ref = curve.matrix(ts)
    grp = curve.group
    errors = np.array([grp.distance(ref[i], _homog(s.A, s.r)) for i, s in enumerate(realized.states)])

    _, g1 = integrate_kinematic(kin, dt, g0)
    _, g1_fine = integrate_kinematic(kin, dt / 2, g0)
    budget = {
        "kinematic": max(grp.distance(ref[i], g1[i]) for i in range(len(ts))),
        "mechanical": max(grp.distance(g1[i], _homog(s.A, s.r)) for i, s in enumerate(realized.states)),
        "integration": max(grp.distance(g1[i], g1_fine[2 * i]) for i in range(len(ts) - 1)),
    }
    params = {
        "omega_osc": omega_osc,
        "dt": dt,
        "kinematic_level": level,
        "brackets": [[p.a + 1, p.b + 1, p.freq] for p in kin.pairs],
        "products": [[p.a + 1, p.b + 1, p.freq] for p in mech.pairs],
        "regularization": REGULARIZATION,
        "mech_ratio": MECH_RATIO,
        "witness_level": report.witness_level,
        "verdict": report.verdict,
    }
    residuals = {"kinematic": kin.residual, "mechanical": mech.residual}
    return TrackResult(u, realized, errors, params, budget, residuals, not kin.uses_brackets, epsilon)


def _homog(A, r) -> np.ndarray:
    g = np.eye(4)
    g[:3, :3] = A
    g[:3, 3] = r
    return g


def _sweep_one(args):
    sys, curve, f, dt, kinematic, outdir = args
    res = track_kinematic(sys, curve, f, dt) if kinematic else track(sys, curve, math.inf, f, dt)
    if outdir is not None:
        res.write(outdir, f"run_{f:g}Hz")
    return res.summary()


def frequency_sweep(sys: MechSystem, curve: ReferenceCurve, f0: float, count: int,
                    dt: float | None = None, workers: int | None = None, outdir=None) -> list[dict]:
    """Summaries of runs at ``f0, 2 f0, ..., 2^(count-1) f0``.

    Runs are independent; ``workers`` (default ``SYMTRACK_THREADS`` or 1)
    processes run them concurrently.  Results come back in frequency order.
    Curves outside SE(3) are tracked kinematically.  With ``outdir`` every
    run also writes its CSV and JSON there.
    """
    kinematic = curve.group.name != "se3"
    jobs = [(sys, curve, f0 * 2**i, dt, kinematic, outdir) for i in range(count)]
    workers = int(os.environ.get("SYMTRACK_THREADS", "1")) if workers is None else workers
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=min(workers, count)) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]
