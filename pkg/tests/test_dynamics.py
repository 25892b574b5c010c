import math

import numpy as np
import pytest

from symtrack.dynamics import (
    ControlSignal,
    ControlTerm,
    GroupState,
    NumericalFailure,
    adstar_rhs,
    body_velocity,
    casimirs,
    csv_header,
    expm_so3,
    integrate,
    invariant_drift,
    kirchhoff_rhs,
    se3_distance,
)
from symtrack.liealg import hat
from symtrack.mech import InertiaTensor, MechSystem, submarine


def _state(sys, rng):
    mu = rng.normal(size=6)
    A = expm_so3(rng.normal(size=3))
    return GroupState(A, rng.normal(size=3), mu[:3], mu[3:])


def _spin_error(dt, t=1.0):
    s = submarine((1.0, 2.0, 3.0), (1.0, 1.0, 1.0))
    s0 = GroupState.from_velocity(s, np.eye(3), np.zeros(3), [0, 0, 1], [0, 0, 0])
    fin = integrate(s, s0, None, t, dt).final
    return se3_distance(fin, (expm_so3([0, 0, t]), np.zeros(3)))


def test_body_velocity_examples(rng):
    s = submarine((2.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    z = GroupState.identity()
    assert not np.any(np.concatenate(body_velocity(s, z)))
    st = GroupState(np.eye(3), np.zeros(3), [2, 0, 0], [0, 0, 0])
    assert np.allclose(body_velocity(s, st)[0], [1, 0, 0])
    g = submarine((1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    for _ in range(10):
        x = _state(g, rng)
        w, v = body_velocity(g, x)
        assert np.allclose(g.inertia.float_matrix @ np.concatenate([w, v]), x.impulse)


def test_steady_spin_has_no_impulse_rate():
    s = submarine((1.0, 2.0, 3.0), (1.0, 1.0, 1.0))
    st = GroupState.from_velocity(s, np.eye(3), np.zeros(3), [0, 0, 1.5], [0, 0, 0])
    rate = kirchhoff_rhs(s, st, [0, 0, 0])
    assert not np.any(rate.dPi) and not np.any(rate.dP)


def test_energy_rate_vanishes(rng):
    s = submarine((1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    for _ in range(50):
        st = _state(s, rng)
        w, v = body_velocity(s, st)
        r = kirchhoff_rhs(s, st, [0, 0, 0])
        assert abs(w @ r.dPi + v @ r.dP) < 1e-12


def test_control_injection_pattern():
    s = submarine((1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    st = GroupState.identity()
    r = kirchhoff_rhs(s, st, [1.0, 2.0, 3.0])
    assert np.allclose(r.dPi, [1, 2, 0]) and np.allclose(r.dP, [0, 0, 3])


def test_cross_product_form_matches_ad_star(rng):
    s = submarine((1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    for _ in range(100):
        st = _state(s, rng)
        u = rng.normal(size=3)
        r = kirchhoff_rhs(s, st, u)
        assert np.allclose(np.concatenate([r.dPi, r.dP]), adstar_rhs(s, st, u), atol=1e-12, rtol=0)


def test_spin_closed_form():
    assert _spin_error(1e-3) < 1e-6


def test_rk4_order():
    errs = [_spin_error(0.2 / 2**k, t=5.0) for k in range(4)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(r >= 12 for r in ratios), ratios


def test_lie_euler_agrees_to_first_order():
    s = submarine((1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    s0 = GroupState.from_velocity(s, np.eye(3), np.zeros(3), [0.3, 0.1, 1.0], [1, 0, 0.2])
    ref = integrate(s, s0, None, 1.0, 1e-3).final
    d1 = se3_distance(integrate(s, s0, None, 1.0, 2e-3, "lie_euler").final, ref)
    d2 = se3_distance(integrate(s, s0, None, 1.0, 1e-3, "lie_euler").final, ref)
    assert 1.5 < d1 / d2 < 2.5


def test_conservation_and_orthogonality(rng):
    s = submarine(rng.uniform(0.5, 3, 3), rng.uniform(0.5, 3, 3))
    mu = rng.normal(size=6)
    mu /= np.linalg.norm(mu)
    s0 = GroupState(np.eye(3), np.zeros(3), mu[:3], mu[3:])
    for method in ("rk4_reproject", "lie_euler"):
        traj = integrate(s, s0, None, 2.0, 1e-3, method)
        d = invariant_drift(s, traj)
        assert d["orthogonality"] < 1e-9
    d = invariant_drift(s, integrate(s, s0, None, 2.0, 1e-3))
    assert max(d["energy"], d["P_squared"], d["Pi_dot_P"]) < 1e-8


def test_thrust_breaks_momentum_conservation():
    s = submarine((1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    s0 = GroupState.from_velocity(s, np.eye(3), np.zeros(3), [0.1, 0.2, 0.3], [1, 0, 0])
    u = ControlSignal(3, [ControlTerm(2, "poly", (1.0,))])
    traj = integrate(s, s0, u, 1.0, 1e-2)
    assert abs(casimirs(traj.final)[0] - casimirs(s0)[0]) > 1e-3


def test_casimirs_zero_impulse():
    assert casimirs(GroupState(np.eye(3), np.zeros(3), [1, 2, 3], [0, 0, 0])) == (0.0, 0.0)


def test_distance_examples():
    a = GroupState.identity()
    assert se3_distance(a, a) == 0
    assert math.isclose(se3_distance(a, (np.eye(3), np.array([3.0, 4, 0]))), 5)
    assert math.isclose(se3_distance(a, (expm_so3([0, 0, math.pi / 2]), np.zeros(3))), math.pi / 2)


def test_state_invariants_enforced():
    with pytest.raises(ValueError):
        GroupState(2 * np.eye(3), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        GroupState(-np.eye(3), np.zeros(3), np.zeros(3), np.zeros(3))


def test_blow_up_reports_time():
    s = submarine((1.0, 1.0, 3.0), (2.0, 2.0, 6.0))
    u = ControlSignal(3, [ControlTerm(0, "poly", (0,) * 10 + (1e300,))])
    with pytest.raises(NumericalFailure) as exc:
        integrate(s, GroupState.identity(), u, 5.0, 1e-3)
    assert exc.value.time > 0


def test_control_signal_round_trip():
    u = ControlSignal(3, [ControlTerm(0, "poly", (1.0, 2.0)), ControlTerm(2, "osc", (0.5,), 3.0, 0.1)])
    v = ControlSignal.from_dict(u.to_dict())
    ts = np.linspace(0, 1, 7)
    assert np.allclose(u(ts), v(ts))
    assert np.isclose(u(0.5)[2], 0.5 * math.cos(2 * math.pi * 3.0 * 0.5 + 0.1))


def test_trajectory_csv(tmp_path):
    s = submarine((1.0, 1.0, 3.0), (2.0, 2.0, 6.0))
    traj = integrate(s, GroupState.identity(), None, 0.1, 0.01)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == csv_header(3)
    assert len(lines) == len(traj) + 1
    assert all(len(l.split(",")) == len(csv_header(3)) for l in lines[1:])


def test_simulation_requires_se3():
    from symtrack.liealg import heisenberg

    s = MechSystem(heisenberg(), InertiaTensor([1, 1, 1]), ([1, 0, 0],))
    with pytest.raises(ValueError):
        integrate(s, GroupState.identity(), None, 1.0, 0.1)
