from fractions import Fraction as F

import numpy as np
import pytest

from symtrack.liealg import bracket, se3
from symtrack.mech import InertiaTensor, MechSystem, connection, energy, gamma_constants, submarine, symmetric_product


def _generic(rng):
    d = rng.uniform(0.5, 3.0, size=6)
    return MechSystem(se3(), InertiaTensor(d))


def test_products_in_symmetric_regime():
    J1, M1 = F(2), F(3)
    s = submarine((J1, J1, 5), (M1, M1, 7))
    Y1, Y2, Y3 = s.controls
    assert list(symmetric_product(s, Y1, Y2)) == [0] * 6
    assert list(symmetric_product(s, Y1, Y3)) == [0, 0, 0, 0, -1 / (J1 * M1), 0]
    assert list(symmetric_product(s, Y2, Y3)) == [0, 0, 0, 1 / (J1 * M1), 0, 0]


def test_basis_self_products_vanish():
    s = submarine((1, 2, 3), (4, 5, 6))
    for j in range(6):
        e = s.algebra.basis(j, exact=True)
        assert not any(symmetric_product(s, e, e))


def test_gamma_examples():
    J, M = (F(1), F(2), F(3)), (F(4), F(5), F(6))
    g = gamma_constants(submarine(J, M))
    assert g[(2, 1, 0)] == (J[2] - J[1]) / J[0]
    assert g[(1, 3, 5)] == -M[0] / M[2]
    assert g[(1, 5, 3)] == F(3, 2)
    assert len(g) == 24


def test_gamma_agrees_with_product(rng):
    s = _generic(rng)
    g = gamma_constants(s)
    for i in range(6):
        for j in range(6):
            p = symmetric_product(s, np.eye(6)[i], np.eye(6)[j])
            for k in range(6):
                assert abs(p[k] - g.get((i, j, k), 0.0)) < 1e-12


def test_symmetry_and_polarization(rng):
    s = _generic(rng)
    for _ in range(50):
        x, y = rng.normal(size=(2, 6))
        assert np.array_equal(symmetric_product(s, x, y), symmetric_product(s, y, x))
        pol = 0.5 * (symmetric_product(s, x + y, x + y) - symmetric_product(s, x, x) - symmetric_product(s, y, y))
        assert np.allclose(symmetric_product(s, x, y), pol, atol=1e-12)
        a = rng.normal()
        assert np.allclose(symmetric_product(s, a * x, a * x), a * a * symmetric_product(s, x, x), atol=1e-12)


def test_connection_recovers_product_and_bracket(rng):
    s = _generic(rng)
    for _ in range(100):
        x, y = rng.normal(size=(2, 6))
        nxy, nyx = connection(s, x, y), connection(s, y, x)
        assert np.allclose(nxy + nyx, symmetric_product(s, x, y), atol=1e-12)
        assert np.allclose(nxy - nyx, bracket(s.algebra, x, y), atol=1e-12)
        assert np.allclose(connection(s, x, x), 0.5 * symmetric_product(s, x, x), atol=1e-12)


def test_connection_e1_e1_is_zero():
    s = submarine((1, 2, 3), (4, 5, 6))
    e1 = s.algebra.basis(0, exact=True)
    assert not any(connection(s, e1, e1))


def test_energy(rng):
    s = submarine((1, 2, 3), (4, 5, 6))
    assert energy(s, [0] * 6) == 0
    assert energy(s, [1, 0, 0, 0, 0, 0]) == F(1, 2)
    g = _generic(rng)
    for _ in range(20):
        assert energy(g, rng.normal(size=6)) > 0


def test_inertia_must_be_spd():
    with pytest.raises(ValueError):
        InertiaTensor([1, -1, 1])
    with pytest.raises(ValueError):
        InertiaTensor([[1, 2], [0, 1]])


def test_control_length_checked():
    with pytest.raises(ValueError):
        MechSystem(se3(), InertiaTensor([1] * 6), ([1, 0, 0],))
