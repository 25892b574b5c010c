from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symtrack.liealg import LieAlgebra, abelian, ad_star, bracket, hat, heisenberg, jacobi_defect, se3, vee

vec6 = st.lists(st.floats(-10, 10, allow_nan=False), min_size=6, max_size=6).map(np.array)


def _block(x):
    m = np.zeros((4, 4))
    m[:3, :3] = hat(x[:3])
    m[:3, 3] = x[3:]
    return m


def test_basis_bracket_e2_e3_is_e1():
    g = se3()
    assert list(bracket(g, g.basis(1), g.basis(2))) == [1, 0, 0, 0, 0, 0]


def test_selected_constants():
    g = se3()
    assert g.constant(2, 3, 4) == 1  # c^5_34
    assert g.constant(1, 3, 5) == -1  # c^6_24
    assert len(g.constants) == 18


def test_unlisted_constants_vanish():
    g = se3()
    plus = {(2, 3, 1), (3, 1, 2), (1, 2, 3), (2, 6, 4), (5, 3, 4), (3, 4, 5), (6, 1, 5), (1, 5, 6), (4, 2, 6)}
    listed = plus | {(j, i, k) for i, j, k in plus}
    for i in range(1, 7):
        for j in range(1, 7):
            for k in range(1, 7):
                if (i, j, k) not in listed:
                    assert g.constant(i - 1, j - 1, k - 1) == 0


def test_torque_bracket_for_equal_roll_pitch_inertia():
    g = se3()
    J = Fraction(2)
    y1 = np.array([1 / J, 0, 0, 0, 0, 0], dtype=object)
    y2 = np.array([0, 1 / J, 0, 0, 0, 0], dtype=object)
    out = bracket(g, y1, y2)
    assert list(out) == [0, 0, Fraction(1, 4), 0, 0, 0]


@settings(max_examples=50, deadline=None)
@given(vec6, vec6)
def test_bracket_antisymmetric(x, y):
    g = se3()
    assert np.allclose(bracket(g, x, y), -bracket(g, y, x), atol=1e-12)
    assert np.allclose(bracket(g, x, x), 0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(vec6, vec6, vec6, st.floats(-3, 3))
def test_bracket_bilinear(x, y, z, a):
    g = se3()
    assert np.allclose(bracket(g, a * x + z, y), a * bracket(g, x, y) + bracket(g, z, y), atol=1e-9)


def test_bracket_matches_matrix_commutator(rng):
    g = se3()
    for _ in range(100):
        x, y = rng.normal(size=6), rng.normal(size=6)
        X, Y = _block(x), _block(y)
        assert np.allclose(_block(bracket(g, x, y)), X @ Y - Y @ X, atol=1e-12)


def test_ad_star_defining_identity(rng):
    g = se3()
    for _ in range(100):
        x, y, alpha = rng.normal(size=(3, 6))
        assert abs(ad_star(g, x, alpha) @ y - alpha @ bracket(g, x, y)) < 1e-12


def test_ad_star_basis_example():
    # brute force: (ad*_x alpha)_j = alpha([x, e_j])
    g = se3()
    x, alpha = g.basis(0, exact=True), g.basis(1, exact=True)
    expect = [alpha @ bracket(g, x, g.basis(j, exact=True)) for j in range(6)]
    out = ad_star(g, x, alpha)
    assert list(out) == expect
    assert list(out) == [0, 0, -1, 0, 0, 0]  # c^2_13 = -1


def test_ad_star_of_zero():
    g = se3()
    assert not np.any(ad_star(g, np.zeros(6), np.arange(6.0)))


def test_jacobi_se3_and_heisenberg():
    assert jacobi_defect(se3()) < 1e-14
    assert jacobi_defect(heisenberg()) == 0


def test_missing_partner_rejected_in_strict_mode():
    with pytest.raises(ValueError):
        LieAlgebra(3, {(1, 2, 0): 1}, strict=True)


def test_inconsistent_partner_rejected():
    with pytest.raises(ValueError):
        LieAlgebra(3, {(1, 2, 0): 1, (2, 1, 0): 1})


def test_perturbed_constants_break_jacobi(rng):
    consts = {k: float(v) + 1e-3 * rng.normal() for k, v in se3().constants.items() if k[0] < k[1]}
    assert jacobi_defect(LieAlgebra(6, consts)) > 0


def test_abelian_brackets_vanish(rng):
    g = abelian(4)
    assert not np.any(bracket(g, rng.normal(size=4), rng.normal(size=4)))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        bracket(se3(), np.zeros(5), np.zeros(6))


def test_hat_matches_cross_product(rng):
    assert hat([1, 0, 0]).tolist() == [[0, 0, 0], [0, 0, -1], [0, 1, 0]]
    for _ in range(20):
        x, y = rng.normal(size=(2, 3))
        assert np.allclose(hat(x) @ x, 0, atol=1e-14)
        assert np.allclose(hat(x) @ y, -hat(y) @ x)
        assert np.allclose(hat(x) @ y, np.cross(x, y))
        assert np.allclose(vee(hat(x)), x)
