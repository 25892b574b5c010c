import numpy as np
import pytest

from symtrack.closure import in_span, span_rank, z_family
from symtrack.cones import PolyCone, analyze_k, cone_member, k_cone, k_cones, lineality_of, sphere_samples
from symtrack.liealg import se3
from symtrack.mech import InertiaTensor, MechSystem, symmetric_product


def test_zero_is_member():
    c = PolyCone(3, [np.array([1.0, 0, 0])])
    assert cone_member(c, np.zeros(3))


def test_lineality_examples():
    e1 = np.array([1.0, 0, 0])
    assert PolyCone(3, [e1, -e1]).lineality_dim == 1
    assert PolyCone(3, [e1]).lineality_dim == 0
    ray = PolyCone(3, [e1])
    assert cone_member(ray, 2 * e1) and not cone_member(ray, -e1)


def test_lineality_vectors_are_two_sided(sub_sym):
    c = k_cone(sub_sym, 1, 50)
    L = c.lineality
    for a in range(L.shape[1]):
        assert cone_member(c, L[:, a]) and cone_member(c, -L[:, a])


def test_level_one_contains_both_translation_directions(sub_sym):
    c = k_cone(sub_sym, 1, 20)
    for j in (3, 4):
        e = np.eye(6)[j]
        assert cone_member(c, e) and cone_member(c, -e)
    assert c.lineality_dim == 5
    assert not cone_member(c, np.eye(6)[2])


def test_level_zero_is_control_span(sub_sym):
    c = k_cone(sub_sym, 0)
    assert c.lineality_dim == 3
    for j in (0, 1, 5):
        assert in_span(c.lineality, np.eye(6)[j])


def test_zero_products_leave_cone_unchanged():
    s = MechSystem(se3(), InertiaTensor([1] * 6), ([1, 0, 0, 0, 0, 0],))
    c0, c1 = k_cones(s, 1, 16)
    assert c1.lineality_dim == c0.lineality_dim == 1
    assert c1.hull_dim == 1


def test_rays_are_reconstructible(sub_asym):
    cones = k_cones(sub_asym, 2, 60)
    rng = np.random.default_rng(0)
    c = cones[2]
    syms = [i for i, o in enumerate(c.origins) if o[0] == "sym"]
    for i in rng.choice(syms, size=min(20, len(syms)), replace=False):
        z = c.origins[i][1]
        assert in_span(cones[1].lineality, z, tol=1e-10)
        assert np.allclose(c.rays[i], -symmetric_product(sub_asym, z, z), atol=1e-10)


def test_lineality_monotone_in_samples(sub_asym):
    dims = [k_cone(sub_asym, 2, s).lineality_dim for s in (2, 8, 32, 128)]
    assert dims == sorted(dims)


def test_sphere_samples_unit_and_deterministic():
    a = sphere_samples(4, 30, seed=3)
    assert np.allclose(np.linalg.norm(a, axis=1), 1)
    assert np.array_equal(a, sphere_samples(4, 30, seed=3))


def test_cone_has_no_base_point_argument():
    import inspect

    assert "q" not in inspect.signature(k_cone).parameters


def test_analyze_k_regimes(sub_sym):
    rep = analyze_k(sub_sym, 3, 100)
    assert rep.verdict == "CTP_by_K" and rep.witness_level == 1
    s6 = MechSystem(se3(), InertiaTensor([1, 2, 3, 4, 5, 6]), tuple(np.eye(6)))
    assert analyze_k(s6, 2).witness_level == 1
    s0 = MechSystem(se3(), InertiaTensor([1] * 6), ())
    assert analyze_k(s0, 2).verdict == "inconclusive"


def test_cone_span_agreement(sub_sym, sub_asym):
    for s in (sub_sym, sub_asym):
        for l, c in enumerate(k_cones(s, 2, 200)):
            Z = z_family(s, l).basis()
            assert c.lineality_dim == Z.shape[1] == span_rank(z_family(s, l))
            assert c.is_subspace
            assert all(in_span(Z, c.lineality[:, a], tol=1e-8) for a in range(c.lineality_dim))


def test_dimension_checked():
    with pytest.raises(ValueError):
        cone_member(PolyCone(3, [np.ones(3)]), np.ones(2))
    with pytest.raises(ValueError):
        PolyCone(3, [np.zeros(3)])
