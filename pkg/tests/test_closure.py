from fractions import Fraction as F

import numpy as np

from symtrack.closure import (
    FieldFamily,
    analyze_z,
    condition3_check,
    in_span,
    is_kinematic_reduction,
    lie_closure,
    span_rank,
    sym1,
    trackable_curve_z,
    z_family,
)
from symtrack.curves import builtin_curve
from symtrack.liealg import abelian, se3
from symtrack.mech import InertiaTensor, MechSystem, submarine


def _random_system(rng, n=4, k=2):
    # a 4-dim algebra: direct sum of the Heisenberg algebra with a line
    from symtrack.liealg import LieAlgebra

    g = LieAlgebra(4, {(0, 1, 2): 1})
    A = rng.normal(size=(n, n))
    M = A @ A.T + n * np.eye(n)
    return MechSystem(g, InertiaTensor(M), tuple(rng.normal(size=(k, n))))


def test_level_zero_is_control_list(sub_sym):
    fam = z_family(sub_sym, 0)
    assert len(fam) == 3
    assert all(np.array_equal(a, b) for a, b in zip(fam.members, sub_sym.controls))


def test_level_one_symmetric_members(sub_sym):
    fam = z_family(sub_sym, 1)
    assert len(fam) == 5
    J1, M1 = F(1), F(2)
    extra = [list(m) for m in fam.members[3:]]
    assert [0, 0, 0, 0, -1 / (J1 * M1), 0] in extra
    assert [0, 0, 0, 1 / (J1 * M1), 0, 0] in extra
    assert span_rank(z_family(sub_sym, 2)) == 5


def test_span_rank_examples(sub_sym):
    assert span_rank(z_family(sub_sym, 0)) == 3
    assert span_rank(z_family(sub_sym, 1)) == 5
    assert span_rank(z_family(sub_sym, 1), exact=True) == 5
    assert span_rank(FieldFamily(sub_sym, [], [], 0)) == 0


def test_condition3_symmetric_all_levels(sub_sym):
    assert condition3_check(sub_sym, 3) == [True, True, True]


def test_condition3_single_control():
    s = MechSystem(se3(), InertiaTensor([1, 2, 3, 4, 5, 6]), ([1, 0, 0, 0, 0, 0],))
    assert condition3_check(s, 1) == [True]


def test_lie_closure_examples(sub_sym):
    assert span_rank(lie_closure(z_family(sub_sym, 1))) == 6
    s = MechSystem(se3(), InertiaTensor([1] * 6), ([1, 0, 0, 0, 0, 0],))
    assert span_rank(lie_closure(z_family(s, 0))) == 1


def test_lie_closure_abelian(rng):
    s = MechSystem(abelian(4), InertiaTensor([1, 2, 3, 4]), tuple(rng.normal(size=(2, 4))))
    fam = z_family(s, 0)
    assert span_rank(lie_closure(fam)) == span_rank(fam) == 2


def test_sym1_examples(sub_sym):
    assert span_rank(sym1(sub_sym, z_family(sub_sym, 0))) == 5
    x = np.array([1.0, 1, 0, 1, 0, 0])
    s = MechSystem(se3(), InertiaTensor([1, 2, 3, 4, 5, 6]), (x,))
    fam = sym1(s, z_family(s, 0))
    assert span_rank(fam) == 2


def test_sym1_matches_next_level(rng, sub_sym, sub_asym):
    for s in (sub_sym, sub_asym, _random_system(rng)):
        for l in (1, 2, 3):
            a = sym1(s, z_family(s, l - 1)).basis()
            b = z_family(s, l).basis()
            assert a.shape == b.shape
            assert all(in_span(b, a[:, i]) for i in range(a.shape[1]))


def test_pruned_and_unpruned_spans_agree(rng):
    for _ in range(3):
        s = _random_system(rng)
        for l in range(4):
            assert span_rank(z_family(s, l)) == span_rank(z_family(s, l, prune=False))


def test_spans_monotone(sub_asym):
    ranks = [span_rank(z_family(sub_asym, l)) for l in range(4)]
    assert ranks == sorted(ranks) and ranks[-1] <= 6


def test_kinematic_reduction(sub_sym, sub_asym):
    for s in (sub_sym, sub_asym):
        for l in (1, 2, 3):
            assert is_kinematic_reduction(z_family(s, l), z_family(s, l - 1))
    x = np.array([1.0, 1, 0, 1, 0, 0])
    s = MechSystem(se3(), InertiaTensor([1, 2, 3, 4, 5, 6]), (x,))
    fam = z_family(s, 0)
    assert not is_kinematic_reduction(fam, fam)
    assert is_kinematic_reduction(fam, FieldFamily(s, [], [], 0))


def test_analyze_symmetric(sub_sym):
    rep = analyze_z(sub_sym)
    assert rep.verdict == "CTP_by_Z"
    assert rep.witness_level == 1
    assert rep.level(1).span_dim == 5 and rep.level(1).lie_dim == 6


def test_analyze_asymmetric(sub_asym):
    rep = analyze_z(sub_asym)
    assert rep.verdict == "SCTP_by_trackZ"
    assert rep.witness_level == 2
    assert rep.level(2).span_dim == 6


def test_asymmetric_level_from_gamma_table():
    # brute force straight from the gamma table: M1 != M2 turns on e3 at level 2
    from symtrack.selftest import GOLDEN_GAMMA

    J, M = (F(1), F(1), F(1)), (F(4), F(5), F(6))
    full = {key: f(J, M) for key, f in GOLDEN_GAMMA.items()}

    def prod(x, y):
        out = [F(0)] * 6
        for (i, j, k), v in full.items():
            out[k - 1] += v * x[i - 1] * y[j - 1]
        return out

    Y = [[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 0, 0, 0, F(1, 6)]]
    levels = [Y]
    for _ in range(2):
        prev = levels[-1]
        levels.append(prev + [prod(a, b) for a in prev for b in prev])
    ranks = [np.linalg.matrix_rank(np.array(L, dtype=float)) for L in levels]
    assert ranks == [3, 5, 6]


def test_zero_controls_inconclusive():
    s = MechSystem(se3(), InertiaTensor([1] * 6), ())
    assert analyze_z(s).verdict == "inconclusive"


def test_report_dims_monotone(sub_asym):
    rep = analyze_z(sub_asym)
    spans = [r.span_dim for r in rep.levels]
    assert spans == sorted(spans)
    assert rep.to_dict()["schema"] == "symtrack.analysis/1"


def test_trackable_curve(sub_sym):
    rep = analyze_z(sub_sym)
    assert trackable_curve_z(sub_sym, builtin_curve("helix", radius=1.0, pitch=0.5), rep)


def test_trackable_curve_rank_deficient():
    # one control e1: the closure is span{e1}; a pure translation leaves it
    s = MechSystem(se3(), InertiaTensor([1] * 6), ([1, 0, 0, 0, 0, 0],), drift_const=[0] * 6)
    from symtrack.closure import AnalysisReport

    rep = AnalysisReport(6, [], "CTP_by_Z", 1, True)
    assert not trackable_curve_z(s, builtin_curve("line"), rep)
