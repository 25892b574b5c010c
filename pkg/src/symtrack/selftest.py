"""Exact regression checks against the published se(3) tables.

The golden values below are transcribed independently of :mod:`liealg` and
:mod:`mech`; the library's own output is compared to them entry by entry in
rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as F

import numpy as np

from .liealg import LieAlgebra, bracket, se3
from .mech import InertiaTensor, MechSystem, gamma_constants, submarine, symmetric_product

__all__ = ["GOLDEN_C", "GOLDEN_GAMMA", "TEST_INERTIA", "Mismatch", "SelfTestReport", "run_selftest"]

# c^k_ij = +1 for these (i, j, k), 1-based; the partners (j, i, k) are -1
_C_PLUS = [(2, 3, 1), (3, 1, 2), (1, 2, 3), (2, 6, 4), (5, 3, 4), (3, 4, 5), (6, 1, 5), (1, 5, 6), (4, 2, 6)]
GOLDEN_C = {**{t: 1 for t in _C_PLUS}, **{(j, i, k): -1 for i, j, k in _C_PLUS}}

# gamma^k_ij as functions of (J1, J2, J3, M1, M2, M3); listed once, symmetric in (i, j)
_GAMMA_HALF = {
    (3, 2, 1): lambda J, M: (J[2] - J[1]) / J[0],
    (5, 6, 1): lambda J, M: (M[2] - M[1]) / J[0],
    (3, 1, 2): lambda J, M: (J[0] - J[2]) / J[1],
    (4, 6, 2): lambda J, M: (M[0] - M[2]) / J[1],
    (2, 1, 3): lambda J, M: (J[1] - J[0]) / J[2],
    (4, 5, 3): lambda J, M: (M[1] - M[0]) / J[2],
    (2, 6, 4): lambda J, M: M[2] / M[0],
    (3, 5, 4): lambda J, M: -M[1] / M[0],
    (1, 6, 5): lambda J, M: -M[2] / M[1],
    (3, 4, 5): lambda J, M: M[0] / M[1],
    (1, 5, 6): lambda J, M: M[1] / M[2],
    (2, 4, 6): lambda J, M: -M[0] / M[2],
}
GOLDEN_GAMMA = {**_GAMMA_HALF, **{(j, i, k): f for (i, j, k), f in _GAMMA_HALF.items()}}

TEST_INERTIA = tuple(F(v) for v in (1, 2, 3, 4, 5, 6))
# symmetric regime used for the product list: J1 = J2, M1 = M2
SYMMETRIC_J = (F(2), F(2), F(5))
SYMMETRIC_M = (F(3), F(3), F(7))


@dataclass
class Mismatch:
    entry: str
    expected: object
    found: object

    def __str__(self):
        return f"{self.entry}: expected {self.expected}, found {self.found}"


@dataclass
class SelfTestReport:
    checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def expect(self, entry: str, expected, found):
        self.checked += 1
        if expected != found:
            self.mismatches.append(Mismatch(entry, expected, found))


def _fmt(v) -> str:
    v = F(v)
    return str(v.numerator) if v.denominator == 1 else str(v)


def _vec_equal(a, b) -> bool:
    return len(a) == len(b) and all(F(x) == F(y) for x, y in zip(a, b))


def run_selftest(algebra: LieAlgebra | None = None) -> SelfTestReport:
    """Compare structure constants, symmetric products and one bracket to the tables.

    ``algebra`` defaults to the library's se(3); passing a modified copy is
    how a corrupted table is detected.
    """
    g = se3() if algebra is None else algebra
    rep = SelfTestReport()

    consts = g.constants
    for i in range(1, 7):
        for j in range(1, 7):
            for k in range(1, 7):
                want = F(GOLDEN_C.get((i, j, k), 0))
                have = F(consts.get((i - 1, j - 1, k - 1), 0))
                if want or have:
                    rep.expect(f"c^{k}_{i}{j}", _fmt(want), _fmt(have))

    J, M = TEST_INERTIA[:3], TEST_INERTIA[3:]
    sysg = MechSystem(g, InertiaTensor(list(TEST_INERTIA)))
    gam = gamma_constants(sysg)
    for i in range(1, 7):
        for j in range(1, 7):
            for k in range(1, 7):
                f = GOLDEN_GAMMA.get((i, j, k))
                want = F(0) if f is None else f(J, M)
                have = F(gam.get((i - 1, j - 1, k - 1), 0))
                if want or have:
                    rep.expect(f"gamma^{k}_{i}{j}", _fmt(want), _fmt(have))

    # symmetric regime: product list and the torque bracket
    J, M = SYMMETRIC_J, SYMMETRIC_M
    base = submarine(J, M)
    sub = MechSystem(g, base.inertia, base.controls)
    Y1, Y2, Y3 = sub.controls
    e = [g.basis(i, exact=True) for i in range(6)]
    zero = [F(0)] * 6
    c = 1 / (J[0] * M[0])
    checks = [
        ("<Y1:Y2>", zero, symmetric_product(sub, Y1, Y2)),
        ("<Y1:Y3>", [-c * x for x in e[4]], symmetric_product(sub, Y1, Y3)),
        ("<Y2:Y3>", [c * x for x in e[3]], symmetric_product(sub, Y2, Y3)),
        ("[Y1,Y2]", [x / J[0] ** 2 for x in e[2]], bracket(g, Y1, Y2)),
    ]
    checks += [(f"<e{j + 1}:e{j + 1}>", zero, symmetric_product(sub, e[j], e[j])) for j in range(6)]
    for name, want, have in checks:
        want = [F(x) for x in want]
        have = [F(x) for x in np.asarray(have, dtype=object)]
        rep.expect(name, [_fmt(x) for x in want], [_fmt(x) for x in have])
    return rep
