"""Finite-dimensional Lie algebras given by structural constants.

Constants are stored sparsely as ``{(i, j, k): c}`` meaning
``[e_i, e_j] = sum_k c^k_ij e_k`` with 0-based indices.  Values may be
``int``/``Fraction`` (exact mode) or floats; in exact mode every operation
below returns ``Fraction`` entries when its inputs are exact as well.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "LieAlgebra",
    "as_vector",
    "is_exact",
    "bracket",
    "ad_star",
    "jacobi_defect",
    "se3",
    "heisenberg",
    "abelian",
    "hat",
    "vee",
]


def _exact_value(v) -> bool:
    return isinstance(v, Rational) and not isinstance(v, bool)


def is_exact(x) -> bool:
    """True when every entry of ``x`` is an int or Fraction."""
    arr = np.asarray(x, dtype=object).ravel()
    return all(_exact_value(v) for v in arr)


def as_vector(x, exact: bool = False) -> np.ndarray:
    """Coerce ``x`` to a 1-d coefficient array (object/Fraction or float)."""
    if exact:
        return np.array([Fraction(v) for v in np.asarray(x, dtype=object).ravel()], dtype=object)
    return np.asarray(x, dtype=float).ravel()


class LieAlgebra:
    """Lie algebra of dimension ``dim`` with sparse structural constants.

    The antisymmetric partner ``c^k_ji = -c^k_ij`` is filled in automatically.
    Supplying both halves with values that do not cancel raises ``ValueError``,
    as does a nonzero ``c^k_ii``.  With ``strict=True`` every entry must be
    supplied together with its partner (useful for transcribed tables).
    """

    def __init__(
        self,
        dim: int,
        constants: Mapping[tuple[int, int, int], object],
        labels: Sequence[str] | None = None,
        strict: bool = False,
    ):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.labels = tuple(labels) if labels is not None else tuple(f"e{i + 1}" for i in range(dim))
        if len(self.labels) != self.dim:
            raise ValueError("one label per basis vector is required")

        table: dict[tuple[int, int, int], object] = {}
        given = {}
        for key, value in constants.items():
            i, j, k = (int(a) for a in key)
            if not all(0 <= a < dim for a in (i, j, k)):
                raise ValueError(f"index out of range in constant {key}")
            if value == 0:
                continue
            if i == j:
                raise ValueError(f"c^{k + 1}_{i + 1}{j + 1} must vanish (antisymmetry)")
            given[(i, j, k)] = value

        for (i, j, k), value in given.items():
            partner = given.get((j, i, k))
            if partner is None:
                if strict:
                    raise ValueError(
                        f"c^{k + 1}_{i + 1}{j + 1} given without its antisymmetric partner "
                        f"c^{k + 1}_{j + 1}{i + 1}"
                    )
            elif partner != -value:
                raise ValueError(
                    f"inconsistent constants: c^{k + 1}_{i + 1}{j + 1}={value} but "
                    f"c^{k + 1}_{j + 1}{i + 1}={partner}"
                )
            table[(i, j, k)] = value
            table[(j, i, k)] = -value

        # an explicit zero partner is just as inconsistent as a wrong one
        for (i, j, k) in given:
            if (j, i, k) in constants and constants[(j, i, k)] == 0:
                raise ValueError(f"c^{k + 1}_{j + 1}{i + 1} is zero but its partner is not")

        self.exact = all(_exact_value(v) for v in table.values())
        if self.exact:
            table = {key: Fraction(v) for key, v in table.items()}
        else:
            table = {key: float(v) for key, v in table.items()}
        self._constants = dict(sorted(table.items()))

        dense = np.zeros((dim, dim, dim))
        for (i, j, k), value in self._constants.items():
            dense[i, j, k] = float(value)
        dense.setflags(write=False)
        self.tensor = dense
        self._exact_tensor = None

    @property
    def constants(self) -> dict[tuple[int, int, int], object]:
        """Nonzero constants, both antisymmetric halves included."""
        return dict(self._constants)

    def constant(self, i: int, j: int, k: int):
        """``c^k_ij`` (0-based).  Zero when absent."""
        return self._constants.get((i, j, k), Fraction(0) if self.exact else 0.0)

    def exact_tensor(self) -> np.ndarray:
        """Dense object array of Fractions; only meaningful in exact mode."""
        if self._exact_tensor is None:
            out = np.full((self.dim,) * 3, Fraction(0), dtype=object)
            for (i, j, k), value in self._constants.items():
                out[i, j, k] = Fraction(value)
            out.setflags(write=False)
            self._exact_tensor = out
        return self._exact_tensor

    def basis(self, i: int, exact: bool | None = None) -> np.ndarray:
        exact = self.exact if exact is None else exact
        e = as_vector(np.zeros(self.dim, dtype=int), exact=exact)
        e[i] = Fraction(1) if exact else 1.0
        return e

    def check(self, x) -> np.ndarray:
        arr = np.asarray(x)
        if arr.ndim != 1 or arr.shape[0] != self.dim:
            raise ValueError(f"expected a vector of length {self.dim}, got shape {arr.shape}")
        return arr

    def to_records(self) -> list[dict]:
        """1-based ``{i, j, k, value}`` records, one per i<j pair."""
        recs = []
        for (i, j, k), value in self._constants.items():
            if i < j:
                v = value if not isinstance(value, Fraction) else (
                    int(value) if value.denominator == 1 else str(value))
                recs.append({"i": i + 1, "j": j + 1, "k": k + 1, "value": v})
        return recs

    def __eq__(self, other):
        return isinstance(other, LieAlgebra) and self.dim == other.dim and self._constants == other._constants

    def __hash__(self):
        return hash((self.dim, tuple(self._constants.items())))

    def __repr__(self):
        return f"LieAlgebra(dim={self.dim}, nonzero={len(self._constants)}, exact={self.exact})"


def _use_exact(g: LieAlgebra, *vecs) -> bool:
    return g.exact and all(is_exact(v) for v in vecs)


def bracket(g: LieAlgebra, x, y) -> np.ndarray:
    """``[x, y]^k = sum_ij c^k_ij x^i y^j``."""
    g.check(x)
    g.check(y)
    if _use_exact(g, x, y):
        x, y = as_vector(x, exact=True), as_vector(y, exact=True)
        out = as_vector([0] * g.dim, exact=True)
        for (i, j, k), c in g._constants.items():
            if x[i] and y[j]:
                out[k] += c * x[i] * y[j]
        return out
    return np.einsum("ijk,i,j->k", g.tensor, np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def ad_star(g: LieAlgebra, x, alpha) -> np.ndarray:
    """Coadjoint action, ``(ad*_x alpha)(y) = alpha([x, y])``."""
    g.check(x)
    g.check(alpha)
    if _use_exact(g, x, alpha):
        x, alpha = as_vector(x, exact=True), as_vector(alpha, exact=True)
        out = as_vector([0] * g.dim, exact=True)
        for (i, j, k), c in g._constants.items():
            if x[i] and alpha[k]:
                out[j] += c * x[i] * alpha[k]
        return out
    return np.einsum("ijk,i,k->j", g.tensor, np.asarray(x, dtype=float), np.asarray(alpha, dtype=float))


def jacobi_defect(g: LieAlgebra) -> float:
    """Largest absolute Jacobi sum over all index quadruples (0 for a Lie algebra)."""
    C = g.exact_tensor() if g.exact else g.tensor
    # J[i,j,k,m] = sum_l c^l_ij c^m_lk + c^l_jk c^m_li + c^l_ki c^m_lj
    t1 = np.einsum("ijl,lkm->ijkm", C, C)
    total = t1 + np.einsum("jkl,lim->ijkm", C, C) + np.einsum("kil,ljm->ijkm", C, C)
    if total.size == 0:
        return 0.0
    return float(max(abs(v) for v in total.ravel()))


def _cyclic_constants(triples: Iterable[tuple[int, int, int]]):
    return {(i - 1, j - 1, k - 1): 1 for i, j, k in triples}


def se3() -> LieAlgebra:
    """se(3) in the basis (rotations e1..e3, translations e4..e6), exact."""
    consts = _cyclic_constants([
        (2, 3, 1), (3, 1, 2), (1, 2, 3),
        (2, 6, 4), (5, 3, 4), (3, 4, 5), (6, 1, 5), (1, 5, 6), (4, 2, 6),
    ])
    return LieAlgebra(6, consts, labels=[f"e{i}" for i in range(1, 7)])


def heisenberg() -> LieAlgebra:
    """Three-dimensional Heisenberg algebra, [X1, X2] = X3."""
    return LieAlgebra(3, {(0, 1, 2): 1}, labels=["X1", "X2", "X3"])


def abelian(dim: int) -> LieAlgebra:
    return LieAlgebra(dim, {})


def hat(x) -> np.ndarray:
    """Skew matrix with ``hat(x) @ y == cross(x, y)``."""
    x1, x2, x3 = np.asarray(x).ravel()
    return np.array([[0 * x1, -x3, x2], [x3, 0 * x1, -x1], [-x2, x1, 0 * x1]])


def vee(S) -> np.ndarray:
    """Inverse of :func:`hat` (uses the antisymmetric part)."""
    S = np.asarray(S)
    return 0.5 * np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]])
