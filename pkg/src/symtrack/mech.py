"""Invariant mechanical structure on a Lie algebra.

A :class:`MechSystem` is a forced affine connection control system whose
fields are all left-invariant: a kinetic-energy metric given by an inertia
tensor, control directions ``Y_a`` and a drift ``Y(v) = Y0 + D v`` written in
body coordinates.  The connection is the Levi-Civita connection of the
invariant metric; the symmetric product is evaluated through the coadjoint
action, Christoffel symbols are never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .liealg import LieAlgebra, ad_star, as_vector, bracket, is_exact, se3

__all__ = [
    "InertiaTensor",
    "MechSystem",
    "symmetric_product",
    "gamma_constants",
    "connection",
    "energy",
    "submarine",
]


def _exact_inverse(M: np.ndarray) -> np.ndarray:
    if all(M[i, j] == 0 for i in range(M.shape[0]) for j in range(M.shape[1]) if i != j):
        out = np.full(M.shape, Fraction(0), dtype=object)
        for i in range(M.shape[0]):
            out[i, i] = 1 / Fraction(M[i, i])
        return out
    import sympy

    inv = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in M]).inv()
    return np.array([[Fraction(int(v.p), int(v.q)) for v in row] for row in inv.tolist()], dtype=object)


class InertiaTensor:
    """Symmetric positive-definite matrix of the kinetic energy metric."""

    def __init__(self, matrix):
        arr = np.asarray(matrix, dtype=object)
        if arr.ndim == 1:
            diag = arr
            arr = np.full((len(diag), len(diag)), 0, dtype=object)
            for i, v in enumerate(diag):
                arr[i, i] = v
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("inertia must be a square matrix or a diagonal list")
        self.exact = is_exact(arr)
        if self.exact:
            arr = np.vectorize(Fraction, otypes=[object])(arr)
        self.matrix = arr if self.exact else arr.astype(float)
        fl = self.matrix.astype(float)
        if not np.allclose(fl, fl.T, rtol=0, atol=1e-12):
            raise ValueError("inertia matrix is not symmetric")
        if self.exact and any(self.matrix[i, j] != self.matrix[j, i] for i in range(len(fl)) for j in range(len(fl))):
            raise ValueError("inertia matrix is not symmetric")
        if np.linalg.eigvalsh(fl).min() <= 0:
            raise ValueError("inertia matrix is not positive definite")
        self.inverse = _exact_inverse(self.matrix) if self.exact else np.linalg.inv(fl)
        self.float_matrix = fl
        self.float_inverse = self.inverse.astype(float)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return bool(np.count_nonzero(self.float_matrix - np.diag(np.diag(self.float_matrix))) == 0)

    def __repr__(self):
        if self.is_diagonal:
            return f"InertiaTensor(diag={[v for v in np.diag(self.matrix)]})"
        return f"InertiaTensor({self.matrix.tolist()})"


@dataclass(frozen=True)
class MechSystem:
    """Invariant forced affine connection control system.

    ``controls`` are the invariant input directions ``Y_a`` (the input set is
    all of R^k).  ``drift_const`` and ``drift_linear`` describe the
    uncontrolled force ``Y(v) = Y0 + D v`` in body coordinates; both default
    to zero.
    """

    algebra: LieAlgebra
    inertia: InertiaTensor
    controls: tuple = ()
    drift_const: np.ndarray | None = None
    drift_linear: np.ndarray | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.algebra.dim
        if self.inertia.dim != n:
            raise ValueError(f"inertia is {self.inertia.dim}x{self.inertia.dim}, algebra has dimension {n}")
        exact = self.algebra.exact and self.inertia.exact
        ctrls = []
        for a, y in enumerate(self.controls):
            arr = np.asarray(y, dtype=object).ravel()
            if arr.shape != (n,):
                raise ValueError(f"control {a + 1} has length {arr.shape[0]}, expected {n}")
            exact = exact and is_exact(arr)
            ctrls.append(arr)
        y0 = np.zeros(n, dtype=int) if self.drift_const is None else np.asarray(self.drift_const, dtype=object).ravel()
        D = np.zeros((n, n), dtype=int) if self.drift_linear is None else np.asarray(self.drift_linear, dtype=object)
        if y0.shape != (n,):
            raise ValueError("drift constant has the wrong length")
        if D.shape != (n, n):
            raise ValueError("drift matrix has the wrong shape")
        exact = exact and is_exact(y0) and is_exact(D)
        object.__setattr__(self, "controls", tuple(as_vector(c, exact=exact) for c in ctrls))
        object.__setattr__(self, "drift_const", as_vector(y0, exact=exact))
        if exact:
            D = np.vectorize(Fraction, otypes=[object])(D)
        else:
            D = D.astype(float)
        object.__setattr__(self, "drift_linear", D)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def exact(self) -> bool:
        return is_exact(self.drift_const) and self.algebra.exact and self.inertia.exact

    @property
    def control_matrix(self) -> np.ndarray:
        """Float ``n x k`` matrix whose columns are the control directions."""
        if not self.controls:
            return np.zeros((self.dim, 0))
        return np.column_stack([np.asarray(c, dtype=float) for c in self.controls])

    @property
    def has_drift(self) -> bool:
        return bool(np.any(np.asarray(self.drift_const, dtype=float)) or np.any(np.asarray(self.drift_linear, dtype=float)))

    def drift(self, v) -> np.ndarray:
        """Uncontrolled force ``Y0 + D v`` (float)."""
        return np.asarray(self.drift_const, dtype=float) + np.asarray(self.drift_linear, dtype=float) @ np.asarray(v, dtype=float)

    def with_controls(self, controls: Sequence) -> "MechSystem":
        return MechSystem(self.algebra, self.inertia, tuple(controls), self.drift_const, self.drift_linear, self.name)


def _operands(sys: MechSystem, *vecs):
    for v in vecs:
        sys.algebra.check(np.asarray(v))
    if sys.algebra.exact and sys.inertia.exact and all(is_exact(v) for v in vecs):
        return sys.inertia.matrix, sys.inertia.inverse, [as_vector(v, exact=True) for v in vecs]
    return sys.inertia.float_matrix, sys.inertia.float_inverse, [np.asarray(v, dtype=float) for v in vecs]


def symmetric_product(sys: MechSystem, x, y) -> np.ndarray:
    """``<x:y> = -M^{-1}(ad*_x M y + ad*_y M x)``."""
    M, Minv, (x, y) = _operands(sys, x, y)
    g = sys.algebra
    return -(Minv @ (ad_star(g, x, M @ y) + ad_star(g, y, M @ x)))


def gamma_constants(sys: MechSystem) -> dict[tuple[int, int, int], object]:
    """Nonzero ``gamma^k_ij = <e_i:e_j>^k`` (0-based keys, both orders)."""
    n = sys.dim
    exact = sys.algebra.exact and sys.inertia.exact
    out = {}
    for i in range(n):
        for j in range(i, n):
            ei = sys.algebra.basis(i, exact=exact)
            ej = sys.algebra.basis(j, exact=exact)
            prod = symmetric_product(sys, ei, ej)
            for k, value in enumerate(prod):
                if value != 0:
                    out[(i, j, k)] = value
                    out[(j, i, k)] = value
    return dict(sorted(out.items()))


def connection(sys: MechSystem, x, y) -> np.ndarray:
    """Levi-Civita covariant derivative of the invariant field ``y`` along ``x``."""
    _, _, (x, y) = _operands(sys, x, y)
    return (bracket(sys.algebra, x, y) + symmetric_product(sys, x, y)) / 2


def energy(sys: MechSystem, xi) -> float:
    """Kinetic energy ``xi^T M xi / 2``."""
    M, _, (xi,) = _operands(sys, xi)
    value = xi @ M @ xi / 2
    return value if isinstance(value, Fraction) else float(value)


def submarine(J: Sequence = (1, 1, 1), M: Sequence = (1, 1, 1), name: str = "submarine") -> MechSystem:
    """Ellipsoidal vehicle in an ideal fluid with two torques and one thrust.

    Inertia ``diag(J1, J2, J3, M1, M2, M3)``; control directions
    ``Y1 = e1/J1``, ``Y2 = e2/J2``, ``Y3 = e6/M3``.  Integer or Fraction
    parameters give an exact system.
    """
    diag = list(J) + list(M)
    if len(diag) != 6:
        raise ValueError("need three rotational and three translational inertias")
    exact = is_exact(diag)
    if exact:
        diag = [Fraction(v) for v in diag]
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0

    def direction(slot, scale):
        v = [zero] * 6
        v[slot] = one / scale
        return v

    controls = (direction(0, diag[0]), direction(1, diag[1]), direction(5, diag[5]))
    return MechSystem(se3(), InertiaTensor(diag), controls, name=name)
