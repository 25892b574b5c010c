"""Polyhedral inner approximations of the pointwise cones of admissible forces.

Level 0 is the span of the control directions.  Level ``l`` adds the rays
``-<Z:Z>`` for ``Z`` sampled on the unit sphere of the lineality space of
level ``l-1``.  Because every field is invariant the cones do not depend on
the group point, so no base point appears anywhere in this module.

Each generated ray is a genuine element of the exact cone, hence membership
answers can only err on the side of "no".  Nothing is closed up: at a single
point a finitely generated cone is already closed and the only approximation
is the density of the sphere sampling.

Membership is decided by nonnegative least squares on the generators
(lineality directions enter with both signs), which returns the Euclidean
distance from the query to the cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls
from scipy.stats import norm, qmc

from .closure import AnalysisReport, FieldFamily, LevelRecord, _drift_vectors, lie_closure, orthonormal_basis
from .mech import MechSystem, symmetric_product

__all__ = [
    "ConeIndeterminate",
    "PolyCone",
    "cone_member",
    "lineality_of",
    "sphere_samples",
    "k_cone",
    "k_cones",
    "analyze_k",
]

MEMBER_TOL = 1e-8


class ConeIndeterminate(RuntimeError):
    """The feasibility solver did not return an answer."""


@dataclass
class PolyCone:
    """Cone generated by ``rays`` plus the linear span of ``linear``.

    ``lineality`` (orthonormal columns) is computed at construction.
    ``origins[m]`` records how ray ``m`` was produced: ``("control", a, sign)``,
    ``("prev", index)`` or ``("sym", z)`` for ``-<z:z>``.  Built by
    :func:`k_cones`, ``linear`` holds the lineality basis of the previous level.
    """

    ambient_dim: int
    rays: list = field(default_factory=list)
    linear: list = field(default_factory=list)
    origins: list = field(default_factory=list)
    samples: int = 0
    tol: float = MEMBER_TOL

    def __post_init__(self):
        n = self.ambient_dim
        self.rays = [np.asarray(r, dtype=float) for r in self.rays]
        self.linear = [np.asarray(v, dtype=float) for v in self.linear]
        for r in self.rays + self.linear:
            if r.shape != (n,):
                raise ValueError(f"generator of shape {r.shape} in a cone of dimension {n}")
        if any(not np.any(r) for r in self.rays):
            raise ValueError("rays must be nonzero")
        if not self.origins:
            self.origins = [("given", m) for m in range(len(self.rays))]
        self._core = list(range(len(self.rays)))
        self.lineality = orthonormal_basis(self.linear) if self.linear else np.zeros((n, 0))
        self.lineality = lineality_of(self)

    @property
    def lineality_dim(self) -> int:
        return self.lineality.shape[1]

    @property
    def hull_dim(self) -> int:
        """Dimension of the linear hull of the cone."""
        return orthonormal_basis(self.rays + self.linear).shape[1] if (self.rays or self.linear) else 0

    @property
    def is_subspace(self) -> bool:
        return self.lineality_dim == self.hull_dim

    def generators(self) -> np.ndarray:
        """Columns whose nonnegative combinations are exactly the cone."""
        cols = [self.rays[i] for i in self._core]
        L = self.lineality
        cols += [L[:, a] for a in range(L.shape[1])] + [-L[:, a] for a in range(L.shape[1])]
        if not cols:
            return np.zeros((self.ambient_dim, 0))
        return np.column_stack(cols)

    def summary(self, l: int | None = None) -> dict:
        out = {"rays": len(self.rays), "lineality_dim": self.lineality_dim,
               "hull_dim": self.hull_dim, "is_subspace": self.is_subspace, "samples": self.samples}
        if l is not None:
            out = {"l": l, **out}
        return out


def _distance(G: np.ndarray, v: np.ndarray) -> float:
    if G.shape[1] == 0:
        return float(np.linalg.norm(v))
    try:
        _, dist = nnls(G, v, maxiter=50 * G.shape[1] + 100)
    except RuntimeError as exc:
        raise ConeIndeterminate(str(exc)) from exc
    if not np.isfinite(dist):
        raise ConeIndeterminate("nonfinite residual")
    return float(dist)


def cone_member(c: PolyCone, v, tol: float | None = None) -> bool:
    """Is ``v`` within ``tol*|v|`` of the cone?"""
    v = np.asarray(v, dtype=float)
    if v.shape != (c.ambient_dim,):
        raise ValueError(f"expected a vector of length {c.ambient_dim}")
    nv = np.linalg.norm(v)
    if nv == 0:
        return True
    tol = c.tol if tol is None else tol
    return _distance(c.generators(), v) <= tol * nv


def lineality_of(c: PolyCone) -> np.ndarray:
    """Orthonormal basis of ``c ∩ (-c)``.

    The lineality space of a finitely generated cone is spanned by the
    generators whose negatives are members, so one feasibility problem per
    ray suffices.  Rays found to be in the lineality space are dropped from
    the generator set used by later membership queries.
    """
    n = c.ambient_dim
    known = orthonormal_basis(c.linear) if c.linear else np.zeros((n, 0))
    R = [c.rays[i] / np.linalg.norm(c.rays[i]) for i in range(len(c.rays))]
    two_sided = []
    if R:
        G = np.column_stack(R + [known[:, a] for a in range(known.shape[1])]
                            + [-known[:, a] for a in range(known.shape[1])])
        for i, r in enumerate(R):
            if _distance(G, -r) <= c.tol:
                two_sided.append(i)
    basis = orthonormal_basis([known[:, a] for a in range(known.shape[1])] + [R[i] for i in two_sided])
    if basis.size == 0:
        basis = np.zeros((n, 0))
    c._core = [i for i in range(len(R)) if i not in set(two_sided)]
    return basis


def sphere_samples(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` deterministic low-discrepancy points on the unit sphere in R^dim.

    A scrambled Halton sequence pushed through the normal quantile function;
    taking more points extends the same sequence.
    """
    if dim == 0 or count == 0:
        return np.zeros((count, dim))
    u = qmc.Halton(d=dim, scramble=True, seed=seed).random(count)
    z = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    nz = np.linalg.norm(z, axis=1, keepdims=True)
    nz[nz == 0] = 1.0
    return z / nz


def _default_samples(d: int) -> int:
    return 8 * d * d


def k_cones(sys: MechSystem, l: int, samples: int | None = None, seed: int = 0) -> list[PolyCone]:
    """Cones of levels ``0..l`` (each built from the one before)."""
    if l < 0:
        raise ValueError("level must be nonnegative")
    n = sys.dim
    rays, origins = [], []
    for a, y in enumerate(sys.controls):
        y = np.asarray(y, dtype=float)
        if np.any(y):
            rays += [y, -y]
            origins += [("control", a, 1), ("control", a, -1)]
    cones = [PolyCone(n, rays, [], origins, 0)]
    for _ in range(l):
        prev = cones[-1]
        L = prev.lineality
        d = L.shape[1]
        s = _default_samples(d) if samples is None else samples
        pts = sphere_samples(d, s if d else 0, seed)
        new_rays, new_origins = [], []
        for u in pts:
            z = L @ u
            p = -np.asarray(symmetric_product(sys, z, z), dtype=float)
            if np.linalg.norm(p) > 1e-14:
                new_rays.append(p)
                new_origins.append(("sym", z))
        # the previous lineality carries over as a linear part, so only the
        # one-sided rays of the previous level need to be tested again
        rays = [prev.rays[i] for i in prev._core] + new_rays
        origins = [("prev", i) for i in prev._core] + new_origins
        linear = [L[:, a] for a in range(d)]
        cones.append(PolyCone(n, rays, linear, origins, len(pts)))
    return cones


def k_cone(sys: MechSystem, l: int, samples: int | None = None, seed: int = 0) -> PolyCone:
    """Inner polyhedral approximation of the level-``l`` cone.

    ``samples`` sphere points are drawn on the lineality space of each
    previous level (default ``8 d^2`` for a ``d``-dimensional lineality).
    """
    return k_cones(sys, l, samples, seed)[-1]


def analyze_k(sys: MechSystem, l_max: int = 3, samples: int | None = None, seed: int = 0) -> AnalysisReport:
    """Search ``l <= l_max`` satisfying the cone hypotheses.

    A level qualifies when the drift lies in cone ``l``, cones ``l-1`` and
    ``l`` are linear subspaces, and the Lie closure of the lineality of cone
    ``l-1`` is everything; the verdict is then ``CTP_by_K``.  The subspace
    test depends on the sampling density, which is recorded in the report.
    """
    if l_max < 1:
        raise ValueError("l_max must be at least 1")
    n = sys.dim
    cones = k_cones(sys, l_max, samples, seed)
    levels, summaries = [], []
    lie_dims, drift_ok = [], []
    for l, c in enumerate(cones):
        L = c.lineality
        fam = FieldFamily(sys, [L[:, a] for a in range(L.shape[1])], [("lineality", a) for a in range(L.shape[1])], l)
        lie_dims.append(lie_closure(fam).basis().shape[1] if L.shape[1] else 0)
        # Y0 must be a member; the linear part acts with either sign
        y0, *cols = _drift_vectors(sys)
        ok = cone_member(c, y0) and all(cone_member(c, v) and cone_member(c, -v) for v in cols)
        drift_ok.append(ok)
        levels.append(LevelRecord(l, c.hull_dim, lie_dims[-1], None, ok))
        summaries.append(c.summary(l))

    witness = None
    for l in range(1, l_max + 1):
        if drift_ok[l] and cones[l - 1].is_subspace and cones[l].is_subspace and lie_dims[l - 1] == n:
            witness = l
            break
    verdict = "CTP_by_K" if witness is not None else "inconclusive"
    notes = [f"cones are inner approximations; subspace tests use {summaries[-1]['samples']} sphere samples "
             "at the last level"]
    drift = drift_ok[witness] if witness is not None else drift_ok[-1]
    return AnalysisReport(n, levels, verdict, witness, drift, "K", notes, summaries,
                          samples if samples is not None else -1)
