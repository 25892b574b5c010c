"""Symmetric-product families, Lie closures and the Z-family trackability test.

Every field here is left-invariant, so a family is just a list of Lie algebra
vectors and pointwise spans do not depend on the group point.  Membership in
a span with smooth-function coefficients therefore reduces to membership in
the constant-coefficient span, and all constant-rank hypotheses hold
automatically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .liealg import bracket, is_exact
from .mech import MechSystem, symmetric_product

__all__ = [
    "RANK_RTOL",
    "FieldFamily",
    "LevelRecord",
    "AnalysisReport",
    "FamilyTooLarge",
    "orthonormal_basis",
    "in_span",
    "z_family",
    "span_rank",
    "condition3_check",
    "lie_closure",
    "sym1",
    "is_kinematic_reduction",
    "analyze_z",
    "trackable_curve_z",
]

RANK_RTOL = 1e-10
SPAN_TOL = 1e-9
MAX_MEMBERS = 5000
REPORT_SCHEMA = "symtrack.analysis/1"


class FamilyTooLarge(RuntimeError):
    """The unpruned family outgrew ``MAX_MEMBERS``."""


def orthonormal_basis(vectors, rtol: float = RANK_RTOL) -> np.ndarray:
    """Columns spanning ``span(vectors)``; singular values below ``rtol*smax`` dropped."""
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if not vecs:
        return np.zeros((0, 0))
    A = np.column_stack(vecs)
    n = A.shape[0]
    if not np.any(A):
        return np.zeros((n, 0))
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > rtol * s[0]))
    return U[:, :r]


def _exact_rank(vectors) -> int:
    import sympy

    if not vectors:
        return 0
    rows = [[sympy.Rational(v.numerator, v.denominator) for v in vec] for vec in vectors]
    return sympy.Matrix(rows).rank()


def in_span(basis: np.ndarray, v, tol: float = SPAN_TOL) -> bool:
    """Is ``v`` within ``tol*max(1,|v|)`` of the column span of an orthonormal ``basis``?"""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        return True
    if basis.size == 0:
        return False
    res = v - basis @ (basis.T @ v)
    return bool(np.linalg.norm(res) <= tol * max(1.0, nv))


@dataclass
class FieldFamily:
    """Ordered family of invariant fields with the product that made each one.

    ``provenance[m]`` is ``("generator", a)``, ``("sym", i, j)`` or
    ``("bracket", i, j)``; indices of products refer to the members of the
    family one level below (``sym``) or to earlier members (``bracket``).
    """

    system: MechSystem
    members: list = field(default_factory=list)
    provenance: list = field(default_factory=list)
    level: int = 0

    def __post_init__(self):
        if len(self.members) != len(self.provenance):
            raise ValueError("one provenance record per member is required")
        for m in self.members:
            self.system.algebra.check(np.asarray(m))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def algebra(self):
        return self.system.algebra

    def matrix(self) -> np.ndarray:
        """Float ``n x m`` matrix of members."""
        if not self.members:
            return np.zeros((self.system.dim, 0))
        return np.column_stack([np.asarray(m, dtype=float) for m in self.members])

    def basis(self) -> np.ndarray:
        return orthonormal_basis(self.members)

    def contains(self, v, tol: float = SPAN_TOL) -> bool:
        return in_span(self.basis(), v, tol)


def _key(v, exact: bool):
    if exact:
        return tuple(v)
    return tuple(np.round(np.asarray(v, dtype=float), 12) + 0.0)


def z_family(sys: MechSystem, l: int, prune: bool = True, max_members: int = MAX_MEMBERS) -> FieldFamily:
    """Level-``l`` family closed under pairwise symmetric products.

    Level 0 is the control list itself.  With ``prune`` a product is kept only
    when it leaves the span of the members kept so far, so every level spans
    the same space as the full set-theoretic family.  Without ``prune`` the
    family is the set of distinct fields of the recursive definition.
    """
    if l < 0:
        raise ValueError("level must be nonnegative")
    exact = sys.exact
    fam = FieldFamily(sys, list(sys.controls), [("generator", a) for a in range(len(sys.controls))], 0)
    for level in range(1, l + 1):
        prev = fam.members
        members = list(prev)
        prov = [("member", i) for i in range(len(prev))]
        if prune:
            basis = orthonormal_basis(members)
            for i in range(len(prev)):
                for j in range(i, len(prev)):
                    p = symmetric_product(sys, prev[i], prev[j])
                    if not in_span(basis, p):
                        members.append(p)
                        prov.append(("sym", i, j))
                        basis = orthonormal_basis(members)
        else:
            seen = {_key(m, exact) for m in members}
            for i in range(len(prev)):
                for j in range(i, len(prev)):
                    p = symmetric_product(sys, prev[i], prev[j])
                    key = _key(p, exact)
                    if key not in seen:
                        seen.add(key)
                        members.append(p)
                        prov.append(("sym", i, j))
                        if len(members) > max_members:
                            raise FamilyTooLarge(
                                f"unpruned level {level} family exceeds {max_members} members")
        # carried-over members keep their original provenance
        prov = [fam.provenance[p[1]] if p[0] == "member" else p for p in prov]
        fam = FieldFamily(sys, members, prov, level)
    return fam


def span_rank(fam: FieldFamily, rtol: float = RANK_RTOL, exact: bool = False) -> int:
    """Dimension of the real span of the members."""
    if exact and all(is_exact(m) for m in fam.members):
        return _exact_rank(fam.members)
    return orthonormal_basis(fam.members, rtol).shape[1]


def condition3_check(sys: MechSystem, l: int, quantifier: str = "members",
                     max_members: int = MAX_MEMBERS) -> list[bool]:
    """For each level ``i < l``: does ``<Z:Z>`` stay in ``span Z_i``?

    ``quantifier="members"`` tests every field of the unpruned level-``i``
    family, which is the hypothesis as used by the tracking theorem.
    ``quantifier="span"`` tests every element of the span (equivalently
    ``<V_a:V_b>`` over a basis), a strictly stronger requirement.
    """
    if l < 1:
        raise ValueError("need l >= 1")
    if quantifier not in ("members", "span"):
        raise ValueError(f"unknown quantifier {quantifier!r}")
    out = []
    for i in range(l):
        fam = z_family(sys, i, prune=False, max_members=max_members)
        basis = fam.basis()
        if quantifier == "members":
            ok = all(in_span(basis, symmetric_product(sys, z, z)) for z in fam.members)
        else:
            V = [basis[:, a] for a in range(basis.shape[1])]
            ok = all(in_span(basis, symmetric_product(sys, V[a], V[b]))
                     for a in range(len(V)) for b in range(a, len(V)))
        out.append(bool(ok))
    return out


def lie_closure(fam: FieldFamily, max_depth: int | None = None) -> FieldFamily:
    """Spanning subset of Lie(members) using brackets up to length ``max_depth``.

    Brackets are formed as ``[generator, previous layer]``; iteration stops
    early once a layer adds no new direction.
    """
    g = fam.algebra
    depth = 2 * g.dim if max_depth is None else max_depth
    if depth < 1:
        raise ValueError("max_depth must be at least 1")
    members, prov = [], []
    basis = orthonormal_basis([])
    for idx, m in enumerate(fam.members):
        if np.any(np.asarray(m, dtype=float)) and (basis.size == 0 or not in_span(basis, m)):
            members.append(np.asarray(m, dtype=float))
            prov.append(fam.provenance[idx])
            basis = orthonormal_basis(members)
    gens = list(range(len(members)))
    layer = list(gens)
    for _ in range(2, depth + 1):
        if len(members) == g.dim:
            break
        new = []
        for a in gens:
            for b in layer:
                v = bracket(g, members[a], members[b])
                if not in_span(basis, v):
                    members.append(np.asarray(v, dtype=float))
                    prov.append(("bracket", a, b))
                    new.append(len(members) - 1)
                    basis = orthonormal_basis(members)
        if not new:
            break
        layer = new
    return FieldFamily(fam.system, members, prov, fam.level)


def sym1(sys: MechSystem, fam: FieldFamily, prune: bool = True) -> FieldFamily:
    """Members together with all pairwise symmetric products."""
    members = list(fam.members)
    prov = list(fam.provenance)
    basis = orthonormal_basis(members)
    for i in range(len(fam.members)):
        for j in range(i, len(fam.members)):
            p = symmetric_product(sys, fam.members[i], fam.members[j])
            if prune and in_span(basis, p):
                continue
            members.append(p)
            prov.append(("sym", i, j))
            if prune:
                basis = orthonormal_basis(members)
    return FieldFamily(sys, members, prov, fam.level + 1)


def is_kinematic_reduction(sys_controls: FieldFamily, candidate: FieldFamily) -> bool:
    """Is the driftless system on ``candidate`` a kinematic reduction of the
    mechanical system with inputs ``sys_controls``?  True iff the first
    symmetric closure of ``candidate`` lies in ``span(sys_controls)``."""
    if not candidate.members:
        return True
    closure = sym1(sys_controls.system, candidate)
    basis = sys_controls.basis()
    return all(in_span(basis, v) for v in closure.members)


@dataclass
class LevelRecord:
    l: int
    span_dim: int
    lie_dim: int
    condition3_holds: bool | None
    drift_in_span: bool


@dataclass
class AnalysisReport:
    """Outcome of a trackability analysis.

    ``verdict`` is ``"CTP_by_Z"``, ``"SCTP_by_trackZ"``, ``"CTP_by_K"`` or
    ``"inconclusive"``; ``witness_level`` is the ``l`` of the theorem that
    produced it.
    """

    dim: int
    levels: list[LevelRecord]
    verdict: str
    witness_level: int | None
    drift_in_span: bool
    method: str = "Z"
    notes: list[str] = field(default_factory=list)
    cones: list[dict] | None = None
    samples: int | None = None

    @property
    def positive(self) -> bool:
        return self.verdict != "inconclusive"

    def level(self, l: int) -> LevelRecord:
        return self.levels[l]

    def to_dict(self) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "method": self.method,
            "dim": self.dim,
            "verdict": self.verdict,
            "witness_level": self.witness_level,
            "drift_in_span": self.drift_in_span,
            "levels": [vars(r).copy() for r in self.levels],
            "notes": list(self.notes),
        }
        if self.cones is not None:
            out["cones"] = self.cones
            out["samples"] = self.samples
        return out

    def summary(self) -> str:
        lines = [f"verdict: {self.verdict}" + (f" (l = {self.witness_level})" if self.witness_level else "")]
        lines.append(f"{'l':>3} {'span':>5} {'Lie':>5} {'cond3':>6} {'drift':>6}")
        for r in self.levels:
            c3 = "-" if r.condition3_holds is None else ("yes" if r.condition3_holds else "no")
            lines.append(f"{r.l:>3} {r.span_dim:>5} {r.lie_dim:>5} {c3:>6} {'yes' if r.drift_in_span else 'no':>6}")
        if self.cones:
            lines.append(f"{'l':>3} {'rays':>5} {'lin':>5} {'subsp':>6}")
            for c in self.cones:
                lines.append(f"{c['l']:>3} {c['rays']:>5} {c['lineality_dim']:>5} "
                             f"{'yes' if c['is_subspace'] else 'no':>6}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def _drift_vectors(sys: MechSystem) -> list[np.ndarray]:
    D = np.asarray(sys.drift_linear, dtype=float)
    vecs = [np.asarray(sys.drift_const, dtype=float)]
    vecs += [D[:, j] for j in range(D.shape[1]) if np.any(D[:, j])]
    return vecs


def analyze_z(sys: MechSystem, l_max: int = 3, quantifier: str = "members") -> AnalysisReport:
    """Search ``l <= l_max`` satisfying the Z-family hypotheses.

    A level qualifies when the drift lies in ``span Z_l`` and ``<Z:Z>`` stays
    in ``span Z_i`` for every ``i < l``.  A qualifying level with
    ``span Z_l`` the whole algebra gives ``SCTP_by_trackZ`` (stronger, so it
    is preferred); otherwise one with ``Lie(Z_{l-1})`` the whole algebra gives
    ``CTP_by_Z``.  The smallest witnessing level is reported.
    """
    if l_max < 1:
        raise ValueError("l_max must be at least 1")
    n = sys.dim
    notes = []
    spans, lies, drift_ok = [], [], []
    for l in range(l_max + 1):
        fam = z_family(sys, l)
        basis = fam.basis()
        spans.append(basis.shape[1])
        lies.append(span_rank(lie_closure(fam)))
        drift_ok.append(all(in_span(basis, v) for v in _drift_vectors(sys)))

    cond3: list[bool | None] = []
    try:
        cond3 = list(condition3_check(sys, l_max, quantifier=quantifier))
    except FamilyTooLarge as exc:
        # fall back level by level so the smaller levels are still decided
        for i in range(l_max):
            try:
                cond3.append(condition3_check(sys, i + 1, quantifier=quantifier)[-1])
            except FamilyTooLarge:
                cond3.extend([None] * (l_max - i))
                notes.append(str(exc))
                break
    cond3.append(None)  # condition at level l_max is never needed

    qualifying = [l for l in range(1, l_max + 1)
                  if drift_ok[l] and all(c is True for c in cond3[:l])]
    sctp = [l for l in qualifying if spans[l] == n]
    ctp = [l for l in qualifying if lies[l - 1] == n]
    if sctp:
        verdict, witness = "SCTP_by_trackZ", sctp[0]
    elif ctp:
        verdict, witness = "CTP_by_Z", ctp[0]
    else:
        verdict, witness = "inconclusive", None
        if qualifying:
            notes.append("per-curve strong tracking (velocity-dependent span membership) is not certified")

    levels = [LevelRecord(l, spans[l], lies[l], cond3[l], drift_ok[l]) for l in range(l_max + 1)]
    drift = drift_ok[witness] if witness is not None else drift_ok[-1]
    return AnalysisReport(n, levels, verdict, witness, drift, "Z", notes)


def trackable_curve_z(sys: MechSystem, curve, report: AnalysisReport, samples: int = 201,
                      tol: float = 1e-8) -> bool:
    """Does the curve's body velocity stay in ``Lie(Z_{l-1})`` at every sample?

    ``curve`` needs ``duration`` and a vectorised ``body_velocity(t)``.
    """
    if report.witness_level is None:
        raise ValueError("report has no witness level")
    fam = z_family(sys, report.witness_level - 1)
    basis = lie_closure(fam).basis()
    if basis.shape[1] == sys.dim:
        return True
    ts = np.linspace(0.0, curve.duration, samples)
    xi = np.asarray(curve.body_velocity(ts), dtype=float)
    if not np.all(np.isfinite(xi)):
        raise ValueError("curve velocity is not finite at every sample")
    res = xi - (xi @ basis) @ basis.T
    scale = np.maximum(1.0, np.linalg.norm(xi, axis=1))
    return bool(np.all(np.linalg.norm(res, axis=1) <= tol * scale))
