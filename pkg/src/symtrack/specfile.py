"""System description files.

A system file is a JSON document with the sections

``name``      optional string
``algebra``   ``"se3"`` or ``{"dim": n, "constants": [[i, j, k, c], ...], "labels": [...]}``
              with 1-based indices and ``c = c^k_ij`` (the antisymmetric partner is implied)
``inertia``   diagonal list or full matrix
``controls``  list of coefficient vectors ``Y_a``
``drift``     optional ``{"constant": [...], "matrix": [[...]]}``
``labels``    optional names of the control channels

Numbers may be integers, decimals or ``"p/q"`` strings.  When every entry is
an integer or a fraction the system is exact and products are computed in
rational arithmetic.  Problems are reported as ``SpecError`` with the line of
the offending section.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .liealg import LieAlgebra, jacobi_defect, se3
from .mech import InertiaTensor, MechSystem

__all__ = ["SpecError", "SystemSpec", "parse_spec", "load_spec", "bundled_specs", "bundled_spec_path"]

JACOBI_TOL = 1e-12
SECTIONS = ("name", "algebra", "inertia", "controls", "drift", "labels")


class SpecError(ValueError):
    """Malformed system file; ``line`` is 1-based when known."""

    def __init__(self, message: str, source: str = "<spec>", line: int | None = None, col: int | None = None):
        where = source if line is None else f"{source}:{line}" + ("" if col is None else f":{col}")
        super().__init__(f"{where}: {message}")
        self.source, self.line, self.col = source, line, col


@dataclass
class SystemSpec:
    system: MechSystem
    labels: list = field(default_factory=list)
    source: str = "<spec>"

    @property
    def name(self) -> str:
        return self.system.name


def _line_of(text: str, key: str) -> int | None:
    pos = text.find(f'"{key}"')
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _number(v, where: str):
    if isinstance(v, bool):
        raise ValueError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not np.isfinite(v):
            raise ValueError(f"{where}: value is not finite")
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"{where}: cannot read {v!r} as a number") from None
    raise ValueError(f"{where}: expected a number, got {type(v).__name__}")


def _vector(v, n: int | None, where: str) -> list:
    if not isinstance(v, list):
        raise ValueError(f"{where}: expected a list")
    if n is not None and len(v) != n:
        raise ValueError(f"{where}: has {len(v)} entries, expected {n}")
    return [_number(x, f"{where}[{i + 1}]") for i, x in enumerate(v)]


def _matrix(v, n: int, where: str) -> np.ndarray:
    if not isinstance(v, list) or len(v) != n:
        raise ValueError(f"{where}: expected {n} rows")
    return np.array([_vector(row, n, f"{where} row {i + 1}") for i, row in enumerate(v)], dtype=object)


def _uniform(arr: np.ndarray) -> np.ndarray:
    # a single decimal entry makes the whole object float
    if any(isinstance(x, float) for x in arr.ravel()):
        return arr.astype(float)
    return arr


def _algebra(data) -> LieAlgebra:
    if data == "se3":
        return se3()
    if not isinstance(data, dict):
        raise ValueError('algebra must be "se3" or an object with "dim" and "constants"')
    unknown = set(data) - {"dim", "constants", "labels"}
    if unknown:
        raise ValueError(f"algebra: unknown field(s) {', '.join(sorted(unknown))}")
    n = data.get("dim")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError("algebra: dim must be a positive integer")
    consts = {}
    for m, entry in enumerate(data.get("constants", [])):
        if not isinstance(entry, list) or len(entry) != 4:
            raise ValueError(f"algebra: constant {m + 1} must be [i, j, k, value]")
        i, j, k = entry[:3]
        if not all(isinstance(a, int) and 1 <= a <= n for a in (i, j, k)):
            raise ValueError(f"algebra: constant {m + 1} has an index outside 1..{n}")
        key = (i - 1, j - 1, k - 1)
        if key in consts:
            raise ValueError(f"algebra: c^{k}_{i}{j} given twice")
        consts[key] = _number(entry[3], f"algebra: constant {m + 1}")
    g = LieAlgebra(n, consts, labels=data.get("labels"))
    defect = jacobi_defect(g)
    if defect > (0 if g.exact else JACOBI_TOL):
        raise ValueError(f"algebra: constants violate the Jacobi identity (defect {float(defect):.3g})")
    return g


def parse_spec(text: str, source: str = "<spec>") -> SystemSpec:
    """Parse the text of a system file."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, source, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise SpecError("top level must be an object", source, 1)
    for key in data:
        if key not in SECTIONS:
            raise SpecError(f"unknown section {key!r}", source, _line_of(text, key))
    for key in ("algebra", "inertia", "controls"):
        if key not in data:
            raise SpecError(f"missing section {key!r}", source)

    def section(key, fn):
        try:
            return fn(data[key])
        except (ValueError, TypeError) as exc:
            raise SpecError(str(exc), source, _line_of(text, key)) from None

    g = section("algebra", _algebra)
    n = g.dim

    def inertia(v):
        if isinstance(v, list) and v and all(isinstance(r, list) for r in v):
            arr = _matrix(v, n, "inertia")
        else:
            arr = np.array(_vector(v, n, "inertia"), dtype=object)
        return InertiaTensor(_uniform(arr))

    I = section("inertia", inertia)

    def controls(v):
        if not isinstance(v, list):
            raise ValueError("controls: expected a list of vectors")
        return [_uniform(np.array(_vector(y, n, f"controls[{a + 1}]"), dtype=object)) for a, y in enumerate(v)]

    Y = section("controls", controls)

    def drift(v):
        if not isinstance(v, dict) or set(v) - {"constant", "matrix"}:
            raise ValueError('drift: expected an object with "constant" and/or "matrix"')
        c = _uniform(np.array(_vector(v["constant"], n, "drift constant"), dtype=object)) if "constant" in v else None
        D = _uniform(_matrix(v["matrix"], n, "drift matrix")) if "matrix" in v else None
        return c, D

    y0, D = section("drift", drift) if "drift" in data else (None, None)
    labels = data.get("labels") or [f"u{a + 1}" for a in range(len(Y))]
    if not isinstance(labels, list) or len(labels) != len(Y) or not all(isinstance(s, str) for s in labels):
        raise SpecError("labels: need one string per control", source, _line_of(text, "labels"))
    name = data.get("name", Path(source).stem if source != "<spec>" else "system")
    try:
        sys = MechSystem(g, I, tuple(Y), y0, D, name=str(name))
    except ValueError as exc:
        raise SpecError(str(exc), source) from None
    return SystemSpec(sys, labels, source)


def bundled_specs() -> list[str]:
    """Names of the system files shipped with the package."""
    return sorted(p.name[:-5] for p in resources.files("symtrack.data").iterdir() if p.name.endswith(".json"))


def bundled_spec_path(name: str):
    return resources.files("symtrack.data") / f"{name}.json"


def load_spec(path_or_name) -> SystemSpec:
    """Read a system file, or a bundled one by name (``submarine-symmetric`` ...)."""
    p = Path(path_or_name)
    if not p.exists() and str(path_or_name) in bundled_specs():
        return parse_spec(bundled_spec_path(str(path_or_name)).read_text(), str(path_or_name))
    try:
        text = p.read_text()
    except OSError as exc:
        raise SpecError(exc.strerror or str(exc), str(path_or_name)) from None
    return parse_spec(text, str(path_or_name))
