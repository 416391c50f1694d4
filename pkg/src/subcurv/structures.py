"""Constant adapted-frame structures: storage, validation, catalog and file format.

A structure is the bracket table of a frame ``X_1..X_d, Z_1..Z_h``::

    [X_i, X_j] = sum_l omega[l][i][j] X_l + sum_m gamma[m][i][j] Z_m
    [X_i, Z_m] = sum_l delta[l][i][m] X_l
    [Z_m, Z_n] = sum_p theta[p][m][n] Z_p

Tensors are stored 0-based as nested tuples of ``Fraction``.  The file format
uses 1-based sparse triplets with rationals written as ``"p/q"`` strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

from subcurv.errors import InvalidParameter, ShapeMismatch, UnknownModel

Tensor3 = tuple[tuple[tuple[Fraction, ...], ...], ...]


def _zeros(a: int, b: int, c: int) -> list[list[list[Fraction]]]:
    return [[[Fraction(0)] * c for _ in range(b)] for _ in range(a)]


def _freeze(t: Sequence[Sequence[Sequence]]) -> Tensor3:
    return tuple(tuple(tuple(Fraction(v) for v in row) for row in plane) for plane in t)


def _shape(t: Sequence) -> tuple[int, ...]:
    dims = [len(t)]
    if t:
        dims.append(len(t[0]))
        if t[0]:
            dims.append(len(t[0][0]))
    return tuple(dims)


@dataclass(frozen=True)
class StructureConstants:
    d: int
    h: int
    omega: Tensor3
    gamma: Tensor3
    delta: Tensor3
    theta: Tensor3
    name: str = ""

    def __post_init__(self) -> None:
        expected = {
            "omega": (self.d, self.d, self.d),
            "gamma": (self.h, self.d, self.d),
            "delta": (self.d, self.d, self.h),
            "theta": (self.h, self.h, self.h),
        }
        for key, shape in expected.items():
            t = getattr(self, key)
            if len(t) != shape[0]:
                raise ShapeMismatch(f"{key} has shape {_shape(t)}, expected {shape}")
            for plane in t:
                if len(plane) != shape[1] or any(len(row) != shape[2] for row in plane):
                    raise ShapeMismatch(f"{key} has ragged or wrong shape, expected {shape}")
            object.__setattr__(self, key, _freeze(t))

    @classmethod
    def build(
        cls,
        d: int,
        h: int,
        omega: dict | None = None,
        gamma: dict | None = None,
        delta: dict | None = None,
        theta: dict | None = None,
        name: str = "",
    ) -> "StructureConstants":
        """Build from sparse 0-based ``{(a, b, c): value}`` maps."""
        if d < 1 or h < 0:
            raise ShapeMismatch(f"invalid dimensions d={d}, h={h}")
        dense = {
            "omega": _zeros(d, d, d),
            "gamma": _zeros(h, d, d),
            "delta": _zeros(d, d, h),
            "theta": _zeros(h, h, h),
        }
        for key, entries in (("omega", omega), ("gamma", gamma), ("delta", delta), ("theta", theta)):
            t = dense[key]
            for (a, b, c), v in (entries or {}).items():
                try:
                    t[a][b][c] = Fraction(v)
                except IndexError as exc:
                    raise ShapeMismatch(f"{key} index {(a, b, c)} out of range") from exc
        return cls(d, h, name=name, **dense)

    @property
    def n(self) -> int:
        return self.d + self.h

    def is_horizontal(self, a: int) -> bool:
        return a < self.d

    @cached_property
    def brackets(self) -> tuple[tuple[tuple[tuple[int, Fraction], ...], ...], ...]:
        """``brackets[a][b]`` is ``[e_a, e_b]`` as sparse ``(index, coeff)`` pairs.

        Basis index ``a < d`` is ``X_{a+1}``; ``a >= d`` is ``Z_{a-d+1}``.
        """
        d, n = self.d, self.n
        table = []
        for a in range(n):
            row = []
            for b in range(n):
                vec = [Fraction(0)] * n
                if a < d and b < d:
                    for l in range(d):
                        vec[l] = self.omega[l][a][b]
                    for m in range(self.h):
                        vec[d + m] = self.gamma[m][a][b]
                elif a < d <= b:
                    for l in range(d):
                        vec[l] = self.delta[l][a][b - d]
                elif b < d <= a:
                    for l in range(d):
                        vec[l] = -self.delta[l][b][a - d]
                else:
                    for p in range(self.h):
                        vec[d + p] = self.theta[p][a - d][b - d]
                row.append(tuple((c, v) for c, v in enumerate(vec) if v))
            table.append(tuple(row))
        return tuple(table)

    def bracket_vector(self, a: int, b: int) -> list[Fraction]:
        vec = [Fraction(0)] * self.n
        for c, v in self.brackets[a][b]:
            vec[c] = v
        return vec

    @property
    def is_step2_carnot(self) -> bool:
        zero = Fraction(0)
        return all(
            v == zero
            for t in (self.omega, self.delta, self.theta)
            for plane in t
            for row in plane
            for v in row
        )

    def symbol_name(self, a: int) -> str:
        if self.d <= 2 and self.h <= 1:
            return "XYZ"[a] if a < self.d else "Z"
        return f"X{a + 1}" if a < self.d else f"Z{a - self.d + 1}"

    # -- file format -------------------------------------------------------

    def to_document(self) -> dict:
        def triplets(t: Tensor3) -> list[list]:
            out = []
            for a, plane in enumerate(t):
                for b, row in enumerate(plane):
                    for c, v in enumerate(row):
                        if v:
                            out.append([a + 1, b + 1, c + 1, str(v)])
            return out

        return {
            "name": self.name,
            "d": self.d,
            "h": self.h,
            "omega": triplets(self.omega),
            "gamma": triplets(self.gamma),
            "delta": triplets(self.delta),
            "theta": triplets(self.theta),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "StructureConstants":
        try:
            d, h = int(doc["d"]), int(doc["h"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ShapeMismatch(f"structure document needs integer d and h: {exc}") from exc
        sparse = {}
        for key in ("omega", "gamma", "delta", "theta"):
            entries = {}
            for entry in doc.get(key, []) or []:
                if len(entry) != 4:
                    raise ShapeMismatch(f"{key} entry {entry!r} is not [a, b, c, value]")
                a, b, c, v = entry
                if min(a, b, c) < 1:
                    raise ShapeMismatch(f"{key} indices are 1-based, got {entry!r}")
                entries[(a - 1, b - 1, c - 1)] = Fraction(str(v))
            sparse[key] = entries
        return cls.build(d, h, name=str(doc.get("name", "")), **sparse)

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "StructureConstants":
        return cls.from_document(json.loads(text))


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[tuple[str, tuple[int, ...], str], ...] = ()
    diagnostics: tuple[str, ...] = field(default=())

    @classmethod
    def from_violations(cls, violations: Iterable[tuple[str, tuple[int, ...], Fraction]], diagnostics=()):
        vs = tuple((name, tuple(idx), str(res)) for name, idx, res in violations)
        return cls(passed=not vs, violations=vs, diagnostics=tuple(diagnostics))

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [
                {"check": name, "indices": list(idx), "residual": res} for name, idx, res in self.violations
            ],
            "diagnostics": list(self.diagnostics),
        }


def _rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows if any(r)]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        pivot = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if pivot is None:
            col += 1
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col] / m[rank][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
        col += 1
    return rank


def validate_structure(sc: StructureConstants) -> ValidationReport:
    """Check skew-symmetries, the Killing condition on delta, Jacobi and step-2 generation.

    Violation indices are reported 1-based.  A failure of step-2 bracket
    generation is only a diagnostic.
    """
    d, h = sc.d, sc.h
    violations = []
    for l, i, j in product(range(d), repeat=3):
        s = sc.omega[l][i][j] + sc.omega[l][j][i]
        if s and i <= j:
            violations.append(("omega_skew", (l + 1, i + 1, j + 1), s))
    for m, i, j in product(range(h), range(d), range(d)):
        s = sc.gamma[m][i][j] + sc.gamma[m][j][i]
        if s and i <= j:
            violations.append(("gamma_skew", (m + 1, i + 1, j + 1), s))
    for l, i, m in product(range(d), range(d), range(h)):
        s = sc.delta[l][i][m] + sc.delta[i][l][m]
        if s and i <= l:
            violations.append(("delta_killing", (l + 1, i + 1, m + 1), s))
    for p, m, k in product(range(h), repeat=3):
        s = sc.theta[p][m][k] + sc.theta[p][k][m]
        if s and m <= k:
            violations.append(("theta_skew", (p + 1, m + 1, k + 1), s))

    n = sc.n
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                total = [Fraction(0)] * n
                for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                    for e, coeff in sc.brackets[y][z]:
                        for g, v in sc.brackets[x][e]:
                            total[g] += coeff * v
                for g, v in enumerate(total):
                    if v:
                        violations.append(("jacobi", (a + 1, b + 1, c + 1, g + 1), v))

    diagnostics = []
    if h:
        rows = [[sc.gamma[m][i][j] for m in range(h)] for i in range(d) for j in range(i + 1, d)]
        rk = _rank(rows) if rows else 0
        if rk < h:
            diagnostics.append(
                f"not step-2 bracket generating: vertical span of [X_i, X_j] has rank {rk} < h={h}"
            )
    return ValidationReport.from_violations(violations, diagnostics)


def connection_coefficients(sc: StructureConstants) -> list[list[list[Fraction]]]:
    """``nabla[i][j][k]``: coefficient of ``X_k`` in the canonical ``nabla_{X_i} X_j``."""
    d = sc.d
    w = sc.omega
    return [
        [[(w[k][i][j] + w[j][k][i] + w[i][k][j]) / 2 for k in range(d)] for j in range(d)]
        for i in range(d)
    ]


def yang_mills_residual(sc: StructureConstants) -> list[list[Fraction]]:
    """Vertical components ``[k][m]`` of ``deltaT(X_k)`` for constant structure constants.

    With constant coefficients the vertical torsion values are parallel, so
    ``(nabla_{X_l} T)(X_l, X_k) = -T(nabla_{X_l} X_l, X_k) - T(X_l, nabla_{X_l} X_k)``
    and ``T(X_a, X_b) = -sum_m gamma[m][a][b] Z_m``.
    """
    d, h = sc.d, sc.h
    nab = connection_coefficients(sc)
    g = sc.gamma
    out = []
    for k in range(d):
        row = []
        for m in range(h):
            s = Fraction(0)
            for l in range(d):
                for a in range(d):
                    # -T(., .) contributes +gamma
                    s += nab[l][l][a] * g[m][a][k] + nab[l][k][a] * g[m][l][a]
            row.append(s)
        out.append(row)
    return out


def yang_mills_check(sc: StructureConstants) -> ValidationReport:
    res = yang_mills_residual(sc)
    violations = [
        ("yang_mills", (k + 1, m + 1), v) for k, row in enumerate(res) for m, v in enumerate(row) if v
    ]
    return ValidationReport.from_violations(violations)


# -- catalog -----------------------------------------------------------------

MODELS = ("g_rho1", "su2", "sl2", "heisenberg", "quaternionic_heisenberg", "carnot_step2")


def _g_rho1(rho1: Fraction, name: str) -> StructureConstants:
    # [X,Y] = Z, [X,Z] = -rho1 Y, [Y,Z] = rho1 X
    return StructureConstants.build(
        2,
        1,
        gamma={(0, 0, 1): 1, (0, 1, 0): -1},
        delta={(1, 0, 0): -rho1, (0, 1, 0): rho1},
        name=name,
    )


def _heisenberg(n: int) -> StructureConstants:
    gamma = {}
    for i in range(n):
        gamma[(0, i, n + i)] = 1
        gamma[(0, n + i, i)] = -1
    return StructureConstants.build(2 * n, 1, gamma=gamma, name=f"heisenberg:{n}")


# left multiplication by i, j, k on H = span(1, i, j, k)
_QUATERNION_LEFT = (
    {(0, 1): 1, (2, 3): 1},
    {(0, 2): 1, (1, 3): -1},
    {(0, 3): 1, (1, 2): 1},
)


def _quaternionic_heisenberg() -> StructureConstants:
    gamma = {}
    for m, table in enumerate(_QUATERNION_LEFT):
        for (a, b), v in table.items():
            gamma[(m, a, b)] = v
            gamma[(m, b, a)] = -v
    return StructureConstants.build(4, 3, gamma=gamma, name="quaternionic_heisenberg")


def carnot_step2(gamma: Sequence[Sequence[Sequence]], name: str = "carnot_step2") -> StructureConstants:
    """Step-2 Carnot structure from a dense 0-based ``gamma[m][i][j]``."""
    h = len(gamma)
    if h == 0:
        raise InvalidParameter("gamma must have at least one vertical layer")
    d = len(gamma[0])
    entries = {}
    for m in range(h):
        if len(gamma[m]) != d or any(len(row) != d for row in gamma[m]):
            raise InvalidParameter("gamma must have shape (h, d, d)")
        for i in range(d):
            for j in range(d):
                v = Fraction(gamma[m][i][j])
                if v != -Fraction(gamma[m][j][i]):
                    raise InvalidParameter(f"gamma[{m}] is not skew at ({i}, {j})")
                if v:
                    entries[(m, i, j)] = v
    return StructureConstants.build(d, h, gamma=entries, name=name)


def catalog_model(name: str, *params) -> StructureConstants:
    """Return a named model.

    ``g_rho1`` takes a rational curvature, ``heisenberg`` the integer ``n``,
    ``carnot_step2`` a dense gamma tensor; the others take no parameters.
    """
    if name == "g_rho1":
        if len(params) != 1:
            raise InvalidParameter("g_rho1 takes exactly one parameter rho1")
        try:
            rho1 = Fraction(str(params[0])) if isinstance(params[0], str) else Fraction(params[0])
        except (ValueError, TypeError) as exc:
            raise InvalidParameter(f"rho1 must be rational: {params[0]!r}") from exc
        return _g_rho1(rho1, f"g_rho1:{rho1}")
    if name == "su2":
        return _g_rho1(Fraction(1), "su2")
    if name == "sl2":
        return _g_rho1(Fraction(-1), "sl2")
    if name == "heisenberg":
        n = int(params[0]) if params else 1
        if n < 1:
            raise InvalidParameter("heisenberg needs n >= 1")
        return _heisenberg(n)
    if name == "quaternionic_heisenberg":
        return _quaternionic_heisenberg()
    if name == "carnot_step2":
        if len(params) != 1:
            raise InvalidParameter("carnot_step2 takes a gamma tensor")
        return carnot_step2(params[0])
    raise UnknownModel(name)


def parse_model_spec(spec: str) -> StructureConstants:
    """Parse CLI-style ``name[:param]`` such as ``heisenberg:2`` or ``g_rho1:-1/2``."""
    name, _, arg = spec.partition(":")
    if name not in MODELS:
        raise UnknownModel(name)
    if name in ("su2", "sl2", "quaternionic_heisenberg"):
        return catalog_model(name)
    if name == "carnot_step2":
        raise InvalidParameter("carnot_step2 needs a structure file")
    if not arg:
        return catalog_model(name) if name == "heisenberg" else catalog_model(name, "0")
    return catalog_model(name, arg)
