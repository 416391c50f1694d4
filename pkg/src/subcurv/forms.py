"""Gamma-calculus on jets: carré du champ, iterated forms, curvature terms and CD checks.

Two independent routes are kept apart on purpose:

* definition route: ``Gamma_2 = 1/2 L Gamma(f) - Gamma(f, Lf)`` expanded as a
  differential polynomial, with every derivative rewritten through
  :func:`subcurv.ncdiff.reduce`;
* formula route: Hessian, ``R``, ``S`` and ``T`` read straight off the jet and
  the structure constants, no rewriting involved.

All structure constants are constant, so every term carrying a frame
derivative of ``omega`` or ``gamma`` is dropped from the curvature formulas.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from subcurv.errors import NonPositiveNu, NotYangMills, OrderOverflow, InvalidParameter
from subcurv.ncdiff import NCExpression, Jet, Word, normal_words, random_jet, reduce
from subcurv.structures import StructureConstants, yang_mills_check

Monomial = tuple[Word, ...]


# -- differential polynomials -------------------------------------------------


class DiffPoly:
    """Polynomial in the jet coordinates ``w f`` (``w`` a normal-form word)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, Fraction] | None = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def var(cls, word: Word = ()) -> "DiffPoly":
        return cls({(tuple(word),): Fraction(1)})

    @classmethod
    def const(cls, c) -> "DiffPoly":
        return cls({(): Fraction(c)})

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        acc = dict(self.terms)
        for m, c in other.terms.items():
            acc[m] = acc.get(m, Fraction(0)) + c
        return DiffPoly(acc)

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        return self + other.scale(-1)

    def scale(self, k) -> "DiffPoly":
        k = Fraction(k)
        return DiffPoly({m: c * k for m, c in self.terms.items()})

    def __mul__(self, other: "DiffPoly") -> "DiffPoly":
        acc: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(sorted(m1 + m2))
                acc[m] = acc.get(m, Fraction(0)) + c1 * c2
        return DiffPoly(acc)

    def derive(self, a: int, sc: StructureConstants, cap: int) -> "DiffPoly":
        """Apply the frame field with basis index ``a`` (Leibniz rule)."""
        acc: dict[Monomial, Fraction] = {}
        for mono, c in self.terms.items():
            for k, w in enumerate(mono):
                dw = reduce(NCExpression.word(a, *w), sc, order_cap=cap)
                rest = mono[:k] + mono[k + 1 :]
                for nw, nc in dw.items():
                    m = tuple(sorted(rest + (nw,)))
                    acc[m] = acc.get(m, Fraction(0)) + c * nc
        return DiffPoly(acc)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def max_order(self) -> int:
        return max((len(w) for m in self.terms for w in m), default=0)

    def compile(self, words: Sequence[Word]) -> "CompiledPoly":
        index = {w: k for k, w in enumerate(words)}
        try:
            return CompiledPoly([(c, tuple(index[w] for w in m)) for m, c in self.terms.items()])
        except KeyError as exc:
            raise OrderOverflow(f"polynomial needs derivative {exc.args[0]} beyond the jet") from exc


class CompiledPoly:
    __slots__ = ("terms",)

    def __init__(self, terms: list[tuple[Fraction, tuple[int, ...]]]):
        self.terms = terms

    def __call__(self, values: Sequence[Fraction]) -> Fraction:
        total = Fraction(0)
        for c, idx in self.terms:
            p = c
            for k in idx:
                p *= values[k]
            total += p
        return total


class _Calculus:
    """Symbolic Gamma-calculus for one structure."""

    def __init__(self, sc: StructureConstants, cap: int = 3):
        self.sc = sc
        self.cap = cap
        self.drift = [
            -sum((sc.omega[k][i][k] for k in range(sc.d)), Fraction(0)) for i in range(sc.d)
        ]

    def D(self, a: int, p: DiffPoly) -> DiffPoly:
        return p.derive(a, self.sc, self.cap)

    def gamma(self, p: DiffPoly, q: DiffPoly) -> DiffPoly:
        out = DiffPoly()
        for i in range(self.sc.d):
            out = out + self.D(i, p) * self.D(i, q)
        return out

    def gammaZ(self, p: DiffPoly, q: DiffPoly) -> DiffPoly:
        out = DiffPoly()
        for m in range(self.sc.h):
            a = self.sc.d + m
            out = out + self.D(a, p) * self.D(a, q)
        return out

    def L(self, p: DiffPoly) -> DiffPoly:
        out = DiffPoly()
        for i in range(self.sc.d):
            dp = self.D(i, p)
            out = out + self.D(i, dp)
            if self.drift[i]:
                out = out + dp.scale(self.drift[i])
        return out

    def gamma2(self, f: DiffPoly) -> DiffPoly:
        return self.L(self.gamma(f, f)).scale(Fraction(1, 2)) - self.gamma(f, self.L(f))

    def gamma2Z(self, f: DiffPoly) -> DiffPoly:
        return self.L(self.gammaZ(f, f)).scale(Fraction(1, 2)) - self.gammaZ(f, self.L(f))


def _symbolic(sc: StructureConstants) -> dict[str, DiffPoly]:
    cache = sc.__dict__.setdefault("_symbolic_forms", {})
    if not cache:
        calc = _Calculus(sc)
        f = DiffPoly.var()
        g, gz = calc.gamma(f, f), calc.gammaZ(f, f)
        cache.update(
            gamma2=calc.gamma2(f),
            gamma2Z=calc.gamma2Z(f),
            commutation=calc.gamma(f, gz) - calc.gammaZ(f, g),
            gamma_of_gamma=calc.gamma(g, g),
            gamma_of_gammaZ=calc.gamma(gz, gz),
        )
    return cache


def _compiled(sc: StructureConstants, key: str, order: int) -> CompiledPoly:
    cache = sc.__dict__.setdefault("_compiled_forms", {})
    k = (key, order)
    if k not in cache:
        cache[k] = _symbolic(sc)[key].compile(normal_words(sc, order))
    return cache[k]


def _values(jet: Jet, sc: StructureConstants) -> list[Fraction]:
    return [jet.values[w] for w in normal_words(sc, jet.order)]


def symbolic_form(sc: StructureConstants, key: str) -> DiffPoly:
    """Expanded polynomial for ``gamma2``, ``gamma2Z``, ``commutation``, ``gamma_of_gamma`` or ``gamma_of_gammaZ``."""
    return _symbolic(sc)[key]


# -- parameters and results ---------------------------------------------------


@dataclass(frozen=True)
class CDParams:
    rho1: Fraction
    rho2: Fraction
    kappa: Fraction
    d: Fraction

    def __post_init__(self) -> None:
        for key in ("rho1", "rho2", "kappa", "d"):
            v = getattr(self, key)
            object.__setattr__(self, key, Fraction(str(v)) if isinstance(v, (str, float)) else Fraction(v))
        if self.rho2 <= 0:
            raise InvalidParameter(f"rho2 must be > 0, got {self.rho2}")
        if self.kappa < 0:
            raise InvalidParameter(f"kappa must be >= 0, got {self.kappa}")
        if self.d <= 0:
            raise InvalidParameter(f"d must be > 0, got {self.d}")

    @classmethod
    def parse(cls, text: str) -> "CDParams":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise InvalidParameter(f"expected rho1,rho2,kappa,d; got {text!r}")
        return cls(*parts)

    @property
    def D(self) -> Fraction:
        return self.d * (1 + 3 * self.kappa / (2 * self.rho2))

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.rho1, self.rho2, self.kappa, self.d)

    def __str__(self) -> str:
        return "CD({})".format(", ".join(str(v) for v in self.as_tuple()))


@dataclass(frozen=True)
class FormValues:
    gamma: Fraction
    gammaZ: Fraction
    lf: Fraction
    gamma2: Fraction
    gamma2Z: Fraction
    hessH_sq: Fraction
    hessHV_sq: Fraction
    R: Fraction
    S: Fraction
    T: Fraction


# -- formula route ------------------------------------------------------------


def _first(jet: Jet, a: int) -> Fraction:
    return jet.values[(a,)]


def _xx(jet: Jet, sc: StructureConstants, i: int, j: int) -> Fraction:
    """``X_i X_j f`` using ``[X_i, X_j]`` from the bracket table when ``i > j``."""
    if i <= j:
        return jet.values[(i, j)]
    v = jet.values[(j, i)]
    for l in range(sc.d):
        v += sc.omega[l][i][j] * jet.values[(l,)]
    for m in range(sc.h):
        v += sc.gamma[m][i][j] * jet.values[(sc.d + m,)]
    return v


def _sym(jet: Jet, sc: StructureConstants, i: int, j: int) -> Fraction:
    return (_xx(jet, sc, i, j) + _xx(jet, sc, j, i)) / 2


def gamma_value(jet: Jet, sc: StructureConstants) -> Fraction:
    return sum((_first(jet, i) ** 2 for i in range(sc.d)), Fraction(0))


def gammaZ_value(jet: Jet, sc: StructureConstants) -> Fraction:
    return sum((_first(jet, sc.d + m) ** 2 for m in range(sc.h)), Fraction(0))


def lf_value(jet: Jet, sc: StructureConstants) -> Fraction:
    d = sc.d
    v = sum((jet.values[(i, i)] for i in range(d)), Fraction(0))
    for i in range(d):
        for k in range(d):
            v -= sc.omega[k][i][k] * _first(jet, i)
    return v


def hessian_sq(jet: Jet, sc: StructureConstants) -> Fraction:
    d, w = sc.d, sc.omega
    Xf = [_first(jet, i) for i in range(d)]
    total = Fraction(0)
    for l in range(d):
        t = jet.values[(l, l)] - sum((w[l][i][l] * Xf[i] for i in range(d)), Fraction(0))
        total += t * t
    for l in range(d):
        for j in range(l + 1, d):
            t = _sym(jet, sc, j, l) - sum(((w[l][i][j] + w[j][i][l]) / 2 * Xf[i] for i in range(d)), Fraction(0))
            total += 2 * t * t
    return total


def hessHV_sq(jet: Jet, sc: StructureConstants) -> Fraction:
    return sum(
        (jet.values[(i, sc.d + m)] ** 2 for i in range(sc.d) for m in range(sc.h)), Fraction(0)
    )


def _r_coefficients(sc: StructureConstants):
    """Nonzero coefficients of ``R`` as a quadratic form in the first derivatives."""
    cache = sc.__dict__.get("_r_coefficients")
    if cache is not None:
        return cache
    d, h = sc.d, sc.h
    w, g, dl = sc.omega, sc.gamma, sc.delta
    xx, zx, pairs = [], [], []
    for k in range(d):
        for l in range(d):
            c = Fraction(0)
            for j in range(d):
                for m in range(h):
                    c += g[m][k][j] * dl[l][j][m]
            for i in range(d):
                for j in range(d):
                    c += w[i][j][i] * w[l][k][j]
            for i in range(d):
                c -= w[i][k][i] * w[i][l][i]
            for i in range(d):
                for j in range(i + 1, d):
                    c += (w[l][i][j] * w[k][i][j] - (w[i][l][j] + w[j][l][i]) * (w[i][k][j] + w[j][k][i])) / 2
            if c:
                xx.append((c, k, l))
    for k in range(d):
        for m in range(h):
            c = Fraction(0)
            for l in range(d):
                for j in range(d):
                    c += w[l][j][l] * g[m][k][j]
            for l in range(d):
                for j in range(l + 1, d):
                    c += w[k][l][j] * g[m][l][j]
            if c:
                zx.append((c, m, k))
    for l in range(d):
        for j in range(l + 1, d):
            row = [(g[m][l][j], m) for m in range(h) if g[m][l][j]]
            if row:
                pairs.append(row)
    cache = sc.__dict__["_r_coefficients"] = (xx, zx, pairs)
    return cache


def R_value(jet: Jet, sc: StructureConstants) -> Fraction:
    xx, zx, pairs = _r_coefficients(sc)
    d = sc.d
    Xf = [_first(jet, i) for i in range(d)]
    Zf = [_first(jet, d + m) for m in range(sc.h)]
    total = Fraction(0)
    for c, k, l in xx:
        total += c * Xf[k] * Xf[l]
    for c, m, k in zx:
        total += c * Zf[m] * Xf[k]
    for row in pairs:
        s = sum((c * Zf[m] for c, m in row), Fraction(0))
        total += s * s / 2
    return total


def S_value(jet: Jet, sc: StructureConstants) -> Fraction:
    d = sc.d
    total = Fraction(0)
    for i in range(d):
        xi = _first(jet, i)
        if not xi:
            continue
        for j in range(d):
            for m in range(sc.h):
                gm = sc.gamma[m][i][j]
                if gm:
                    total += gm * jet.values[(j, d + m)] * xi
    return -2 * total


def T_value(jet: Jet, sc: StructureConstants) -> Fraction:
    d = sc.d
    Xf = [_first(jet, i) for i in range(d)]
    total = Fraction(0)
    for j in range(d):
        for m in range(sc.h):
            s = sum((sc.gamma[m][i][j] * Xf[i] for i in range(d)), Fraction(0))
            total += s * s
    return total


# -- public operations ---------------------------------------------------------


def _need(jet: Jet, order: int) -> None:
    if jet.order < order:
        raise OrderOverflow(f"jet of order {jet.order} given, order {order} needed")


def gamma2_by_definition(jet: Jet, sc: StructureConstants) -> tuple[Fraction, Fraction]:
    _need(jet, 3)
    vals = _values(jet, sc)
    return _compiled(sc, "gamma2", jet.order)(vals), _compiled(sc, "gamma2Z", jet.order)(vals)


def evaluate_forms(jet: Jet, sc: StructureConstants) -> FormValues:
    _need(jet, 3)
    g2, g2z = gamma2_by_definition(jet, sc)
    return FormValues(
        gamma=gamma_value(jet, sc),
        gammaZ=gammaZ_value(jet, sc),
        lf=lf_value(jet, sc),
        gamma2=g2,
        gamma2Z=g2z,
        hessH_sq=hessian_sq(jet, sc),
        hessHV_sq=hessHV_sq(jet, sc),
        R=R_value(jet, sc),
        S=S_value(jet, sc),
        T=T_value(jet, sc),
    )


def check_bochner(jet: Jet, sc: StructureConstants) -> tuple[Fraction, Fraction]:
    """Residuals of the horizontal and vertical Bochner identities."""
    fv = evaluate_forms(jet, sc)
    return fv.gamma2 - fv.hessH_sq - fv.R - fv.S, fv.gamma2Z - fv.hessHV_sq


def check_commutation_hypothesis(jet: Jet, sc: StructureConstants) -> Fraction:
    """``Gamma(f, Gamma^Z f) - Gamma^Z(f, Gamma f)`` at the jet."""
    _need(jet, 2)
    return _compiled(sc, "commutation", jet.order)(_values(jet, sc))


def _nu(nu) -> Fraction:
    nu = Fraction(nu)
    if nu <= 0:
        raise NonPositiveNu(f"nu must be > 0, got {nu}")
    return nu


def cd_coefficients(fv: FormValues, p: CDParams) -> tuple[Fraction, Fraction, Fraction]:
    """``(A, B, C)`` with CD residual ``A + B nu + C / nu``."""
    A = fv.gamma2 - fv.lf**2 / p.d - p.rho1 * fv.gamma - p.rho2 * fv.gammaZ
    return A, fv.gamma2Z, p.kappa * fv.gamma


def cd_residual(fv: FormValues, p: CDParams, nu) -> Fraction:
    nu = _nu(nu)
    A, B, C = cd_coefficients(fv, p)
    return A + B * nu + C / nu


def check_cd(jet: Jet, sc: StructureConstants, p: CDParams, nu) -> Fraction:
    """Generalized CD residual; the inequality holds at the jet iff the result is >= 0."""
    nu = _nu(nu)
    return cd_residual(evaluate_forms(jet, sc), p, nu)


NU_GRID = tuple(Fraction(2) ** k for k in range(-10, 11))


def nu_candidates(B: Fraction, C: Fraction) -> list[Fraction]:
    """Power-of-two grid plus a rational approximation of the minimizer ``sqrt(C/B)``."""
    grid = list(NU_GRID)
    if B > 0 and C > 0:
        star = Fraction(math.sqrt(C / B)).limit_denominator(10**6)
        if star > 0:
            grid.append(star)
    return grid


def sparse_random_jet(sc: StructureConstants, order: int, rng: random.Random, magnitude: int) -> Jet:
    """Random jet whose entries are zeroed independently with probability 1/2."""
    base = random_jet(sc, order, rng.randrange(2**63), magnitude)
    values = {w: (v if rng.random() < 0.5 else 0) for w, v in base.values.items()}
    return Jet(sc, order, values)


@dataclass(frozen=True)
class Counterexample:
    jet: Jet
    nu: Fraction
    residual: Fraction
    trial: int


def falsify_cd(
    sc: StructureConstants, p: CDParams, trials: int, seed: int, magnitude: int = 3
) -> Counterexample | None:
    """Randomized search for a jet and ``nu`` violating CD(p); deterministic in ``seed``.

    Odd trials use fully random jets, even trials sparse ones, since
    violations of the sharp constants live near low-dimensional jet sets.
    """
    if trials < 1:
        raise InvalidParameter("trials must be >= 1")
    rng = random.Random(seed)
    for t in range(trials):
        if t % 2:
            jet = random_jet(sc, 3, rng.randrange(2**63), magnitude)
        else:
            jet = sparse_random_jet(sc, 3, rng, magnitude)
        fv = evaluate_forms(jet, sc)
        A, B, C = cd_coefficients(fv, p)
        for nu in nu_candidates(B, C):
            r = A + B * nu + C / nu
            if r < 0:
                return Counterexample(jet, nu, r, t)
    return None


def _improved_parts(jet: Jet, sc: StructureConstants) -> tuple[FormValues, Fraction, Fraction]:
    fv = evaluate_forms(jet, sc)
    vals = _values(jet, sc)
    gg = _compiled(sc, "gamma_of_gamma", jet.order)(vals)
    ggz = _compiled(sc, "gamma_of_gammaZ", jet.order)(vals)
    return fv, gg, ggz


def improved_bounds_over_nu(
    jet: Jet, sc: StructureConstants, p: CDParams, nus: Iterable
) -> list[tuple[Fraction, Fraction, Fraction]]:
    """``(nu, res1, res2)`` for each ``nu``; the forms are evaluated once."""
    fv, gg, ggz = _improved_parts(jet, sc)
    res2 = 4 * fv.gammaZ * fv.gamma2Z - ggz
    out = []
    for nu in nus:
        nu = _nu(nu)
        res1 = 4 * fv.gamma * (fv.gamma2 + nu * fv.gamma2Z - (p.rho1 - p.kappa / nu) * fv.gamma) - gg
        out.append((nu, res1, res2))
    return out


def check_improved_bounds(
    jet: Jet, sc: StructureConstants, p: CDParams, nu, require_yang_mills: bool = False
) -> tuple[Fraction, Fraction]:
    """Residuals of the second-derivative bounds for Yang-Mills structures."""
    nu = _nu(nu)
    if require_yang_mills and not yang_mills_check(sc).passed:
        raise NotYangMills(sc.name or "structure is not of Yang-Mills type")
    (_, res1, res2), = improved_bounds_over_nu(jet, sc, p, [nu])
    return res1, res2


def iter_random_jets(sc: StructureConstants, count: int, seed: int, magnitude: int = 5) -> Iterable[Jet]:
    rng = random.Random(seed)
    for _ in range(count):
        yield random_jet(sc, 3, rng.randrange(2**63), magnitude)
