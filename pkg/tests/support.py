"""Independent oracles shared by the test modules.

``Poly`` is a tiny exact polynomial ring in exponential coordinates used to
apply explicit vector fields to explicit functions, without going through
the word-rewriting engine.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations_with_replacement

from subcurv.ncdiff import Jet
from subcurv.structures import carnot_step2, validate_structure


class Poly:
    def __init__(self, terms=None, nvars=3):
        self.n = nvars
        self.t = {k: Fraction(v) for k, v in (terms or {}).items() if v}

    @classmethod
    def var(cls, i, nvars):
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1}, nvars)

    @classmethod
    def const(cls, c, nvars):
        return cls({(0,) * nvars: c}, nvars)

    def __add__(self, o):
        out = dict(self.t)
        for k, v in o.t.items():
            out[k] = out.get(k, 0) + v
        return Poly(out, self.n)

    def __sub__(self, o):
        return self + o.scale(-1)

    def scale(self, c):
        return Poly({k: v * c for k, v in self.t.items()}, self.n)

    def __mul__(self, o):
        out = {}
        for a, u in self.t.items():
            for b, v in o.t.items():
                k = tuple(x + y for x, y in zip(a, b))
                out[k] = out.get(k, 0) + u * v
        return Poly(out, self.n)

    def diff(self, i):
        out = {}
        for k, v in self.t.items():
            if k[i]:
                e = list(k)
                e[i] -= 1
                out[tuple(e)] = out.get(tuple(e), 0) + v * k[i]
        return Poly(out, self.n)

    def at_origin(self):
        return self.t.get((0,) * self.n, Fraction(0))


class CarnotFrame:
    """``X_i = d/dx_i - 1/2 sum gamma[m][i][l] x_l d/dz_m``, ``Z_m = d/dz_m``."""

    def __init__(self, sc):
        self.sc = sc
        self.d, self.h = sc.d, sc.h
        self.n = sc.d + sc.h

    def apply(self, a, f):
        if a >= self.d:
            return f.diff(a)
        out = f.diff(a)
        for m in range(self.h):
            for l in range(self.d):
                g = self.sc.gamma[m][a][l]
                if g:
                    out = out - (Poly.var(l, self.n) * f.diff(self.d + m)).scale(g / 2)
        return out

    def word(self, w, f):
        for a in reversed(w):
            f = self.apply(a, f)
        return f

    def L(self, f):
        out = Poly({}, self.n)
        for i in range(self.d):
            out = out + self.apply(i, self.apply(i, f))
        return out

    def gamma(self, f, g, vertical=False):
        rng = range(self.d, self.n) if vertical else range(self.d)
        out = Poly({}, self.n)
        for a in rng:
            out = out + self.apply(a, f) * self.apply(a, g)
        return out

    def gamma2(self, f, vertical=False):
        half_l = self.L(self.gamma(f, f, vertical)).scale(Fraction(1, 2))
        return (half_l - self.gamma(f, self.L(f), vertical)).at_origin()

    def jet(self, f, order=3):
        vals = {}
        for k in range(order + 1):
            for w in combinations_with_replacement(range(self.n), k):
                vals[w] = self.word(w, f).at_origin()
        return Jet(self.sc, order, vals)


def random_poly(nvars, degree, rng, magnitude=4):
    terms = {}
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(nvars), total):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            if rng.random() < 0.6:
                terms[tuple(e)] = Fraction(rng.randint(-magnitude, magnitude), rng.randint(1, magnitude))
    return Poly(terms, nvars)


def random_carnot(rng: random.Random, d=None, h=None):
    """Random valid, bracket-generating step-2 Carnot structure."""
    while True:
        dd = d or rng.randint(2, 4)
        hh = h or rng.randint(1, min(3, dd * (dd - 1) // 2))
        gamma = [[[Fraction(0)] * dd for _ in range(dd)] for _ in range(hh)]
        for m in range(hh):
            for i in range(dd):
                for j in range(i + 1, dd):
                    v = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
                    gamma[m][i][j], gamma[m][j][i] = v, -v
        sc = carnot_step2(gamma, name=f"random_carnot_{dd}_{hh}")
        rep = validate_structure(sc)
        if rep.passed and not rep.diagnostics:
            return sc
