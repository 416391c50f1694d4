"""Exact algebra of iterated frame derivatives.

A word is a tuple of basis indices (``0..d-1`` horizontal, ``d..d+h-1``
vertical).  Because horizontal indices are numbered first, a word is in normal
form exactly when it is nondecreasing.  Rewriting replaces the leftmost
descent ``... a b ...`` (``a > b``) by ``... b a ... + ... [a, b] ...``.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Mapping

from subcurv.errors import IndexOutOfRange, OrderOverflow
from subcurv.structures import StructureConstants

Word = tuple[int, ...]

DEFAULT_ORDER_CAP = 3


def is_normal(word: Word) -> bool:
    return all(a <= b for a, b in zip(word, word[1:]))


class NCExpression(Mapping[Word, Fraction]):
    """Immutable rational combination of words; zero coefficients are dropped."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Word, object] | Iterable[tuple[Word, object]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Word, Fraction] = {}
        for w, c in items:
            w = tuple(w)
            acc[w] = acc.get(w, Fraction(0)) + Fraction(c)
        self._terms = {w: c for w, c in acc.items() if c}
        self._hash = None

    @classmethod
    def word(cls, *symbols: int) -> "NCExpression":
        return cls({tuple(symbols): 1})

    def __getitem__(self, w: Word) -> Fraction:
        return self._terms[tuple(w)]

    def get(self, w, default=Fraction(0)):
        return self._terms.get(tuple(w), default)

    def __iter__(self) -> Iterator[Word]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, NCExpression):
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __add__(self, other: "NCExpression") -> "NCExpression":
        if not isinstance(other, NCExpression):
            return NotImplemented
        return NCExpression(list(self._terms.items()) + list(other._terms.items()))

    def __neg__(self) -> "NCExpression":
        return NCExpression({w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "NCExpression") -> "NCExpression":
        return self + (-other)

    def __mul__(self, other) -> "NCExpression":
        if isinstance(other, NCExpression):
            # operator composition: concatenate words
            return NCExpression(
                (u + v, a * b) for u, a in self._terms.items() for v, b in other._terms.items()
            )
        return NCExpression({w: c * Fraction(other) for w, c in self._terms.items()})

    def __rmul__(self, other) -> "NCExpression":
        return self.__mul__(other) if not isinstance(other, NCExpression) else NotImplemented

    @property
    def max_length(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def is_normal(self) -> bool:
        return all(is_normal(w) for w in self._terms)

    def format(self, sc: StructureConstants | None = None) -> str:
        if not self._terms:
            return "0"
        parts = []
        for w in sorted(self._terms, key=lambda w: (len(w), w)):
            c = self._terms[w]
            name = "·".join(sc.symbol_name(a) if sc else str(a) for a in w) or "1"
            if c == 1:
                parts.append(f"+ {name}")
            elif c == -1:
                parts.append(f"- {name}")
            else:
                sign = "-" if c < 0 else "+"
                parts.append(f"{sign} {abs(c)}·{name}")
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def __repr__(self) -> str:
        return f"NCExpression({self.format()})"


def _check_indices(word: Word, sc: StructureConstants) -> None:
    for a in word:
        if not 0 <= a < sc.n:
            raise IndexOutOfRange(f"symbol {a} outside frame of size {sc.n}")


def _reduce_word(word: Word, sc: StructureConstants) -> tuple[tuple[Word, Fraction], ...]:
    # per-structure memo; hashing the whole structure on every call is too slow
    cache = sc.__dict__.setdefault("_normal_form_cache", {})
    hit = cache.get(word)
    if hit is None:
        hit = cache[word] = _rewrite(word, sc)
    return hit


def _rewrite(word: Word, sc: StructureConstants) -> tuple[tuple[Word, Fraction], ...]:
    for k in range(len(word) - 1):
        a, b = word[k], word[k + 1]
        if a > b:
            head, tail = word[:k], word[k + 2 :]
            acc: dict[Word, Fraction] = {}
            for w, c in _reduce_word(head + (b, a) + tail, sc):
                acc[w] = acc.get(w, Fraction(0)) + c
            for e, coeff in sc.brackets[a][b]:
                for w, c in _reduce_word(head + (e,) + tail, sc):
                    acc[w] = acc.get(w, Fraction(0)) + coeff * c
            return tuple((w, c) for w, c in acc.items() if c)
    return ((word, Fraction(1)),)


def reduce(expr: NCExpression, sc: StructureConstants, order_cap: int = DEFAULT_ORDER_CAP) -> NCExpression:
    """Rewrite ``expr`` into normal form using the bracket table of ``sc``."""
    acc: dict[Word, Fraction] = {}
    for w, c in expr.items():
        if len(w) > order_cap + 1:
            raise OrderOverflow(f"word of length {len(w)} exceeds order cap {order_cap}")
        _check_indices(w, sc)
        for nw, nc in _reduce_word(w, sc):
            acc[nw] = acc.get(nw, Fraction(0)) + c * nc
    return NCExpression(acc)


def normal_words(sc: StructureConstants, order: int) -> list[Word]:
    """All normal-form words of length ``<= order``, shortest first."""
    out: list[Word] = []
    for k in range(order + 1):
        out.extend(combinations_with_replacement(range(sc.n), k))
    return out


class Jet:
    """Values of ``w f`` at a point for every normal-form word ``w`` of length ``<= order``."""

    __slots__ = ("order", "values", "d", "h")

    def __init__(self, sc_or_dims, order: int, values: Mapping[Word, object]):
        d, h = (sc_or_dims.d, sc_or_dims.h) if isinstance(sc_or_dims, StructureConstants) else sc_or_dims
        self.order = order
        self.d, self.h = d, h
        n = d + h
        vals: dict[Word, Fraction] = {}
        for k in range(order + 1):
            for w in combinations_with_replacement(range(n), k):
                vals[w] = Fraction(0)
        for w, v in values.items():
            w = tuple(w)
            if w not in vals:
                raise OrderOverflow(f"{w} is not a normal-form word of length <= {order}")
            vals[w] = Fraction(v)
        self.values = vals

    @classmethod
    def from_symbols(cls, sc: StructureConstants, order: int, entries: Mapping[str, object]) -> "Jet":
        """Build from names like ``"X"``, ``"YZ"`` (3-dim models) or ``"X1 Z2"``; ``""`` is ``f``."""
        names = {sc.symbol_name(a): a for a in range(sc.n)}
        values = {}
        for key, v in entries.items():
            tokens = key.split() if " " in key or any(ch.isdigit() for ch in key) else list(key)
            values[tuple(names[t] for t in tokens)] = v
        return cls(sc, order, values)

    def __getitem__(self, w: Word) -> Fraction:
        return self.values[tuple(w)]

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, Jet) and self.order == other.order and self.values == other.values

    def scaled(self, lam) -> "Jet":
        lam = Fraction(lam)
        return Jet((self.d, self.h), self.order, {w: lam * v for w, v in self.values.items()})

    def __repr__(self) -> str:
        nz = {w: v for w, v in self.values.items() if v}
        return f"Jet(order={self.order}, nonzero={nz})"


def jet_eval(expr: NCExpression, jet: Jet, sc: StructureConstants) -> Fraction:
    """Pair the operator ``expr`` with the derivative table ``jet``."""
    red = reduce(expr, sc, order_cap=max(DEFAULT_ORDER_CAP, jet.order))
    total = Fraction(0)
    for w, c in red.items():
        if len(w) > jet.order:
            raise OrderOverflow(f"reduced word of length {len(w)} exceeds jet order {jet.order}")
        total += c * jet.values[w]
    return total


def random_jet(sc_or_dims, order: int, seed: int, magnitude: int) -> Jet:
    """Independent random rationals ``p/q`` with ``|p| <= magnitude``, ``1 <= q <= magnitude``."""
    if order not in (1, 2, 3):
        raise OrderOverflow(f"order must be 1, 2 or 3, got {order}")
    if magnitude < 1:
        raise ValueError("magnitude must be >= 1")
    d, h = (sc_or_dims.d, sc_or_dims.h) if isinstance(sc_or_dims, StructureConstants) else sc_or_dims
    rng = random.Random(seed)
    values = {}
    for k in range(order + 1):
        for w in combinations_with_replacement(range(d + h), k):
            values[w] = Fraction(rng.randint(-magnitude, magnitude), rng.randint(1, magnitude))
    return Jet((d, h), order, values)


def sublaplacian(sc: StructureConstants) -> NCExpression:
    """``L = sum X_i^2 + X_0`` with ``X_0 = -sum_{i,k} omega[k][i][k] X_i``."""
    terms: dict[Word, Fraction] = {}
    for i in range(sc.d):
        terms[(i, i)] = Fraction(1)
        drift = -sum((sc.omega[k][i][k] for k in range(sc.d)), Fraction(0))
        if drift:
            terms[(i,)] = terms.get((i,), Fraction(0)) + drift
    return NCExpression(terms)


def verify_vertical_commutation(sc: StructureConstants) -> list[NCExpression]:
    """Normal forms of ``L Z_m - Z_m L`` for each vertical generator."""
    L = sublaplacian(sc)
    out = []
    for m in range(sc.h):
        Z = NCExpression.word(sc.d + m)
        out.append(reduce(L * Z - Z * L, sc))
    return out
