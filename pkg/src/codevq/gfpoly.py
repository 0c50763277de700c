"""Arithmetic over a prime field GF(q) and polynomials over it.

Polynomials are stored dense, low degree first: the tuple ``(a_0, a_1, ..., a_n)``
represents ``a_0 + a_1 D + ... + a_n D^n`` with ``a_n != 0``.  The zero
polynomial is the empty tuple.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable


class FieldError(ValueError):
    """Raised on invalid moduli or mixed-field operations."""


@lru_cache(maxsize=None)
def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def check_prime(q: int) -> int:
    if not isinstance(q, int) or not is_prime(q):
        raise FieldError(f"modulus must be prime, got {q!r}")
    return q


@dataclass(frozen=True)
class FieldElem:
    value: int
    q: int

    def __post_init__(self):
        check_prime(self.q)
        if not 0 <= self.value < self.q:
            raise FieldError(f"{self.value} is not in [0, {self.q})")

    def _other(self, other) -> int:
        if isinstance(other, FieldElem):
            if other.q != self.q:
                raise FieldError("field elements over different moduli")
            return other.value
        if isinstance(other, int):
            return other % self.q
        return NotImplemented

    def __add__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElem((self.value + v) % self.q, self.q)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElem((self.value - v) % self.q, self.q)

    def __mul__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElem((self.value * v) % self.q, self.q)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElem(-self.value % self.q, self.q)

    def inverse(self) -> FieldElem:
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElem(pow(self.value, -1, self.q), self.q)

    def __int__(self):
        return self.value


def _trim(coeffs: Iterable[int], q: int) -> tuple[int, ...]:
    c = [int(a) % q for a in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Poly:
    coeffs: tuple[int, ...]
    q: int

    def __init__(self, coeffs: Iterable[int | FieldElem], q: int):
        check_prime(q)
        vals = []
        for a in coeffs:
            if isinstance(a, FieldElem):
                if a.q != q:
                    raise FieldError("coefficient from a different field")
                a = a.value
            vals.append(int(a))
        object.__setattr__(self, "coeffs", _trim(vals, q))
        object.__setattr__(self, "q", q)

    @classmethod
    def zero(cls, q: int) -> Poly:
        return cls((), q)

    @classmethod
    def one(cls, q: int) -> Poly:
        return cls((1,), q)

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def __len__(self):
        return len(self.coeffs)

    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def monic(self) -> Poly:
        if self.is_zero():
            return self
        inv = pow(self.leading(), -1, self.q)
        return Poly((a * inv for a in self.coeffs), self.q)

    def elements(self) -> tuple[FieldElem, ...]:
        return tuple(FieldElem(a, self.q) for a in self.coeffs)

    def __call__(self, x: int) -> int:
        y = 0
        for a in reversed(self.coeffs):
            y = (y * x + a) % self.q
        return y

    def __add__(self, other: Poly) -> Poly:
        return poly_add(self, other)

    def __sub__(self, other: Poly) -> Poly:
        _same_field(self, other)
        return poly_add(self, Poly((-a for a in other.coeffs), self.q))

    def __mul__(self, other: Poly) -> Poly:
        return poly_mul(self, other)

    def __divmod__(self, other: Poly):
        return poly_divmod(self, other)

    def __mod__(self, other: Poly) -> Poly:
        return poly_divmod(self, other)[1]

    def __floordiv__(self, other: Poly) -> Poly:
        return poly_divmod(self, other)[0]

    def __repr__(self):
        if not self.coeffs:
            return f"Poly(0, q={self.q})"
        terms = []
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            mono = "" if i == 0 else ("D" if i == 1 else f"D^{i}")
            coef = str(a) if (a != 1 or i == 0) else ""
            terms.append(coef + mono)
        return f"Poly({' + '.join(terms)}, q={self.q})"


def _same_field(a: Poly, b: Poly) -> None:
    if a.q != b.q:
        raise FieldError(f"modulus mismatch: {a.q} vs {b.q}")


def poly_add(a: Poly, b: Poly) -> Poly:
    _same_field(a, b)
    n = max(len(a), len(b))
    return Poly((a[i] + b[i] for i in range(n)), a.q)


def poly_mul(a: Poly, b: Poly) -> Poly:
    _same_field(a, b)
    if a.is_zero() or b.is_zero():
        return Poly.zero(a.q)
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a.coeffs):
        if ai:
            for j, bj in enumerate(b.coeffs):
                out[i + j] += ai * bj
    return Poly(out, a.q)


def poly_divmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    _same_field(a, b)
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    q = a.q
    rem = list(a.coeffs)
    db = b.degree
    inv = pow(b.leading(), -1, q)
    quot = [0] * max(len(rem) - db, 0)
    for i in range(len(rem) - 1, db - 1, -1):
        coef = rem[i] * inv % q
        if coef:
            quot[i - db] = coef
            for j, bj in enumerate(b.coeffs):
                rem[i - db + j] = (rem[i - db + j] - coef * bj) % q
    return Poly(quot, q), Poly(rem[:db] if db > 0 else (), q)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor by the Euclidean algorithm."""
    _same_field(a, b)
    if a.is_zero() and b.is_zero():
        raise ValueError("gcd(0, 0) is undefined")
    while not b.is_zero():
        a, b = b, poly_divmod(a, b)[1]
    return a.monic()


def coprime(a: Poly, b: Poly) -> bool:
    return poly_gcd(a, b).degree == 0
