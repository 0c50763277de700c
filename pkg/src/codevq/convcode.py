"""Rate-1/2 convolutional encoders over GF(q), their trellises, and search candidates.

Generator labels list the coefficients ``a_0 a_1 ... a_m`` left to right as
base-q digits; for ``q = 2`` the resulting bit string is written in octal.
Thus ``[7;5]`` is ``(1 + D + D^2, 1 + D^2)`` and, for ``q = 3``, ``[12;11]`` is
``(1 + 2D, 1 + D)``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .gfpoly import Poly, check_prime, coprime


class CodeSpecError(ValueError):
    pass


# -- generator labels ---------------------------------------------------------

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def format_poly(p: Poly) -> str:
    if p.is_zero():
        return "0"
    if p.q == 2:
        return format(int("".join(map(str, p.coeffs)), 2), "o")
    return "".join(_DIGITS[a] for a in p.coeffs)


def parse_poly(text: str, q: int) -> Poly:
    check_prime(q)
    text = text.strip().lower()
    if not text:
        raise CodeSpecError("empty generator label")
    if q == 2:
        try:
            bits = format(int(text, 8), "b")
        except ValueError as exc:
            raise CodeSpecError(f"bad octal generator {text!r}") from exc
        if bits.endswith("0") and bits != "0":
            raise CodeSpecError(f"{text!r} has a zero leading coefficient")
        return Poly((int(b) for b in bits), 2)
    digits = []
    for ch in text:
        v = _DIGITS.find(ch)
        if v < 0 or v >= q:
            raise CodeSpecError(f"digit {ch!r} out of range for q={q}")
        digits.append(v)
    if digits[-1] == 0 and len(digits) > 1:
        raise CodeSpecError(f"{text!r} has a zero leading coefficient")
    return Poly(digits, q)


def poly_value(p: Poly) -> int:
    """Integer value of the printed base-q label, used to order generator pairs."""
    v = 0
    for a in p.coeffs:
        v = v * p.q + a
    return v


_LABEL_RE = re.compile(r"^\s*\[?\s*([0-9a-zA-Z]+)\s*[;,]\s*([0-9a-zA-Z]+)\s*\]?\s*$")


def parse_label(label: str, q: int) -> tuple[Poly, Poly]:
    m = _LABEL_RE.match(label)
    if not m:
        raise CodeSpecError(f"cannot parse generator label {label!r}")
    return parse_poly(m.group(1), q), parse_poly(m.group(2), q)


# -- encoder ------------------------------------------------------------------


@dataclass(frozen=True)
class ConvCodeSpec:
    q: int
    g1: Poly
    g2: Poly

    def __post_init__(self):
        check_prime(self.q)
        if self.g1.q != self.q or self.g2.q != self.q:
            raise CodeSpecError("generator modulus differs from q")
        if self.memory < 1:
            raise CodeSpecError("memory must be at least 1")
        if self.g1[0] != 1 or self.g2[0] != 1:
            raise CodeSpecError(f"{self.label} is not delay-free")
        if not coprime(self.g1, self.g2):
            raise CodeSpecError(f"{self.label} is catastrophic")

    @classmethod
    def from_label(cls, label: str, q: int = 2) -> ConvCodeSpec:
        g1, g2 = parse_label(label, q)
        return cls(q, g1, g2)

    @property
    def memory(self) -> int:
        return max(self.g1.degree, self.g2.degree)

    @property
    def num_states(self) -> int:
        return self.q ** self.memory

    @property
    def label(self) -> str:
        return f"[{format_poly(self.g1)};{format_poly(self.g2)}]"

    def taps(self) -> np.ndarray:
        """Generator coefficients as a ``(2, m + 1)`` integer array."""
        m = self.memory
        return np.array([[g[j] for j in range(m + 1)] for g in (self.g1, self.g2)], dtype=np.int64)

    def swapped(self) -> ConvCodeSpec:
        return ConvCodeSpec(self.q, self.g2, self.g1)

    def __str__(self):
        return self.label


def encode(spec: ConvCodeSpec, u) -> np.ndarray:
    """Truncated encoding from the zero state: returns ``(k, 2)`` code symbols."""
    u = np.asarray(u, dtype=np.int64)
    if u.ndim != 1:
        raise ValueError("information sequence must be one-dimensional")
    if u.size and (u.min() < 0 or u.max() >= spec.q):
        raise ValueError(f"information symbols must lie in [0, {spec.q})")
    k = u.size
    taps = spec.taps()
    out = np.empty((k, 2), dtype=np.int64)
    for i in range(2):
        out[:, i] = np.convolve(u, taps[i])[:k] % spec.q
    return out


def encode_blocks(spec: ConvCodeSpec, u: np.ndarray, block_steps: int) -> np.ndarray:
    """Encode consecutive blocks of ``block_steps`` symbols, each from the zero state.

    Returns the interleaved code sequence ``c^1_1, c^2_1, c^1_2, ...`` of length ``2 len(u)``.
    """
    u = np.asarray(u, dtype=np.int64)
    out = np.empty(2 * u.size, dtype=np.int64)
    for start in range(0, u.size, block_steps):
        stop = min(start + block_steps, u.size)
        out[2 * start:2 * stop] = encode(spec, u[start:stop]).ravel()
    return out


@dataclass(frozen=True, eq=False)
class Trellis:
    """State transitions of an encoder; state ``s = sum_j u_{t-j} q^(j-1)``, j = 1..m."""

    q: int
    num_states: int
    next_state: np.ndarray = field(repr=False)
    output: np.ndarray = field(repr=False)

    @property
    def out1(self) -> np.ndarray:
        return self.output[:, :, 0]

    @property
    def out2(self) -> np.ndarray:
        return self.output[:, :, 1]


def build_trellis(spec: ConvCodeSpec) -> Trellis:
    q, m = spec.q, spec.memory
    S = q ** m
    taps = spec.taps()
    states = np.arange(S)
    # register[s, j-1] = u_{t-j}
    register = np.stack([(states // q ** j) % q for j in range(m)], axis=1)
    next_state = np.empty((S, q), dtype=np.int64)
    output = np.empty((S, q, 2), dtype=np.int64)
    tail = states % (q ** (m - 1))
    for u in range(q):
        next_state[:, u] = u + q * tail
        for i in range(2):
            output[:, u, i] = (taps[i, 0] * u + register @ taps[i, 1:]) % q
    for arr in (next_state, output):
        arr.setflags(write=False)
    return Trellis(q, S, next_state, output)


@lru_cache(maxsize=64)
def cached_trellis(spec: ConvCodeSpec) -> Trellis:
    return build_trellis(spec)


# -- candidate enumeration ----------------------------------------------------


def _delay_free_polys(q: int, degree: int) -> Iterator[Poly]:
    if degree == 0:
        yield Poly((1,), q)
        return
    for middle in itertools.product(range(q), repeat=degree - 1):
        for lead in range(1, q):
            yield Poly((1, *middle, lead), q)


def passes_search_rules(q: int, g1: Poly, g2: Poly) -> bool:
    """Delay-free, ordered by (degree, label value), and relatively prime."""
    if g1[0] != 1 or g2[0] != 1:
        return False
    if g1.degree < g2.degree:
        return False
    if g1.degree == g2.degree and poly_value(g1) < poly_value(g2):
        return False
    return coprime(g1, g2)


def enumerate_candidates(q: int, m: int) -> Iterator[ConvCodeSpec]:
    """All memory-``m`` encoders that survive the search-space reduction rules."""
    check_prime(q)
    if m < 1:
        raise ValueError("memory must be >= 1")
    g1s = sorted(_delay_free_polys(q, m), key=poly_value)
    for g1 in g1s:
        for d2 in range(m + 1):
            for g2 in sorted(_delay_free_polys(q, d2), key=poly_value):
                if passes_search_rules(q, g1, g2):
                    yield ConvCodeSpec(q, g1, g2)


def _reciprocal(p: Poly) -> Poly | None:
    """``D^deg p(1/D)`` normalized to constant term 1 when that is an isometry (sign flip)."""
    r = tuple(reversed(p.coeffs))
    if r[0] == 1:
        return Poly(r, p.q)
    if r[0] == p.q - 1:
        return Poly((-a for a in r), p.q)
    return None


def reversal_partner(spec: ConvCodeSpec) -> ConvCodeSpec | None:
    """The time-reversed encoder in search orientation, if it is a valid candidate.

    Time reversal maps the code onto a coordinate permutation of itself, so both
    encoders share one NSM apart from truncation edge effects.
    """
    r1, r2 = _reciprocal(spec.g1), _reciprocal(spec.g2)
    if r1 is None or r2 is None:
        return None
    if not passes_search_rules(spec.q, r1, r2):
        r1, r2 = r2, r1
        if not passes_search_rules(spec.q, r1, r2):
            return None
    return ConvCodeSpec(spec.q, r1, r2)


def canonical_key(spec: ConvCodeSpec) -> tuple[int, int]:
    return poly_value(spec.g1), poly_value(spec.g2)


def class_representative(spec: ConvCodeSpec) -> ConvCodeSpec:
    """Smallest-label member of ``{spec, time reversal of spec}``."""
    partner = reversal_partner(spec)
    if partner is None or canonical_key(spec) <= canonical_key(partner):
        return spec
    return partner
