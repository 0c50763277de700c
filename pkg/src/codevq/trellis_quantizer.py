"""Approximation step (nearest code-lattice point search) and decoder reconstruction.

A lattice point is ``c_m + q b``: the codeword ``c_m`` comes from the information
sequence ``u`` through the truncated encoder and ``b`` picks the point inside the
coset ``q Z^n + c_m``.  The search minimizes the additive metric ``sum_t mu_t(c_t)``
with the Viterbi algorithm; ``brute_force_search`` is the exhaustive reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._viterbi import viterbi_blocks
from .convcode import ConvCodeSpec, Trellis, cached_trellis, encode, encode_blocks
from .metrics import MetricTable, build_metric_table

DEFAULT_BLOCK_LEN = 4096
DEFAULT_L = 10


@dataclass(frozen=True, eq=False)
class QuantResult:
    u: np.ndarray
    b: np.ndarray
    distortion: float
    codeword: np.ndarray = field(repr=False)
    q: int = 2

    @property
    def point(self) -> np.ndarray:
        """The selected lattice point ``c + q b`` in lattice units."""
        return self.codeword + self.q * self.b


def _check_table(trellis_q: int, table: MetricTable) -> int:
    n = len(table)
    if n == 0:
        raise ValueError("empty source block")
    if n % 2:
        raise ValueError(f"block length {n} is odd; rate-1/2 codewords have even length")
    if table.q != trellis_q:
        raise ValueError(f"metric table for q={table.q} used with a q={trellis_q} trellis")
    return n // 2


def _result(table: MetricTable, u: np.ndarray, codeword: np.ndarray) -> QuantResult:
    rows = np.arange(codeword.size)
    b = table.b[rows, codeword]
    dist = float(table.mu[rows, codeword].mean())
    return QuantResult(u, b, dist, codeword, table.q)


def viterbi_search(trellis: Trellis, table: MetricTable) -> QuantResult:
    k = _check_table(trellis.q, table)
    bounds = np.array([0, k], dtype=np.int64)
    u, _ = viterbi_blocks(table.mu, bounds, trellis.next_state, np.ascontiguousarray(trellis.out1),
                          np.ascontiguousarray(trellis.out2))
    codeword = np.empty(2 * k, dtype=np.int64)
    states = _state_sequence(trellis, u)
    codeword[0::2] = trellis.output[states, u, 0]
    codeword[1::2] = trellis.output[states, u, 1]
    return _result(table, u, codeword)


def _state_sequence(trellis: Trellis, u: np.ndarray) -> np.ndarray:
    states = np.empty(u.size, dtype=np.int64)
    s = 0
    ns = trellis.next_state
    for t, ut in enumerate(u):
        states[t] = s
        s = ns[s, ut]
    return states


BRUTE_FORCE_LIMIT_BITS = 24


def brute_force_search(spec: ConvCodeSpec, table: MetricTable) -> QuantResult:
    """Exhaustive minimization over all ``q^k`` information sequences.

    The full code tree is expanded one step at a time without merging paths, and
    code symbols come straight from the generator taps.  Leaves are ordered
    lexicographically in ``u``, so ties resolve to the smallest sequence.
    """
    k = _check_table(spec.q, table)
    q = spec.q
    if k * math.log2(q) > BRUTE_FORCE_LIMIT_BITS:
        raise ValueError(f"q^k = {q}^{k} codewords is too many to enumerate")
    taps = spec.taps()
    m = spec.memory
    mu = table.mu
    cost = np.zeros(1)
    hist = np.zeros(1, dtype=np.int64)  # u_{t-1} + q u_{t-2} + ... over the last m inputs
    digits = np.arange(q, dtype=np.int64)
    for t in range(k):
        cost = np.repeat(cost, q)
        hist = np.repeat(hist, q)
        u = np.tile(digits, cost.size // q)
        c1 = taps[0, 0] * u
        c2 = taps[1, 0] * u
        for j in range(1, m + 1):
            past = hist // q ** (j - 1) % q
            c1 = c1 + taps[0, j] * past
            c2 = c2 + taps[1, j] * past
        cost = cost + mu[2 * t, c1 % q] + mu[2 * t + 1, c2 % q]
        hist = u + q * (hist % q ** (m - 1)) if m > 1 else u
    leaf = int(np.argmin(cost))
    u = np.array(np.unravel_index(leaf, (q,) * k), dtype=np.int64).reshape(k)
    codeword = encode(spec, u).ravel()
    return _result(table, u, codeword)


# -- streams ------------------------------------------------------------------


def block_bounds(n: int, block_len: int) -> np.ndarray:
    """Block boundaries in trellis steps for ``n`` samples split into ``block_len`` pieces."""
    if n % 2 or block_len % 2:
        raise ValueError("sample count and block length must be even")
    k, bk = n // 2, block_len // 2
    return np.append(np.arange(0, k, bk, dtype=np.int64), k)


@dataclass(frozen=True, eq=False)
class QuantizedStream:
    """A source sequence quantized in independent trellis blocks."""

    spec: ConvCodeSpec
    u: np.ndarray
    b: np.ndarray
    codeword: np.ndarray
    xi: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    block_len: int
    scale: float
    delta: float

    @property
    def n(self) -> int:
        return self.b.size

    @property
    def distortion(self) -> float:
        """Mean metric in source units, ``a^2 * mean(mu)``."""
        return float(self.scale ** 2 * self.mu.mean()) if self.n else 0.0

    def block_slices(self):
        """Sample-index slices of the independent blocks."""
        bounds = 2 * block_bounds(self.n, self.block_len)
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            yield slice(int(lo), int(hi))


def search_costs(trellis: Trellis, cost: np.ndarray, bounds: np.ndarray):
    return viterbi_blocks(np.ascontiguousarray(cost, dtype=float), bounds, trellis.next_state,
                          np.ascontiguousarray(trellis.out1), np.ascontiguousarray(trellis.out2))


def quantize(x, spec: ConvCodeSpec, scale: float = 1.0, delta: float = 0.0,
             block_len: int = DEFAULT_BLOCK_LEN) -> QuantizedStream:
    """Quantize ``x / scale`` to the code lattice, blockwise from the zero state."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    x = np.asarray(x, dtype=float)
    if x.size and not np.isfinite(x).all():
        raise ValueError("source contains non-finite samples")
    if x.size and np.abs(x).max() / scale > 2.0 ** 52:
        raise ValueError("scale too small: lattice indices would overflow")
    table = build_metric_table(x / scale, spec.q, delta)
    trellis = cached_trellis(spec)
    bounds = block_bounds(x.size, block_len)
    if x.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return QuantizedStream(spec, empty, empty, empty, table.xi, table.mu[:, 0], block_len, scale, delta)
    u, _ = search_costs(trellis, table.mu, bounds)
    codeword = encode_blocks(spec, u, block_len // 2)
    rows = np.arange(x.size)
    return QuantizedStream(spec, u, table.b[rows, codeword], codeword, table.xi,
                           table.mu[rows, codeword], block_len, scale, delta)


# -- reconstruction -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReconTable:
    """Refined reconstruction values ``beta[c, b + L]`` in lattice units."""

    q: int
    L: int
    delta: float
    beta: np.ndarray
    counts: np.ndarray = field(repr=False)

    @classmethod
    def nominal(cls, q: int, L: int = DEFAULT_L, delta: float = 0.0) -> ReconTable:
        c = np.arange(q)[:, None]
        b = np.arange(-L, L + 1)[None, :]
        beta = _nominal(c, b, q, delta)
        return cls(q, L, delta, beta, np.zeros(beta.shape, dtype=np.int64))

    def value(self, c: int, b: int) -> float:
        return float(self.beta[c, b + self.L])


def _nominal(c, b, q, delta):
    v = c + q * b
    return v + delta * np.sign(v)


def fit_recon(stream: QuantizedStream, L: int = DEFAULT_L) -> ReconTable:
    """Bucket means of the dead-zone-shifted source over ``J_cb = {t : c_t = c, b_t = b}``."""
    q, delta = stream.spec.q, stream.delta
    width = 2 * L + 1
    inside = np.abs(stream.b) <= L
    idx = stream.codeword[inside] * width + stream.b[inside] + L
    counts = np.bincount(idx, minlength=q * width).reshape(q, width)
    sums = np.bincount(idx, weights=stream.xi[inside], minlength=q * width).reshape(q, width)
    c = np.arange(q)[:, None]
    b = np.arange(-L, L + 1)[None, :]
    shift = delta * np.sign(c + q * b)
    with np.errstate(invalid="ignore", divide="ignore"):
        beta = np.where(counts > 0, sums / np.maximum(counts, 1) + shift, _nominal(c, b, q, delta))
    beta[0, L] = 0.0
    return ReconTable(q, L, delta, beta, counts)


def train_recon(spec: ConvCodeSpec, delta: float, L: int, x, scale: float = 1.0,
                block_len: int = DEFAULT_BLOCK_LEN) -> ReconTable:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("training stream is empty")
    return fit_recon(quantize(x, spec, scale, delta, block_len), L)


def reconstruct(u, b, spec: ConvCodeSpec, recon: ReconTable, scale: float = 1.0,
                block_len: int | None = None) -> np.ndarray:
    """Decoder rule: ``beta[c_t, b_t]`` for ``|b_t| <= L``, else the lattice value ``c_t + q b_t``."""
    u = np.asarray(u, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if b.size != 2 * u.size:
        raise ValueError(f"index vector has length {b.size}, expected {2 * u.size}")
    if recon.q != spec.q:
        raise ValueError("reconstruction table and code use different q")
    if block_len is None:
        c = encode(spec, u).ravel()
    else:
        c = encode_blocks(spec, u, block_len // 2)
    L = recon.L
    inside = np.abs(b) <= L
    y = (c + spec.q * b).astype(float)
    y[inside] = recon.beta[c[inside], b[inside] + L]
    return scale * y
