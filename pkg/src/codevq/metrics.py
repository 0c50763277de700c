"""Per-symbol metrics for code-lattice search.

``rho`` is the wrap-around squared distance on ``[0, q)`` used for NSM estimation;
``scalar_index``/``build_metric_table`` give the lattice metric
``mu(x, c) = min_b (x - c - q b)^2`` and its minimizing coset index ``b``;
``ezz_transform`` implements the extended-zero-zone dead zone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rho(x, y, q):
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    out = np.minimum(d * d, (d - q) ** 2)
    return float(out) if out.ndim == 0 else out


def round_half_away(v):
    v = np.asarray(v, dtype=float)
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


def scalar_index(x, c, q):
    """Nearest integer to ``(x - c) / q``; ties round away from zero."""
    b = round_half_away((np.asarray(x, dtype=float) - c) / q).astype(np.int64)
    return int(b) if b.ndim == 0 else b


def lattice_metric(x, c, q):
    b = scalar_index(x, c, q)
    return (np.asarray(x, dtype=float) - c - q * np.asarray(b)) ** 2


def ezz_transform(x, delta: float):
    if delta < 0:
        raise ValueError("dead-zone half width must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.where(x > delta, x - delta, np.where(x < -delta, x + delta, 0.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class MetricTable:
    """Row t holds, for each code symbol c, the best index ``b[t, c]`` and cost ``mu[t, c]``."""

    b: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    q: int
    delta: float = 0.0

    def __len__(self):
        return self.mu.shape[0]


def build_metric_table(x, q: int, delta: float = 0.0) -> MetricTable:
    xi = ezz_transform(np.atleast_1d(np.asarray(x, dtype=float)), delta)
    c = np.arange(q, dtype=float)
    resid = xi[:, None] - c[None, :]
    b = round_half_away(resid / q)
    mu = (resid - q * b) ** 2
    return MetricTable(b.astype(np.int64), mu, xi, q, float(delta))


def rho_costs(x, q: int) -> np.ndarray:
    """``(n, q)`` table of ``rho(x_t, c)``."""
    x = np.asarray(x, dtype=float)
    return rho(x[:, None], np.arange(q, dtype=float)[None, :], q)
